#pragma once

// The acceptance suite: twelve end-to-end criteria, each a randomized property
// check or a full demo run with fixed tolerances. Shared by the acceptance
// binary and `kolmo verify`.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace kolmo {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double seconds = 0;
  double budget = 0;  // allowed runtime in seconds
  std::string detail;

  nlohmann::json to_json() const;
};

constexpr int kCriteria = 12;
constexpr std::uint64_t kDefaultSeed = 20240917;

/// Runs criterion id (1..12). Exceptions are caught and reported as failures.
CriterionResult run_criterion(int id, std::uint64_t seed = kDefaultSeed);

/// Runs the listed criteria (all when empty) on up to jobs threads. Results
/// come back ordered by id regardless of scheduling.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed = kDefaultSeed, int jobs = 1,
                                            std::vector<int> ids = {});

/// "criterion  3 PASS  rho lemma for the Morse constants  (0.002 s)  detail".
std::string format_result(const CriterionResult& r);

}  // namespace kolmo
