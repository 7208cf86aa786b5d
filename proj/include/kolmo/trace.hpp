#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace kolmo {

/// One row of an iteration trace. Fields that an engine does not use stay NaN
/// and print as "nan" in CSV, null in JSON.
struct StepRecord {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  std::size_t n = 0;
  double radius = kUnset;      // s_n
  double remainder = kUnset;   // |r_n| (Lie) or |x_n| (scalar engines)
  double increment = kUnset;   // |delta_n| or |x_n - x_{n-1}|
  double field = kUnset;       // |u_n|
  double bound = kUnset;       // certified bound b_n
  double sigma = kUnset;       // relative radius loss
  double quad_const = kUnset;  // a_n in |D_{n+1}| <= a_n |D_n|^2
  bool checks_passed = true;
  std::string note;
};

struct IterationTrace {
  std::string engine;
  std::vector<StepRecord> steps;
  std::string status;  // certified, uncertified, converged, diverged, bounded-only, ...
  bool certified = false;
  std::vector<std::string> messages;
  nlohmann::json provenance = nlohmann::json::object();

  /// Fixed columns: n, s_n, |r_n|, |delta_n|, |u_n|, b_n, sigma_n, checks_passed.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// 17 significant digits, the format used for every float the CLI prints.
std::string format_double(double x);

/// JSON number for finite values, the strings "inf"/"-inf"/"nan" otherwise.
nlohmann::json json_number(double x);

}  // namespace kolmo
