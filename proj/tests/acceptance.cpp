// Prints one pass/fail line per acceptance criterion. Exit status 0 only when
// all twelve pass.
//
//   acceptance [--seed N] [--jobs N] [ids...]

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "kolmo/acceptance.hpp"

int main(int argc, char** argv) {
  std::uint64_t seed = kolmo::kDefaultSeed;
  int jobs = 1;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--seed" && i + 1 < argc) {
      seed = std::stoull(argv[++i]);
    } else if (a == "--jobs" && i + 1 < argc) {
      jobs = std::stoi(argv[++i]);
    } else {
      ids.push_back(std::stoi(a));
    }
  }
  int failed = 0;
  for (const auto& r : kolmo::run_acceptance(seed, jobs, ids)) {
    std::cout << kolmo::format_result(r) << "\n";
    failed += !r.passed;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria pass") << "\n";
  return failed ? 1 : 0;
}
