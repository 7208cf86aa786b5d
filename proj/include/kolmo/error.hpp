#pragma once

#include <stdexcept>
#include <string>

namespace kolmo {

/// Malformed or inconsistent input (bad family name, mismatched bases, ...).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A mathematically invalid request: radius beyond the certified disc,
/// outside the Borel domain, division by a unit, and so on.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace kolmo
