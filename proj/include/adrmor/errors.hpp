#pragma once

#include <stdexcept>
#include <string>

namespace adrmor {

/// Violated precondition or malformed input (bad grid, bad config, dimension mismatch).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: unstable matrices, non-convergent fixed points, singular solves.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace detail
}  // namespace adrmor
