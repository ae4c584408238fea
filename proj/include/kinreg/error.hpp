#pragma once

#include <stdexcept>
#include <string>

namespace kinreg {

/// Precondition or schema violation on caller-supplied input.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A well-formed problem for which no admissible answer exists
/// (empty feasible region, no sign change, degenerate drift).
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown during a computation (non-finite state, lost CFL).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
void require_finite(double v, const char* field);
}  // namespace detail

}  // namespace kinreg
