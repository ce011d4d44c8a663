#pragma once

#include <stdexcept>
#include <string>

namespace gpcca {

/// Malformed or out-of-range input: bad shapes, masks, flags, files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown during fitting (non-SPD covariance, singular moments).
/// Carries the EM iteration at which it happened, or -1 outside a fit loop.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, int iteration = -1)
      : std::runtime_error(iteration < 0 ? what : what + " (iteration " + std::to_string(iteration) + ")"),
        reason_(what),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }
  const std::string& reason() const noexcept { return reason_; }

  NumericalError at_iteration(int iteration) const { return NumericalError(reason_, iteration); }

 private:
  std::string reason_;
  int iteration_;
};

}  // namespace gpcca
