#pragma once

#include <stdexcept>
#include <string>

namespace knocksim {

// Bad user input: malformed config files, out-of-range settings.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: non-PSD matrices where PSD is required, singular
// covariances, infeasible constructions.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace knocksim
