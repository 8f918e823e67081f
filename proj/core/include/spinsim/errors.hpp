#pragma once

#include <stdexcept>
#include <string>

namespace spinsim {

// Raised for inputs that violate a documented precondition. The CLI maps it
// to exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a well-posed computation fails numerically (singular system,
// step-size underflow, non-convergent fit). The CLI maps it to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spinsim
