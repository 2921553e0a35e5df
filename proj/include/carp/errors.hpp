#pragma once

#include <stdexcept>
#include <string>

namespace carp {

// Malformed or inconsistent input data (CLI exit status 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-convergence or an observed transition the model gives zero probability
// (CLI exit status 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ImpossibleDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Bad arguments or configuration (CLI exit status 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace carp
