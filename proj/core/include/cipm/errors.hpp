#pragma once

#include <stdexcept>
#include <string>

namespace cipm {

/// Dimension or index mismatch in problem data or iterates.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A quantity left its admissible domain (e.g. a nonpositive slack).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The coupled KKT matrix is numerically singular.
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf produced by an update, a failed factorization, or a stalled search.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A line search could not find an acceptable step.
class StallError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Invalid or unparseable run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cipm
