#pragma once

#include <stdexcept>
#include <string>

namespace stochproj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, negative weights, off-grid atoms...
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The numerical engine could not produce a trustworthy answer.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A projection problem whose feasible cone is empty over the candidate support.
class ConeEmpty : public SolverError {
 public:
  using SolverError::SolverError;
};

/// An iterative method hit its iteration cap; `residual` is the last measured residual.
class NotConverged : public SolverError {
 public:
  NotConverged(const std::string& what, double residual)
      : SolverError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace stochproj
