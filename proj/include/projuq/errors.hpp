#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace projuq {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operand shapes do not match the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be full rank is numerically rank deficient.
class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// Exact or near singularity in a direct factorization.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// A matrix required to be symmetric positive definite is not.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

/// Vector leaves the range of a rank-deficient covariance.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// The projection core W^T A V cannot be inverted reliably.
class IllPosedProjectionError : public Error {
 public:
  using Error::Error;
};

/// The conditioning inner matrix S^T A Sigma0 A^T S is singular.
class IllPosedConditioningError : public Error {
 public:
  using Error::Error;
};

/// Krylov process stalled before reaching the requested dimension.
class BreakdownError : public Error {
 public:
  BreakdownError(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  /// Index of the step at which the subspace became invariant.
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Sample set without spread, e.g. for a density estimate.
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the offending line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Invalid argument values (preconditions on scalars, specs, configs).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace projuq
