#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace madi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// A precondition on sizes, ranges, or parameters was violated.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Input vector length does not match the fitted model.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Weighted design is numerically singular (equilibrated condition number > 1e12).
class SingularFitError : public Error {
public:
  using Error::Error;
};

/// Variance estimation needs at least two sampled units (second-order
/// inclusion probabilities vanish otherwise).
class InsufficientSampleError : public Error {
public:
  using Error::Error;
};

/// A model trained on units outside the nonprobability set was handed to an
/// estimator that relies on train/evaluation separation.
class ContractViolation : public Error {
public:
  using Error::Error;
};

/// NPD allocation cannot reach its target size.
class InfeasibleAllocation : public Error {
public:
  using Error::Error;
};

}  // namespace madi
