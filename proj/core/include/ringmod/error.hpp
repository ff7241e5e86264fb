#pragma once

#include <stdexcept>
#include <string>

namespace ringmod {

/// Base class of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point, sphere or region falls outside the chart grid.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Metric evaluation produced a non-symmetric or non positive definite matrix.
class MetricIntegrityError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples to fit or classify.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A quadrature met a non-integrable singularity or a non-finite value.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Condenser with C touching the boundary of A, empty C, or similar.
class DegenerateCondenserError : public Error {
 public:
  using Error::Error;
};

/// Zero diameter continuum passed to the Loewner bound.
class DegenerateContinuumError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis of the capacity bound chain failed (for instance
/// 0 < I(eps, eps0) < inf). `hypothesis()` names the violated condition.
class HypothesisError : public Error {
 public:
  HypothesisError(std::string hypothesis, const std::string& what)
      : Error(what + " [hypothesis: " + hypothesis + "]"), hypothesis_(std::move(hypothesis)) {}

  const std::string& hypothesis() const noexcept { return hypothesis_; }

 private:
  std::string hypothesis_;
};

/// Malformed expression text. Carries the byte offset of the failure.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at offset " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ringmod
