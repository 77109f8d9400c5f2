#pragma once

#include <stdexcept>
#include <string>

namespace hmp {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition (dimension mismatch, bad step, bad grid, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Metric not positive definite, non-finite geometric data.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Guard differential vanishes: the zero set is not an embedded hypersurface there.
class DegenerateGuardError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Any failure of a numerical procedure. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double time) : NumericalError(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// The flow crosses a guard (or a switching-time derivative is requested) with
/// a vanishing transversality denominator.
class TangentialCrossingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// More guard crossings than the fixed mode sequence allows.
class ScheduleViolationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonInvertibleJumpError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Shooting solver failures, each a distinct class.
class MaxIterationsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LineSearchStallError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularJacobianError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Switching times not strictly increasing inside (t0, tf).
class AdmissibilityError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Problem registry lookup failures.
class UnknownProblemError : public Error {
 public:
  using Error::Error;
};

class ParameterRangeError : public Error {
 public:
  using Error::Error;
};

/// Artifact text that does not parse against its documented schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmp
