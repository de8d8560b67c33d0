#pragma once

#include <stdexcept>
#include <string>

namespace olmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch or other broken precondition on an argument.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Out-of-range user parameter (e.g. a confidence level outside (0, 1)).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Errors caused by the numbers themselves rather than by bad arguments.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public NumericalError {
 public:
  InstabilityError(const std::string& what, double spectral_radius)
      : NumericalError(what), spectral_radius_(spectral_radius) {}
  double spectral_radius() const { return spectral_radius_; }

 private:
  double spectral_radius_;
};

/// Raised when a Gram matrix that must be inverted is too ill-conditioned.
class UncontrollableError : public NumericalError {
 public:
  UncontrollableError(const std::string& what, double condition_number)
      : NumericalError(what), condition_number_(condition_number) {}
  double condition_number() const { return condition_number_; }

 private:
  double condition_number_;
};

class InsufficientDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Non-finite objective or gradient inside an optimizer.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DiagnosticError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An oracle was asked to solve a problem outside the class it handles.
class InapplicableError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace olmpc
