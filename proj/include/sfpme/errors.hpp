#pragma once

#include <stdexcept>
#include <string>

namespace sfpme {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke an interface contract (mismatched grids, wrong sizes).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed (non-finite values, empty samples).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A parameter lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested combination is deliberately not supported.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Numerical quadrature could not reach the requested tolerance.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of a verification procedure does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Explicit time step exceeds the stability bound.
class StepSizeError : public Error {
 public:
  StepSizeError(const std::string& what, double suggested_dt)
      : Error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double suggested_dt_;
};

/// Solution left the representable range (NaN or |u| above the blow-up cap).
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Configuration file problem; carries the 1-based line (0 when global).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace sfpme
