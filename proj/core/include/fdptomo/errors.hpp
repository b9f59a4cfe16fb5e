#pragma once

#include <stdexcept>
#include <string>

namespace fdptomo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of the operation
/// (efficiency outside [0,1], non-positive power, index beyond cutoff, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Operands have incompatible sizes or Fock cutoffs.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// The requested state does not fit in the Fock cutoff.
class CutoffError : public Error {
public:
  CutoffError(const std::string& what, int required_dim)
      : Error(what), required_dim_(required_dim) {}

  /// Smallest cutoff that would satisfy the leakage bound.
  int required_dim() const noexcept { return required_dim_; }

private:
  int required_dim_;
};

/// Blocked-input calibration data cannot fix the rescaling constants.
class CalibrationError : public Error {
public:
  using Error::Error;
};

/// A numerical solver could not produce an admissible answer.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Malformed or unreadable file.
class FormatError : public Error {
public:
  using Error::Error;
};

}  // namespace fdptomo
