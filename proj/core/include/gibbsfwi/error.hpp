#pragma once

#include <stdexcept>
#include <string>

namespace gfwi {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad parameters, CFL violation, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Source or receiver outside the modelled domain.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Array dimensions that do not match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation's input contract was violated (e.g. non-zero-mean trace).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed line searches, indefinite Hessians.
class NumericError : public Error {
 public:
  using Error::Error;
};

class LinearAlgebraError : public NumericError {
 public:
  using NumericError::NumericError;
};

class OptimizationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gfwi
