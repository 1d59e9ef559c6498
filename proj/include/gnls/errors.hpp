#pragma once

#include <stdexcept>
#include <string>

namespace gnls {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on different graphs or have inconsistent sizes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside the mathematical domain of the operation (t <= 0, p < 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented precondition (e.g. vertex continuity).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The computation produced non-finite values or lost control of the support.
class NumericalAbort : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gnls
