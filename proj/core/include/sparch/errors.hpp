#pragma once

#include <stdexcept>
#include <string>

namespace sparch {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input supplied by the caller: malformed domains, weights, models, or configs.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a valid result for otherwise well-formed input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidDomain : public UsageError {
 public:
  using UsageError::UsageError;
};

class InvalidWeights : public UsageError {
 public:
  using UsageError::UsageError;
};

class InvalidModel : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Malformed configuration; the message names the offending field.
class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

class SingularSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Some Y(s_i)^2 came out negative beyond roundoff: the (W, eps) pair is inadmissible.
class NonnegativityViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidParameter : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateInput : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sparch
