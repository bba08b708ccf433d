#pragma once

#include <stdexcept>
#include <string>

namespace llql {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: non-finite actions, bad weights, empty batches.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The action has (numerically) no influence on the constrained state component.
class UncontrollableConstraint : public Error {
 public:
  using Error::Error;
};

/// A loss or gradient became NaN/Inf during training.
class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

/// Bad configuration file, unknown key, missing model file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace llql
