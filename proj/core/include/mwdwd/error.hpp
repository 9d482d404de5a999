#pragma once

#include <stdexcept>
#include <string>

namespace mwdwd {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or extents that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Data or arguments that violate a precondition (labels, fold counts, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during a computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration documents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File reading/parsing failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mwdwd
