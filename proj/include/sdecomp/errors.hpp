#pragma once

#include <stdexcept>
#include <string>

namespace sdecomp {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration document (unknown key, wrong type, missing field).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Anything wrong with the input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A named column is missing or the role assignment is inconsistent.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

/// A value lies outside the domain of its column type (e.g. 2 in a binary column).
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

/// A cell could not be parsed as a number.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

/// Model fitting or estimation could not produce a finite result.
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdecomp
