#pragma once

#include <stdexcept>
#include <string>

namespace sam {

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input data (corpus lines, ids, timestamps, checkpoints) is malformed.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates its invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite loss, failed gradient check.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace sam
