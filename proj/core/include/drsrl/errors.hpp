#pragma once

#include <stdexcept>
#include <string>

namespace drsrl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A participant state or control input was non-finite or out of range.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration (ranges, scenario ids, files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor/vector shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Loss or gradient went non-finite during an update.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace drsrl
