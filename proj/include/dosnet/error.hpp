#pragma once

#include <stdexcept>
#include <string>

namespace dosnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes, grids or channel counts that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside an operation's domain (negative step, even kernel, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, divergence, rank deficiency.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated files.
class FormatError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ArgumentError(msg);
}

inline void require_dims(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace detail
}  // namespace dosnet
