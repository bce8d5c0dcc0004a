#pragma once

#include <stdexcept>
#include <string>

namespace mopg {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad value passed to a function (dimension mismatch, weights off the
// simplex, non-positive prox parameter, ...).
struct ArgumentError : Error {
  using Error::Error;
};

// Structurally valid input that the implementation does not support
// (mixed nonsmooth families in one prox call, non-uniform boxes, ...).
struct UnsupportedError : Error {
  using Error::Error;
};

// Invalid problem/solver/benchmark configuration: unknown problem name,
// wrong dimension for a fixed-size instance, missing error schedule, ...
struct ConfigError : Error {
  using Error::Error;
};

// Arithmetic breakdown: non-finite values, backtracking overflow, ...
struct NumericalError : Error {
  using Error::Error;
};

// A diagnostic was asked for on a series too short to support it.
struct InsufficientDataError : Error {
  using Error::Error;
};

// File could not be read, written or parsed.
struct IoError : Error {
  using Error::Error;
};

}  // namespace mopg
