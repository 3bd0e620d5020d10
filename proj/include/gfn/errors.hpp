#pragma once

#include <stdexcept>
#include <string>

namespace gfn {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (zero-width layer, bad RunConfig key, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A tape was replayed after the parameters it recorded were modified.
class StaleTapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf appeared in gradients, model outputs or losses.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Action not allowed in the given grid state.
class IllegalMoveError : public Error {
 public:
  using Error::Error;
};

/// API called outside of its contract (empty batch, sampling an empty buffer, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// State space too large to enumerate.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gfn
