#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracflow {

/// Base class of all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument values (negative crack resistance, bad dimensions, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Two fields with incompatible grid shapes or component counts were combined.
class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

/// File format or filesystem problem. Maps to CLI exit code 3.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A solver iterate became non-finite. Maps to CLI exit code 4.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long iteration)
      : Error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// Random sequential adsorption could not reach the requested target.
class JammingError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracflow
