#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hiersumm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Caller supplied data that violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model / run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed JSONL record. Carries the 1-based line number.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A numerical failure (NaN/Inf in a loss, divergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hiersumm
