#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ladder {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression, program or data text. Positions are 1-based.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A variable id that the environment does not bind.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic outside the real domain: log of a non-positive number, a
/// fractional power of a negative base, a pole of pow, a non-finite literal.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model input: an outcome the program cannot produce, a
/// probability parameter outside [0, 1], mixture weights that do not sum to 1.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant, e.g. a deferred cell resolved twice.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ladder
