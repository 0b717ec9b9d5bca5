#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zcc {

// Input that violates a documented precondition or invariant. The CLI maps
// every subclass of this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A quantity that has no value for the given input (zero-power net price,
// average over an empty set).
class UndefinedValueError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InfeasibleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Raised by the bounded calibration searches; carries the closest value the
// search reached.
class CalibrationError : public ValidationError {
 public:
  CalibrationError(const std::string& what, double best_achieved)
      : ValidationError(what + " (best achieved " + std::to_string(best_achieved) + ")"),
        best_(best_achieved) {}

  double best_achieved() const noexcept { return best_; }

 private:
  double best_;
};

}  // namespace zcc
