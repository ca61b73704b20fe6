#pragma once

#include <stdexcept>
#include <string>

namespace doalign {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A vector was too short to define a direction.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

/// A matrix failed the orthonormality / determinant checks for a rotation.
class InvalidRotationError : public Error {
 public:
  using Error::Error;
};

/// An operation that needs at least one epoch received none.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// A scale factor that must be positive was not.
class NonPositiveScaleError : public Error {
 public:
  using Error::Error;
};

/// The equality constraints of a semidefinite program are inconsistent.
class InfeasibleProblemError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line and column of the offence.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Invalid option combination or value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace doalign
