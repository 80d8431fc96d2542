#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qdiff {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation at a declared singular endpoint, an atom, or outside [0, 1].
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double point)
      : Error(what + " (at x = " + std::to_string(point) + ")"), point_(point) {}
  double point() const noexcept { return point_; }

 private:
  double point_;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double estimate)
      : Error(what + " (achieved error estimate " + std::to_string(estimate) + ")"),
        estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

/// Step-size control gave up; carries the interval where it happened.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double from, double to)
      : Error(what + " on [" + std::to_string(from) + ", " + std::to_string(to) + "]"),
        from_(from), to_(to) {}
  double from() const noexcept { return from_; }
  double to() const noexcept { return to_; }

 private:
  double from_, to_;
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double condition)
      : Error(what + " (condition number " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Expression or configuration text that does not parse. Line is 1-based,
/// column is 1-based; line 0 means "single-line input".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(format(what, line, column)), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    std::string where = line ? "line " + std::to_string(line) + ", column " + std::to_string(column)
                             : "column " + std::to_string(column);
    return "parse error at " + where + ": " + what;
  }
  std::size_t line_, column_;
};

/// A specification that fails validation or an operation not defined for it.
class SpecError : public Error {
 public:
  using Error::Error;
};

class UnsupportedSpec : public SpecError {
 public:
  using SpecError::SpecError;
};

class NotAnEigenvalue : public Error {
 public:
  using Error::Error;
};

}  // namespace qdiff
