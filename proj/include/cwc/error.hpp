#ifndef CWC_ERROR_HPP
#define CWC_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cwc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Model text could not be parsed or failed validation. Line and column are
/// 1-based; 0 means "no location".
class ParseError : public Error {
public:
  ParseError(std::string message, std::size_t line, std::size_t column)
      : Error(format(message, line, column)), message_(std::move(message)),
        line_(line), column_(column) {}

  const std::string& message() const { return message_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  static std::string format(const std::string& m, std::size_t line, std::size_t col) {
    if (line == 0) return m;
    return std::to_string(line) + ":" + std::to_string(col) + ": " + m;
  }

  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

class UnknownCompartment : public Error {
public:
  using Error::Error;
};

/// A match no longer fits the state it is applied to.
class StaleMatch : public Error {
public:
  using Error::Error;
};

/// Gillespie selection was asked to choose from an empty (or zero-rate) event list.
class NoEvent : public Error {
public:
  using Error::Error;
};

/// The ODE integrator produced NaN or infinity; usually the step is too large.
class NonFiniteState : public Error {
public:
  using Error::Error;
};

} // namespace cwc

#endif // CWC_ERROR_HPP
