#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mvrank {

// Invalid counts, dimensions, shapes or configuration values.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function (u outside [0,1],
// NaN scores, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input text. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics (ties in rank statistics, clamped losses, ...).
// The default handler writes to stderr; tests install their own.
using WarningHandler = std::function<void(std::string_view)>;

void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace mvrank
