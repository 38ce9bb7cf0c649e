#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wltab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or missing dataset input. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Unknown quantifier spec or quantifier-set expression.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Formula text that does not match the surface grammar.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& what)
      : Error("syntax error at " + std::to_string(position) + ": " + what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A subset table or characteristic formula would exceed the configured class cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// A refinement round ran past its wall-clock budget.
class TimeoutError : public Error {
 public:
  using Error::Error;
};

class NotGlobalRooted : public Error {
 public:
  using Error::Error;
};

}  // namespace wltab
