#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfopt {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector length does not match the number of variables.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Bad variable index, inconsistent sizes, or a kind tag whose structural
// requirements are not met.
class MalformedInstance : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Text input that cannot be parsed. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Request the library refuses to run (size guards, unsupported inputs).
class Refused : public Error {
 public:
  using Error::Error;
};

}  // namespace mfopt
