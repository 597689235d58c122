#pragma once

#include <stdexcept>
#include <string>

namespace gsvr {

// Root of every error thrown by the library. The CLI maps subclasses onto
// process exit codes in cli::run.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a primitive (e.g. log of 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CompatibilityError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Non-finite value detected in a training loss term.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsvr
