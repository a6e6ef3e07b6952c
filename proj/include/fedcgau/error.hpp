#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedcgau {

// Base for every error the library raises. Callers that only care about
// "bad input" vs "something broke" can catch ValidationError / std::exception.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or configuration: maps to CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LabelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotPsdError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InfeasibleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UndefinedMetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class StratificationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed serialized input. Carries the byte offset where parsing failed.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : ValidationError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace fedcgau
