#pragma once

#include <stdexcept>
#include <string>

namespace fame {

// Invalid arguments supplied by the caller (shape mismatch, bad config).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data violates a schema or domain invariant.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input. Carries the 1-based line number when known.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : DataError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A remote endpoint (verifier, embedding service) failed or misbehaved.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(const std::string& what, bool retryable = true)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fame
