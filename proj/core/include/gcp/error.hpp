#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcp {

/// Broad error classes. The numeric values double as process exit codes for
/// the command-line tool.
enum class ErrorCategory : int {
  usage = 2,     // inconsistent flags or configuration
  io = 3,        // unreadable files, malformed input
  domain = 4,    // numeric/domain violations (index, shape, sampling)
  internal = 5,  // broken internal invariants
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

/// Malformed text input; carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorCategory::io, line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error(ErrorCategory::domain, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorCategory::domain, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::domain, what) {}
};

/// Raised when a sample slot cannot be filled (e.g. the zero-rejection loop
/// hits its cap). `slot` is the failing slot index within its kind.
class SamplingError : public Error {
 public:
  SamplingError(const std::string& what, std::size_t slot)
      : Error(ErrorCategory::domain, what), slot_(slot) {}

  std::size_t slot() const noexcept { return slot_; }

 private:
  std::size_t slot_;
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what) : Error(ErrorCategory::internal, what) {}
};

/// Exit code used by the CLI for a given category.
int exit_code(ErrorCategory category) noexcept;

}  // namespace gcp
