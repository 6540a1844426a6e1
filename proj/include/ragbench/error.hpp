#pragma once

#include <stdexcept>
#include <string>

namespace ragbench {

/// Root of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates an operation's precondition.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A model server could not be reached or kept failing after retries.
class BackendUnavailableError : public Error {
 public:
  using Error::Error;
};

/// The backend cannot perform the requested operation at all.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0) : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Duplicate identifiers.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Stored artifacts are inconsistent with each other.
class DataIntegrityError : public Error {
 public:
  using Error::Error;
};

/// Training data cannot support the requested model (e.g. a single class).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace ragbench
