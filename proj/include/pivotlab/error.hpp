#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pivotlab {

// Base class for every error raised by the library. Callers that only need
// a message can catch std::runtime_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record-level problem found while reading one of the text formats.
// `line` is 1-based; `field` names the schema column (or "columns" when the
// line has the wrong shape).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& detail)
      : Error("line " + std::to_string(line) + ", field " + field + ": " +
              detail),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// A value that parsed but violates a schema invariant (e.g. failed_num > cnt).
class InvariantError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Bad argument passed to a library operation.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace pivotlab
