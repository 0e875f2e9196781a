#pragma once

#include <stdexcept>
#include <string>

namespace riskpipe {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid user-supplied configuration or data; the message names the field.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed input text. Carries a 1-based line number when known (0 = unknown).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// Structurally invalid file content: wrong schema version, missing header,
// non-uniform timestamps, unknown fields.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Risk-model structural problems: dangling references, cycles, bad row sums,
// missing risk entries.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Numerical failure while solving (singular system, capacity exceeded).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace riskpipe
