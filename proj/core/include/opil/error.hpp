#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opil {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or record shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered in a loss, gradient or parameter update.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid environment use: unknown id, out-of-bounds action, stepping a
// finished episode.
class EnvError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. `line()` is 1-based; 0 means the error is not tied
// to a specific line (e.g. a missing file).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(line == 0 ? message
                        : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace opil
