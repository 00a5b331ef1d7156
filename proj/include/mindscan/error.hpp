#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mindscan {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data is inconsistent with a contract (duplicate ids, orphans, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A text input could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid invocation or configuration; maps to exit code 1 in the CLI.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace mindscan
