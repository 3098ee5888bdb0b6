#pragma once

#include <stdexcept>
#include <string>

namespace covkern {

// All library failures derive from Error so callers (the CLI in particular)
// can separate data/numeric problems from programming errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, long line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what)
    , line_(line)
  {}
  long line() const noexcept { return line_; }

private:
  long line_;
};

// Argument outside the domain of an operation (point outside window, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Invalid tuning parameter (non-positive bandwidth, bad grid size, ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

// A computation degenerated (zero spread, vanishing functional, ...).
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace covkern
