#pragma once

#include <stdexcept>
#include <string>

namespace sstr {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or configuration field violates its documented range.
/// The message always names the offending field.
class OutOfRange : public Error {
 public:
  OutOfRange(const std::string& field, const std::string& detail)
      : Error(field + ": " + detail), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Matrix or vector dimensions are inconsistent with each other.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// A spec file could not be parsed; carries the 1-based offending line, or
/// line 0 for file-level problems such as missing required keys.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
  explicit ParseError(const std::string& detail) : Error("spec: " + detail) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

/// Zero-forcing combining cannot be formed (too many detected users or an
/// ill-conditioned Gram matrix); the caller marks the trial's symbols failed.
class ZfUnavailable : public Error {
 public:
  using Error::Error;
};

/// A conditional distribution has no probability mass on its support.
class DegenerateDistribution : public Error {
 public:
  using Error::Error;
};

/// A Monte-Carlo summary was requested from fewer than two trials.
class InsufficientTrials : public Error {
 public:
  using Error::Error;
};

}  // namespace sstr
