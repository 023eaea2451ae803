#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bspring {

// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or empty input.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid parameters (cutoffs, alpha/beta, band widths, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// DTW band too narrow, or a traceback endpoint outside the band.
class NoPathError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class NoDominantFrequencyError : public Error {
 public:
  using Error::Error;
};

// Constant input: the scaled derivative is undefined.
class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

// A template annotation could not be carried through a warping path.
class MappingError : public Error {
 public:
  using Error::Error;
};

}  // namespace bspring
