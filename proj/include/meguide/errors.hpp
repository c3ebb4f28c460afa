#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meguide {

// Base of every error raised by the library. Errors derived from Error are
// caused by bad input or configuration; NumericError is the one internal
// failure mode (diverging training).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
  using Error::Error;
};
class ValidationError : public Error {
  using Error::Error;
};
class IndexError : public Error {
  using Error::Error;
};
class PreconditionError : public Error {
  using Error::Error;
};
class EmptyInputError : public Error {
  using Error::Error;
};
class UndefinedMetricError : public Error {
  using Error::Error;
};
class SamplerError : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};
class CoverageError : public Error {
  using Error::Error;
};
class ConversionError : public Error {
  using Error::Error;
};
class NumericError : public Error {
  using Error::Error;
};

}  // namespace meguide
