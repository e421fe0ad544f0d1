#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qus {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a mathematical function (log of a
/// nonpositive spectrum, dB of a nonpositive BSC).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two operands do not have compatible shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter violates its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A linear system could not be solved reliably.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// An iterative solver produced a non-finite iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Malformed input file. `row` is 1-based and counts the header row.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Invalid run configuration; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad command-line usage (unknown method, malformed flag value).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure; the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qus
