#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace supergeo {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live in incompatible spaces (generator count, chart, matrix shape).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain an operation accepts (index range, sector, parity).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Body matrix or body scalar is singular.
class NotInvertibleError : public Error {
 public:
  using Error::Error;
};

/// Text input rejected by a parser. `position` is a zero-based byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Numeric evaluation hit a singularity; `subexpression` is the offending term.
class EvalError : public Error {
 public:
  EvalError(const std::string& what, std::string subexpression)
      : Error(what + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

/// A solver produced a result that fails its own verification.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Scenario or configuration file rejected; `location` is a JSON-pointer path.
class InputError : public Error {
 public:
  InputError(const std::string& location, const std::string& what)
      : Error(location + ": " + what), location_(location) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

}  // namespace supergeo
