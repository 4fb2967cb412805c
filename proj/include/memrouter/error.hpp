#pragma once

#include <stdexcept>
#include <string>

namespace memrouter {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `where` carries the line/field location.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// A domain invariant was violated; the message names the offending id.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// An embedding provider, contextualizer, or generation client failed.
class ProviderError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A persisted artifact failed its digest/checksum verification.
class ChecksumError : public Error {
 public:
  using Error::Error;
};

/// Non-finite activation, logit or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Test-split data reached training or model selection.
class LeakageError : public Error {
 public:
  using Error::Error;
};

}  // namespace memrouter
