#pragma once

#include <stdexcept>
#include <string>

namespace kbanon {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files, missing fields, duplicate ids.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Bad configuration: invalid specs, unresolvable paths, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A remote backend could not be reached or returned a non-200 status.
class TransportError : public Error {
 public:
  using Error::Error;
};

// A backend answered but broke the wire contract (shape, dim, offsets).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Preconditions on arguments (dimension mismatch, stale spans, NaN...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kbanon
