#pragma once

#include <stdexcept>
#include <string>

namespace rso {

// Root of every error raised by the library. Each subclass names the failure
// class so callers (notably the CLI) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text: CSV header, unparsable required cell, duplicate key.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A JSON document does not match its expected layout. The message starts with
// the offending key path, e.g. "data[3].attributes.mass".
class SchemaError : public Error {
 public:
  using Error::Error;
};

class CredentialError : public Error {
 public:
  using Error::Error;
};

// Transport failures against a live endpoint (after retries are exhausted).
class NetworkError : public Error {
 public:
  using Error::Error;
};

// Precondition or configuration violation detected before any compute.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class AmbiguityError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced or consumed by a numerical routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Bad argument to a numerical routine (dimension mismatch, k > n, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DegenerateModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace rso
