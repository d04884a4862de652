#pragma once

#include <stdexcept>
#include <string>

namespace mecsim {

/// Base of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (negative backlog, cap violation, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input data parsed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input document is malformed or has the wrong shape.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint is unreadable or does not match the configured networks.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace mecsim
