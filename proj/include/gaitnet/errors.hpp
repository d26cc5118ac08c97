#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gaitnet {

// Base of every error the library throws. Callers that only need to report
// can catch this; the CLI maps the two families below onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input supplied by the caller (shapes, arguments, files, configs).
class InputError : public Error {
 public:
  using Error::Error;
};

// Failure discovered while computing (non-finite loss, broken invariants).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public InputError {
 public:
  using InputError::InputError;
};

class InvalidShape : public InputError {
 public:
  using InputError::InputError;
};

class InvalidArgument : public InputError {
 public:
  using InputError::InputError;
};

class InvalidInput : public InputError {
 public:
  using InputError::InputError;
};

class InvalidConfig : public InputError {
 public:
  using InputError::InputError;
};

class ConfigMismatch : public InputError {
 public:
  using InputError::InputError;
};

class LoadError : public InputError {
 public:
  using InputError::InputError;
};

// API misuse: calling an operation outside its documented preconditions.
class ContractError : public InputError {
 public:
  using InputError::InputError;
};

// Malformed binary file. `offset` is the byte position where parsing failed.
class FormatError : public InputError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : InputError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Checksum mismatch inside an otherwise well-formed container.
class IntegrityError : public FormatError {
 public:
  using FormatError::FormatError;
};

class NumericError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace gaitnet
