// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace adapt {

/// Base of every error thrown by the library. Callers that only need to
/// report a failure can catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor or image extents.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered where finite values are required, or a training run
/// that diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied value outside the accepted domain (bad label, bad index).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but degenerate for the requested operation,
/// e.g. normalizing a constant volume.
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

/// Invalid configuration (unknown key, infeasible bounds, indivisible extent).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Misuse of the gradient tape (second backward, non-scalar loss).
class TapeError : public Error {
 public:
  using Error::Error;
};

/// Problems reading or writing files.
class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedPayloadError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ExtentMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace adapt
