// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gs4d {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument value or shape.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, missing property, wrong dims).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Unreadable/unwritable path or truncated file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf where a finite value is required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. a render context that does not belong to its inputs.
class ContractError : public Error {
 public:
  using Error::Error;
};

class DegenerateCovarianceError : public Error {
 public:
  using Error::Error;
};

/// Training cannot continue (stage order violated, scene pruned to empty).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// The diffusion prior could not be reached; callers skip SDS.
class PriorUnavailableError : public Error {
 public:
  using Error::Error;
};

/// The prior answered with something that does not follow the wire format.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace gs4d
