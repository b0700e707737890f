/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <stdexcept>
#include <string>

namespace sgsm {

/// Base class for all sgsm exceptions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (schema, method registry, shapes).
struct ConfigError : Error {
  using Error::Error;
};

/// Missing, malformed, or out-of-contract data (files, tensors, labels).
struct DataError : Error {
  using Error::Error;
};

/// Training produced a non-finite loss.
struct DivergenceError : Error {
  using Error::Error;
};

/// Caller violated an operation precondition.
struct InvalidArgument : Error {
  using Error::Error;
};

}  // namespace sgsm
