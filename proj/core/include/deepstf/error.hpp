// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace deepstf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (bad cutoff, unknown name, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or invariant-violating data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes that do not fit the layer they are fed to.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace deepstf
