// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "deepstf/nn/layers.hpp"
#include "deepstf/store/container.hpp"

namespace deepstf::nn {

/// Adds every parameter (and, with moments, its Adam m/v as "<name>.adam_m"
/// and "<name>.adam_v") and every buffer to the container.
void add_parameters(Container& c, const ParameterList<float>& list, bool with_moments);

/// Loads values by name. Throws DataError for a missing array or a shape
/// mismatch. Moments are loaded when present.
void load_parameters(const Container& c, const ParameterList<float>& list);

/// FNV-1a over the little-endian value bytes of every parameter and buffer.
std::string parameter_digest(const ParameterList<float>& list);

}  // namespace deepstf::nn
