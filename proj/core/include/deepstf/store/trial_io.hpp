// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "deepstf/store/container.hpp"
#include "deepstf/store/trial.hpp"

namespace deepstf {

Container trial_to_container(const Trial& trial);
Trial trial_from_container(const Container& container);

/// Validates, then writes. Numeric payloads are stored as little-endian f32.
void save_trial(const Trial& trial, const std::filesystem::path& path);
/// Reads and validates; every invariant violation is a DataError.
Trial load_trial(const std::filesystem::path& path);

}  // namespace deepstf
