// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace deepstf {

/// Leg-region muscle groups: UF = {VM, VL, RF}, UB = {BF, SM}, LF = {TA},
/// LB = {MG, LG}.
struct MuscleGroup {
  std::string name;
  std::vector<std::string> muscles;
};

const std::vector<MuscleGroup>& muscle_groups();

struct ChannelConfig {
  std::string name;
  std::vector<std::string> groups;
  std::vector<std::string> muscles;  // in recording column order
  std::vector<std::size_t> columns;
};

/// UFUB, LFLB, UFLF, UBLB, UFLB, LFUB, ALL.
const std::vector<ChannelConfig>& channel_configurations();
/// Throws ConfigError listing the valid names.
const ChannelConfig& channel_configuration(const std::string& name);

}  // namespace deepstf
