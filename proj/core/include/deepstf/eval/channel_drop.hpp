// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deepstf/train/experiment.hpp"

namespace deepstf {

struct ChannelDropEntry {
  std::string config_name;
  std::vector<std::string> muscles;
  ExperimentResult result;
};

/// Reruns the experiment once per channel configuration (all seven when
/// `names` is empty), each under out/<name>/. Writes out/channel_drop.csv
/// with one row per (configuration, p_label) and out/channel_drop.json.
std::vector<ChannelDropEntry> run_channel_drop(const TrackedDataset& data, const ExperimentConfig& base,
                                               const std::filesystem::path& out,
                                               const std::vector<std::string>& names = {},
                                               const CellLogger& log = {});

}  // namespace deepstf
