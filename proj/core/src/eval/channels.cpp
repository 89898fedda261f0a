// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/eval/channels.hpp"

#include <algorithm>

#include "deepstf/error.hpp"
#include "deepstf/store/trial.hpp"

namespace deepstf {

const std::vector<MuscleGroup>& muscle_groups() {
  static const std::vector<MuscleGroup> groups = {
      {"UF", {"VM", "VL", "RF"}}, {"UB", {"BF", "SM"}}, {"LF", {"TA"}}, {"LB", {"MG", "LG"}}};
  return groups;
}

namespace {

ChannelConfig make_config(std::string name, std::vector<std::string> group_names) {
  ChannelConfig c{std::move(name), std::move(group_names), {}, {}};
  const auto& names = default_channel_names();
  std::vector<bool> keep(names.size(), false);
  for (const auto& g : c.groups) {
    const auto it = std::find_if(muscle_groups().begin(), muscle_groups().end(),
                                 [&](const MuscleGroup& m) { return m.name == g; });
    for (const auto& m : it->muscles) {
      keep[static_cast<std::size_t>(std::find(names.begin(), names.end(), m) - names.begin())] = true;
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!keep[i]) continue;
    c.columns.push_back(i);
    c.muscles.push_back(names[i]);
  }
  return c;
}

}  // namespace

const std::vector<ChannelConfig>& channel_configurations() {
  static const std::vector<ChannelConfig> configs = {
      make_config("UFUB", {"UF", "UB"}), make_config("LFLB", {"LF", "LB"}), make_config("UFLF", {"UF", "LF"}),
      make_config("UBLB", {"UB", "LB"}), make_config("UFLB", {"UF", "LB"}), make_config("LFUB", {"LF", "UB"}),
      make_config("ALL", {"UF", "UB", "LF", "LB"})};
  return configs;
}

const ChannelConfig& channel_configuration(const std::string& name) {
  std::string valid;
  for (const auto& c : channel_configurations()) {
    if (c.name == name) return c;
    valid += (valid.empty() ? "" : ", ") + c.name;
  }
  throw ConfigError("unknown channel configuration '" + name + "' (valid: " + valid + ")");
}

}  // namespace deepstf
