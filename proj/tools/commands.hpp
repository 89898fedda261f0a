// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepstf/synth/synth.hpp"
#include "deepstf/train/experiment.hpp"

namespace deepstf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

// Contents of the --config file. Every key is optional.
struct RunConfig {
  ExperimentConfig experiment;
  SynthConfig synth;
  int trials_per_task = 10;
  std::string data;  // directory of trial files
  std::string out;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::optional<std::string>& path);

// Command-line overrides shared by the subcommands.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::vector<double> p_label_ms;
  std::vector<int> folds;
  std::optional<int> trials;
};

void apply(RunConfig& config, const Overrides& o);

/// --out, then the config file, then $DEEPSTF_OUT/<command>, then ./deepstf_out/<command>.
std::filesystem::path output_dir(const RunConfig& config, const std::string& command);

int cmd_config();
int cmd_synth(const RunConfig& config);
int cmd_preprocess(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_eval(const RunConfig& config, const std::filesystem::path& run_dir);
int cmd_channel_drop(const RunConfig& config, const std::vector<std::string>& names);
int cmd_report(const std::filesystem::path& run_dir);

}  // namespace deepstf::cli
