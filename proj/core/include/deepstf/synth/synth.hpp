// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepstf/preprocess/gait.hpp"
#include "deepstf/store/modes.hpp"
#include "deepstf/store/trial.hpp"

namespace deepstf {

using ActivationTemplates = std::array<std::array<double, kEmgChannels>, kModeCount>;

/// Mean activation per mode (rows, mode index order) and muscle (columns,
/// BF SM MG LG VM VL RF TA).
const ActivationTemplates& default_activation_templates();

struct SynthConfig {
  std::uint64_t seed = 1;
  std::string subject_id = "S01";
  double gait_cycle_ms = 1100.0;
  int steps_per_mode = 4;
  // Steps taken in the back-stepping and side-stepping tasks.
  int extra_task_steps = 2;
  double standing_ms = 2500.0;
  double stance_fraction = 0.6;
  double cycle_jitter = 0.03;
  ActivationTemplates activation_templates = default_activation_templates();
  // Depth of the gait-phase-locked sinusoidal modulation of moving modes.
  double modulation_depth = 0.35;
  // Relative SD of the slowly varying envelope perturbation; also scales the
  // additive sensor floor.
  double noise_sd = 0.1;
  // Per-trial channel gain spread, uniform in [1 - v, 1 + v].
  double snr_variability = 0.05;
  double crossfade_ms = 500.0;
  bool powerline = false;
  double powerline_amplitude = 0.2;

  bool operator==(const SynthConfig&) const = default;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

/// Throws ConfigError for non-positive durations or degenerate templates.
void validate_synth_config(const SynthConfig& config);

struct SynthTrial {
  Trial trial;
  // Every lead-leg HC/TO the generator placed, at the EMG rate.
  GaitEventTrack ledger;
};

/// Deterministic in (config, task, trial_id). Events are placed on the grid
/// the 40 Hz pressure can resolve exactly: HC at 30k - 15, TO at 30k + 16.
SynthTrial generate_trial(const SynthConfig& config, const ParadigmTask& task, const std::string& trial_id);

/// `n_trials_per_task` trials of each paradigm task, each seeded from the
/// master seed. Throws ConfigError for n < 5.
std::vector<SynthTrial> generate_dataset(const SynthConfig& config, int n_trials_per_task);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace deepstf
