// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepstf/preprocess/filter.hpp"
#include "deepstf/preprocess/gait.hpp"
#include "deepstf/preprocess/signal.hpp"
#include "deepstf/store/container.hpp"
#include "deepstf/store/trial.hpp"

namespace deepstf {

struct PreprocessConfig {
  double bandpass_lo = 20.0;
  double bandpass_hi = 500.0;
  int bandpass_order = 8;
  bool notch = true;
  double notch_f0 = 50.0;
  double notch_bandwidth = 2.0;
  double contact_threshold = 0.5;
  double debounce_ms = 50.0;
  // Transition anchors must lie within this distance of the annotation boundary.
  double anchor_tolerance_ms = 1100.0;

  bool operator==(const PreprocessConfig&) const = default;
};

void to_json(nlohmann::json& j, const PreprocessConfig& c);
void from_json(const nlohmann::json& j, PreprocessConfig& c);

/// Preprocessing choices recorded alongside every run.
nlohmann::json preprocess_decisions();

/// A trial after filtering, rectification and gait-event extraction.
/// Normalization happens later because its statistics depend on the fold.
struct PreprocessedTrial {
  std::string trial_id;
  std::string task;
  SampleMatrix rectified;  // T x channels
  ModeAnnotation annotation;
  GaitEventTrack events;
  std::vector<TransitionEvent> transitions;  // derived from pressure

  std::int64_t length() const { return static_cast<std::int64_t>(rectified.rows()); }
  bool operator==(const PreprocessedTrial&) const = default;
};

/// bandpass -> notch -> rectify on the EMG; upsample -> mean -> binarize ->
/// HC/TO -> transition points on the pressure.
PreprocessedTrial preprocess_trial(const Trial& trial, const PreprocessConfig& config);

std::vector<bool> contact_from_pressure(const PressureRecording& pressure, std::int64_t emg_length,
                                        const PreprocessConfig& config);

Container preprocessed_to_container(const PreprocessedTrial& trial, const std::string& spec_hash);
PreprocessedTrial preprocessed_from_container(const Container& container);

}  // namespace deepstf
