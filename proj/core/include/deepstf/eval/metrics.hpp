// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepstf/segmentation/windows.hpp"
#include "deepstf/store/modes.hpp"
#include "deepstf/store/trial.hpp"

namespace deepstf {

struct EvalConfig {
  double horizon_ms = 500.0;  // stable-detection search ends at t_c + horizon
  std::size_t run_length = 5;

  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

void to_json(nlohmann::json& j, const EvalConfig& c);
void from_json(const nlohmann::json& j, EvalConfig& c);

struct TraceRecord {
  std::int64_t window_end = 0;
  int raw_class = 0;
  int voted_class = 0;
  LocomotionMode label = LocomotionMode::ST;
  StateTag tag;

  bool operator==(const TraceRecord&) const = default;
};

/// Per-window predictions of one trial, in stream order.
struct PredictionTrace {
  std::string trial_id;
  std::int64_t stride = 60;
  std::int64_t p_label = 300;
  std::vector<TraceRecord> records;
  std::vector<TransitionEvent> transitions;

  /// Throws DataError unless window ends strictly increase.
  void validate() const;
  bool operator==(const PredictionTrace&) const = default;
};

struct StableDetection {
  TransitionEvent transition;
  std::int64_t t_d = 0;
  double p_stable_ms = 0.0;  // (t_c - t_d) / 1.2

  bool operator==(const StableDetection&) const = default;
};

double p_stable_ms(std::int64_t t_c, std::int64_t t_d);

/// Index of the first record whose label point falls in the transitional span
/// of `transition`, i.e. window_end + p_label >= t_c - 600.
std::optional<std::size_t> search_start(const PredictionTrace& trace, const TransitionEvent& transition);

/// First run of `run_length` consecutive voted predictions equal to the
/// post-transition mode, starting at the transitional span and ending no later
/// than t_c + horizon. Throws DataError when the trace does not reach the span
/// or skips windows inside the searched range.
std::optional<StableDetection> detect_stable(const PredictionTrace& trace, const TransitionEvent& transition,
                                             const EvalConfig& config = {});

struct TransitionOutcome {
  std::string trial_id;
  TransitionEvent transition;
  std::optional<StableDetection> detection;

  bool operator==(const TransitionOutcome&) const = default;
};

std::vector<TransitionOutcome> detect_all(std::span<const PredictionTrace> traces, const EvalConfig& config = {});

/// Detections with p_stable > 0 over all transitions. Throws DataError when
/// n_transitions is zero.
double predict_rate(std::span<const StableDetection> detections, std::size_t n_transitions);
double predict_rate(std::span<const TransitionOutcome> outcomes);

/// Voted accuracy over steady-state windows. Throws DataError when there are none.
double steady_accuracy(std::span<const PredictionTrace> traces);

/// Agreement of voted predictions on transitional windows with the reference
/// that switches from the pre- to the post-transition mode at t_d (t_c when
/// undetected). Returns 0 when there are no transitional windows.
double transition_accuracy(std::span<const PredictionTrace> traces, std::span<const TransitionOutcome> outcomes);

struct KindSummary {
  std::size_t count = 0;
  std::size_t detected = 0;
  std::size_t positive = 0;
  double p_stable_mean_ms = 0.0;
  double p_stable_sd_ms = 0.0;

  bool operator==(const KindSummary&) const = default;
};

using ConfusionMatrix = std::array<std::array<std::int64_t, kModeCount>, kModeCount>;

struct EvalReport {
  double p_label_ms = 0.0;
  double acc_ss = 0.0;
  double acc_ts = 0.0;
  double acc_overall = 0.0;
  double raw_accuracy = 0.0;  // argmax of the backbone against labels
  double predict_rate = 0.0;
  double p_stable_mean_ms = 0.0;  // over detected transitions
  double p_stable_sd_ms = 0.0;
  std::size_t n_windows = 0;
  std::size_t n_steady = 0;
  std::size_t n_transitional = 0;
  std::size_t n_transitions = 0;
  std::size_t n_detected = 0;
  std::size_t n_positive = 0;
  std::array<KindSummary, kTransitionKindCount> per_kind{};
  ConfusionMatrix confusion{};  // rows: label, columns: voted class
  std::vector<TransitionOutcome> outcomes;

  bool operator==(const EvalReport&) const = default;
};

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

EvalReport build_report(std::span<const PredictionTrace> traces, const EvalConfig& config = {});

/// Scalar fields as a two-line CSV (header, values).
std::string report_to_csv(const EvalReport& report);
/// One row per transition: trial, kind, t_c, t_d, p_stable_ms.
std::string p_stable_csv(const EvalReport& report);
std::string confusion_csv(const EvalReport& report);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

/// Mean and sample standard deviation.
MetricSummary summarize(std::span<const double> values);

}  // namespace deepstf
