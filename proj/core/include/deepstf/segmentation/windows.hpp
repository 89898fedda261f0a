// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepstf/store/container.hpp"
#include "deepstf/store/trial.hpp"

namespace deepstf {

/// Length of the transitional span preceding each transition point (500 ms).
inline constexpr std::int64_t kTransitionalSpan = 600;

enum class LabelRule : std::uint8_t {
  Point,     // mode at window_end + p_label
  Majority,  // most frequent mode over (window_end, window_end + p_label]
};

struct WindowSpec {
  std::int64_t window_len = 1200;
  std::int64_t stride = 60;
  std::int64_t p_label = 300;
  LabelRule label_rule = LabelRule::Point;
  bool log_magnitude = false;

  void validate() const;
  /// Stable hash of every field, used to key caches.
  std::string hash() const;
  bool operator==(const WindowSpec&) const = default;
};

void to_json(nlohmann::json& j, const WindowSpec& s);
void from_json(const nlohmann::json& j, WindowSpec& s);

/// Milliseconds to samples at the EMG rate.
std::int64_t ms_to_samples(double ms);

struct StateTag {
  bool transitional = false;
  std::optional<TransitionKind> kind;
  std::int64_t t_c = -1;

  bool operator==(const StateTag&) const = default;
};

/// Per-sample ground truth: annotated mode and the transition (if any) whose
/// transitional span covers the sample.
class StateTrack {
 public:
  StateTrack() = default;
  StateTrack(std::vector<LocomotionMode> modes, std::vector<std::int32_t> owner,
             std::vector<TransitionEvent> transitions);

  std::int64_t length() const { return static_cast<std::int64_t>(modes_.size()); }
  LocomotionMode mode_at(std::int64_t i) const { return modes_[static_cast<std::size_t>(i)]; }
  bool is_transitional(std::int64_t i) const { return owner_[static_cast<std::size_t>(i)] >= 0; }
  /// Index into transitions() of the span covering sample i, or -1.
  std::int32_t owner_at(std::int64_t i) const { return owner_[static_cast<std::size_t>(i)]; }
  StateTag tag_at(std::int64_t i) const;
  const std::vector<TransitionEvent>& transitions() const { return transitions_; }
  std::span<const LocomotionMode> modes() const { return modes_; }

 private:
  std::vector<LocomotionMode> modes_;
  std::vector<std::int32_t> owner_;
  std::vector<TransitionEvent> transitions_;
};

/// Flags [t_c - 600, t_c) of every transition, clipped at the trial start.
/// Where spans overlap the later transition owns the overlap.
StateTrack build_state_track(const ModeAnnotation& annotation, const std::vector<TransitionEvent>& transitions);

/// Window metadata; sample data is materialized on demand.
struct WindowRef {
  std::size_t trial = 0;  // index into the caller's trial list
  std::int64_t window_end = 0;
  LocomotionMode label = LocomotionMode::ST;
  StateTag tag;

  bool operator==(const WindowRef&) const = default;
};

/// floor((T - W - p_label) / S) + 1; throws DataError when T < W + p_label.
std::int64_t window_count(std::int64_t length, const WindowSpec& spec);

/// Windows end at W - 1, W - 1 + S, ... while end + p_label < T.
std::vector<WindowRef> segment_trial(const StateTrack& track, const WindowSpec& spec, std::size_t trial_index = 0);

/// Copies the W rows ending at window_end into `out` (W x channels, row-major).
void fill_time_window(const SampleMatrix& signal, std::int64_t window_end, std::int64_t window_len,
                      std::span<float> out);

/// Per-channel DFT magnitude over the full window, both Hermitian halves kept.
/// `data` and `out` are W x channels, row-major. Thread-safe.
void fft_magnitude(std::span<const float> data, std::size_t window_len, std::size_t channels, std::span<float> out,
                   bool log_magnitude = false);
std::vector<float> fft_magnitude(std::span<const float> data, std::size_t window_len, std::size_t channels,
                                 bool log_magnitude = false);

struct LabeledWindow {
  std::vector<float> time_data;  // 1 x W x channels
  std::vector<float> freq_data;  // 1 x W x channels
  LocomotionMode label = LocomotionMode::ST;
  StateTag tag;
  std::int64_t window_end = 0;
  std::string trial_id;

  bool operator==(const LabeledWindow&) const = default;
};

LabeledWindow materialize_window(const SampleMatrix& normalized, const WindowRef& ref, const WindowSpec& spec,
                                 const std::string& trial_id);

/// Cache of a trial's windows keyed by (trial id, spec hash).
Container windows_to_container(const std::vector<LabeledWindow>& windows, const std::string& trial_id,
                               const WindowSpec& spec);
/// Throws DataError when the container was built for another trial or spec.
std::vector<LabeledWindow> windows_from_container(const Container& container, const std::string& trial_id,
                                                  const WindowSpec& spec);

}  // namespace deepstf
