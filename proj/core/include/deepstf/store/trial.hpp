// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deepstf/store/modes.hpp"

namespace deepstf {

inline constexpr double kEmgRate = 1200.0;
inline constexpr double kPressureRate = 40.0;
inline constexpr std::size_t kEmgChannels = 8;
inline constexpr std::int64_t kMinTrialSamples = 1200;

/// Recorded muscles, in column order.
const std::vector<std::string>& default_channel_names();

/// Dense row-major sample matrix: one row per time sample, one column per channel.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  SampleMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  /// Copy of the listed columns, in the given order.
  SampleMatrix select_columns(std::span<const std::size_t> columns) const;

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  bool operator==(const SampleMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

struct EmgRecording {
  std::string subject_id;
  std::string trial_id;
  double sample_rate = kEmgRate;
  std::vector<std::string> channel_names = default_channel_names();
  SampleMatrix samples;  // T x 8

  std::int64_t length() const { return static_cast<std::int64_t>(samples.rows()); }
  bool operator==(const EmgRecording&) const = default;
};

struct PressureRecording {
  double sample_rate = kPressureRate;
  std::vector<float> heel;
  std::vector<float> toe;

  bool operator==(const PressureRecording&) const = default;
};

/// Half-open [start, end) range of samples at the EMG rate.
struct ModeSegment {
  LocomotionMode mode;
  std::int64_t start;
  std::int64_t end;

  std::int64_t length() const { return end - start; }
  bool operator==(const ModeSegment&) const = default;
};

struct ModeAnnotation {
  std::vector<ModeSegment> segments;

  /// Mode in effect at a sample; the sample must be covered.
  LocomotionMode mode_at(std::int64_t sample) const;
  std::int64_t length() const { return segments.empty() ? 0 : segments.back().end; }
  bool operator==(const ModeAnnotation&) const = default;
};

struct TransitionEvent {
  TransitionKind kind;
  std::int64_t transition_point;  // t_c, EMG sample index
  GaitEventKind source_event;

  bool operator==(const TransitionEvent&) const = default;
};

struct Trial {
  EmgRecording emg;
  PressureRecording pressure;
  ModeAnnotation annotation;
  std::vector<TransitionEvent> transitions;
  std::string task;  // paradigm task name
  std::uint64_t seed = 0;

  const std::string& id() const { return emg.trial_id; }
  std::int64_t length() const { return emg.length(); }
  bool operator==(const Trial&) const = default;
};

/// Checks every type invariant; throws DataError naming the offending field.
void validate_trial(const Trial& trial);

void validate_annotation(const ModeAnnotation& annotation, std::int64_t length);

}  // namespace deepstf
