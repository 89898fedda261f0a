// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/store/trial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepstf/error.hpp"

namespace deepstf {

const std::vector<std::string>& default_channel_names() {
  static const std::vector<std::string> names = {"BF", "SM", "MG", "LG", "VM", "VL", "RF", "TA"};
  return names;
}

SampleMatrix::SampleMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw DataError("sample matrix: size does not match shape");
}

std::vector<double> SampleMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
  return out;
}

void SampleMatrix::set_column(std::size_t c, std::span<const double> values) {
  for (std::size_t r = 0; r < rows_; ++r) data_[r * cols_ + c] = static_cast<float>(values[r]);
}

SampleMatrix SampleMatrix::select_columns(std::span<const std::size_t> columns) const {
  SampleMatrix out(rows_, columns.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t j = 0; j < columns.size(); ++j) out(r, j) = (*this)(r, columns[j]);
  }
  return out;
}

LocomotionMode ModeAnnotation::mode_at(std::int64_t sample) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), sample,
                             [](std::int64_t s, const ModeSegment& seg) { return s < seg.end; });
  if (it == segments.end() || sample < it->start) {
    throw DataError("annotation does not cover sample " + std::to_string(sample));
  }
  return it->mode;
}

void validate_annotation(const ModeAnnotation& annotation, std::int64_t length) {
  const auto& segs = annotation.segments;
  if (segs.empty()) throw DataError("annotation.segments: empty");
  if (segs.front().start != 0) throw DataError("annotation.segments: must start at sample 0");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].length() <= 0) throw DataError("annotation.segments: segment length must be > 0");
    if (i > 0) {
      if (segs[i].start < segs[i - 1].end) throw DataError("annotation.segments: segments overlap");
      if (segs[i].start > segs[i - 1].end) throw DataError("annotation.segments: gap between segments");
    }
  }
  if (segs.back().end != length) {
    throw DataError("annotation.segments: must cover the recording (end " +
                    std::to_string(segs.back().end) + " vs length " + std::to_string(length) + ")");
  }
}

void validate_trial(const Trial& trial) {
  const auto& emg = trial.emg;
  if (emg.samples.cols() != kEmgChannels || emg.channel_names.size() != kEmgChannels) {
    throw DataError("emg.samples: channel count must be 8, got " + std::to_string(emg.samples.cols()));
  }
  if (emg.length() < kMinTrialSamples) {
    throw DataError("emg.samples: length " + std::to_string(emg.length()) + " shorter than one window");
  }
  for (float v : emg.samples.values()) {
    if (!std::isfinite(v)) throw DataError("emg.samples: non-finite value");
  }
  if (!(emg.sample_rate > 0.0)) throw DataError("emg.sample_rate: must be positive");

  const auto& p = trial.pressure;
  if (p.heel.size() != p.toe.size()) throw DataError("pressure: heel and toe lengths differ");
  if (!(p.sample_rate > 0.0)) throw DataError("pressure.sample_rate: must be positive");
  for (const auto* trace : {&p.heel, &p.toe}) {
    for (float v : *trace) {
      if (!std::isfinite(v) || v < 0.0f) throw DataError("pressure: values must be finite and non-negative");
    }
  }

  validate_annotation(trial.annotation, emg.length());

  const auto& segs = trial.annotation.segments;
  std::int64_t prev = -1;
  for (const auto& t : trial.transitions) {
    if (t.transition_point <= prev) throw DataError("transitions: not sorted by transition point");
    prev = t.transition_point;
    if (t.transition_point <= 0 || t.transition_point >= emg.length()) {
      throw DataError("transitions: transition point outside recording");
    }
    const auto& info = transition_info(t.kind);
    if (t.source_event != info.critical_event) {
      throw DataError("transitions: source event does not match the critical event of " +
                      std::string(info.name));
    }
    auto it = std::find_if(segs.begin() + 1, segs.end(),
                           [&](const ModeSegment& s) { return s.start == t.transition_point; });
    if (it == segs.end() || (it - 1)->mode != info.from || it->mode != info.to) {
      throw DataError("transitions: " + std::string(info.name) + " at " +
                      std::to_string(t.transition_point) + " is not on a matching segment boundary");
    }
  }
}

}  // namespace deepstf
