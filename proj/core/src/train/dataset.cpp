// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/train/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "deepstf/error.hpp"

namespace deepstf {

std::string_view phase_name(AccessPhase phase) {
  switch (phase) {
    case AccessPhase::NormalizationFit:
      return "normalization";
    case AccessPhase::Step1Train:
      return "step1-train";
    case AccessPhase::Step1Validation:
      return "step1-validation";
    case AccessPhase::Step2Train:
      return "step2-train";
    case AccessPhase::Evaluation:
      return "evaluation";
  }
  return "?";
}

TrackedDataset::TrackedDataset(std::vector<PreprocessedTrial> trials) : trials_(std::move(trials)) {
  for (std::size_t i = 0; i < trials_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (trials_[i].trial_id == trials_[j].trial_id) throw DataError("dataset: duplicate trial id " + trials_[i].trial_id);
    }
  }
}

TrackedDataset::TrackedDataset(const TrackedDataset& other) : trials_(other.trials_) {}

TrackedDataset& TrackedDataset::operator=(const TrackedDataset& other) {
  if (this != &other) {
    trials_ = other.trials_;
    std::lock_guard lock(mutex_);
    log_.clear();
  }
  return *this;
}

std::vector<std::string> TrackedDataset::ids() const {
  std::vector<std::string> out;
  for (const auto& t : trials_) out.push_back(t.trial_id);
  return out;
}

std::vector<std::string> TrackedDataset::tasks() const {
  std::vector<std::string> out;
  for (const auto& t : trials_) out.push_back(t.task);
  return out;
}

std::size_t TrackedDataset::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < trials_.size(); ++i) {
    if (trials_[i].trial_id == id) return i;
  }
  throw DataError("dataset: unknown trial id '" + id + "'");
}

const PreprocessedTrial& TrackedDataset::read(std::size_t i, AccessPhase phase) const {
  const PreprocessedTrial& t = trials_.at(i);
  std::lock_guard lock(mutex_);
  log_.push_back({t.trial_id, phase});
  return t;
}

std::vector<AccessRecord> TrackedDataset::access_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

void TrackedDataset::clear_log() const {
  std::lock_guard lock(mutex_);
  log_.clear();
}

std::vector<std::size_t> all_columns() {
  std::vector<std::size_t> c(kEmgChannels);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = i;
  return c;
}

namespace {

SampleMatrix select(const SampleMatrix& m, std::span<const std::size_t> columns) {
  if (columns.size() == m.cols()) {
    bool identity = true;
    for (std::size_t i = 0; i < columns.size(); ++i) identity = identity && columns[i] == i;
    if (identity) return m;
  }
  return m.select_columns(columns);
}

}  // namespace

ChannelStats fit_normalization(const TrackedDataset& data, std::span<const std::size_t> trials,
                               std::span<const std::size_t> columns) {
  std::vector<SampleMatrix> selected;
  selected.reserve(trials.size());
  for (std::size_t t : trials) selected.push_back(select(data.read(t, AccessPhase::NormalizationFit).rectified, columns));
  std::vector<const SampleMatrix*> ptrs;
  for (const auto& m : selected) ptrs.push_back(&m);
  return fit_channel_stats(ptrs);
}

WindowSet build_window_set(const TrackedDataset& data, std::span<const std::size_t> trials, AccessPhase phase,
                           const ChannelStats& stats, const WindowSpec& spec, std::span<const std::size_t> columns) {
  spec.validate();
  if (stats.channels() != columns.size()) throw ConfigError("window set: normalization stats do not match channels");
  WindowSet set;
  set.spec = spec;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    const PreprocessedTrial& t = data.read(trials[k], phase);
    set.trial_ids.push_back(t.trial_id);
    set.signals.push_back(apply_normalization(select(t.rectified, columns), stats));
    set.transitions.push_back(t.transitions);
    const auto refs = segment_trial(build_state_track(t.annotation, t.transitions), spec, k);
    set.windows.insert(set.windows.end(), refs.begin(), refs.end());
  }
  return set;
}

void WindowSet::materialize(std::span<const std::size_t> indices, nn::Tensor<float>& time, nn::Tensor<float>& freq,
                            nn::Tensor<float>* targets) const {
  const std::size_t N = indices.size(), W = static_cast<std::size_t>(spec.window_len), C = channels();
  time.resize({N, 1, W, C});
  freq.resize({N, 1, W, C});
  if (targets) {
    targets->resize({N, kModeCount});
    targets->fill(0.0f);
  }
  for (std::size_t n = 0; n < N; ++n) {
    const WindowRef& w = windows.at(indices[n]);
    const std::span<float> t(time.data() + n * W * C, W * C);
    fill_time_window(signals[w.trial], w.window_end, spec.window_len, t);
    fft_magnitude(t, W, C, std::span<float>(freq.data() + n * W * C, W * C), spec.log_magnitude);
    if (targets) (*targets)[n * kModeCount + mode_index(w.label)] = 1.0f;
  }
}

std::vector<std::size_t> WindowSet::trial_windows(std::size_t t) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].trial == t) out.push_back(i);
  }
  return out;
}

}  // namespace deepstf
