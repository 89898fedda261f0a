// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepstf/nn/tensor.hpp"
#include "deepstf/preprocess/pipeline.hpp"
#include "deepstf/segmentation/windows.hpp"

namespace deepstf {

enum class AccessPhase : std::uint8_t {
  NormalizationFit,
  Step1Train,
  Step1Validation,
  Step2Train,
  Evaluation,
};

std::string_view phase_name(AccessPhase phase);

struct AccessRecord {
  std::string trial_id;
  AccessPhase phase;

  bool operator==(const AccessRecord&) const = default;
};

/// Read-only set of preprocessed trials that logs every signal read with the
/// phase that asked for it. Identifiers and task names are metadata and are
/// not logged.
class TrackedDataset {
 public:
  TrackedDataset() = default;
  explicit TrackedDataset(std::vector<PreprocessedTrial> trials);
  TrackedDataset(const TrackedDataset& other);
  TrackedDataset& operator=(const TrackedDataset& other);

  std::size_t size() const { return trials_.size(); }
  const std::string& id(std::size_t i) const { return trials_.at(i).trial_id; }
  const std::string& task(std::size_t i) const { return trials_.at(i).task; }
  std::vector<std::string> ids() const;
  std::vector<std::string> tasks() const;
  /// Throws DataError for unknown ids.
  std::size_t index_of(const std::string& id) const;

  const PreprocessedTrial& read(std::size_t i, AccessPhase phase) const;

  std::vector<AccessRecord> access_log() const;
  void clear_log() const;

 private:
  std::vector<PreprocessedTrial> trials_;
  mutable std::mutex mutex_;
  mutable std::vector<AccessRecord> log_;
};

/// Normalized, channel-selected signals and window metadata for a set of trials.
struct WindowSet {
  std::vector<std::string> trial_ids;
  std::vector<SampleMatrix> signals;
  std::vector<std::vector<TransitionEvent>> transitions;
  std::vector<WindowRef> windows;  // grouped by trial, stream order within each
  WindowSpec spec;

  std::size_t channels() const { return signals.empty() ? 0 : signals.front().cols(); }
  /// Fills N x 1 x W x C time and frequency tensors and N x 9 one-hot targets.
  void materialize(std::span<const std::size_t> indices, nn::Tensor<float>& time, nn::Tensor<float>& freq,
                   nn::Tensor<float>* targets = nullptr) const;
  /// Window indices belonging to trial t, in stream order.
  std::vector<std::size_t> trial_windows(std::size_t t) const;
};

/// Pooled per-channel statistics of the rectified signals; logs NormalizationFit.
ChannelStats fit_normalization(const TrackedDataset& data, std::span<const std::size_t> trials,
                               std::span<const std::size_t> columns);

WindowSet build_window_set(const TrackedDataset& data, std::span<const std::size_t> trials, AccessPhase phase,
                           const ChannelStats& stats, const WindowSpec& spec, std::span<const std::size_t> columns);

/// All eight columns.
std::vector<std::size_t> all_columns();

}  // namespace deepstf
