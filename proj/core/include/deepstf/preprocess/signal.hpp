// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "deepstf/preprocess/filter.hpp"
#include "deepstf/store/trial.hpp"

namespace deepstf {

template <typename T>
std::vector<T> rectify(std::span<const T> signal) {
  std::vector<T> out(signal.begin(), signal.end());
  for (auto& v : out) v = v < T{0} ? -v : v;
  return out;
}

/// Applies the cascade to every column.
SampleMatrix filter_channels(const SampleMatrix& samples, const BiquadCascade& cascade);
SampleMatrix rectify_channels(const SampleMatrix& samples);

/// Per-channel mean and population standard deviation.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> sd;

  std::size_t channels() const { return mean.size(); }
  bool operator==(const ChannelStats&) const = default;
};

/// Pools all rows of the given matrices. Throws DataError("zero variance")
/// for a constant channel and when fewer than two samples are provided.
ChannelStats fit_channel_stats(std::span<const SampleMatrix* const> sources);
ChannelStats fit_channel_stats(const SampleMatrix& source);

/// (x - mean) / sd per channel.
SampleMatrix apply_normalization(const SampleMatrix& samples, const ChannelStats& stats);

/// Linear interpolation by an integer factor: output length (n - 1) * factor + 1.
std::vector<double> upsample_linear(std::span<const double> series, int factor = 30);
std::vector<double> upsample_linear(std::span<const float> series, int factor = 30);

/// Min-max normalizes each trace to [0, 1] and averages them pointwise.
std::vector<double> mean_pressure(std::span<const double> heel, std::span<const double> toe);

/// value >= threshold is contact; runs shorter than `min_duration_ms` are
/// merged into their neighbours, shortest first.
std::vector<bool> binarize_contact(std::span<const double> mean_pressure, double threshold,
                                   double min_duration_ms, double fs = kEmgRate);

}  // namespace deepstf
