// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/preprocess/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepstf/error.hpp"

namespace deepstf {

SampleMatrix filter_channels(const SampleMatrix& samples, const BiquadCascade& cascade) {
  SampleMatrix out(samples.rows(), samples.cols());
  for (std::size_t c = 0; c < samples.cols(); ++c) {
    const auto col = samples.column(c);
    out.set_column(c, filter_forward(std::span<const double>(col), cascade));
  }
  return out;
}

SampleMatrix rectify_channels(const SampleMatrix& samples) {
  SampleMatrix out = samples;
  for (auto& v : out.values()) v = std::fabs(v);
  return out;
}

ChannelStats fit_channel_stats(std::span<const SampleMatrix* const> sources) {
  if (sources.empty()) throw DataError("fit_channel_stats: no data");
  const std::size_t channels = sources.front()->cols();
  std::vector<double> sum(channels, 0.0);
  std::size_t n = 0;
  for (const auto* m : sources) {
    if (m->cols() != channels) throw DataError("fit_channel_stats: channel count differs between sources");
    for (std::size_t r = 0; r < m->rows(); ++r) {
      for (std::size_t c = 0; c < channels; ++c) sum[c] += (*m)(r, c);
    }
    n += m->rows();
  }
  if (n < 2) throw DataError("fit_channel_stats: need at least two samples per channel");

  ChannelStats stats;
  stats.mean.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) stats.mean[c] = sum[c] / static_cast<double>(n);
  // Second pass for numerical robustness.
  std::vector<double> sq(channels, 0.0);
  for (const auto* m : sources) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = (*m)(r, c) - stats.mean[c];
        sq[c] += d * d;
      }
    }
  }
  stats.sd.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    stats.sd[c] = std::sqrt(sq[c] / static_cast<double>(n));
    if (!(stats.sd[c] > 0.0)) throw DataError("fit_channel_stats: zero variance in channel " + std::to_string(c));
  }
  return stats;
}

ChannelStats fit_channel_stats(const SampleMatrix& source) {
  const SampleMatrix* p = &source;
  return fit_channel_stats(std::span<const SampleMatrix* const>(&p, 1));
}

SampleMatrix apply_normalization(const SampleMatrix& samples, const ChannelStats& stats) {
  if (stats.channels() != samples.cols()) throw DataError("apply_normalization: channel count mismatch");
  SampleMatrix out(samples.rows(), samples.cols());
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    for (std::size_t c = 0; c < samples.cols(); ++c) {
      out(r, c) = static_cast<float>((samples(r, c) - stats.mean[c]) / stats.sd[c]);
    }
  }
  return out;
}

namespace {

template <typename T>
std::vector<double> upsample_impl(std::span<const T> series, int factor) {
  if (series.size() < 2) throw DataError("upsample_linear: need at least two samples");
  if (factor < 1) throw ConfigError("upsample_linear: factor must be >= 1");
  const std::size_t f = static_cast<std::size_t>(factor);
  std::vector<double> out((series.size() - 1) * f + 1);
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    const double a = series[i];
    const double b = series[i + 1];
    for (std::size_t j = 0; j < f; ++j) {
      out[i * f + j] = a + (b - a) * (static_cast<double>(j) / static_cast<double>(f));
    }
  }
  out.back() = series.back();
  return out;
}

std::vector<double> min_max(std::span<const double> trace, const char* name) {
  const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
  if (!(*hi > *lo)) throw DataError(std::string("mean_pressure: flat ") + name + " trace");
  std::vector<double> out(trace.size());
  const double range = *hi - *lo;
  for (std::size_t i = 0; i < trace.size(); ++i) out[i] = (trace[i] - *lo) / range;
  return out;
}

}  // namespace

std::vector<double> upsample_linear(std::span<const double> series, int factor) {
  return upsample_impl(series, factor);
}

std::vector<double> upsample_linear(std::span<const float> series, int factor) {
  return upsample_impl(series, factor);
}

std::vector<double> mean_pressure(std::span<const double> heel, std::span<const double> toe) {
  if (heel.size() != toe.size()) throw DataError("mean_pressure: heel and toe lengths differ");
  if (heel.empty()) throw DataError("mean_pressure: empty traces");
  auto h = min_max(heel, "heel");
  const auto t = min_max(toe, "toe");
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = (h[i] + t[i]) / 2.0;
  return h;
}

std::vector<bool> binarize_contact(std::span<const double> mean_pressure, double threshold,
                                   double min_duration_ms, double fs) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("binarize_contact: threshold must be in (0, 1)");
  std::vector<bool> contact(mean_pressure.size());
  for (std::size_t i = 0; i < mean_pressure.size(); ++i) contact[i] = mean_pressure[i] >= threshold;

  const auto min_len = static_cast<std::size_t>(std::llround(min_duration_ms * fs / 1000.0));
  if (min_len <= 1 || contact.empty()) return contact;

  struct Run {
    bool value;
    std::size_t start, length;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < contact.size(); ++i) {
    if (runs.empty() || runs.back().value != contact[i]) {
      runs.push_back({contact[i], i, 1});
    } else {
      ++runs.back().length;
    }
  }
  while (runs.size() > 1) {
    std::size_t shortest = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
      if (runs[i].length < runs[shortest].length) shortest = i;
    }
    if (runs[shortest].length >= min_len) break;
    // Flipping a run fuses it with both neighbours, which carry the other value.
    std::size_t first = shortest, last = shortest;
    if (shortest > 0) first = shortest - 1;
    if (shortest + 1 < runs.size()) last = shortest + 1;
    Run merged{!runs[shortest].value, runs[first].start, 0};
    for (std::size_t i = first; i <= last; ++i) merged.length += runs[i].length;
    runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(first), runs.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    runs.insert(runs.begin() + static_cast<std::ptrdiff_t>(first), merged);
  }
  for (const auto& r : runs) {
    std::fill(contact.begin() + static_cast<std::ptrdiff_t>(r.start),
              contact.begin() + static_cast<std::ptrdiff_t>(r.start + r.length), r.value);
  }
  return contact;
}

}  // namespace deepstf
