// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "deepstf/preprocess/filter.hpp"
#include "deepstf/segmentation/windows.hpp"

namespace {

void BM_FftMagnitude(benchmark::State& state) {
  std::vector<float> x(1200 * 8);
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g;
  for (auto& v : x) v = g(rng);
  std::vector<float> out(x.size());
  for (auto _ : state) {
    deepstf::fft_magnitude(x, 1200, 8, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_FftMagnitude);

void BM_Bandpass(benchmark::State& state) {
  const auto cascade = deepstf::design_bandpass(1200.0, 20.0, 500.0, 8);
  std::vector<double> x(60000);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (auto& v : x) v = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(deepstf::filter_forward(std::span<const double>(x), cascade));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Bandpass)->Unit(benchmark::kMillisecond);

}  // namespace
