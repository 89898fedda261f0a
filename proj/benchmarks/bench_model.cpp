// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "deepstf/model/deepstf.hpp"
#include "deepstf/nn/ops.hpp"

namespace {

using deepstf::DeepStfModel;
using deepstf::nn::Tensor;

Tensor<float> random_input(std::size_t n, std::uint64_t seed) {
  Tensor<float> t({n, 1, 1200, 8});
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  for (auto& v : t.values()) v = g(rng);
  return t;
}

void BM_ForwardEval(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DeepStfModel<float> model;
  const auto time = random_input(n, 1), freq = random_input(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(time, freq, false));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ForwardEval)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DeepStfModel<float> model;
  const auto time = random_input(n, 1), freq = random_input(n, 2);
  Tensor<float> target({n, 9});
  for (std::size_t i = 0; i < n; ++i) target[i * 9 + i % 9] = 1.0f;
  for (auto _ : state) {
    const auto probs = model.forward(time, freq, true);
    model.backward(deepstf::nn::bce_grad(probs, target));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
