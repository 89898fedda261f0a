// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace deepstf {

struct FoldPlan {
  int fold_id = 0;
  std::vector<std::string> train1;
  std::vector<std::string> train2;
  std::vector<std::string> test;

  bool operator==(const FoldPlan&) const = default;
};

void to_json(nlohmann::json& j, const FoldPlan& f);
void from_json(const nlohmann::json& j, FoldPlan& f);

/// Shuffles the trials with `seed` and deals them into `folds` groups. Fold k
/// tests on group k and splits the rest 7:1 (TrainSet2 gets round(rest / 8)
/// trials). With `strata` (one label per trial, e.g. the task name) trials are
/// shuffled within each stratum and dealt round-robin so every group and every
/// TrainSet2 mixes the strata evenly. Throws ConfigError below 10 trials.
std::vector<FoldPlan> make_folds(const std::vector<std::string>& trial_ids, std::uint64_t seed, int folds = 5,
                                 const std::vector<std::string>& strata = {});

/// Unbiased index in [0, n) from a splitmix64 stream; portable across
/// standard libraries.
std::uint64_t uniform_index(std::uint64_t& state, std::uint64_t n);

/// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void portable_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::uint64_t state = seed;
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(state, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace deepstf
