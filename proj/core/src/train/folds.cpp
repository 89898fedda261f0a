// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/train/folds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"
#include "deepstf/synth/synth.hpp"

namespace deepstf {

void to_json(nlohmann::json& j, const FoldPlan& f) {
  j = nlohmann::json{{"fold", f.fold_id}, {"train1", f.train1}, {"train2", f.train2}, {"test", f.test}};
}

void from_json(const nlohmann::json& j, FoldPlan& f) {
  f.fold_id = j.at("fold").get<int>();
  f.train1 = j.at("train1").get<std::vector<std::string>>();
  f.train2 = j.at("train2").get<std::vector<std::string>>();
  f.test = j.at("test").get<std::vector<std::string>>();
}

std::uint64_t uniform_index(std::uint64_t& state, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    if (z < limit) return z % n;
  }
}

std::vector<FoldPlan> make_folds(const std::vector<std::string>& trial_ids, std::uint64_t seed, int folds,
                                 const std::vector<std::string>& strata) {
  if (folds < 2) throw ConfigError("make_folds: need at least 2 folds");
  if (trial_ids.size() < 10) {
    throw ConfigError("make_folds: need at least 10 trials, got " + std::to_string(trial_ids.size()));
  }
  if (!strata.empty() && strata.size() != trial_ids.size()) {
    throw ConfigError("make_folds: one stratum label per trial required");
  }
  {
    auto sorted = trial_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("make_folds: duplicate trial ids");
    }
  }

  // Sorting first makes the plan independent of the input order.
  std::map<std::string, std::vector<std::string>> by_stratum;
  for (std::size_t i = 0; i < trial_ids.size(); ++i) by_stratum[strata.empty() ? "" : strata[i]].push_back(trial_ids[i]);
  struct Dealt {
    std::string id;
    std::size_t rank;     // position within its stratum
    std::size_t stratum;  // stratum index
    int group;
  };
  std::vector<Dealt> dealt;
  std::size_t counter = 0, s = 0;
  for (auto& [name, ids] : by_stratum) {
    std::sort(ids.begin(), ids.end());
    portable_shuffle(ids, derive_seed(seed, 0x4f4c44, s));
    for (std::size_t r = 0; r < ids.size(); ++r) {
      dealt.push_back({ids[r], r, s, static_cast<int>(counter % static_cast<std::size_t>(folds))});
      ++counter;
    }
    ++s;
  }
  // Interleave strata so the TrainSet2 prefix mixes them.
  std::stable_sort(dealt.begin(), dealt.end(), [](const Dealt& a, const Dealt& b) {
    return a.rank != b.rank ? a.rank < b.rank : a.stratum < b.stratum;
  });

  std::vector<FoldPlan> plans(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    FoldPlan& p = plans[static_cast<std::size_t>(k)];
    p.fold_id = k;
    std::vector<std::string> rest;
    for (const auto& d : dealt) (d.group == k ? p.test : rest).push_back(d.id);
    const auto n2 = static_cast<std::size_t>(std::llround(static_cast<double>(rest.size()) / 8.0));
    p.train2.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n2));
    p.train1.assign(rest.begin() + static_cast<std::ptrdiff_t>(n2), rest.end());
    if (p.train1.empty() || p.train2.empty() || p.test.empty()) {
      throw ConfigError("make_folds: fold " + std::to_string(k) + " has an empty set");
    }
  }
  return plans;
}

}  // namespace deepstf
