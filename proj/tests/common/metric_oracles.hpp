// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force recomputations of the evaluation metrics and random trace
// generators shared by the unit and acceptance tests.

#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "deepstf/eval/metrics.hpp"

namespace deepstf::oracle {

inline int idx(LocomotionMode m) { return static_cast<int>(mode_index(m)); }

// Contiguous trace with one transition at t_c; labels and tags follow the
// segmentation rule (mode and span membership at window_end + p_label).
inline PredictionTrace make_trace(std::int64_t n, std::int64_t t_c, TransitionKind kind, const std::vector<int>& voted,
                                  std::int64_t first_end = 1199) {
  PredictionTrace t;
  t.trial_id = "t";
  t.transitions = {{kind, t_c, transition_info(kind).critical_event}};
  const auto& info = transition_info(kind);
  for (std::int64_t k = 0; k < n; ++k) {
    TraceRecord r;
    r.window_end = first_end + k * t.stride;
    const std::int64_t lp = r.window_end + t.p_label;
    r.label = lp < t_c ? info.from : info.to;
    if (lp >= t_c - 600 && lp < t_c) r.tag = StateTag{true, kind, t_c};
    r.voted_class = voted[static_cast<std::size_t>(k)];
    r.raw_class = r.voted_class;
    t.records.push_back(r);
  }
  return t;
}

// Scans every run-length window of eligible records for the first all-post run.
inline std::optional<std::int64_t> brute_force_t_d(const PredictionTrace& t, const TransitionEvent& tr,
                                                   std::size_t run, double horizon_ms) {
  const int post = idx(transition_info(tr.kind).to);
  const std::int64_t horizon = tr.transition_point + static_cast<std::int64_t>(std::llround(horizon_ms * 1.2));
  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    const auto& r = t.records[k];
    if (r.window_end + t.p_label >= tr.transition_point - 600 && r.window_end <= horizon) eligible.push_back(k);
  }
  for (std::size_t e = 0; e + run <= eligible.size(); ++e) {
    bool all = true;
    for (std::size_t j = 0; j < run; ++j) all = all && t.records[eligible[e + j]].voted_class == post;
    if (all) return t.records[eligible[e + run - 1]].window_end;
  }
  return std::nullopt;
}

inline std::vector<int> random_votes(std::mt19937_64& rng, std::size_t n, TransitionKind kind) {
  const auto& info = transition_info(kind);
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> any(0, 8);
  std::vector<int> v(n);
  for (auto& x : v) {
    const int p = pick(rng);
    x = p < 5 ? idx(info.to) : p < 8 ? idx(info.from) : any(rng);
  }
  return v;
}

// Trials with a W->SA and an SA->W transition and mostly-correct random votes.
inline std::vector<PredictionTrace> random_traces(std::mt19937_64& rng, int trials) {
  using M = LocomotionMode;
  using TK = TransitionKind;
  std::vector<PredictionTrace> out;
  std::uniform_int_distribution<int> any(0, 8);
  for (int i = 0; i < trials; ++i) {
    PredictionTrace t;
    t.trial_id = "trial" + std::to_string(i);
    const std::int64_t a = 3000 + 60 * static_cast<std::int64_t>(rng() % 10), b = a + 2400;
    t.transitions = {{TK::W_SA, a, GaitEventKind::HC}, {TK::SA_W, b, GaitEventKind::HC}};
    for (int k = 0; k < 110; ++k) {
      TraceRecord r;
      r.window_end = 1199 + 60 * k;
      const std::int64_t lp = r.window_end + t.p_label;
      r.label = lp < a ? M::W : lp < b ? M::SA : M::W;
      if (lp >= a - 600 && lp < a) r.tag = {true, TK::W_SA, a};
      if (lp >= b - 600 && lp < b) r.tag = {true, TK::SA_W, b};
      const int coin = static_cast<int>(rng() % 10);
      r.voted_class =
          coin < 6 ? idx(r.label) : coin < 8 ? (idx(r.label) == idx(M::W) ? idx(M::SA) : idx(M::W)) : any(rng);
      r.raw_class = coin < 5 ? idx(r.label) : any(rng);
      t.records.push_back(r);
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline double recount_predict_rate(const std::vector<TransitionOutcome>& outs) {
  std::size_t positive = 0;
  for (const auto& o : outs) positive += o.detection && o.detection->t_d < o.transition.transition_point;
  return static_cast<double>(positive) / static_cast<double>(outs.size());
}

inline double recount_steady_accuracy(const std::vector<PredictionTrace>& traces) {
  std::size_t n = 0, c = 0;
  for (const auto& t : traces) {
    for (const auto& r : t.records) {
      if (r.tag.transitional) continue;
      ++n;
      c += r.voted_class == idx(r.label);
    }
  }
  return static_cast<double>(c) / static_cast<double>(n);
}

// Builds the reference vector of every transition and matches it elementwise.
inline double recount_transition_accuracy(const std::vector<PredictionTrace>& traces,
                                          const std::vector<TransitionOutcome>& outs) {
  std::size_t n = 0, match = 0;
  for (const auto& o : outs) {
    const std::int64_t t_d = o.detection ? o.detection->t_d : o.transition.transition_point;
    const auto& info = transition_info(o.transition.kind);
    for (const auto& t : traces) {
      if (t.trial_id != o.trial_id) continue;
      for (const auto& r : t.records) {
        if (!r.tag.transitional || r.tag.t_c != o.transition.transition_point) continue;
        ++n;
        match += r.voted_class == idx(r.window_end < t_d ? info.from : info.to);
      }
    }
  }
  return n == 0 ? 0.0 : static_cast<double>(match) / static_cast<double>(n);
}

}  // namespace deepstf::oracle
