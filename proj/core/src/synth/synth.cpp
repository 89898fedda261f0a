// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <random>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"
#include "deepstf/preprocess/filter.hpp"

namespace deepstf {
namespace {

using M = LocomotionMode;
using nlohmann::json;

constexpr double kPressurePeak = 100.0;
constexpr std::int64_t kRateRatio = 30;  // EMG samples per pressure sample

// Gait phase offsets per muscle: hamstrings, calf, quadriceps, tibialis.
constexpr std::array<double, kEmgChannels> kPhaseOffset = {0.90, 0.90, 0.45, 0.45, 0.05, 0.05, 0.05, 0.70};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::int64_t snap_hc(double t) {
  const auto k = static_cast<std::int64_t>(std::llround((t + 15.0) / kRateRatio));
  return kRateRatio * k - 15;
}

std::int64_t snap_to(double t) {
  const auto k = static_cast<std::int64_t>(std::llround((t - 16.0) / kRateRatio));
  return kRateRatio * k + 16;
}

bool is_moving(M m) { return m != M::ST; }

struct Timeline {
  std::vector<ModeSegment> segments;
  std::vector<GaitEvent> events;
  std::int64_t length = 0;
};

Timeline build_timeline(const SynthConfig& cfg, const std::vector<M>& modes, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double samples_per_ms = kEmgRate / 1000.0;
  auto cycle = [&] {
    const double j = std::clamp(1.0 + cfg.cycle_jitter * gauss(rng), 0.8, 1.2);
    return cfg.gait_cycle_ms * samples_per_ms * j;
  };
  auto standing = [&] {
    const double j = std::clamp(1.0 + cfg.cycle_jitter * gauss(rng), 0.8, 1.2);
    return cfg.standing_ms * samples_per_ms * j;
  };

  Timeline tl;
  std::int64_t seg_start = 0;
  for (std::size_t s = 0; s < modes.size(); ++s) {
    const M mode = modes[s];
    const bool last = s + 1 == modes.size();
    std::int64_t seg_end = 0;
    if (!is_moving(mode)) {
      const double end = static_cast<double>(seg_start) + standing();
      if (last) {
        seg_end = static_cast<std::int64_t>(end);
      } else {
        // Leaving a standing posture starts with lifting the lead foot.
        seg_end = snap_to(end);
        tl.events.push_back({GaitEventKind::TO, seg_end});
      }
    } else {
      const int steps = (mode == M::BS || mode == M::SS) ? cfg.extra_task_steps : cfg.steps_per_mode;
      const bool opened_at_to = !tl.events.empty() && tl.events.back().kind == GaitEventKind::TO;
      std::int64_t t = seg_start;
      int remaining = steps;
      if (opened_at_to) {
        // Segment opened at a TO: finish that swing first.
        t = snap_hc(static_cast<double>(t) + (1.0 - cfg.stance_fraction) * cycle());
        tl.events.push_back({GaitEventKind::HC, t});
        --remaining;
      }
      for (; remaining > 0; --remaining) {
        const double c = cycle();
        const std::int64_t to = snap_to(static_cast<double>(t) + cfg.stance_fraction * c);
        tl.events.push_back({GaitEventKind::TO, to});
        t = snap_hc(static_cast<double>(t) + c);
        tl.events.push_back({GaitEventKind::HC, t});
      }
      seg_end = last ? t + static_cast<std::int64_t>(cfg.stance_fraction * cycle()) : t;
    }
    tl.segments.push_back({mode, seg_start, seg_end});
    seg_start = seg_end;
  }
  // The pressure grid requires length = 30 (Tp - 1) + 1.
  std::int64_t length = tl.segments.back().end;
  length = kRateRatio * ((length - 1 + kRateRatio - 1) / kRateRatio) + 1;
  tl.segments.back().end = length;
  tl.length = length;
  return tl;
}

std::vector<double> gait_phase(const Timeline& tl, double stance_fraction) {
  std::vector<double> phase(static_cast<std::size_t>(tl.length), 0.0);
  const auto& ev = tl.events;
  for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
    const double p0 = ev[k].kind == GaitEventKind::HC ? 0.0 : stance_fraction;
    const double p1 = ev[k].kind == GaitEventKind::HC ? stance_fraction : 1.0;
    const auto a = ev[k].index, b = ev[k + 1].index;
    for (auto i = a; i < b; ++i) {
      phase[static_cast<std::size_t>(i)] = p0 + (p1 - p0) * static_cast<double>(i - a) / static_cast<double>(b - a);
    }
  }
  if (!ev.empty()) {
    const double tail = ev.back().kind == GaitEventKind::HC ? 0.0 : stance_fraction;
    for (auto i = ev.back().index; i < tl.length; ++i) phase[static_cast<std::size_t>(i)] = tail;
  }
  return phase;
}

/// Envelope of each channel with linear crossfades ahead of every boundary.
std::vector<double> envelopes(const SynthConfig& cfg, const Timeline& tl, const std::vector<double>& phase) {
  const std::size_t T = static_cast<std::size_t>(tl.length);
  std::vector<double> env(T * kEmgChannels);
  auto steady = [&](M mode, std::size_t i, std::size_t c) {
    const double base = cfg.activation_templates[mode_index(mode)][c];
    const double depth = is_moving(mode) ? cfg.modulation_depth : 0.0;
    return base * (1.0 + depth * std::sin(2.0 * std::numbers::pi * (phase[i] + kPhaseOffset[c])));
  };
  const auto fade = static_cast<std::int64_t>(std::llround(cfg.crossfade_ms * kEmgRate / 1000.0));
  for (std::size_t s = 0; s < tl.segments.size(); ++s) {
    const auto& seg = tl.segments[s];
    const bool has_next = s + 1 < tl.segments.size();
    const std::int64_t fade_start = has_next ? std::max(seg.start, seg.end - fade) : seg.end;
    for (auto i = seg.start; i < seg.end; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      for (std::size_t c = 0; c < kEmgChannels; ++c) {
        double v = steady(seg.mode, ui, c);
        if (i >= fade_start) {
          const double alpha = static_cast<double>(i - fade_start) / static_cast<double>(seg.end - fade_start);
          v = (1.0 - alpha) * v + alpha * steady(tl.segments[s + 1].mode, ui, c);
        }
        env[ui * kEmgChannels + c] = v;
      }
    }
  }
  return env;
}

PressureRecording synth_pressure(const Timeline& tl, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t tp = static_cast<std::size_t>((tl.length - 1) / kRateRatio + 1);
  // Contact state at each pressure instant; trials start standing.
  std::vector<bool> stance(tp, true);
  std::size_t e = 0;
  bool state = true;
  for (std::size_t k = 0; k < tp; ++k) {
    const auto i = static_cast<std::int64_t>(k) * kRateRatio;
    while (e < tl.events.size() && tl.events[e].index <= i) {
      state = tl.events[e].kind == GaitEventKind::HC;
      ++e;
    }
    stance[k] = state;
  }
  PressureRecording p;
  p.heel.resize(tp);
  p.toe.resize(tp);
  auto loaded = [&] { return static_cast<float>(kPressurePeak * std::clamp(0.9 + 0.04 * gauss(rng), 0.8, 0.99)); };
  for (std::size_t k = 0; k < tp; ++k) {
    if (!stance[k]) {
      p.heel[k] = p.toe[k] = 0.0f;
      continue;
    }
    const bool edge = k == 0 || (k > 0 && !stance[k - 1]) || (k + 1 < tp && !stance[k + 1]);
    if (edge) {
      p.heel[k] = p.toe[k] = static_cast<float>(kPressurePeak);
    } else {
      p.heel[k] = loaded();
      p.toe[k] = loaded();
    }
  }
  return p;
}

SampleMatrix synth_emg(const SynthConfig& cfg, const std::vector<double>& env, std::size_t T, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto band = design_bandpass(kEmgRate, 20.0, 450.0, 8);
  const std::size_t warmup = 1200;

  // First-order lowpass for the slow envelope perturbation (~100 ms).
  const double rho = std::exp(-1.0 / (0.1 * kEmgRate));
  const double innov = std::sqrt(1.0 - rho * rho);

  SampleMatrix out(T, kEmgChannels);
  for (std::size_t c = 0; c < kEmgChannels; ++c) {
    const double gain = 1.0 + cfg.snr_variability * unit(rng);
    std::vector<double> white(T + warmup);
    for (auto& w : white) w = gauss(rng);
    auto carrier = filter_forward(std::span<const double>(white), band);
    carrier.erase(carrier.begin(), carrier.begin() + static_cast<std::ptrdiff_t>(warmup));
    double ss = 0.0;
    for (double v : carrier) ss += v * v;
    const double scale = 1.0 / std::sqrt(ss / static_cast<double>(T));

    double slow = gauss(rng);
    const double floor_sd = 0.1 * cfg.noise_sd;
    for (std::size_t i = 0; i < T; ++i) {
      slow = rho * slow + innov * gauss(rng);
      const double amp = std::max(0.0, env[i * kEmgChannels + c] * (1.0 + cfg.noise_sd * slow));
      double v = gain * amp * carrier[i] * scale + floor_sd * gauss(rng);
      if (cfg.powerline) {
        v += cfg.powerline_amplitude * std::sin(2.0 * std::numbers::pi * 50.0 * static_cast<double>(i) / kEmgRate);
      }
      out(i, c) = static_cast<float>(v);
    }
  }
  return out;
}

}  // namespace

const ActivationTemplates& default_activation_templates() {
  static const ActivationTemplates t = {{
      {0.10, 0.10, 0.15, 0.15, 0.10, 0.10, 0.08, 0.12},  // ST
      {0.55, 0.50, 0.40, 0.35, 0.40, 0.40, 0.65, 0.75},  // O
      {0.35, 0.30, 0.45, 0.40, 0.35, 0.35, 0.25, 0.40},  // W
      {0.40, 0.35, 0.55, 0.45, 0.80, 0.75, 0.55, 0.30},  // SA
      {0.25, 0.20, 0.65, 0.60, 0.65, 0.60, 0.35, 0.55},  // SD
      {0.50, 0.45, 0.70, 0.65, 0.50, 0.50, 0.35, 0.25},  // RA
      {0.20, 0.25, 0.30, 0.30, 0.55, 0.55, 0.50, 0.65},  // RD
      {0.65, 0.60, 0.25, 0.25, 0.25, 0.25, 0.20, 0.55},  // BS
      {0.20, 0.45, 0.25, 0.55, 0.30, 0.60, 0.20, 0.45},  // SS
  }};
  return t;
}

void to_json(json& j, const SynthConfig& c) {
  std::vector<std::vector<double>> templates;
  for (const auto& row : c.activation_templates) templates.emplace_back(row.begin(), row.end());
  j = json{{"seed", c.seed},
           {"subject_id", c.subject_id},
           {"gait_cycle_ms", c.gait_cycle_ms},
           {"steps_per_mode", c.steps_per_mode},
           {"extra_task_steps", c.extra_task_steps},
           {"standing_ms", c.standing_ms},
           {"stance_fraction", c.stance_fraction},
           {"cycle_jitter", c.cycle_jitter},
           {"activation_templates", templates},
           {"modulation_depth", c.modulation_depth},
           {"noise_sd", c.noise_sd},
           {"snr_variability", c.snr_variability},
           {"crossfade_ms", c.crossfade_ms},
           {"powerline", c.powerline},
           {"powerline_amplitude", c.powerline_amplitude}};
}

void from_json(const json& j, SynthConfig& c) {
  const SynthConfig d;
  c.seed = j.value("seed", d.seed);
  c.subject_id = j.value("subject_id", d.subject_id);
  c.gait_cycle_ms = j.value("gait_cycle_ms", d.gait_cycle_ms);
  c.steps_per_mode = j.value("steps_per_mode", d.steps_per_mode);
  c.extra_task_steps = j.value("extra_task_steps", d.extra_task_steps);
  c.standing_ms = j.value("standing_ms", d.standing_ms);
  c.stance_fraction = j.value("stance_fraction", d.stance_fraction);
  c.cycle_jitter = j.value("cycle_jitter", d.cycle_jitter);
  c.activation_templates = d.activation_templates;
  if (j.contains("activation_templates")) {
    const auto rows = j.at("activation_templates").get<std::vector<std::vector<double>>>();
    if (rows.size() != kModeCount) throw ConfigError("activation_templates: need 9 rows");
    for (std::size_t m = 0; m < kModeCount; ++m) {
      if (rows[m].size() != kEmgChannels) throw ConfigError("activation_templates: need 8 values per mode");
      std::copy(rows[m].begin(), rows[m].end(), c.activation_templates[m].begin());
    }
  }
  c.modulation_depth = j.value("modulation_depth", d.modulation_depth);
  c.noise_sd = j.value("noise_sd", d.noise_sd);
  c.snr_variability = j.value("snr_variability", d.snr_variability);
  c.crossfade_ms = j.value("crossfade_ms", d.crossfade_ms);
  c.powerline = j.value("powerline", d.powerline);
  c.powerline_amplitude = j.value("powerline_amplitude", d.powerline_amplitude);
}

void validate_synth_config(const SynthConfig& c) {
  if (!(c.gait_cycle_ms > 0.0)) throw ConfigError("synth: gait_cycle_ms must be > 0");
  if (!(c.standing_ms > 0.0)) throw ConfigError("synth: standing_ms must be > 0");
  if (c.steps_per_mode < 2 || c.extra_task_steps < 2) throw ConfigError("synth: need at least two steps per mode");
  if (!(c.stance_fraction > 0.2 && c.stance_fraction < 0.8)) throw ConfigError("synth: stance_fraction out of range");
  if (c.noise_sd < 0.0 || c.snr_variability < 0.0 || c.snr_variability >= 1.0) {
    throw ConfigError("synth: noise parameters out of range");
  }
  for (std::size_t a = 0; a < kModeCount; ++a) {
    for (double v : c.activation_templates[a]) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("synth: activation templates must lie in [0, 1]");
    }
    for (std::size_t b = a + 1; b < kModeCount; ++b) {
      if (c.activation_templates[a] == c.activation_templates[b]) {
        throw ConfigError("synth: degenerate template, modes " + std::string(mode_name(static_cast<M>(a))) +
                          " and " + std::string(mode_name(static_cast<M>(b))) + " are identical");
      }
    }
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ (b * 0x632be59bd9b4e019ull));
}

SynthTrial generate_trial(const SynthConfig& cfg, const ParadigmTask& task, const std::string& trial_id) {
  validate_synth_config(cfg);
  validate_paradigm(task);
  const std::vector<M> modes = task.modes();
  if (modes.front() != M::ST) throw ConfigError("synth: tasks must start standing");

  std::mt19937_64 timing_rng(derive_seed(cfg.seed, 1));
  std::mt19937_64 pressure_rng(derive_seed(cfg.seed, 2));
  std::mt19937_64 emg_rng(derive_seed(cfg.seed, 3));

  const Timeline tl = build_timeline(cfg, modes, timing_rng);
  const auto phase = gait_phase(tl, cfg.stance_fraction);
  const auto env = envelopes(cfg, tl, phase);

  SynthTrial out;
  Trial& t = out.trial;
  t.emg.subject_id = cfg.subject_id;
  t.emg.trial_id = trial_id;
  t.emg.samples = synth_emg(cfg, env, static_cast<std::size_t>(tl.length), emg_rng);
  t.pressure = synth_pressure(tl, pressure_rng);
  t.annotation.segments = tl.segments;
  t.task = std::string(task_name(task.task));
  t.seed = cfg.seed;
  for (std::size_t s = 1; s < tl.segments.size(); ++s) {
    const auto kind = find_transition(tl.segments[s - 1].mode, tl.segments[s].mode);
    if (!kind) continue;
    t.transitions.push_back({*kind, tl.segments[s].start, transition_info(*kind).critical_event});
  }
  out.ledger.events = tl.events;
  validate_trial(t);
  return out;
}

std::vector<SynthTrial> generate_dataset(const SynthConfig& config, int n_trials_per_task) {
  if (n_trials_per_task < 5) throw ConfigError("generate_dataset: need at least 5 trials per task");
  std::vector<SynthTrial> out;
  for (const auto& task : mode_sequence_of_paradigm()) {
    for (int r = 0; r < n_trials_per_task; ++r) {
      SynthConfig c = config;
      c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(task.task) + 1, static_cast<std::uint64_t>(r));
      char id[64];
      std::snprintf(id, sizeof id, "%s-%03d", std::string(task_name(task.task)).c_str(), r);
      out.push_back(generate_trial(c, task, id));
    }
  }
  return out;
}

}  // namespace deepstf
