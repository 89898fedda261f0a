// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/preprocess/pipeline.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"

namespace deepstf {

using nlohmann::json;

void to_json(json& j, const PreprocessConfig& c) {
  j = json{{"bandpass_lo", c.bandpass_lo},
           {"bandpass_hi", c.bandpass_hi},
           {"bandpass_order", c.bandpass_order},
           {"notch", c.notch},
           {"notch_f0", c.notch_f0},
           {"notch_bandwidth", c.notch_bandwidth},
           {"contact_threshold", c.contact_threshold},
           {"debounce_ms", c.debounce_ms},
           {"anchor_tolerance_ms", c.anchor_tolerance_ms}};
}

void from_json(const json& j, PreprocessConfig& c) {
  const PreprocessConfig d;
  c.bandpass_lo = j.value("bandpass_lo", d.bandpass_lo);
  c.bandpass_hi = j.value("bandpass_hi", d.bandpass_hi);
  c.bandpass_order = j.value("bandpass_order", d.bandpass_order);
  c.notch = j.value("notch", d.notch);
  c.notch_f0 = j.value("notch_f0", d.notch_f0);
  c.notch_bandwidth = j.value("notch_bandwidth", d.notch_bandwidth);
  c.contact_threshold = j.value("contact_threshold", d.contact_threshold);
  c.debounce_ms = j.value("debounce_ms", d.debounce_ms);
  c.anchor_tolerance_ms = j.value("anchor_tolerance_ms", d.anchor_tolerance_ms);
}

json preprocess_decisions() {
  return {{"filter_direction", "causal-forward"},
          {"processing_order", "bandpass,notch,rectify,normalize"},
          {"normalization_partition", "TrainSet1"},
          {"sd_estimator", "population"},
          {"pressure_normalization", "min-max"},
          {"fft_input", "normalized-time-window"}};
}

std::vector<bool> contact_from_pressure(const PressureRecording& pressure, std::int64_t emg_length,
                                        const PreprocessConfig& config) {
  const int factor = static_cast<int>(std::lround(kEmgRate / pressure.sample_rate));
  const auto heel = upsample_linear(std::span<const float>(pressure.heel), factor);
  const auto toe = upsample_linear(std::span<const float>(pressure.toe), factor);
  auto mean = mean_pressure(heel, toe);
  mean.resize(static_cast<std::size_t>(emg_length), mean.back());
  return binarize_contact(mean, config.contact_threshold, config.debounce_ms, kEmgRate);
}

PreprocessedTrial preprocess_trial(const Trial& trial, const PreprocessConfig& config) {
  const double fs = trial.emg.sample_rate;
  SampleMatrix x = filter_channels(trial.emg.samples,
                                   design_bandpass(fs, config.bandpass_lo, config.bandpass_hi, config.bandpass_order));
  if (config.notch) x = filter_channels(x, design_notch(fs, config.notch_f0, config.notch_bandwidth));

  PreprocessedTrial out;
  out.trial_id = trial.id();
  out.task = trial.task;
  out.rectified = rectify_channels(x);
  out.annotation = trial.annotation;
  out.events = detect_gait_events(contact_from_pressure(trial.pressure, trial.length(), config));
  const auto tolerance = static_cast<std::int64_t>(std::llround(config.anchor_tolerance_ms * fs / 1000.0));
  out.transitions = derive_transition_points(trial.annotation, out.events, tolerance);
  return out;
}

Container preprocessed_to_container(const PreprocessedTrial& t, const std::string& spec_hash) {
  Container c("preprocessed");
  c.set_metadata(json{{"trial_id", t.trial_id}, {"task", t.task}, {"spec_hash", spec_hash}}.dump());
  c.add_f32("rectified", {t.rectified.rows(), t.rectified.cols()}, {t.rectified.values().begin(), t.rectified.values().end()});
  std::vector<std::int64_t> segs;
  for (const auto& s : t.annotation.segments) segs.insert(segs.end(), {static_cast<std::int64_t>(s.mode), s.start, s.end});
  c.add_i64("annotation.segments", {t.annotation.segments.size(), 3}, std::move(segs));
  std::vector<std::int64_t> ev;
  for (const auto& e : t.events.events) ev.insert(ev.end(), {static_cast<std::int64_t>(e.kind), e.index});
  c.add_i64("events", {t.events.events.size(), 2}, std::move(ev));
  std::vector<std::int64_t> tr;
  for (const auto& e : t.transitions) {
    tr.insert(tr.end(), {static_cast<std::int64_t>(e.kind), e.transition_point, static_cast<std::int64_t>(e.source_event)});
  }
  c.add_i64("transitions", {t.transitions.size(), 3}, std::move(tr));
  return c;
}

PreprocessedTrial preprocessed_from_container(const Container& c) {
  if (c.kind() != "preprocessed") throw DataError("container kind '" + c.kind() + "' is not a preprocessed trial");
  const json meta = json::parse(c.metadata());
  PreprocessedTrial t;
  t.trial_id = meta.at("trial_id").get<std::string>();
  t.task = meta.at("task").get<std::string>();
  const auto& r = c.f32("rectified");
  if (r.shape.size() != 2) throw DataError("rectified: expected a 2-D array");
  t.rectified = SampleMatrix(r.shape[0], r.shape[1], r.f32);
  const auto& segs = c.i64("annotation.segments");
  for (std::size_t i = 0; i < segs.shape[0]; ++i) {
    t.annotation.segments.push_back({mode_from_index(segs.i64[3 * i]), segs.i64[3 * i + 1], segs.i64[3 * i + 2]});
  }
  validate_annotation(t.annotation, t.length());
  const auto& ev = c.i64("events");
  for (std::size_t i = 0; i < ev.shape[0]; ++i) {
    t.events.events.push_back({static_cast<GaitEventKind>(ev.i64[2 * i] != 0), ev.i64[2 * i + 1]});
  }
  const auto& tr = c.i64("transitions");
  for (std::size_t i = 0; i < tr.shape[0]; ++i) {
    t.transitions.push_back({transition_from_index(tr.i64[3 * i]), tr.i64[3 * i + 1],
                             static_cast<GaitEventKind>(tr.i64[3 * i + 2] != 0)});
  }
  return t;
}

}  // namespace deepstf
