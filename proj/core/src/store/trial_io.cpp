// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/store/trial_io.hpp"

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"

namespace deepstf {
namespace {

using nlohmann::json;

constexpr const char* kTrialKind = "trial";

}  // namespace

Container trial_to_container(const Trial& trial) {
  Container c(kTrialKind);
  json meta = {
      {"subject_id", trial.emg.subject_id},
      {"trial_id", trial.emg.trial_id},
      {"emg_sample_rate", trial.emg.sample_rate},
      {"pressure_sample_rate", trial.pressure.sample_rate},
      {"channel_names", trial.emg.channel_names},
      {"task", trial.task},
      {"seed", trial.seed},
  };
  c.set_metadata(meta.dump());

  const auto& s = trial.emg.samples;
  c.add_f32("emg.samples", {s.rows(), s.cols()}, {s.values().begin(), s.values().end()});
  c.add_f32("pressure.heel", {trial.pressure.heel.size()}, trial.pressure.heel);
  c.add_f32("pressure.toe", {trial.pressure.toe.size()}, trial.pressure.toe);

  std::vector<std::int64_t> segs;
  for (const auto& seg : trial.annotation.segments) {
    segs.insert(segs.end(), {static_cast<std::int64_t>(seg.mode), seg.start, seg.end});
  }
  c.add_i64("annotation.segments", {trial.annotation.segments.size(), 3}, std::move(segs));

  std::vector<std::int64_t> trans;
  for (const auto& t : trial.transitions) {
    trans.insert(trans.end(), {static_cast<std::int64_t>(t.kind), t.transition_point,
                               static_cast<std::int64_t>(t.source_event)});
  }
  c.add_i64("transitions", {trial.transitions.size(), 3}, std::move(trans));
  return c;
}

Trial trial_from_container(const Container& c) {
  if (c.kind() != kTrialKind) throw DataError("container kind '" + c.kind() + "' is not a trial");
  json meta;
  try {
    meta = json::parse(c.metadata());
  } catch (const json::exception& e) {
    throw DataError(std::string("trial metadata: ") + e.what());
  }

  Trial t;
  try {
    t.emg.subject_id = meta.at("subject_id").get<std::string>();
    t.emg.trial_id = meta.at("trial_id").get<std::string>();
    t.emg.sample_rate = meta.at("emg_sample_rate").get<double>();
    t.pressure.sample_rate = meta.at("pressure_sample_rate").get<double>();
    t.emg.channel_names = meta.at("channel_names").get<std::vector<std::string>>();
    t.task = meta.value("task", std::string{});
    t.seed = meta.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw DataError(std::string("trial metadata: ") + e.what());
  }

  const auto& emg = c.f32("emg.samples");
  if (emg.shape.size() != 2) throw DataError("emg.samples: expected a 2-D array");
  if (emg.shape[1] != kEmgChannels) {
    throw DataError("emg.samples: channel count must be 8, got " + std::to_string(emg.shape[1]));
  }
  t.emg.samples = SampleMatrix(emg.shape[0], emg.shape[1], emg.f32);
  t.pressure.heel = c.f32("pressure.heel").f32;
  t.pressure.toe = c.f32("pressure.toe").f32;

  const auto& segs = c.i64("annotation.segments");
  if (segs.shape.size() != 2 || segs.shape[1] != 3) throw DataError("annotation.segments: expected n x 3");
  for (std::size_t i = 0; i < segs.shape[0]; ++i) {
    t.annotation.segments.push_back(
        {mode_from_index(segs.i64[3 * i]), segs.i64[3 * i + 1], segs.i64[3 * i + 2]});
  }

  const auto& trans = c.i64("transitions");
  if (trans.shape.size() != 2 || trans.shape[1] != 3) throw DataError("transitions: expected n x 3");
  for (std::size_t i = 0; i < trans.shape[0]; ++i) {
    const auto ev = trans.i64[3 * i + 2];
    if (ev != 0 && ev != 1) throw DataError("transitions: unknown source event");
    t.transitions.push_back({transition_from_index(trans.i64[3 * i]), trans.i64[3 * i + 1],
                             static_cast<GaitEventKind>(ev)});
  }
  return t;
}

void save_trial(const Trial& trial, const std::filesystem::path& path) {
  validate_trial(trial);
  write_container(trial_to_container(trial), path);
}

Trial load_trial(const std::filesystem::path& path) {
  Trial t = trial_from_container(read_container(path));
  validate_trial(t);
  return t;
}

}  // namespace deepstf
