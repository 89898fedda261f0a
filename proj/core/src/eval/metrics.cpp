// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/eval/metrics.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"

namespace deepstf {

using nlohmann::json;

void EvalConfig::validate() const {
  if (!(horizon_ms >= 0.0)) throw ConfigError("eval: horizon_ms must be non-negative");
  if (run_length == 0) throw ConfigError("eval: run_length must be positive");
}

void to_json(json& j, const EvalConfig& c) { j = json{{"horizon_ms", c.horizon_ms}, {"run_length", c.run_length}}; }

void from_json(const json& j, EvalConfig& c) {
  c = EvalConfig{};
  c.horizon_ms = j.value("horizon_ms", c.horizon_ms);
  c.run_length = j.value("run_length", c.run_length);
  c.validate();
}

void PredictionTrace::validate() const {
  for (std::size_t k = 1; k < records.size(); ++k) {
    if (records[k].window_end <= records[k - 1].window_end) {
      throw DataError("trace " + trial_id + ": window ends not strictly increasing at record " + std::to_string(k));
    }
  }
}

double p_stable_ms(std::int64_t t_c, std::int64_t t_d) {
  return static_cast<double>(t_c - t_d) * 1000.0 / kEmgRate;
}

std::optional<std::size_t> search_start(const PredictionTrace& trace, const TransitionEvent& transition) {
  const std::int64_t span_start = transition.transition_point - kTransitionalSpan;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    if (trace.records[k].window_end + trace.p_label >= span_start) return k;
  }
  return std::nullopt;
}

std::optional<StableDetection> detect_stable(const PredictionTrace& trace, const TransitionEvent& transition,
                                             const EvalConfig& config) {
  const auto start = search_start(trace, transition);
  if (!start) {
    throw DataError("trace " + trace.trial_id + " ends before the transitional span of t_c=" +
                    std::to_string(transition.transition_point));
  }
  const int post = static_cast<int>(mode_index(transition_info(transition.kind).to));
  const std::int64_t horizon =
      transition.transition_point + static_cast<std::int64_t>(std::llround(config.horizon_ms * kEmgRate / 1000.0));
  std::size_t run = 0;
  for (std::size_t k = *start; k < trace.records.size(); ++k) {
    const TraceRecord& r = trace.records[k];
    if (r.window_end > horizon) break;
    if (k > *start && r.window_end - trace.records[k - 1].window_end != trace.stride) {
      throw DataError("trace " + trace.trial_id + ": gap before window_end=" + std::to_string(r.window_end));
    }
    run = r.voted_class == post ? run + 1 : 0;
    if (run == config.run_length) {
      return StableDetection{transition, r.window_end, p_stable_ms(transition.transition_point, r.window_end)};
    }
  }
  return std::nullopt;
}

std::vector<TransitionOutcome> detect_all(std::span<const PredictionTrace> traces, const EvalConfig& config) {
  std::vector<TransitionOutcome> out;
  for (const auto& t : traces) {
    for (const auto& tr : t.transitions) out.push_back({t.trial_id, tr, detect_stable(t, tr, config)});
  }
  return out;
}

double predict_rate(std::span<const StableDetection> detections, std::size_t n_transitions) {
  if (n_transitions == 0) throw DataError("predict_rate: no transitions");
  std::size_t positive = 0;
  for (const auto& d : detections) positive += d.p_stable_ms > 0.0;
  return static_cast<double>(positive) / static_cast<double>(n_transitions);
}

double predict_rate(std::span<const TransitionOutcome> outcomes) {
  std::vector<StableDetection> d;
  for (const auto& o : outcomes) {
    if (o.detection) d.push_back(*o.detection);
  }
  return predict_rate(d, outcomes.size());
}

double steady_accuracy(std::span<const PredictionTrace> traces) {
  std::size_t n = 0, correct = 0;
  for (const auto& t : traces) {
    for (const auto& r : t.records) {
      if (r.tag.transitional) continue;
      ++n;
      correct += r.voted_class == static_cast<int>(mode_index(r.label));
    }
  }
  if (n == 0) throw DataError("steady_accuracy: no steady-state windows");
  return static_cast<double>(correct) / static_cast<double>(n);
}

namespace {

const TransitionOutcome& outcome_for(std::span<const TransitionOutcome> outcomes, const std::string& trial,
                                     const StateTag& tag) {
  for (const auto& o : outcomes) {
    if (o.trial_id == trial && o.transition.transition_point == tag.t_c && o.transition.kind == *tag.kind) return o;
  }
  throw DataError("no evaluated transition for trial " + trial + " at t_c=" + std::to_string(tag.t_c));
}

// Reference: pre-transition mode before t_d, post-transition mode after.
bool transitional_match(const TraceRecord& r, const TransitionOutcome& o) {
  const auto& info = transition_info(o.transition.kind);
  const std::int64_t t_d = o.detection ? o.detection->t_d : o.transition.transition_point;
  const LocomotionMode ref = r.window_end < t_d ? info.from : info.to;
  return r.voted_class == static_cast<int>(mode_index(ref));
}

}  // namespace

double transition_accuracy(std::span<const PredictionTrace> traces, std::span<const TransitionOutcome> outcomes) {
  std::size_t n = 0, match = 0;
  for (const auto& t : traces) {
    for (const auto& r : t.records) {
      if (!r.tag.transitional) continue;
      ++n;
      match += transitional_match(r, outcome_for(outcomes, t.trial_id, r.tag));
    }
  }
  return n == 0 ? 0.0 : static_cast<double>(match) / static_cast<double>(n);
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.n = values.size();
  if (s.n == 0) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(acc / static_cast<double>(s.n - 1));
  }
  return s;
}

EvalReport build_report(std::span<const PredictionTrace> traces, const EvalConfig& config) {
  EvalReport r;
  for (const auto& t : traces) t.validate();
  if (!traces.empty()) r.p_label_ms = static_cast<double>(traces.front().p_label) * 1000.0 / kEmgRate;
  r.outcomes = detect_all(traces, config);

  std::size_t correct_ss = 0, match_ts = 0, raw_correct = 0;
  for (const auto& t : traces) {
    for (const auto& rec : t.records) {
      const int label = static_cast<int>(mode_index(rec.label));
      ++r.n_windows;
      ++r.confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(rec.voted_class)];
      raw_correct += rec.raw_class == label;
      if (rec.tag.transitional) {
        ++r.n_transitional;
        match_ts += transitional_match(rec, outcome_for(r.outcomes, t.trial_id, rec.tag));
      } else {
        ++r.n_steady;
        correct_ss += rec.voted_class == label;
      }
    }
  }
  if (r.n_steady == 0) throw DataError("build_report: no steady-state windows");
  r.acc_ss = static_cast<double>(correct_ss) / static_cast<double>(r.n_steady);
  r.acc_ts = r.n_transitional == 0 ? 0.0 : static_cast<double>(match_ts) / static_cast<double>(r.n_transitional);
  r.acc_overall = static_cast<double>(correct_ss + match_ts) / static_cast<double>(r.n_windows);
  r.raw_accuracy = static_cast<double>(raw_correct) / static_cast<double>(r.n_windows);

  r.n_transitions = r.outcomes.size();
  std::vector<double> all;
  std::array<std::vector<double>, kTransitionKindCount> by_kind;
  for (const auto& o : r.outcomes) {
    auto& k = r.per_kind[static_cast<std::size_t>(o.transition.kind)];
    ++k.count;
    if (!o.detection) continue;
    ++k.detected;
    ++r.n_detected;
    if (o.detection->p_stable_ms > 0.0) {
      ++k.positive;
      ++r.n_positive;
    }
    all.push_back(o.detection->p_stable_ms);
    by_kind[static_cast<std::size_t>(o.transition.kind)].push_back(o.detection->p_stable_ms);
  }
  r.predict_rate = r.n_transitions == 0 ? 0.0 : static_cast<double>(r.n_positive) / static_cast<double>(r.n_transitions);
  const auto s = summarize(all);
  r.p_stable_mean_ms = s.mean;
  r.p_stable_sd_ms = s.sd;
  for (std::size_t k = 0; k < kTransitionKindCount; ++k) {
    const auto ks = summarize(by_kind[k]);
    r.per_kind[k].p_stable_mean_ms = ks.mean;
    r.per_kind[k].p_stable_sd_ms = ks.sd;
  }
  return r;
}

namespace {

json tag_json(const TransitionEvent& t) {
  return {{"kind", transition_info(t.kind).name}, {"t_c", t.transition_point}, {"event", event_name(t.source_event)}};
}

TransitionEvent tag_from_json(const json& j) {
  const auto kind = transition_from_name(j.at("kind").get<std::string>());
  if (!kind) throw DataError("report: unknown transition kind " + j.at("kind").dump());
  const std::string ev = j.at("event").get<std::string>();
  return {*kind, j.at("t_c").get<std::int64_t>(), ev == "TO" ? GaitEventKind::TO : GaitEventKind::HC};
}

}  // namespace

void to_json(json& j, const EvalReport& r) {
  json kinds = json::object();
  for (std::size_t k = 0; k < kTransitionKindCount; ++k) {
    const auto& s = r.per_kind[k];
    if (s.count == 0) continue;
    kinds[std::string(transition_table()[k].name)] = {{"count", s.count},
                                                      {"detected", s.detected},
                                                      {"positive", s.positive},
                                                      {"p_stable_mean_ms", s.p_stable_mean_ms},
                                                      {"p_stable_sd_ms", s.p_stable_sd_ms}};
  }
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    json e = {{"trial", o.trial_id}, {"transition", tag_json(o.transition)}};
    if (o.detection) {
      e["t_d"] = o.detection->t_d;
      e["p_stable_ms"] = o.detection->p_stable_ms;
    } else {
      e["t_d"] = nullptr;
    }
    outcomes.push_back(std::move(e));
  }
  j = json{{"p_label_ms", r.p_label_ms},
           {"acc_ss", r.acc_ss},
           {"acc_ts", r.acc_ts},
           {"acc_overall", r.acc_overall},
           {"raw_accuracy", r.raw_accuracy},
           {"predict_rate", r.predict_rate},
           {"p_stable_mean_ms", r.p_stable_mean_ms},
           {"p_stable_sd_ms", r.p_stable_sd_ms},
           {"n_windows", r.n_windows},
           {"n_steady", r.n_steady},
           {"n_transitional", r.n_transitional},
           {"n_transitions", r.n_transitions},
           {"n_detected", r.n_detected},
           {"n_positive", r.n_positive},
           {"per_kind", kinds},
           {"confusion", r.confusion},
           {"outcomes", outcomes}};
}

void from_json(const json& j, EvalReport& r) {
  r = EvalReport{};
  r.p_label_ms = j.at("p_label_ms").get<double>();
  r.acc_ss = j.at("acc_ss").get<double>();
  r.acc_ts = j.at("acc_ts").get<double>();
  r.acc_overall = j.at("acc_overall").get<double>();
  r.raw_accuracy = j.at("raw_accuracy").get<double>();
  r.predict_rate = j.at("predict_rate").get<double>();
  r.p_stable_mean_ms = j.at("p_stable_mean_ms").get<double>();
  r.p_stable_sd_ms = j.at("p_stable_sd_ms").get<double>();
  r.n_windows = j.at("n_windows").get<std::size_t>();
  r.n_steady = j.at("n_steady").get<std::size_t>();
  r.n_transitional = j.at("n_transitional").get<std::size_t>();
  r.n_transitions = j.at("n_transitions").get<std::size_t>();
  r.n_detected = j.at("n_detected").get<std::size_t>();
  r.n_positive = j.at("n_positive").get<std::size_t>();
  for (const auto& [name, v] : j.at("per_kind").items()) {
    const auto kind = transition_from_name(name);
    if (!kind) throw DataError("report: unknown transition kind '" + name + "'");
    auto& s = r.per_kind[static_cast<std::size_t>(*kind)];
    s.count = v.at("count").get<std::size_t>();
    s.detected = v.at("detected").get<std::size_t>();
    s.positive = v.at("positive").get<std::size_t>();
    s.p_stable_mean_ms = v.at("p_stable_mean_ms").get<double>();
    s.p_stable_sd_ms = v.at("p_stable_sd_ms").get<double>();
  }
  r.confusion = j.at("confusion").get<ConfusionMatrix>();
  for (const auto& e : j.at("outcomes")) {
    TransitionOutcome o{e.at("trial").get<std::string>(), tag_from_json(e.at("transition")), std::nullopt};
    if (!e.at("t_d").is_null()) {
      o.detection = StableDetection{o.transition, e.at("t_d").get<std::int64_t>(), e.at("p_stable_ms").get<double>()};
    }
    r.outcomes.push_back(std::move(o));
  }
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "p_label_ms,acc_overall,acc_ss,acc_ts,raw_accuracy,predict_rate,p_stable_mean_ms,p_stable_sd_ms,"
        "n_windows,n_steady,n_transitional,n_transitions,n_detected,n_positive\n";
  os << r.p_label_ms << ',' << r.acc_overall << ',' << r.acc_ss << ',' << r.acc_ts << ',' << r.raw_accuracy << ','
     << r.predict_rate << ',' << r.p_stable_mean_ms << ',' << r.p_stable_sd_ms << ',' << r.n_windows << ','
     << r.n_steady << ',' << r.n_transitional << ',' << r.n_transitions << ',' << r.n_detected << ',' << r.n_positive
     << '\n';
  return os.str();
}

std::string p_stable_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "trial,kind,t_c,t_d,p_stable_ms\n";
  for (const auto& o : r.outcomes) {
    os << o.trial_id << ',' << transition_info(o.transition.kind).name << ',' << o.transition.transition_point << ',';
    if (o.detection) {
      os << o.detection->t_d << ',' << o.detection->p_stable_ms;
    } else {
      os << ',';
    }
    os << '\n';
  }
  return os.str();
}

std::string confusion_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "label";
  for (std::size_t c = 0; c < kModeCount; ++c) os << ',' << mode_name(mode_from_index(static_cast<std::int64_t>(c)));
  os << '\n';
  for (std::size_t l = 0; l < kModeCount; ++l) {
    os << mode_name(mode_from_index(static_cast<std::int64_t>(l)));
    for (std::size_t c = 0; c < kModeCount; ++c) os << ',' << r.confusion[l][c];
    os << '\n';
  }
  return os.str();
}

}  // namespace deepstf
