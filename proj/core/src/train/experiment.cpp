// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/train/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "deepstf/error.hpp"
#include "deepstf/eval/channels.hpp"
#include "deepstf/model/voting.hpp"
#include "deepstf/synth/synth.hpp"

namespace deepstf {

using nlohmann::json;
namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  window.validate();
  if (p_label_ms.empty()) throw ConfigError("experiment: p_label_ms is empty");
  for (double p : p_label_ms) {
    if (!(p > 0.0)) throw ConfigError("experiment: p_label values must be positive");
  }
  if (folds < 2) throw ConfigError("experiment: need at least 2 folds");
  for (int f : run_folds) {
    if (f < 0 || f >= folds) throw ConfigError("experiment: run_folds entry " + std::to_string(f) + " out of range");
  }
  if (jobs < 1) throw ConfigError("experiment: jobs must be positive");
  channel_configuration(channel_config);
  step1.validate();
  step2.validate();
  eval.validate();
  ModelConfig m = model;
  m.channels = channel_configuration(channel_config).columns.size();
  m.window_len = static_cast<std::size_t>(window.window_len);
  m.validate();
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"seed", c.seed},
           {"window", c.window},
           {"p_label_ms", c.p_label_ms},
           {"preprocess", c.preprocess},
           {"model", c.model},
           {"step1", c.step1},
           {"step2", c.step2},
           {"eval", c.eval},
           {"folds", c.folds},
           {"run_folds", c.run_folds},
           {"stratify_by_task", c.stratify_by_task},
           {"channel_config", c.channel_config},
           {"jobs", c.jobs}};
}

void from_json(const json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  c.seed = j.value("seed", c.seed);
  if (j.contains("window")) c.window = j.at("window").get<WindowSpec>();
  c.p_label_ms = j.value("p_label_ms", c.p_label_ms);
  if (j.contains("preprocess")) c.preprocess = j.at("preprocess").get<PreprocessConfig>();
  if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
  if (j.contains("step1")) c.step1 = j.at("step1").get<Step1Config>();
  if (j.contains("step2")) c.step2 = j.at("step2").get<Step2Config>();
  if (j.contains("eval")) c.eval = j.at("eval").get<EvalConfig>();
  c.folds = j.value("folds", c.folds);
  c.run_folds = j.value("run_folds", c.run_folds);
  c.stratify_by_task = j.value("stratify_by_task", c.stratify_by_task);
  c.channel_config = j.value("channel_config", c.channel_config);
  c.jobs = j.value("jobs", c.jobs);
  c.validate();
}

namespace {

json hashed_view(const ExperimentConfig& c) {
  json j = c;
  j.erase("jobs");
  return j;
}

// Everything a single cell's outcome depends on.
std::string cell_key(const ExperimentConfig& c) {
  json j = hashed_view(c);
  j.erase("run_folds");
  j.erase("p_label_ms");
  return hex64(fnv1a64(j.dump()));
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    os << text;
    if (!os) throw DataError("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string format_ms(double ms) {
  std::ostringstream os;
  os << ms;
  return os.str();
}

std::vector<std::size_t> indices_of(const TrackedDataset& data, const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  for (const auto& id : ids) out.push_back(data.index_of(id));
  return out;
}

json epochs_json(const std::vector<EpochLog>& logs) {
  json a = json::array();
  for (const auto& e : logs) a.push_back(e);
  return a;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return "data";
  return "other";
}

struct CellJob {
  double p_label_ms;
  const FoldPlan* fold;
};

CellResult run_cell(const TrackedDataset& data, const ExperimentConfig& config, const CellJob& job,
                    const fs::path& out, const std::string& key, const CellLogger& log) {
  CellResult cell;
  cell.p_label_ms = job.p_label_ms;
  cell.fold = job.fold->fold_id;
  const std::string name = cell_name(job.p_label_ms, cell.fold);
  cell.directory = out / "cells" / name;
  const fs::path status_path = cell.directory / "cell.json";

  if (fs::exists(status_path)) {
    const json status = json::parse(read_text(status_path));
    if (status.value("cell_key", "") == key && status.value("status", "") == "ok" &&
        fs::exists(cell.directory / "report.json")) {
      cell.report = json::parse(read_text(cell.directory / "report.json")).get<EvalReport>();
      cell.best_epoch = status.value("best_epoch", -1);
      cell.step1_epochs = status.value("step1_epochs", std::size_t{0});
      cell.ok = true;
      cell.resumed = true;
      if (log) log(name + ": finished cell found, skipping");
      return cell;
    }
  }

  const ChannelConfig& channels = channel_configuration(config.channel_config);
  WindowSpec spec = config.window;
  spec.p_label = ms_to_samples(job.p_label_ms);
  const auto t1 = indices_of(data, job.fold->train1);
  const auto t2 = indices_of(data, job.fold->train2);
  const auto te = indices_of(data, job.fold->test);
  const std::uint64_t cell_seed = derive_seed(config.seed, static_cast<std::uint64_t>(cell.fold) + 1,
                                              static_cast<std::uint64_t>(spec.p_label));

  const ChannelStats stats = fit_normalization(data, t1, channels.columns);
  const WindowSet train1 = build_window_set(data, t1, AccessPhase::Step1Train, stats, spec, channels.columns);
  const WindowSet val = build_window_set(data, t2, AccessPhase::Step1Validation, stats, spec, channels.columns);

  ModelConfig mc = config.model;
  mc.channels = channels.columns.size();
  mc.window_len = static_cast<std::size_t>(spec.window_len);
  mc.init_seed = derive_seed(cell_seed, 0x4d);
  DeepStfModel<float> model(mc);
  if (log) log(name + ": step 1 on " + std::to_string(train1.windows.size()) + " windows");
  const Step1Result s1 = train_step1(model, train1, val, config.step1, derive_seed(cell_seed, 0x31),
                                     [&](const EpochLog& e) {
                                       if (log) {
                                         log(name + ": epoch " + std::to_string(e.epoch) + " train " +
                                             std::to_string(e.train_loss) + " val " + std::to_string(e.val_loss));
                                       }
                                     });
  const json extra = {{"cell", name}, {"config_hash", config_hash(config)}, {"cell_key", key}};
  write_container(model_to_container(model, true, extra), cell.directory / "step1.dstf");

  const WindowSet train2 = build_window_set(data, t2, AccessPhase::Step2Train, stats, spec, channels.columns);
  VotingHead<float> head(kModeCount, derive_seed(cell_seed, 0x56));
  const Step2Result s2 = train_step2(model, head, train2, config.step2, derive_seed(cell_seed, 0x32));
  write_container(head_to_container(head, true, extra), cell.directory / "step2.dstf");

  const WindowSet test = build_window_set(data, te, AccessPhase::Evaluation, stats, spec, channels.columns);
  const auto traces = predict_traces(model, head, test, config.step2.pad);
  cell.report = build_report(traces, config.eval);
  cell.ok = true;
  cell.best_epoch = s1.best_epoch;
  cell.step1_epochs = s1.epochs.size();

  write_text(cell.directory / "report.json", json(cell.report).dump(2) + "\n");
  write_text(cell.directory / "report.csv", report_to_csv(cell.report));
  write_text(cell.directory / "pstable.csv", p_stable_csv(cell.report));
  write_text(cell.directory / "confusion.csv", confusion_csv(cell.report));
  write_text(cell.directory / "normalization.json",
             json{{"mean", stats.mean}, {"sd", stats.sd}, {"muscles", channels.muscles}}.dump(2) + "\n");
  write_text(cell.directory / "epochs.json",
             json{{"step1", epochs_json(s1.epochs)},
                  {"step1_best_epoch", s1.best_epoch},
                  {"step1_early_stopped", s1.early_stopped},
                  {"step2", epochs_json(s2.epochs)}}
                     .dump(2) + "\n");
  write_text(status_path, json{{"cell_key", key},
                               {"config_hash", config_hash(config)},
                               {"status", "ok"},
                               {"best_epoch", s1.best_epoch},
                               {"step1_epochs", s1.epochs.size()}}
                              .dump(2) + "\n");
  if (log) log(name + ": acc_overall " + std::to_string(cell.report.acc_overall));
  return cell;
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("missing " + p.string());
}

}  // namespace

EvalReport evaluate_cell(const TrackedDataset& data, const ExperimentConfig& config, const FoldPlan& fold,
                         double p_label_ms, const fs::path& cell_dir) {
  for (const char* f : {"step1.dstf", "step2.dstf", "normalization.json"}) require_file(cell_dir / f);
  const json norm = json::parse(read_text(cell_dir / "normalization.json"));
  ChannelStats stats{norm.at("mean").get<std::vector<double>>(), norm.at("sd").get<std::vector<double>>()};
  const ChannelConfig& channels = channel_configuration(config.channel_config);
  if (stats.channels() != channels.columns.size()) throw DataError("normalization in " + cell_dir.string() + " does not match the channel configuration");
  WindowSpec spec = config.window;
  spec.p_label = ms_to_samples(p_label_ms);
  DeepStfModel<float> model = model_from_container(read_container(cell_dir / "step1.dstf"));
  VotingHead<float> head = head_from_container(read_container(cell_dir / "step2.dstf"));
  const auto te = indices_of(data, fold.test);
  const WindowSet test = build_window_set(data, te, AccessPhase::Evaluation, stats, spec, channels.columns);
  return build_report(predict_traces(model, head, test, config.step2.pad), config.eval);
}

namespace {

const std::vector<std::string> kMetricNames = {"acc_overall", "acc_ss", "acc_ts", "raw_accuracy", "predict_rate",
                                               "p_stable_mean_ms"};

}  // namespace

std::string cell_name(double p_label_ms, int fold) { return "p" + format_ms(p_label_ms) + "_fold" + std::to_string(fold); }

std::string config_hash(const ExperimentConfig& config) { return hex64(fnv1a64(hashed_view(config).dump())); }

double report_metric(const EvalReport& r, const std::string& metric) {
  if (metric == "acc_overall") return r.acc_overall;
  if (metric == "acc_ss") return r.acc_ss;
  if (metric == "acc_ts") return r.acc_ts;
  if (metric == "raw_accuracy") return r.raw_accuracy;
  if (metric == "predict_rate") return r.predict_rate;
  if (metric == "p_stable_mean_ms") return r.p_stable_mean_ms;
  throw ConfigError("unknown metric '" + metric + "'");
}

MetricSummary ExperimentResult::summary(double p_label_ms, const std::string& metric) const {
  std::vector<double> v;
  for (const auto& c : cells) {
    if (c.ok && c.p_label_ms == p_label_ms) v.push_back(report_metric(c.report, metric));
  }
  return summarize(v);
}

ExperimentResult run_experiment(const TrackedDataset& data, const ExperimentConfig& config, const fs::path& out,
                                const CellLogger& log) {
  config.validate();
  ExperimentResult result;
  result.folds = make_folds(data.ids(), config.seed, config.folds,
                            config.stratify_by_task ? data.tasks() : std::vector<std::string>{});
  std::vector<int> fold_ids = config.run_folds;
  if (fold_ids.empty()) {
    for (int f = 0; f < config.folds; ++f) fold_ids.push_back(f);
  }
  std::vector<CellJob> jobs;
  for (double p : config.p_label_ms) {
    for (int f : fold_ids) jobs.push_back({p, &result.folds[static_cast<std::size_t>(f)]});
  }
  fs::create_directories(out);
  const std::string key = cell_key(config);

  result.cells.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  CellLogger safe_log;
  if (log) {
    safe_log = [&](const std::string& s) {
      std::lock_guard lock(log_mutex);
      log(s);
    };
  }
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        result.cells[k] = run_cell(data, config, jobs[k], out, key, safe_log);
      } catch (const std::exception& e) {
        CellResult c;
        c.p_label_ms = jobs[k].p_label_ms;
        c.fold = jobs[k].fold->fold_id;
        c.directory = out / "cells" / cell_name(c.p_label_ms, c.fold);
        c.error = e.what();
        c.error_kind = error_kind(e);
        result.cells[k] = std::move(c);
        if (safe_log) safe_log(cell_name(jobs[k].p_label_ms, jobs[k].fold->fold_id) + ": failed: " + e.what());
      }
    }
  };
  const int threads = std::min<int>(config.jobs, static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  json cells = json::array();
  std::ostringstream grid;
  grid.precision(17);
  grid << "fold,p_label_ms,status";
  for (const auto& m : kMetricNames) grid << ',' << m;
  grid << '\n';
  for (const auto& c : result.cells) {
    const std::string name = cell_name(c.p_label_ms, c.fold);
    json e = {{"name", name}, {"p_label_ms", c.p_label_ms}, {"fold", c.fold}, {"status", c.ok ? "ok" : "failed"}};
    grid << c.fold << ',' << c.p_label_ms << ',' << (c.ok ? "ok" : "failed");
    if (c.ok) {
      e["step1_checkpoint"] = "cells/" + name + "/step1.dstf";
      e["step2_checkpoint"] = "cells/" + name + "/step2.dstf";
      e["report"] = "cells/" + name + "/report.json";
      e["best_epoch"] = c.best_epoch;
      e["step1_epochs"] = c.step1_epochs;
      json metrics = json::object();
      for (const auto& m : kMetricNames) {
        metrics[m] = report_metric(c.report, m);
        grid << ',' << report_metric(c.report, m);
      }
      e["metrics"] = metrics;
    } else {
      e["error"] = c.error;
      e["error_kind"] = c.error_kind;
      for (std::size_t m = 0; m < kMetricNames.size(); ++m) grid << ',';
    }
    grid << '\n';
    cells.push_back(std::move(e));
  }

  std::ostringstream summary;
  summary.precision(17);
  summary << "p_label_ms,n_folds";
  for (const auto& m : kMetricNames) summary << ',' << m << "_mean," << m << "_sd";
  summary << '\n';
  json summary_json = json::array();
  for (double p : config.p_label_ms) {
    const auto first = result.summary(p, kMetricNames.front());
    summary << p << ',' << first.n;
    json row = {{"p_label_ms", p}, {"n_folds", first.n}};
    for (const auto& m : kMetricNames) {
      const auto s = result.summary(p, m);
      summary << ',' << s.mean << ',' << s.sd;
      row[m] = {{"mean", s.mean}, {"sd", s.sd}};
    }
    summary << '\n';
    summary_json.push_back(std::move(row));
  }

  json trials = json::array();
  for (std::size_t i = 0; i < data.size(); ++i) trials.push_back({{"id", data.id(i)}, {"task", data.task(i)}});
  result.manifest = json{{"tool", "deepstf"},
                         {"config_hash", config_hash(config)},
                         {"config", config},
                         {"preprocessing_decisions", preprocess_decisions()},
                         {"channels", channel_configuration(config.channel_config).muscles},
                         {"dataset", trials},
                         {"folds", result.folds},
                         {"cells", cells},
                         {"summary", summary_json}};
  write_text(out / "metrics.csv", grid.str());
  write_text(out / "summary.csv", summary.str());
  write_text(out / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

}  // namespace deepstf
