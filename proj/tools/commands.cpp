// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "deepstf/error.hpp"
#include "deepstf/eval/channel_drop.hpp"
#include "deepstf/eval/channels.hpp"
#include "deepstf/store/trial_io.hpp"

namespace deepstf::cli {

using nlohmann::json;
namespace fs = std::filesystem;

void to_json(json& j, const RunConfig& c) {
  j = json{{"experiment", c.experiment},
           {"synth", c.synth},
           {"trials_per_task", c.trials_per_task},
           {"data", c.data},
           {"out", c.out}};
}

void from_json(const json& j, RunConfig& c) {
  c = RunConfig{};
  for (const auto& [key, _] : j.items()) {
    if (key != "experiment" && key != "synth" && key != "trials_per_task" && key != "data" && key != "out") {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (j.contains("experiment")) c.experiment = j.at("experiment").get<ExperimentConfig>();
  if (j.contains("synth")) c.synth = j.at("synth").get<SynthConfig>();
  c.trials_per_task = j.value("trials_per_task", c.trials_per_task);
  c.data = j.value("data", c.data);
  c.out = j.value("out", c.out);
}

RunConfig load_run_config(const std::optional<std::string>& path) {
  if (!path) return RunConfig{};
  std::ifstream is(*path);
  if (!is) throw ConfigError("cannot open config file " + *path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(*path + ": " + e.what());
  }
  return j.get<RunConfig>();
}

void apply(RunConfig& c, const Overrides& o) {
  if (o.seed) {
    c.experiment.seed = *o.seed;
    c.synth.seed = *o.seed;
  }
  if (o.jobs) c.experiment.jobs = *o.jobs;
  if (o.out) c.out = *o.out;
  if (o.data) c.data = *o.data;
  if (!o.p_label_ms.empty()) c.experiment.p_label_ms = o.p_label_ms;
  if (!o.folds.empty()) c.experiment.run_folds = o.folds;
  if (o.trials) c.trials_per_task = *o.trials;
  c.experiment.validate();
  validate_synth_config(c.synth);
}

fs::path output_dir(const RunConfig& c, const std::string& command) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("DEEPSTF_OUT"); env && *env) return fs::path(env) / command;
  return fs::path("deepstf_out") / command;
}

namespace {

void log(const std::string& s) { std::cerr << s << '\n'; }

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + p.string());
  os << text;
  if (!os) throw DataError("write failed: " + p.string());
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw DataError("cannot read " + p.string());
  return json::parse(is);
}

std::string hash_json(const json& j) { return hex64(fnv1a64(j.dump())); }

std::map<std::string, std::int64_t> windows_per_mode(const ModeAnnotation& a, const std::vector<TransitionEvent>& tr,
                                                     const WindowSpec& spec) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& w : segment_trial(build_state_track(a, tr), spec)) ++counts[std::string(mode_name(w.label))];
  return counts;
}

fs::path data_dir(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError("no dataset directory (use --data or \"data\" in the config)");
  if (!fs::is_directory(c.data)) throw DataError("dataset directory " + c.data + " does not exist");
  return c.data;
}

// Trial files in name order.
std::vector<fs::path> trial_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".dstf") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no .dstf trial files in " + dir.string());
  return out;
}

// Preprocessed trials, reusing cache entries whose key matches.
std::vector<PreprocessedTrial> preprocess_all(const RunConfig& c, const fs::path& cache) {
  const json key_src = {{"preprocess", c.experiment.preprocess}, {"window", c.experiment.window}};
  const std::string key = hash_json(key_src);
  std::vector<PreprocessedTrial> out;
  json windows = json::object();
  std::size_t hits = 0;
  for (const auto& f : trial_files(data_dir(c))) {
    const fs::path cached = cache / (f.stem().string() + ".pre.dstf");
    PreprocessedTrial t;
    bool hit = false;
    if (fs::exists(cached)) {
      const Container cc = read_container(cached);
      if (json::parse(cc.metadata()).value("spec_hash", "") == key) {
        t = preprocessed_from_container(cc);
        hit = true;
      }
    }
    if (hit) {
      ++hits;
      log("cache hit " + t.trial_id);
    } else {
      const Trial trial = load_trial(f);
      t = preprocess_trial(trial, c.experiment.preprocess);
      write_container(preprocessed_to_container(t, key), cached);
    }
    windows[t.trial_id] = windows_per_mode(t.annotation, t.transitions, c.experiment.window);
    out.push_back(std::move(t));
  }
  write_text(cache / "windows.json",
             json{{"cache_key", key}, {"window", c.experiment.window}, {"windows_per_mode", windows}}.dump(2) + "\n");
  log("preprocessed " + std::to_string(out.size()) + " trials (" + std::to_string(hits) + " from cache) in " +
      cache.string());
  return out;
}

int exit_code_for(const std::vector<CellResult>& cells) {
  for (const auto& c : cells) {
    if (c.ok) continue;
    if (c.error_kind == "divergence") return kExitDivergence;
    if (c.error_kind == "data") return kExitData;
    if (c.error_kind == "config") return kExitConfig;
    return kExitOther;
  }
  return kExitOk;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

// accuracy_vs_p_label.csv and p_stable_vs_p_label.csv from a summary array.
void write_plot_data(const json& summary, const fs::path& dir) {
  std::ostringstream acc, ps;
  acc.precision(17);
  ps.precision(17);
  acc << "p_label_ms,n_folds,acc_overall_mean,acc_overall_sd,acc_ss_mean,acc_ss_sd,acc_ts_mean,acc_ts_sd\n";
  ps << "p_label_ms,n_folds,p_stable_mean_ms,p_stable_sd_ms,predict_rate_mean,predict_rate_sd\n";
  for (const auto& r : summary) {
    const auto m = [&](const char* k, const char* f) { return r.at(k).at(f).get<double>(); };
    acc << r.at("p_label_ms").get<double>() << ',' << r.at("n_folds").get<std::size_t>() << ','
        << m("acc_overall", "mean") << ',' << m("acc_overall", "sd") << ',' << m("acc_ss", "mean") << ','
        << m("acc_ss", "sd") << ',' << m("acc_ts", "mean") << ',' << m("acc_ts", "sd") << '\n';
    ps << r.at("p_label_ms").get<double>() << ',' << r.at("n_folds").get<std::size_t>() << ','
       << m("p_stable_mean_ms", "mean") << ',' << m("p_stable_mean_ms", "sd") << ',' << m("predict_rate", "mean")
       << ',' << m("predict_rate", "sd") << '\n';
  }
  write_text(dir / "accuracy_vs_p_label.csv", acc.str());
  write_text(dir / "p_stable_vs_p_label.csv", ps.str());
}

void print_summary(const json& summary) {
  std::cout << "p_label_ms  folds  acc_overall        acc_ss             acc_ts             predict_rate  "
               "p_stable_ms\n";
  for (const auto& r : summary) {
    const auto ms = [&](const char* k) {
      return fmt(r.at(k).at("mean").get<double>()) + " +- " + fmt(r.at(k).at("sd").get<double>());
    };
    std::cout << std::left << std::setw(12) << r.at("p_label_ms").get<double>() << std::setw(7)
              << r.at("n_folds").get<std::size_t>() << std::setw(19) << ms("acc_overall") << std::setw(19)
              << ms("acc_ss") << std::setw(19) << ms("acc_ts") << std::setw(14)
              << fmt(r.at("predict_rate").at("mean").get<double>(), 3)
              << fmt(r.at("p_stable_mean_ms").at("mean").get<double>(), 1) << '\n';
  }
}

}  // namespace

int cmd_config() {
  std::cout << json(RunConfig{}).dump(2) << '\n';
  return kExitOk;
}

int cmd_synth(const RunConfig& c) {
  const fs::path out = output_dir(c, "synth");
  fs::create_directories(out);
  const auto trials = generate_dataset(c.synth, c.trials_per_task);
  WindowSpec spec = c.experiment.window;
  json entries = json::array();
  std::map<std::string, std::int64_t> total;
  for (const auto& s : trials) {
    const fs::path file = out / (s.trial.id() + ".dstf");
    save_trial(s.trial, file);
    const auto counts = windows_per_mode(s.trial.annotation, s.trial.transitions, spec);
    for (const auto& [m, n] : counts) total[m] += n;
    entries.push_back({{"id", s.trial.id()},
                       {"task", s.trial.task},
                       {"file", file.filename().string()},
                       {"samples", s.trial.length()},
                       {"transitions", s.trial.transitions.size()},
                       {"fnv1a64", hex64(fnv1a64(read_file_bytes(file)))},
                       {"windows_per_mode", counts}});
  }
  const json manifest = {{"tool", "deepstf synth"},
                         {"config_hash", hash_json(json{{"synth", c.synth}, {"trials_per_task", c.trials_per_task}})},
                         {"synth", c.synth},
                         {"trials_per_task", c.trials_per_task},
                         {"window", spec},
                         {"windows_per_mode", total},
                         {"trials", entries}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << trials.size() << " trials written to " << out.string() << "\n";
  std::cout << "windows per mode (W=" << spec.window_len << ", S=" << spec.stride << ", p_label=" << spec.p_label
            << "):";
  for (const auto& [m, n] : total) std::cout << ' ' << m << '=' << n;
  std::cout << '\n';
  return kExitOk;
}

int cmd_preprocess(const RunConfig& c) {
  preprocess_all(c, output_dir(c, "preprocessed"));
  return kExitOk;
}

int cmd_train(const RunConfig& c) {
  const fs::path out = output_dir(c, "train");
  const TrackedDataset data(preprocess_all(c, out / "preprocessed"));
  const auto res = run_experiment(data, c.experiment, out, log);
  print_summary(res.manifest.at("summary"));
  write_plot_data(res.manifest.at("summary"), out);
  for (const auto& cell : res.cells) {
    if (!cell.ok) log("cell " + cell_name(cell.p_label_ms, cell.fold) + " failed (" + cell.error_kind + "): " + cell.error);
  }
  return exit_code_for(res.cells);
}

int cmd_eval(const RunConfig& given, const fs::path& run_dir) {
  const json manifest = read_json(run_dir / "manifest.json");
  RunConfig c = given;
  c.experiment = manifest.at("config").get<ExperimentConfig>();
  if (c.out.empty()) c.out = (run_dir / "eval").string();
  const fs::path out = c.out;
  const TrackedDataset data(preprocess_all(c, run_dir / "preprocessed"));
  const auto folds = manifest.at("folds").get<std::vector<FoldPlan>>();

  ExperimentResult res;
  std::ostringstream grid;
  grid.precision(17);
  grid << "fold,p_label_ms,acc_overall,acc_ss,acc_ts,raw_accuracy,predict_rate,p_stable_mean_ms,matches_train\n";
  std::size_t mismatches = 0;
  for (const auto& e : manifest.at("cells")) {
    if (e.at("status") != "ok") continue;
    const int fold = e.at("fold").get<int>();
    const double p = e.at("p_label_ms").get<double>();
    const std::string name = e.at("name").get<std::string>();
    CellResult cell;
    cell.fold = fold;
    cell.p_label_ms = p;
    cell.report = evaluate_cell(data, c.experiment, folds.at(static_cast<std::size_t>(fold)), p, run_dir / "cells" / name);
    cell.ok = true;
    const EvalReport stored = read_json(run_dir / e.at("report").get<std::string>()).get<EvalReport>();
    const bool same = stored == cell.report;
    mismatches += !same;
    const fs::path dir = out / name;
    write_text(dir / "report.json", json(cell.report).dump(2) + "\n");
    write_text(dir / "report.csv", report_to_csv(cell.report));
    write_text(dir / "pstable.csv", p_stable_csv(cell.report));
    write_text(dir / "confusion.csv", confusion_csv(cell.report));
    const auto& r = cell.report;
    grid << fold << ',' << p << ',' << r.acc_overall << ',' << r.acc_ss << ',' << r.acc_ts << ',' << r.raw_accuracy
         << ',' << r.predict_rate << ',' << r.p_stable_mean_ms << ',' << (same ? "yes" : "no") << '\n';
    log(name + ": acc_overall " + fmt(r.acc_overall) + (same ? "" : " (differs from the training-time report)"));
    res.cells.push_back(std::move(cell));
  }
  if (res.cells.empty()) throw DataError("no finished cells in " + run_dir.string());
  json summary = json::array();
  for (double p : c.experiment.p_label_ms) {
    json row = {{"p_label_ms", p}, {"n_folds", res.summary(p, "acc_overall").n}};
    for (const char* m : {"acc_overall", "acc_ss", "acc_ts", "raw_accuracy", "predict_rate", "p_stable_mean_ms"}) {
      const auto s = res.summary(p, m);
      row[m] = {{"mean", s.mean}, {"sd", s.sd}};
    }
    summary.push_back(std::move(row));
  }
  write_text(out / "metrics.csv", grid.str());
  write_text(out / "summary.json", json{{"config_hash", manifest.at("config_hash")}, {"summary", summary}}.dump(2) + "\n");
  write_plot_data(summary, out);
  print_summary(summary);
  if (mismatches) {
    log(std::to_string(mismatches) + " cell(s) differ from their training-time reports");
    return kExitData;
  }
  return kExitOk;
}

int cmd_channel_drop(const RunConfig& c, const std::vector<std::string>& names) {
  for (const auto& n : names) channel_configuration(n);
  const fs::path out = output_dir(c, "channel-drop");
  const TrackedDataset data(preprocess_all(c, out / "preprocessed"));
  const auto entries = run_channel_drop(data, c.experiment, out, names, log);
  std::cout << "config  muscles                    p_label_ms  acc_overall\n";
  int code = kExitOk;
  for (const auto& e : entries) {
    std::string muscles;
    for (const auto& m : e.muscles) muscles += (muscles.empty() ? "" : " ") + m;
    for (double p : c.experiment.p_label_ms) {
      const auto s = e.result.summary(p, "acc_overall");
      std::cout << std::left << std::setw(8) << e.config_name << std::setw(27) << muscles << std::setw(12) << p
                << fmt(s.mean) << " +- " << fmt(s.sd) << '\n';
    }
    if (code == kExitOk) code = exit_code_for(e.result.cells);
  }
  return code;
}

int cmd_report(const fs::path& run_dir) {
  if (fs::exists(run_dir / "channel_drop.json")) {
    const json rows = read_json(run_dir / "channel_drop.json");
    std::cout << "config  p_label_ms  folds  acc_overall        acc_ts             predict_rate  p_stable_ms\n";
    for (const auto& r : rows) {
      const auto ms = [&](const char* k) {
        return fmt(r.at(k).at("mean").get<double>()) + " +- " + fmt(r.at(k).at("sd").get<double>());
      };
      std::cout << std::left << std::setw(8) << r.at("config").get<std::string>() << std::setw(12)
                << r.at("p_label_ms").get<double>() << std::setw(7) << r.at("n_folds").get<std::size_t>()
                << std::setw(19) << ms("acc_overall") << std::setw(19) << ms("acc_ts") << std::setw(14)
                << fmt(r.at("predict_rate").at("mean").get<double>(), 3)
                << fmt(r.at("p_stable_mean_ms").at("mean").get<double>(), 1) << '\n';
    }
    return kExitOk;
  }
  const json manifest = read_json(run_dir / "manifest.json");
  std::cout << "run " << run_dir.string() << "  config " << manifest.at("config_hash").get<std::string>() << "  channels";
  for (const auto& m : manifest.at("channels")) std::cout << ' ' << m.get<std::string>();
  std::cout << '\n';
  print_summary(manifest.at("summary"));
  std::size_t failed = 0;
  for (const auto& e : manifest.at("cells")) failed += e.at("status") != "ok";
  if (failed) std::cout << failed << " failed cell(s)\n";
  write_plot_data(manifest.at("summary"), run_dir);
  return kExitOk;
}

}  // namespace deepstf::cli
