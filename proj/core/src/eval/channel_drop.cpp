// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/eval/channel_drop.hpp"

#include <fstream>
#include <sstream>

#include "deepstf/error.hpp"
#include "deepstf/eval/channels.hpp"

namespace deepstf {

namespace {

const std::vector<std::string> kColumns = {"acc_overall", "acc_ss", "acc_ts", "predict_rate", "p_stable_mean_ms"};

std::string join(const std::vector<std::string>& v, char sep) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += sep;
    s += x;
  }
  return s;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + p.string());
  os << text;
}

}  // namespace

std::vector<ChannelDropEntry> run_channel_drop(const TrackedDataset& data, const ExperimentConfig& base,
                                               const std::filesystem::path& out,
                                               const std::vector<std::string>& names, const CellLogger& log) {
  std::vector<std::string> todo = names;
  if (todo.empty()) {
    for (const auto& c : channel_configurations()) todo.push_back(c.name);
  }
  for (const auto& n : todo) channel_configuration(n);

  std::vector<ChannelDropEntry> entries;
  for (const auto& n : todo) {
    ExperimentConfig cfg = base;
    cfg.channel_config = n;
    const auto& cc = channel_configuration(n);
    if (log) log("channel configuration " + n + " (" + join(cc.muscles, ' ') + ")");
    CellLogger prefixed;
    if (log) prefixed = [&](const std::string& s) { log(n + " " + s); };
    entries.push_back({n, cc.muscles, run_experiment(data, cfg, out / n, prefixed)});
  }

  std::ostringstream csv;
  csv.precision(17);
  csv << "config,muscles,p_label_ms,n_folds";
  for (const auto& m : kColumns) csv << ',' << m << "_mean," << m << "_sd";
  csv << '\n';
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    for (double p : base.p_label_ms) {
      const auto first = e.result.summary(p, kColumns.front());
      csv << e.config_name << ',' << join(e.muscles, ' ') << ',' << p << ',' << first.n;
      nlohmann::json row = {{"config", e.config_name}, {"muscles", e.muscles}, {"p_label_ms", p}, {"n_folds", first.n}};
      for (const auto& m : kColumns) {
        const auto s = e.result.summary(p, m);
        csv << ',' << s.mean << ',' << s.sd;
        row[m] = {{"mean", s.mean}, {"sd", s.sd}};
      }
      csv << '\n';
      j.push_back(std::move(row));
    }
  }
  std::filesystem::create_directories(out);
  write(out / "channel_drop.csv", csv.str());
  write(out / "channel_drop.json", j.dump(2) + "\n");
  return entries;
}

}  // namespace deepstf
