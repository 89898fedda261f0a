// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "deepstf/error.hpp"

int main(int argc, char** argv) {
  using namespace deepstf;
  using namespace deepstf::cli;
  CLI::App app{"deepstf: EMG locomotion-mode and transition prediction"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::string> config_path;
  cli::Overrides o;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--jobs", o.jobs, "parallel (fold, p_label) cells");
  app.add_option("--out", o.out, "output directory");

  auto* config = app.add_subcommand("config", "print the default configuration");
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--trials", o.trials, "trials per paradigm task");
  auto* pre = app.add_subcommand("preprocess", "filter, rectify and segment trials into a cache");
  pre->add_option("--data", o.data, "directory of trial files");
  auto* train = app.add_subcommand("train", "two-step training and evaluation over the fold x p_label grid");
  train->add_option("--data", o.data, "directory of trial files");
  train->add_option("--p-label", o.p_label_ms, "label advance times in ms");
  train->add_option("--fold", o.folds, "folds to run (default all)");
  std::string run_dir;
  auto* eval = app.add_subcommand("eval", "recompute reports and plot data from checkpoints");
  eval->add_option("--run", run_dir, "output directory of a train run")->required();
  eval->add_option("--data", o.data, "directory of trial files");
  std::vector<std::string> names;
  auto* drop = app.add_subcommand("channel-drop", "retrain and evaluate per channel configuration");
  drop->add_option("--data", o.data, "directory of trial files");
  drop->add_option("--configs", names, "configurations (default all seven)")->delimiter(',');
  drop->add_option("--p-label", o.p_label_ms, "label advance times in ms");
  drop->add_option("--fold", o.folds, "folds to run (default all)");
  auto* report = app.add_subcommand("report", "summarize a train or channel-drop run");
  report->add_option("--run", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*config) return cli::cmd_config();
    if (*report) return cli::cmd_report(run_dir);
    cli::RunConfig rc = cli::load_run_config(config_path);
    cli::apply(rc, o);
    if (*synth) return cli::cmd_synth(rc);
    if (*pre) return cli::cmd_preprocess(rc);
    if (*train) return cli::cmd_train(rc);
    if (*eval) return cli::cmd_eval(rc, run_dir);
    if (*drop) return cli::cmd_channel_drop(rc, names);
  } catch (const DivergenceError& e) {
    std::cerr << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    std::cerr << "error: configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
