// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "criteria.hpp"

using namespace deepstf::acceptance;

int main(int argc, char** argv) {
  CLI::App app("deepstf acceptance suite");
  std::string out = "acceptance_run";
  std::vector<int> only;
  Context ctx;
  app.add_option("--out", out, "working directory for training runs");
  app.add_option("--only", only, "criterion numbers to run")->delimiter(',');
  app.add_option("--epochs", ctx.budget.step1_epochs, "step-1 epochs (pilot override)");
  app.add_option("--windows-per-epoch", ctx.budget.windows_per_epoch, "step-1 windows per epoch (pilot override)");
  app.add_option("--step2-epochs", ctx.budget.step2_epochs, "step-2 epochs (pilot override)");
  CLI11_PARSE(app, argc, argv);
  ctx.out = out;
  std::filesystem::create_directories(ctx.out);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "shape fidelity", shape_fidelity},
      {2, "gradient suite", gradient_suite},
      {3, "filter contracts", filter_contracts},
      {4, "metric oracle equivalence", metric_oracles},
      {5, "end-to-end synthetic run", [&] { return end_to_end(ctx); }},
      {6, "sweep trend", [&] { return sweep_trend(ctx); }},
      {7, "voting effect", [&] { return voting_effect(ctx); }},
      {8, "channel-drop harness", [&] { return channel_drop(ctx); }},
      {9, "determinism", [&] { return determinism(ctx); }},
      {10, "leakage guard", [&] { return leakage_guard(ctx); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s  %2d %-27s [%.1f s] %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
