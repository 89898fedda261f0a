// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepstf/eval/metrics.hpp"
#include "deepstf/model/deepstf.hpp"
#include "deepstf/preprocess/pipeline.hpp"
#include "deepstf/segmentation/windows.hpp"
#include "deepstf/train/dataset.hpp"
#include "deepstf/train/folds.hpp"
#include "deepstf/train/trainer.hpp"

namespace deepstf {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  WindowSpec window;  // p_label is replaced per cell
  std::vector<double> p_label_ms = {100, 150, 200, 250, 300, 350, 400, 450, 500};
  PreprocessConfig preprocess;  // recorded; applied when the dataset was built
  ModelConfig model;            // channels and init_seed are set per cell
  Step1Config step1;
  Step2Config step2;
  EvalConfig eval;
  int folds = 5;
  std::vector<int> run_folds;  // empty runs every fold
  bool stratify_by_task = true;
  std::string channel_config = "ALL";
  int jobs = 1;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct CellResult {
  double p_label_ms = 0.0;
  int fold = 0;
  bool ok = false;
  bool resumed = false;
  std::string error;
  // "config", "data", "divergence" or "other" when !ok.
  std::string error_kind;
  int best_epoch = -1;
  std::size_t step1_epochs = 0;
  EvalReport report;
  std::filesystem::path directory;
};

struct ExperimentResult {
  nlohmann::json manifest;
  std::vector<CellResult> cells;
  std::vector<FoldPlan> folds;

  /// Mean and sd across successful folds of one metric at one p_label.
  MetricSummary summary(double p_label_ms, const std::string& metric) const;
};

/// Value of a scalar report field by name (acc_overall, acc_ss, acc_ts,
/// raw_accuracy, predict_rate, p_stable_mean_ms).
double report_metric(const EvalReport& report, const std::string& metric);

/// Hash of the canonical config JSON; stamped on every artifact.
std::string config_hash(const ExperimentConfig& config);

using CellLogger = std::function<void(const std::string&)>;

/// Runs step 1, step 2 and evaluation per (p_label, fold) cell. Writes
/// manifest.json, metrics.csv and summary.csv at `out`, and per-cell
/// checkpoints and reports under out/cells/. Finished cells with a matching
/// config hash are loaded instead of retrained. Failures are recorded per cell.
ExperimentResult run_experiment(const TrackedDataset& data, const ExperimentConfig& config,
                                const std::filesystem::path& out, const CellLogger& log = {});

/// Recomputes a finished cell's report from its checkpoints and normalization
/// statistics. Throws DataError when any of them is missing.
EvalReport evaluate_cell(const TrackedDataset& data, const ExperimentConfig& config, const FoldPlan& fold,
                         double p_label_ms, const std::filesystem::path& cell_dir);

std::string cell_name(double p_label_ms, int fold);

}  // namespace deepstf
