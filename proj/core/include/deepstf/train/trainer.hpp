// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepstf/eval/metrics.hpp"
#include "deepstf/model/deepstf.hpp"
#include "deepstf/model/voting.hpp"
#include "deepstf/nn/ops.hpp"
#include "deepstf/nn/optim.hpp"
#include "deepstf/train/dataset.hpp"

namespace deepstf {

struct Step1Config {
  double lr = 1e-3;
  nn::AdamConfig adam;
  std::size_t batch = 256;
  int max_epochs = 100;
  nn::PlateauConfig plateau;
  int early_stop_patience = 10;
  double early_stop_min_delta = 0.0;
  // Random subset of TrainSet1 windows visited per epoch; 0 visits all.
  std::size_t max_windows_per_epoch = 0;
  // Per-sample weights count-balancing the label classes.
  bool class_weighting = false;
  nn::BceReduction reduction = nn::BceReduction::AllEntries;

  void validate() const;
  bool operator==(const Step1Config&) const = default;
};

struct Step2Config {
  double lr = 1e-3;
  nn::AdamConfig adam;
  std::size_t batch = 256;
  int epochs = 50;
  PadMode pad = PadMode::Zero;
  nn::BceReduction reduction = nn::BceReduction::AllEntries;

  void validate() const;
  bool operator==(const Step2Config&) const = default;
};

void to_json(nlohmann::json& j, const Step1Config& c);
void from_json(const nlohmann::json& j, Step1Config& c);
void to_json(nlohmann::json& j, const Step2Config& c);
void from_json(const nlohmann::json& j, Step2Config& c);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN for step 2
  double lr = 0.0;
  bool improved = false;

  bool operator==(const EpochLog&) const = default;
};

struct Step1Result {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  bool early_stopped = false;
};

struct Step2Result {
  std::vector<EpochLog> epochs;
};

void to_json(nlohmann::json& j, const EpochLog& e);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Step 1: trains the backbone on `train`, early-stops on the loss over `val`
/// and restores the best weights. Throws DivergenceError on a non-finite loss.
Step1Result train_step1(DeepStfModel<float>& model, const WindowSet& train, const WindowSet& val,
                        const Step1Config& config, std::uint64_t shuffle_seed, const EpochCallback& on_epoch = {});

/// Step 2: trains the voting head on five-step histories of the frozen
/// backbone's predictions over `train2`, for exactly config.epochs epochs.
Step2Result train_step2(DeepStfModel<float>& frozen, VotingHead<float>& head, const WindowSet& train2,
                        const Step2Config& config, std::uint64_t shuffle_seed, const EpochCallback& on_epoch = {});

/// Trains the voting head on precomputed histories (n x 5*classes) against
/// their labels. train_step2 builds the histories from the frozen backbone.
Step2Result train_voting_head(VotingHead<float>& head, const nn::Tensor<float>& histories,
                              std::span<const LocomotionMode> labels, const Step2Config& config,
                              std::uint64_t shuffle_seed, const EpochCallback& on_epoch = {});

/// Eval-mode class probabilities for the given windows (all when empty).
nn::Tensor<float> predict_windows(DeepStfModel<float>& model, const WindowSet& set,
                                  std::span<const std::size_t> indices = {}, std::size_t chunk = 64);

/// Mean eval-mode loss over every window in `set`.
double evaluate_loss(DeepStfModel<float>& model, const WindowSet& set, nn::BceReduction reduction);

/// Raw and voted predictions for every trial of `set`.
std::vector<PredictionTrace> predict_traces(DeepStfModel<float>& model, VotingHead<float>& head,
                                            const WindowSet& set, PadMode pad);

/// Traces from raw predictions given for every window of `set` in order.
std::vector<PredictionTrace> traces_from_raw(VotingHead<float>& head, const nn::Tensor<float>& raw,
                                             const WindowSet& set, PadMode pad);

/// Per-trial histories of raw predictions, stacked in window order.
nn::Tensor<float> stream_histories(const nn::Tensor<float>& raw, const WindowSet& set, PadMode pad);

}  // namespace deepstf
