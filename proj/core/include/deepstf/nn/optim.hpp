// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepstf/nn/tensor.hpp"

namespace deepstf::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

/// Bias-corrected Adam. Moments live in each Parameter.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const std::vector<Parameter<float>*>& params, double lr);
  void step(const std::vector<Parameter<double>*>& params, double lr);

  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  const AdamConfig& config() const { return config_; }

 private:
  template <typename T>
  void step_impl(const std::vector<Parameter<T>*>& params, double lr);

  AdamConfig config_;
  std::int64_t t_ = 0;
};

template <typename T>
void zero_grads(const std::vector<Parameter<T>*>& params) {
  for (auto* p : params) p->zero_grad();
}

struct PlateauConfig {
  double factor = 0.5;
  int patience = 5;
  double min_delta = 1e-4;
  double min_lr = 1e-6;

  bool operator==(const PlateauConfig&) const = default;
};

/// Multiplies the learning rate by `factor` once more than `patience`
/// consecutive epochs fail to improve the best loss by `min_delta`
/// (relative to the best), then restarts the count.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, PlateauConfig config = {}) : lr_(lr), config_(config) {}

  /// Feeds one epoch's loss and returns the learning rate for the next epoch.
  double observe(double loss);
  double lr() const { return lr_; }
  int bad_epochs() const { return bad_; }

  nlohmann::json state() const;
  void restore(const nlohmann::json& state);

 private:
  double lr_;
  PlateauConfig config_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_ = 0;
};

/// Signals a stop after `patience` consecutive epochs without improving the
/// best validation loss by `min_delta`.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience = 10, double min_delta = 0.0) : patience_(patience), min_delta_(min_delta) {}

  /// Returns true when training should stop. `improved()` then tells whether
  /// this epoch set a new best.
  bool observe(double loss);
  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }
  int epochs_seen() const { return epoch_; }

  nlohmann::json state() const;
  void restore(const nlohmann::json& state);

 private:
  int patience_;
  double min_delta_;
  double best_ = 0.0;
  bool has_best_ = false;
  bool improved_ = false;
  int best_epoch_ = -1;
  int bad_ = 0;
  int epoch_ = 0;
};

}  // namespace deepstf::nn
