// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/nn/optim.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace deepstf::nn {

template <typename T>
void Adam::step_impl(const std::vector<Parameter<T>*>& params, double lr) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (auto* p : params) {
    T* w = p->value.data();
    const T* g = p->grad.data();
    T* m = p->adam_m.data();
    T* v = p->adam_v.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      w[i] = static_cast<T>(w[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + config_.eps));
    }
  }
}

void Adam::step(const std::vector<Parameter<float>*>& params, double lr) { step_impl(params, lr); }
void Adam::step(const std::vector<Parameter<double>*>& params, double lr) { step_impl(params, lr); }

double PlateauScheduler::observe(double loss) {
  if (!has_best_ || loss < best_ - config_.min_delta * std::abs(best_)) {
    best_ = loss;
    has_best_ = true;
    bad_ = 0;
  } else {
    ++bad_;
  }
  if (bad_ > config_.patience) {
    lr_ = std::max(lr_ * config_.factor, config_.min_lr);
    bad_ = 0;
  }
  return lr_;
}

nlohmann::json PlateauScheduler::state() const {
  return {{"lr", lr_}, {"best", best_}, {"has_best", has_best_}, {"bad", bad_}};
}

void PlateauScheduler::restore(const nlohmann::json& s) {
  lr_ = s.at("lr").get<double>();
  best_ = s.at("best").get<double>();
  has_best_ = s.at("has_best").get<bool>();
  bad_ = s.at("bad").get<int>();
}

bool EarlyStopping::observe(double loss) {
  improved_ = !has_best_ || loss < best_ - min_delta_;
  if (improved_) {
    best_ = loss;
    has_best_ = true;
    best_epoch_ = epoch_;
    bad_ = 0;
  } else {
    ++bad_;
  }
  ++epoch_;
  return bad_ >= patience_;
}

nlohmann::json EarlyStopping::state() const {
  return {{"best", best_}, {"has_best", has_best_}, {"best_epoch", best_epoch_}, {"bad", bad_}, {"epoch", epoch_}};
}

void EarlyStopping::restore(const nlohmann::json& s) {
  best_ = s.at("best").get<double>();
  has_best_ = s.at("has_best").get<bool>();
  best_epoch_ = s.at("best_epoch").get<int>();
  bad_ = s.at("bad").get<int>();
  epoch_ = s.at("epoch").get<int>();
  improved_ = false;
}

}  // namespace deepstf::nn
