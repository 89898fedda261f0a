// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"
#include "deepstf/synth/synth.hpp"
#include "deepstf/train/folds.hpp"

namespace deepstf {

using nlohmann::json;
using nn::Tensor;

namespace {

std::string reduction_name(nn::BceReduction r) { return r == nn::BceReduction::AllEntries ? "all-entries" : "batch"; }

nn::BceReduction reduction_from_name(const std::string& s) {
  if (s == "all-entries") return nn::BceReduction::AllEntries;
  if (s == "batch") return nn::BceReduction::Batch;
  throw ConfigError("unknown BCE reduction '" + s + "' (expected all-entries or batch)");
}

json adam_json(const nn::AdamConfig& a) { return {{"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}}; }

nn::AdamConfig adam_from(const json& j) {
  nn::AdamConfig a;
  a.beta1 = j.value("beta1", a.beta1);
  a.beta2 = j.value("beta2", a.beta2);
  a.eps = j.value("eps", a.eps);
  return a;
}

// Splits a visit order into batches; a trailing batch of one window joins the
// previous batch because batch normalization needs two samples.
std::vector<std::span<const std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t batch) {
  std::vector<std::span<const std::size_t>> out;
  const std::span<const std::size_t> all(order);
  for (std::size_t s = 0; s < order.size(); s += batch) out.push_back(all.subspan(s, std::min(batch, order.size() - s)));
  if (out.size() > 1 && out.back().size() < 2) {
    const std::size_t start = order.size() - out.back().size() - out[out.size() - 2].size();
    out.pop_back();
    out.back() = all.subspan(start);
  }
  return out;
}

// BCE with optional per-sample weights; writes dL/dp into grad.
double weighted_bce(const Tensor<float>& p, const Tensor<float>& t, std::span<const double> weights,
                    nn::BceReduction reduction, Tensor<float>& grad) {
  if (weights.empty()) {
    grad = nn::bce_grad(p, t, reduction);
    return nn::bce_loss(p, t, reduction);
  }
  const std::size_t N = p.dim(0), K = p.dim(1);
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double denom = reduction == nn::BceReduction::AllEntries ? wsum * static_cast<double>(K) : wsum;
  grad.resize(p.shape());
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t i = n * K + k;
      const double raw = p[i];
      const double q = std::clamp(raw, nn::kBceClamp, 1.0 - nn::kBceClamp);
      const double y = t[i];
      loss += weights[n] * -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
      const bool clamped = raw < nn::kBceClamp || raw > 1.0 - nn::kBceClamp;
      grad[i] = clamped ? 0.0f : static_cast<float>(weights[n] * (-(y / q) + (1.0 - y) / (1.0 - q)) / denom);
    }
  }
  return loss / denom;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

void Step1Config::validate() const {
  if (!(lr > 0.0)) throw ConfigError("step1: lr must be positive");
  if (batch < 2) throw ConfigError("step1: batch must be at least 2");
  if (max_epochs < 1) throw ConfigError("step1: max_epochs must be positive");
  if (early_stop_patience < 1) throw ConfigError("step1: early_stop_patience must be positive");
  if (plateau.patience < 0 || !(plateau.factor > 0.0 && plateau.factor < 1.0)) {
    throw ConfigError("step1: plateau factor must be in (0, 1) and patience non-negative");
  }
  if (max_windows_per_epoch == 1) throw ConfigError("step1: max_windows_per_epoch must be 0 or at least 2");
}

void Step2Config::validate() const {
  if (!(lr > 0.0)) throw ConfigError("step2: lr must be positive");
  if (batch < 1) throw ConfigError("step2: batch must be positive");
  if (epochs < 0) throw ConfigError("step2: epochs must be non-negative");
}

void to_json(json& j, const Step1Config& c) {
  j = json{{"lr", c.lr},
           {"adam", adam_json(c.adam)},
           {"batch", c.batch},
           {"max_epochs", c.max_epochs},
           {"plateau",
            {{"factor", c.plateau.factor},
             {"patience", c.plateau.patience},
             {"min_delta", c.plateau.min_delta},
             {"min_lr", c.plateau.min_lr}}},
           {"early_stop_patience", c.early_stop_patience},
           {"early_stop_min_delta", c.early_stop_min_delta},
           {"max_windows_per_epoch", c.max_windows_per_epoch},
           {"class_weighting", c.class_weighting},
           {"reduction", reduction_name(c.reduction)}};
}

void from_json(const json& j, Step1Config& c) {
  c = Step1Config{};
  c.lr = j.value("lr", c.lr);
  if (j.contains("adam")) c.adam = adam_from(j.at("adam"));
  c.batch = j.value("batch", c.batch);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  if (j.contains("plateau")) {
    const auto& p = j.at("plateau");
    c.plateau.factor = p.value("factor", c.plateau.factor);
    c.plateau.patience = p.value("patience", c.plateau.patience);
    c.plateau.min_delta = p.value("min_delta", c.plateau.min_delta);
    c.plateau.min_lr = p.value("min_lr", c.plateau.min_lr);
  }
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.early_stop_min_delta = j.value("early_stop_min_delta", c.early_stop_min_delta);
  c.max_windows_per_epoch = j.value("max_windows_per_epoch", c.max_windows_per_epoch);
  c.class_weighting = j.value("class_weighting", c.class_weighting);
  c.reduction = reduction_from_name(j.value("reduction", reduction_name(c.reduction)));
  c.validate();
}

void to_json(json& j, const Step2Config& c) {
  j = json{{"lr", c.lr},
           {"adam", adam_json(c.adam)},
           {"batch", c.batch},
           {"epochs", c.epochs},
           {"pad", pad_mode_name(c.pad)},
           {"reduction", reduction_name(c.reduction)}};
}

void from_json(const json& j, Step2Config& c) {
  c = Step2Config{};
  c.lr = j.value("lr", c.lr);
  if (j.contains("adam")) c.adam = adam_from(j.at("adam"));
  c.batch = j.value("batch", c.batch);
  c.epochs = j.value("epochs", c.epochs);
  c.pad = pad_mode_from_name(j.value("pad", pad_mode_name(c.pad)));
  c.reduction = reduction_from_name(j.value("reduction", reduction_name(c.reduction)));
  c.validate();
}

void to_json(json& j, const EpochLog& e) {
  j = json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"lr", e.lr}, {"improved", e.improved}};
  if (std::isfinite(e.val_loss)) j["val_loss"] = e.val_loss;
}

Tensor<float> predict_windows(DeepStfModel<float>& model, const WindowSet& set, std::span<const std::size_t> indices,
                              std::size_t chunk) {
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all = iota_indices(set.windows.size());
    indices = all;
  }
  const std::size_t K = model.config().classes;
  Tensor<float> out({indices.size(), K});
  Tensor<float> time, freq;
  for (std::size_t s = 0; s < indices.size(); s += chunk) {
    const auto part = indices.subspan(s, std::min(chunk, indices.size() - s));
    set.materialize(part, time, freq);
    const Tensor<float> p = model.forward(time, freq, false);
    std::copy(p.values().begin(), p.values().end(), out.data() + s * K);
  }
  return out;
}

double evaluate_loss(DeepStfModel<float>& model, const WindowSet& set, nn::BceReduction reduction) {
  if (set.windows.empty()) throw DataError("evaluate_loss: empty window set");
  const Tensor<float> p = predict_windows(model, set);
  Tensor<float> t({set.windows.size(), kModeCount});
  for (std::size_t i = 0; i < set.windows.size(); ++i) t[i * kModeCount + mode_index(set.windows[i].label)] = 1.0f;
  return nn::bce_loss(p, t, reduction);
}

Step1Result train_step1(DeepStfModel<float>& model, const WindowSet& train, const WindowSet& val,
                        const Step1Config& config, std::uint64_t shuffle_seed, const EpochCallback& on_epoch) {
  config.validate();
  if (train.windows.size() < 2) throw DataError("step1: fewer than two training windows");
  if (val.windows.empty()) throw DataError("step1: empty validation set");
  if (train.channels() != model.config().channels) throw ConfigError("step1: window channels do not match model");

  std::vector<double> class_weight(kModeCount, 1.0);
  if (config.class_weighting) {
    std::vector<double> count(kModeCount, 0.0);
    for (const auto& w : train.windows) count[mode_index(w.label)] += 1.0;
    const double present = static_cast<double>(std::count_if(count.begin(), count.end(), [](double c) { return c > 0; }));
    for (std::size_t k = 0; k < kModeCount; ++k) {
      class_weight[k] = count[k] > 0 ? static_cast<double>(train.windows.size()) / (present * count[k]) : 0.0;
    }
  }

  auto params = model.parameters();
  nn::Adam opt(config.adam);
  nn::PlateauScheduler sched(config.lr, config.plateau);
  nn::EarlyStopping stopper(config.early_stop_patience, config.early_stop_min_delta);
  WeightSnapshot best = snapshot(params);
  Step1Result result;

  Tensor<float> time, freq, target, grad;
  std::vector<double> weights;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::vector<std::size_t> order = iota_indices(train.windows.size());
    portable_shuffle(order, derive_seed(shuffle_seed, 0x5354, static_cast<std::uint64_t>(epoch)));
    if (config.max_windows_per_epoch > 0 && order.size() > config.max_windows_per_epoch) {
      order.resize(config.max_windows_per_epoch);
    }
    const double lr = sched.lr();
    double loss_sum = 0.0;
    std::size_t b = 0;
    for (const auto batch : make_batches(order, config.batch)) {
      train.materialize(batch, time, freq, &target);
      weights.clear();
      if (config.class_weighting) {
        for (std::size_t i : batch) weights.push_back(class_weight[mode_index(train.windows[i].label)]);
      }
      nn::zero_grads(params.params);
      const Tensor<float> probs = model.forward(time, freq, true);
      const double loss = weighted_bce(probs, target, weights, config.reduction, grad);
      if (!std::isfinite(loss)) {
        throw DivergenceError("step1: non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(b) + " (lr " + std::to_string(lr) + ")");
      }
      model.backward(grad);
      opt.step(params.params, lr);
      loss_sum += loss * static_cast<double>(batch.size());
      ++b;
    }
    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.train_loss = loss_sum / static_cast<double>(order.size());
    log.val_loss = evaluate_loss(model, val, config.reduction);
    if (!std::isfinite(log.val_loss)) {
      throw DivergenceError("step1: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    const bool stop = stopper.observe(log.val_loss);
    log.improved = stopper.improved();
    if (log.improved) best = snapshot(params);
    sched.observe(log.train_loss);
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }
  restore(best, params);
  result.best_epoch = stopper.best_epoch();
  result.best_val_loss = stopper.best_loss();
  return result;
}

Tensor<float> stream_histories(const Tensor<float>& raw, const WindowSet& set, PadMode pad) {
  const std::size_t K = raw.dim(1);
  Tensor<float> out({raw.dim(0), kVoteDepth * K});
  for (std::size_t t = 0; t < set.trial_ids.size(); ++t) {
    const auto idx = set.trial_windows(t);
    if (idx.empty()) continue;
    Tensor<float> part({idx.size(), K});
    for (std::size_t k = 0; k < idx.size(); ++k) std::copy_n(raw.data() + idx[k] * K, K, part.data() + k * K);
    const Tensor<float> h = build_histories(part, pad);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::copy_n(h.data() + k * kVoteDepth * K, kVoteDepth * K, out.data() + idx[k] * kVoteDepth * K);
    }
  }
  return out;
}

Step2Result train_voting_head(VotingHead<float>& head, const Tensor<float>& histories,
                              std::span<const LocomotionMode> labels, const Step2Config& config,
                              std::uint64_t shuffle_seed, const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t n = labels.size(), K = head.classes();
  if (n == 0) throw DataError("step2: no training histories");
  if (histories.rank() != 2 || histories.dim(0) != n || histories.dim(1) != kVoteDepth * K) {
    throw ShapeError("step2: histories " + nn::shape_string(histories.shape()) + " do not match " +
                     std::to_string(n) + " labels");
  }
  const std::size_t D = histories.dim(1);
  auto params = head.parameters();
  nn::Adam opt(config.adam);
  Step2Result result;
  Tensor<float> x, t, grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = iota_indices(n);
    portable_shuffle(order, derive_seed(shuffle_seed, 0x5632, static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < n; s += config.batch) {
      const std::size_t nb = std::min(config.batch, n - s);
      x.resize({nb, D});
      t.resize({nb, K});
      t.fill(0.0f);
      for (std::size_t i = 0; i < nb; ++i) {
        const std::size_t w = order[s + i];
        std::copy_n(histories.data() + w * D, D, x.data() + i * D);
        t[i * K + mode_index(labels[w])] = 1.0f;
      }
      nn::zero_grads(params.params);
      const Tensor<float> p = head.forward(x, true);
      const double loss = weighted_bce(p, t, {}, config.reduction, grad);
      if (!std::isfinite(loss)) throw DivergenceError("step2: non-finite loss at epoch " + std::to_string(epoch));
      head.backward(grad);
      opt.step(params.params, config.lr);
      loss_sum += loss * static_cast<double>(nb);
    }
    EpochLog log{epoch, loss_sum / static_cast<double>(n), std::numeric_limits<double>::quiet_NaN(), config.lr, false};
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

Step2Result train_step2(DeepStfModel<float>& frozen, VotingHead<float>& head, const WindowSet& train2,
                        const Step2Config& config, std::uint64_t shuffle_seed, const EpochCallback& on_epoch) {
  config.validate();
  if (train2.windows.empty()) throw DataError("step2: empty TrainSet2");
  const Tensor<float> histories = stream_histories(predict_windows(frozen, train2), train2, config.pad);
  std::vector<LocomotionMode> labels;
  labels.reserve(train2.windows.size());
  for (const auto& w : train2.windows) labels.push_back(w.label);
  return train_voting_head(head, histories, labels, config, shuffle_seed, on_epoch);
}

std::vector<PredictionTrace> traces_from_raw(VotingHead<float>& head, const Tensor<float>& raw, const WindowSet& set,
                                             PadMode pad) {
  if (raw.rank() != 2 || raw.dim(0) != set.windows.size()) {
    throw ShapeError("traces_from_raw: expected one prediction per window");
  }
  const std::size_t K = raw.dim(1);
  std::vector<PredictionTrace> out;
  for (std::size_t t = 0; t < set.trial_ids.size(); ++t) {
    const auto idx = set.trial_windows(t);
    PredictionTrace trace;
    trace.trial_id = set.trial_ids[t];
    trace.stride = set.spec.stride;
    trace.p_label = set.spec.p_label;
    trace.transitions = set.transitions[t];
    if (!idx.empty()) {
      Tensor<float> rows({idx.size(), K});
      std::vector<std::int64_t> ends;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        std::copy_n(raw.data() + idx[k] * K, K, rows.data() + k * K);
        ends.push_back(set.windows[idx[k]].window_end);
      }
      const auto steps = vote_stream(head, rows, ends, pad);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const WindowRef& w = set.windows[idx[k]];
        trace.records.push_back({w.window_end, steps[k].raw_class, steps[k].voted_class, w.label, w.tag});
      }
    }
    out.push_back(std::move(trace));
  }
  return out;
}

std::vector<PredictionTrace> predict_traces(DeepStfModel<float>& model, VotingHead<float>& head,
                                            const WindowSet& set, PadMode pad) {
  return traces_from_raw(head, predict_windows(model, set), set, pad);
}

}  // namespace deepstf
