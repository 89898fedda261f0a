// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepstf/nn/layers.hpp"
#include "deepstf/store/container.hpp"

namespace deepstf {

struct ModelConfig {
  std::size_t window_len = 1200;
  std::size_t channels = 8;
  std::size_t spatial_filters = 8;
  std::vector<std::size_t> temporal_filters = {8, 16, 16, 16};
  std::size_t kernel_h = 3;
  std::size_t pool = 4;
  std::size_t lstm_hidden = 64;
  std::size_t lstm_layers = 3;
  std::size_t branch_features = 64;
  std::size_t classes = 9;
  double leaky_slope = 0.01;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  std::uint64_t init_seed = 1;

  void validate() const;
  /// Height after the temporal/frequency block, i.e. the sequence length.
  std::size_t sequence_length() const;
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Conv (kh x 1) -> BatchNorm -> Leaky-Relu [-> Max Pooling]. Keeps only the
/// normalized activations and pooling indices between forward and backward.
template <typename T>
class ConvStage {
 public:
  ConvStage() = default;
  ConvStage(std::string name, std::size_t in_channels, std::size_t out_channels, const ModelConfig& cfg, bool pool);

  void init(nn::Rng& rng) { conv.init(rng); }
  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train, nn::ShapeTrace* trace, const std::string& module);
  nn::Tensor<T> backward(const nn::Tensor<T>& dy, bool need_dx);
  void collect(nn::ParameterList<T>& out);

  nn::Conv2d<T> conv;
  nn::BatchNorm<T> bn;

 private:
  bool pool_ = false;
  std::size_t pool_size_ = 4;
  double slope_ = 0.01;
  nn::Shape pre_pool_shape_;
  std::vector<std::uint8_t> argmax_;
};

/// Conv 1 x channels with `spatial_filters` kernels, permute, BatchNorm over
/// the single permuted channel, Leaky-Relu: 1 x W x C -> 1 x W x filters.
template <typename T>
class SpatialBlock {
 public:
  SpatialBlock() = default;
  SpatialBlock(std::string name, const ModelConfig& cfg);

  void init(nn::Rng& rng) { conv.init(rng); }
  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train, nn::ShapeTrace* trace);
  nn::Tensor<T> backward(const nn::Tensor<T>& dy);
  void collect(nn::ParameterList<T>& out);

  nn::Conv2d<T> conv;
  nn::BatchNorm<T> bn;

 private:
  double slope_ = 0.01;
};

/// Four ConvStages; pooling after the first three.
template <typename T>
class TemporalBlock {
 public:
  TemporalBlock() = default;
  TemporalBlock(std::string name, const ModelConfig& cfg);

  void init(nn::Rng& rng);
  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train, nn::ShapeTrace* trace);
  nn::Tensor<T> backward(const nn::Tensor<T>& dy, bool need_dx);
  void collect(nn::ParameterList<T>& out);

  std::vector<ConvStage<T>> stages;
};

enum class BranchInput : std::uint8_t { Time, Freq };

/// [spatial] -> temporal/frequency -> BiLSTM stack -> flatten -> FC -> Leaky-Relu.
template <typename T>
class Branch {
 public:
  Branch() = default;
  Branch(std::string name, const ModelConfig& cfg, BranchInput input, bool spatial);

  void init(nn::Rng& rng);
  /// x: N x 1 x W x C. Returns N x branch_features.
  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train, nn::ShapeTrace* trace);
  void backward(const nn::Tensor<T>& dy);
  void collect(nn::ParameterList<T>& out);

  std::string name;
  BranchInput input = BranchInput::Time;
  bool has_spatial = false;
  SpatialBlock<T> spatial;
  TemporalBlock<T> temporal;
  nn::BiLstmStack<T> lstm;
  nn::Linear<T> fc;

 private:
  double slope_ = 0.01;
  nn::Shape cnn_shape_;
  nn::Tensor<T> fc_out_;
};

/// Branch order: spatial-temporal, temporal, spatial-frequency, frequency.
/// Branches share architecture only; every branch owns its parameters.
template <typename T>
class DeepStfModel {
 public:
  explicit DeepStfModel(const ModelConfig& cfg = {});

  /// Uses cfg.init_seed.
  void init();
  /// time, freq: N x 1 x W x C. Returns class probabilities N x classes.
  nn::Tensor<T> forward(const nn::Tensor<T>& time, const nn::Tensor<T>& freq, bool train,
                        nn::ShapeTrace* trace = nullptr);
  /// Gradient of the loss w.r.t. the returned probabilities.
  void backward(const nn::Tensor<T>& dprobs);

  nn::ParameterList<T> parameters();
  const ModelConfig& config() const { return cfg_; }
  /// Per-branch N x branch_features activations of the last forward.
  const std::array<nn::Tensor<T>, 4>& branch_outputs() const { return branch_out_; }
  /// Topology and parameter shapes; stored in checkpoints.
  nlohmann::json architecture() const;

  std::array<Branch<T>, 4> branches;
  nn::Linear<T> head;

 private:
  ModelConfig cfg_;
  std::array<nn::Tensor<T>, 4> branch_out_;
  nn::Tensor<T> probs_;
};

Container model_to_container(DeepStfModel<float>& model, bool with_moments, const nlohmann::json& extra);
/// Rebuilds the model from the stored configuration; throws DataError when the
/// stored architecture does not match the rebuilt one.
DeepStfModel<float> model_from_container(const Container& c);

/// Snapshot of parameter values and buffers, e.g. the best epoch so far.
struct WeightSnapshot {
  std::vector<nn::Tensor<float>> values;
};
WeightSnapshot snapshot(const nn::ParameterList<float>& list);
void restore(const WeightSnapshot& snap, const nn::ParameterList<float>& list);

}  // namespace deepstf
