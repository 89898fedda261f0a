// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "deepstf/nn/ops.hpp"
#include "deepstf/nn/tensor.hpp"

namespace deepstf::nn {

using Rng = std::mt19937_64;

template <typename T>
struct ParameterList {
  std::vector<Parameter<T>*> params;
  std::vector<Buffer<T>*> buffers;
};

/// Output shape of every traced layer, in execution order.
struct ShapeTrace {
  struct Row {
    std::string module;
    std::string layer;
    Shape output;  // per sample, batch axis dropped
  };
  std::vector<Row> rows;

  /// Records a batched shape with the batch axis dropped.
  void add(std::string module, std::string layer, const Shape& batched);
  void add_shape(std::string module, std::string layer, Shape shape);
};

// Layers cache what their backward pass needs when forward runs with
// train = true. backward() must follow the matching forward().

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kh, std::size_t kw);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and bias.
  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, bool train);
  /// Returns the input gradient when need_dx, else an empty tensor.
  Tensor<T> backward(const Tensor<T>& dy, bool need_dx = true);
  void collect(ParameterList<T>& out);

  Parameter<T> weight;  // Cout x Cin x kh x kw
  Parameter<T> bias;    // Cout

 private:
  Tensor<T> input_;
};

template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::string name, std::size_t channels, double eps = 1e-5, double momentum = 0.1);

  Tensor<T> forward(const Tensor<T>& x, bool train);
  Tensor<T> backward(const Tensor<T>& dy);
  void collect(ParameterList<T>& out);
  const Tensor<T>& xhat() const { return cache_.xhat; }
  void release() { cache_ = {}; }

  Parameter<T> gamma;
  Parameter<T> beta;
  Buffer<T> running_mean;
  Buffer<T> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

 private:
  BatchNormCache<T> cache_;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, std::size_t in, std::size_t out);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, bool train);
  Tensor<T> backward(const Tensor<T>& dy, bool need_dx = true);
  void collect(ParameterList<T>& out);

  Parameter<T> weight;  // in x out
  Parameter<T> bias;    // out

 private:
  Tensor<T> input_;
};

/// Single-direction LSTM over a time-major sequence (steps x N x F), zero
/// initial state. Gate column order in the weights is i, f, g, o.
template <typename T>
class Lstm {
 public:
  Lstm() = default;
  Lstm(std::string name, std::size_t input_size, std::size_t hidden, bool reverse);

  /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero bias except forget gate = 1.
  void init(Rng& rng);
  /// Output is steps x N x H, aligned with the input steps in both directions.
  Tensor<T> forward(const Tensor<T>& seq, bool train);
  Tensor<T> backward(const Tensor<T>& dy);
  void collect(ParameterList<T>& out);

  std::size_t hidden() const { return hidden_; }
  std::size_t input_size() const { return input_size_; }

  Parameter<T> wx;    // F x 4H
  Parameter<T> wh;    // H x 4H
  Parameter<T> bias;  // 4H

 private:
  std::size_t input_size_ = 0;
  std::size_t hidden_ = 0;
  bool reverse_ = false;
  Tensor<T> input_;
  Tensor<T> gates_;  // steps x N x 4H, post-activation
  Tensor<T> cell_;   // steps x N x H
  Tensor<T> out_;    // steps x N x H
};

/// Forward and time-reversed LSTMs, outputs concatenated per step
/// (forward first): steps x N x 2H.
template <typename T>
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(std::string name, std::size_t input_size, std::size_t hidden);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& seq, bool train);
  Tensor<T> backward(const Tensor<T>& dy);
  void collect(ParameterList<T>& out);

  Lstm<T> fwd;
  Lstm<T> bwd;
};

template <typename T>
class BiLstmStack {
 public:
  BiLstmStack() = default;
  BiLstmStack(std::string name, std::size_t input_size, std::size_t hidden, std::size_t layers);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& seq, bool train);
  Tensor<T> backward(const Tensor<T>& dy);
  void collect(ParameterList<T>& out);

  std::vector<BiLstm<T>> layers;
};

}  // namespace deepstf::nn
