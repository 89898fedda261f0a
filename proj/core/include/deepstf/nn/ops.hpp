// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "deepstf/nn/tensor.hpp"

namespace deepstf::nn {

// Image tensors are N x C x H x W. Backward functions accumulate into
// parameter gradients and overwrite input gradients.

/// Valid cross-correlation, stride 1, plus per-output-channel bias.
/// kernel: Cout x Cin x kh x kw.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias);

/// `dx` may be null when the input gradient is not needed.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>& dkernel, Tensor<T>& dbias);

/// Swaps axes 1 and 3: N x A x H x B -> N x B x H x A. Its own inverse.
template <typename T>
Tensor<T> permute_channels_width(const Tensor<T>& x);

template <typename T>
struct BatchNormCache {
  Tensor<T> xhat;
  std::vector<T> inv_std;
};

/// Per channel (axis 1) statistics over batch and all trailing axes. The
/// running variance update uses the unbiased batch variance.
template <typename T>
Tensor<T> batchnorm_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T>& running_mean,
                          Tensor<T>& running_var, double eps, double momentum, BatchNormCache<T>& cache);

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                         const Tensor<T>& running_mean, const Tensor<T>& running_var, double eps);

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                             Tensor<T>& dgamma, Tensor<T>& dbeta);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope);
template <typename T>
void leaky_relu_inplace(Tensor<T>& x, double slope);

/// `y` may be the input or the output: both share sign since slope > 0. x = 0
/// takes the positive-side slope.
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& y, const Tensor<T>& dy, double slope);

/// Max over non-overlapping windows of `pool` rows along H (axis 2); trailing
/// rows are dropped. `argmax` receives the winning offset per output, first
/// index on ties.
template <typename T>
Tensor<T> maxpool_h(const Tensor<T>& x, std::size_t pool, std::vector<std::uint8_t>& argmax);

template <typename T>
Tensor<T> maxpool_h_backward(const Tensor<T>& dy, const std::vector<std::uint8_t>& argmax, const Shape& input_shape,
                             std::size_t pool);

/// y = x W + b with x: N x in, W: in x out.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>& dweight, Tensor<T>& dbias);

/// Row-wise, max-subtracted. x: N x K.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x);

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& dy);

enum class BceReduction : std::uint8_t {
  AllEntries,  // divide by N x K
  Batch,       // divide by N
};

inline constexpr double kBceClamp = 1e-7;

/// Binary cross entropy over every entry of `pred` (probabilities) against
/// `target`, with pred clamped to [1e-7, 1 - 1e-7].
template <typename T>
double bce_loss(const Tensor<T>& pred, const Tensor<T>& target, BceReduction reduction = BceReduction::AllEntries);

/// Gradient w.r.t. pred; zero where the clamp is active.
template <typename T>
Tensor<T> bce_grad(const Tensor<T>& pred, const Tensor<T>& target, BceReduction reduction = BceReduction::AllEntries);

}  // namespace deepstf::nn
