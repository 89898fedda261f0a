// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/nn/layers.hpp"

#include <cmath>

#include "eigen_maps.hpp"

namespace deepstf::nn {

using namespace detail;

namespace {

template <typename T>
void uniform_fill(Tensor<T>& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : t.values()) v = static_cast<T>(u(rng));
}

inline Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

void ShapeTrace::add(std::string module, std::string layer, const Shape& batched) {
  rows.push_back({std::move(module), std::move(layer), Shape(batched.begin() + 1, batched.end())});
}

void ShapeTrace::add_shape(std::string module, std::string layer, Shape shape) {
  rows.push_back({std::move(module), std::move(layer), std::move(shape)});
}

// Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kh, std::size_t kw)
    : weight(name + ".weight", {out_channels, in_channels, kh, kw}), bias(name + ".bias", {out_channels}) {}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  const auto& s = weight.value.shape();
  const double bound = 1.0 / std::sqrt(static_cast<double>(s[1] * s[2] * s[3]));
  uniform_fill(weight.value, bound, rng);
  uniform_fill(bias.value, bound, rng);
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, bool train) {
  if (train) input_ = x;
  return conv2d(x, weight.value, bias.value);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy, bool need_dx) {
  Tensor<T> dx;
  conv2d_backward(input_, weight.value, dy, need_dx ? &dx : nullptr, weight.grad, bias.grad);
  input_ = {};
  return dx;
}

template <typename T>
void Conv2d<T>::collect(ParameterList<T>& out) {
  out.params.push_back(&weight);
  out.params.push_back(&bias);
}

// BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, std::size_t channels, double eps_, double momentum_)
    : gamma(name + ".gamma", {channels}),
      beta(name + ".beta", {channels}),
      running_mean{name + ".running_mean", Tensor<T>({channels}, T(0))},
      running_var{name + ".running_var", Tensor<T>({channels}, T(1))},
      eps(eps_),
      momentum(momentum_) {
  gamma.value.fill(T(1));
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, bool train) {
  if (!train) return batchnorm_eval(x, gamma.value, beta.value, running_mean.value, running_var.value, eps);
  return batchnorm_train(x, gamma.value, beta.value, running_mean.value, running_var.value, eps, momentum, cache_);
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dx = batchnorm_backward(dy, cache_, gamma.value, gamma.grad, beta.grad);
  release();
  return dx;
}

template <typename T>
void BatchNorm<T>::collect(ParameterList<T>& out) {
  out.params.push_back(&gamma);
  out.params.push_back(&beta);
  out.buffers.push_back(&running_mean);
  out.buffers.push_back(&running_var);
}

// Linear

template <typename T>
Linear<T>::Linear(std::string name, std::size_t in, std::size_t out)
    : weight(name + ".weight", {in, out}), bias(name + ".bias", {out}) {}

template <typename T>
void Linear<T>::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(weight.value.dim(0)));
  uniform_fill(weight.value, bound, rng);
  uniform_fill(bias.value, bound, rng);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, bool train) {
  if (train) input_ = x;
  return linear(x, weight.value, bias.value);
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& dy, bool need_dx) {
  Tensor<T> dx;
  linear_backward(input_, weight.value, dy, need_dx ? &dx : nullptr, weight.grad, bias.grad);
  input_ = {};
  return dx;
}

template <typename T>
void Linear<T>::collect(ParameterList<T>& out) {
  out.params.push_back(&weight);
  out.params.push_back(&bias);
}

// Lstm

template <typename T>
Lstm<T>::Lstm(std::string name, std::size_t input_size, std::size_t hidden, bool reverse)
    : wx(name + ".wx", {input_size, 4 * hidden}),
      wh(name + ".wh", {hidden, 4 * hidden}),
      bias(name + ".bias", {4 * hidden}),
      input_size_(input_size),
      hidden_(hidden),
      reverse_(reverse) {}

template <typename T>
void Lstm<T>::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  uniform_fill(wx.value, bound, rng);
  uniform_fill(wh.value, bound, rng);
  bias.value.fill(T(0));
  for (std::size_t j = hidden_; j < 2 * hidden_; ++j) bias.value[j] = T(1);
}

template <typename T>
Tensor<T> Lstm<T>::forward(const Tensor<T>& seq, bool train) {
  if (seq.rank() != 3 || seq.dim(2) != input_size_) {
    throw ShapeError("lstm: expected steps x N x " + std::to_string(input_size_) + ", got " +
                     shape_string(seq.shape()));
  }
  const std::size_t S = seq.dim(0), N = seq.dim(1), H = hidden_, G = 4 * H;
  Tensor<T> gates({S, N, G});
  Tensor<T> cell({S, N, H});
  Tensor<T> out({S, N, H});

  MapR<T> A(gates.data(), ix(S * N), ix(G));
  A.noalias() = CMapR<T>(seq.data(), ix(S * N), ix(input_size_)) * CMapR<T>(wx.value.data(), ix(input_size_), ix(G));
  A.rowwise() += CMapRow<T>(bias.value.data(), ix(G));

  CMapR<T> Wh(wh.value.data(), ix(H), ix(G));
  MatR<T> rec(ix(N), ix(G));
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t t = reverse_ ? S - 1 - s : s;
    MapR<T> a(gates.data() + t * N * G, ix(N), ix(G));
    MapR<T> c(cell.data() + t * N * H, ix(N), ix(H));
    MapR<T> h(out.data() + t * N * H, ix(N), ix(H));
    if (s > 0) {
      const std::size_t tp = reverse_ ? t + 1 : t - 1;
      rec.noalias() = CMapR<T>(out.data() + tp * N * H, ix(N), ix(H)) * Wh;
      a += rec;
    }
    auto sig = [](auto x) { return T(1) / (T(1) + (-x).exp()); };
    a.leftCols(ix(2 * H)) = sig(a.leftCols(ix(2 * H)).array()).matrix();
    a.middleCols(ix(2 * H), ix(H)) = a.middleCols(ix(2 * H), ix(H)).array().tanh().matrix();
    a.rightCols(ix(H)) = sig(a.rightCols(ix(H)).array()).matrix();
    auto i = a.leftCols(ix(H)).array();
    auto f = a.middleCols(ix(H), ix(H)).array();
    auto g = a.middleCols(ix(2 * H), ix(H)).array();
    auto o = a.rightCols(ix(H)).array();
    if (s > 0) {
      const std::size_t tp = reverse_ ? t + 1 : t - 1;
      CMapR<T> cp(cell.data() + tp * N * H, ix(N), ix(H));
      c.array() = f * cp.array() + i * g;
    } else {
      c.array() = i * g;
    }
    h.array() = o * c.array().tanh();
  }
  if (train) {
    input_ = seq;
    gates_ = std::move(gates);
    cell_ = std::move(cell);
    out_ = out;
  }
  return out;
}

template <typename T>
Tensor<T> Lstm<T>::backward(const Tensor<T>& dy) {
  const std::size_t S = input_.dim(0), N = input_.dim(1), H = hidden_, G = 4 * H, F = input_size_;
  require_shape(dy.shape(), {S, N, H}, "lstm output gradient");
  Tensor<T> dgates({S, N, G});
  CMapR<T> Wh(wh.value.data(), ix(H), ix(G));
  MapR<T> dWh(wh.grad.data(), ix(H), ix(G));
  MatR<T> dh_next = MatR<T>::Zero(ix(N), ix(H));
  MatR<T> dc_next = MatR<T>::Zero(ix(N), ix(H));
  MatR<T> dh(ix(N), ix(H)), dc(ix(N), ix(H)), tc(ix(N), ix(H));
  for (std::size_t s = S; s-- > 0;) {
    const std::size_t t = reverse_ ? S - 1 - s : s;
    const bool first = s == 0;
    const std::size_t tp = reverse_ ? t + 1 : t - 1;
    CMapR<T> a(gates_.data() + t * N * G, ix(N), ix(G));
    CMapR<T> c(cell_.data() + t * N * H, ix(N), ix(H));
    MapR<T> da(dgates.data() + t * N * G, ix(N), ix(G));
    auto i = a.leftCols(ix(H)).array();
    auto f = a.middleCols(ix(H), ix(H)).array();
    auto g = a.middleCols(ix(2 * H), ix(H)).array();
    auto o = a.rightCols(ix(H)).array();

    dh = CMapR<T>(dy.data() + t * N * H, ix(N), ix(H)) + dh_next;
    tc = c.array().tanh().matrix();
    dc.array() = dh.array() * o * (T(1) - tc.array().square()) + dc_next.array();
    da.rightCols(ix(H)).array() = dh.array() * tc.array() * o * (T(1) - o);
    da.leftCols(ix(H)).array() = dc.array() * g * i * (T(1) - i);
    da.middleCols(ix(2 * H), ix(H)).array() = dc.array() * i * (T(1) - g.square());
    if (first) {
      da.middleCols(ix(H), ix(H)).setZero();
    } else {
      CMapR<T> cp(cell_.data() + tp * N * H, ix(N), ix(H));
      da.middleCols(ix(H), ix(H)).array() = dc.array() * cp.array() * f * (T(1) - f);
      CMapR<T> hp(out_.data() + tp * N * H, ix(N), ix(H));
      dWh.noalias() += hp.transpose() * da;
    }
    dc_next.array() = dc.array() * f;
    dh_next.noalias() = da * Wh.transpose();
  }
  CMapR<T> dA(dgates.data(), ix(S * N), ix(G));
  CMapR<T> X(input_.data(), ix(S * N), ix(F));
  MapR<T>(wx.grad.data(), ix(F), ix(G)).noalias() += X.transpose() * dA;
  MapRow<T>(bias.grad.data(), ix(G)) += dA.colwise().sum();
  Tensor<T> dx({S, N, F});
  MapR<T>(dx.data(), ix(S * N), ix(F)).noalias() = dA * CMapR<T>(wx.value.data(), ix(F), ix(G)).transpose();
  input_ = {};
  gates_ = {};
  cell_ = {};
  out_ = {};
  return dx;
}

template <typename T>
void Lstm<T>::collect(ParameterList<T>& out) {
  out.params.push_back(&wx);
  out.params.push_back(&wh);
  out.params.push_back(&bias);
}

// BiLstm

template <typename T>
BiLstm<T>::BiLstm(std::string name, std::size_t input_size, std::size_t hidden)
    : fwd(name + ".fwd", input_size, hidden, false), bwd(name + ".bwd", input_size, hidden, true) {}

template <typename T>
void BiLstm<T>::init(Rng& rng) {
  fwd.init(rng);
  bwd.init(rng);
}

template <typename T>
Tensor<T> BiLstm<T>::forward(const Tensor<T>& seq, bool train) {
  const Tensor<T> a = fwd.forward(seq, train);
  const Tensor<T> b = bwd.forward(seq, train);
  const std::size_t S = a.dim(0), N = a.dim(1), H = a.dim(2);
  Tensor<T> out({S, N, 2 * H});
  for (std::size_t r = 0; r < S * N; ++r) {
    std::copy_n(a.data() + r * H, H, out.data() + r * 2 * H);
    std::copy_n(b.data() + r * H, H, out.data() + r * 2 * H + H);
  }
  return out;
}

template <typename T>
Tensor<T> BiLstm<T>::backward(const Tensor<T>& dy) {
  const std::size_t S = dy.dim(0), N = dy.dim(1), H = dy.dim(2) / 2;
  Tensor<T> da({S, N, H}), db({S, N, H});
  for (std::size_t r = 0; r < S * N; ++r) {
    std::copy_n(dy.data() + r * 2 * H, H, da.data() + r * H);
    std::copy_n(dy.data() + r * 2 * H + H, H, db.data() + r * H);
  }
  Tensor<T> dx = fwd.backward(da);
  const Tensor<T> dx2 = bwd.backward(db);
  for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += dx2[k];
  return dx;
}

template <typename T>
void BiLstm<T>::collect(ParameterList<T>& out) {
  fwd.collect(out);
  bwd.collect(out);
}

// BiLstmStack

template <typename T>
BiLstmStack<T>::BiLstmStack(std::string name, std::size_t input_size, std::size_t hidden, std::size_t n_layers) {
  for (std::size_t l = 0; l < n_layers; ++l) {
    layers.emplace_back(name + ".l" + std::to_string(l), l == 0 ? input_size : 2 * hidden, hidden);
  }
}

template <typename T>
void BiLstmStack<T>::init(Rng& rng) {
  for (auto& l : layers) l.init(rng);
}

template <typename T>
Tensor<T> BiLstmStack<T>::forward(const Tensor<T>& seq, bool train) {
  Tensor<T> x = seq;
  for (auto& l : layers) x = l.forward(x, train);
  return x;
}

template <typename T>
Tensor<T> BiLstmStack<T>::backward(const Tensor<T>& dy) {
  Tensor<T> g = dy;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) g = it->backward(g);
  return g;
}

template <typename T>
void BiLstmStack<T>::collect(ParameterList<T>& out) {
  for (auto& l : layers) l.collect(out);
}

template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class Linear<float>;
template class Linear<double>;
template class Lstm<float>;
template class Lstm<double>;
template class BiLstm<float>;
template class BiLstm<double>;
template class BiLstmStack<float>;
template class BiLstmStack<double>;

}  // namespace deepstf::nn
