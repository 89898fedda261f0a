// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "eigen_maps.hpp"

namespace deepstf::nn {

using namespace detail;

namespace {

struct ConvDims {
  std::size_t n, ci, h, w, co, kh, kw, ho, wo;
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& x, const Tensor<T>& kernel) {
  if (x.rank() != 4 || kernel.rank() != 4) throw ShapeError("conv2d expects rank-4 input and kernel");
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), kernel.dim(0), kernel.dim(2), kernel.dim(3), 0, 0};
  if (kernel.dim(1) != d.ci) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) + " input channels, input has " +
                     std::to_string(d.ci));
  }
  if (d.kh > d.h || d.kw > d.w) {
    throw ShapeError("conv2d: kernel " + std::to_string(d.kh) + "x" + std::to_string(d.kw) +
                     " larger than input " + std::to_string(d.h) + "x" + std::to_string(d.w));
  }
  d.ho = d.h - d.kh + 1;
  d.wo = d.w - d.kw + 1;
  return d;
}

// cols[(ci, a, b), (h, w)] = x[ci, h + a, w + b]
template <typename T>
void im2col(const T* x, const ConvDims& d, T* cols) {
  const std::size_t hw = d.ho * d.wo;
  for (std::size_t c = 0; c < d.ci; ++c) {
    for (std::size_t a = 0; a < d.kh; ++a) {
      for (std::size_t b = 0; b < d.kw; ++b) {
        T* row = cols + ((c * d.kh + a) * d.kw + b) * hw;
        const T* src = x + c * d.h * d.w + a * d.w + b;
        if (d.wo == d.w) {
          std::copy_n(src, hw, row);
          continue;
        }
        for (std::size_t i = 0; i < d.ho; ++i) std::copy_n(src + i * d.w, d.wo, row + i * d.wo);
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvDims& d, T* dx) {
  const std::size_t hw = d.ho * d.wo;
  for (std::size_t c = 0; c < d.ci; ++c) {
    for (std::size_t a = 0; a < d.kh; ++a) {
      for (std::size_t b = 0; b < d.kw; ++b) {
        const T* row = cols + ((c * d.kh + a) * d.kw + b) * hw;
        T* dst = dx + c * d.h * d.w + a * d.w + b;
        if (d.wo == d.w) {
          for (std::size_t i = 0; i < hw; ++i) dst[i] += row[i];
          continue;
        }
        for (std::size_t i = 0; i < d.ho; ++i) {
          for (std::size_t j = 0; j < d.wo; ++j) dst[i * d.w + j] += row[i * d.wo + j];
        }
      }
    }
  }
}

inline Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

std::size_t trailing(const Shape& s) {
  std::size_t t = 1;
  for (std::size_t i = 2; i < s.size(); ++i) t *= s[i];
  return t;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  const ConvDims d = conv_dims(x, kernel);
  require_shape(bias.shape(), {d.co}, "conv2d bias");
  const std::size_t k = d.ci * d.kh * d.kw, hw = d.ho * d.wo;
  Tensor<T> y({d.n, d.co, d.ho, d.wo});
  AlignedVector<T> cols(k * hw);
  CMapR<T> K(kernel.data(), static_cast<Eigen::Index>(d.co), static_cast<Eigen::Index>(k));
  CMapRow<T> B(bias.data(), static_cast<Eigen::Index>(d.co));
  for (std::size_t n = 0; n < d.n; ++n) {
    im2col(x.data() + n * d.ci * d.h * d.w, d, cols.data());
    MapR<T> Y(y.data() + n * d.co * hw, static_cast<Eigen::Index>(d.co), static_cast<Eigen::Index>(hw));
    CMapR<T> C(cols.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
    Y.noalias() = K * C;
    Y.colwise() += B.transpose();
  }
  return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>& dkernel, Tensor<T>& dbias) {
  const ConvDims d = conv_dims(x, kernel);
  require_shape(dy.shape(), {d.n, d.co, d.ho, d.wo}, "conv2d output gradient");
  const std::size_t k = d.ci * d.kh * d.kw, hw = d.ho * d.wo;
  AlignedVector<T> cols(k * hw), dcols;
  CMapR<T> K(kernel.data(), static_cast<Eigen::Index>(d.co), static_cast<Eigen::Index>(k));
  MapR<T> dK(dkernel.data(), static_cast<Eigen::Index>(d.co), static_cast<Eigen::Index>(k));
  MapRow<T> dB(dbias.data(), static_cast<Eigen::Index>(d.co));
  if (dx) {
    dx->resize(x.shape());
    dx->fill(T(0));
    dcols.resize(k * hw);
  }
  for (std::size_t n = 0; n < d.n; ++n) {
    im2col(x.data() + n * d.ci * d.h * d.w, d, cols.data());
    CMapR<T> dY(dy.data() + n * d.co * hw, static_cast<Eigen::Index>(d.co), static_cast<Eigen::Index>(hw));
    CMapR<T> C(cols.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
    dK.noalias() += dY * C.transpose();
    dB += dY.rowwise().sum().transpose();
    if (dx) {
      MapR<T> dC(dcols.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
      dC.noalias() = K.transpose() * dY;
      col2im_add(dcols.data(), d, dx->data() + n * d.ci * d.h * d.w);
    }
  }
}

template <typename T>
Tensor<T> permute_channels_width(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("permute expects a rank-4 tensor, got " + shape_string(x.shape()));
  const std::size_t N = x.dim(0), A = x.dim(1), H = x.dim(2), B = x.dim(3);
  Tensor<T> y({N, B, H, A});
  for (std::size_t n = 0; n < N; ++n) {
    const T* src = x.data() + n * A * H * B;
    T* dst = y.data() + n * A * H * B;
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t b = 0; b < B; ++b) dst[(b * H + h) * A + a] = src[(a * H + h) * B + b];
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T>& running_mean,
                          Tensor<T>& running_var, double eps, double momentum, BatchNormCache<T>& cache) {
  if (x.rank() < 2) throw ShapeError("batchnorm expects at least rank 2");
  const std::size_t N = x.dim(0), C = x.dim(1), S = trailing(x.shape());
  if (N < 2) throw ShapeError("batchnorm: batch size 1 in train mode");
  require_shape(gamma.shape(), {C}, "batchnorm scale");
  require_shape(beta.shape(), {C}, "batchnorm shift");
  const double M = static_cast<double>(N * S);
  cache.xhat.resize(x.shape());
  cache.inv_std.assign(C, T(0));
  Tensor<T> y(x.shape());
  for (std::size_t c = 0; c < C; ++c) {
    // Slab partial sums in T, accumulated across the batch in double.
    double sum = 0.0;
    for (std::size_t n = 0; n < N; ++n) sum += CMapRow<T>(x.data() + (n * C + c) * S, ix(S)).sum();
    const double mean = sum / M;
    const T mean_t = static_cast<T>(mean);
    double sq = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      sq += (CMapRow<T>(x.data() + (n * C + c) * S, ix(S)).array() - mean_t).square().sum();
    }
    const double var = sq / M;
    const double inv = 1.0 / std::sqrt(var + eps);
    const T inv_t = static_cast<T>(inv);
    cache.inv_std[c] = inv_t;
    const T g = gamma[c], b = beta[c];
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t off = (n * C + c) * S;
      auto xh = MapRow<T>(cache.xhat.data() + off, ix(S)).array();
      xh = (CMapRow<T>(x.data() + off, ix(S)).array() - mean_t) * inv_t;
      MapRow<T>(y.data() + off, ix(S)).array() = g * xh + b;
    }
    running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * mean);
    running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] + momentum * var * M / (M - 1.0));
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                         const Tensor<T>& running_mean, const Tensor<T>& running_var, double eps) {
  if (x.rank() < 2) throw ShapeError("batchnorm expects at least rank 2");
  const std::size_t N = x.dim(0), C = x.dim(1), S = trailing(x.shape());
  require_shape(gamma.shape(), {C}, "batchnorm scale");
  Tensor<T> y(x.shape());
  for (std::size_t c = 0; c < C; ++c) {
    const T scale = static_cast<T>(gamma[c] / std::sqrt(static_cast<double>(running_var[c]) + eps));
    const T shift = beta[c] - scale * running_mean[c];
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t off = (n * C + c) * S;
      MapRow<T>(y.data() + off, ix(S)).array() = scale * CMapRow<T>(x.data() + off, ix(S)).array() + shift;
    }
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                             Tensor<T>& dgamma, Tensor<T>& dbeta) {
  require_shape(dy.shape(), cache.xhat.shape(), "batchnorm output gradient");
  const std::size_t N = dy.dim(0), C = dy.dim(1), S = trailing(dy.shape());
  const double M = static_cast<double>(N * S);
  Tensor<T> dx(dy.shape());
  for (std::size_t c = 0; c < C; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t off = (n * C + c) * S;
      const auto g = CMapRow<T>(dy.data() + off, ix(S)).array();
      sum_dy += g.sum();
      sum_dy_xh += (g * CMapRow<T>(cache.xhat.data() + off, ix(S)).array()).sum();
    }
    dgamma[c] += static_cast<T>(sum_dy_xh);
    dbeta[c] += static_cast<T>(sum_dy);
    const double k = static_cast<double>(gamma[c]) * cache.inv_std[c] / M;
    const T a = static_cast<T>(k * M), b = static_cast<T>(k * sum_dy), d = static_cast<T>(k * sum_dy_xh);
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t off = (n * C + c) * S;
      MapRow<T>(dx.data() + off, ix(S)).array() = a * CMapRow<T>(dy.data() + off, ix(S)).array() - b -
                                                  d * CMapRow<T>(cache.xhat.data() + off, ix(S)).array();
    }
  }
  return dx;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope) {
  Tensor<T> y = x;
  leaky_relu_inplace(y, slope);
  return y;
}

template <typename T>
void leaky_relu_inplace(Tensor<T>& x, double slope) {
  const T s = static_cast<T>(slope);
  T* p = x.data();
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) p[i] = std::max(p[i], T(0)) + s * std::min(p[i], T(0));
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& y, const Tensor<T>& dy, double slope) {
  require_shape(dy.shape(), y.shape(), "leaky_relu gradient");
  const T s = static_cast<T>(slope);
  Tensor<T> dx(y.shape());
  const T* yp = y.data();
  const T* g = dy.data();
  T* o = dx.data();
  for (std::size_t i = 0; i < y.size(); ++i) o[i] = yp[i] >= T(0) ? g[i] : s * g[i];
  return dx;
}

template <typename T>
Tensor<T> maxpool_h(const Tensor<T>& x, std::size_t pool, std::vector<std::uint8_t>& argmax) {
  if (x.rank() != 4) throw ShapeError("maxpool expects a rank-4 tensor");
  if (pool == 0 || pool > 255) throw ShapeError("maxpool: pool size must be in 1..255");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H < pool) throw ShapeError("maxpool: height " + std::to_string(H) + " below pool size");
  const std::size_t Ho = H / pool;
  Tensor<T> y({N, C, Ho, W});
  argmax.assign(y.size(), 0);
  for (std::size_t p = 0; p < N * C; ++p) {
    const T* src = x.data() + p * H * W;
    T* dst = y.data() + p * Ho * W;
    std::uint8_t* am = argmax.data() + p * Ho * W;
    for (std::size_t o = 0; o < Ho; ++o) {
      for (std::size_t w = 0; w < W; ++w) {
        T best = src[o * pool * W + w];
        std::uint8_t arg = 0;
        for (std::size_t a = 1; a < pool; ++a) {
          const T v = src[(o * pool + a) * W + w];
          if (v > best) {
            best = v;
            arg = static_cast<std::uint8_t>(a);
          }
        }
        dst[o * W + w] = best;
        am[o * W + w] = arg;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> maxpool_h_backward(const Tensor<T>& dy, const std::vector<std::uint8_t>& argmax, const Shape& input_shape,
                             std::size_t pool) {
  const std::size_t N = input_shape[0], C = input_shape[1], H = input_shape[2], W = input_shape[3];
  const std::size_t Ho = H / pool;
  require_shape(dy.shape(), {N, C, Ho, W}, "maxpool output gradient");
  Tensor<T> dx(input_shape);
  for (std::size_t p = 0; p < N * C; ++p) {
    const T* g = dy.data() + p * Ho * W;
    const std::uint8_t* am = argmax.data() + p * Ho * W;
    T* dst = dx.data() + p * H * W;
    for (std::size_t o = 0; o < Ho; ++o) {
      for (std::size_t w = 0; w < W; ++w) dst[(o * pool + am[o * W + w]) * W + w] += g[o * W + w];
    }
  }
  return dx;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.rank() != 2 || weight.rank() != 2) throw ShapeError("linear expects rank-2 input and weight");
  const std::size_t N = x.dim(0), in = weight.dim(0), out = weight.dim(1);
  if (x.dim(1) != in) {
    throw ShapeError("linear: input width " + std::to_string(x.dim(1)) + " != weight rows " + std::to_string(in));
  }
  require_shape(bias.shape(), {out}, "linear bias");
  Tensor<T> y({N, out});
  const auto n = static_cast<Eigen::Index>(N), i = static_cast<Eigen::Index>(in), o = static_cast<Eigen::Index>(out);
  MapR<T> Y(y.data(), n, o);
  Y.noalias() = CMapR<T>(x.data(), n, i) * CMapR<T>(weight.data(), i, o);
  Y.rowwise() += CMapRow<T>(bias.data(), o);
  return y;
}

template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>& dweight, Tensor<T>& dbias) {
  const std::size_t N = x.dim(0), in = weight.dim(0), out = weight.dim(1);
  require_shape(dy.shape(), {N, out}, "linear output gradient");
  const auto n = static_cast<Eigen::Index>(N), i = static_cast<Eigen::Index>(in), o = static_cast<Eigen::Index>(out);
  CMapR<T> X(x.data(), n, i), W(weight.data(), i, o), dY(dy.data(), n, o);
  MapR<T>(dweight.data(), i, o).noalias() += X.transpose() * dY;
  MapRow<T>(dbias.data(), o) += dY.colwise().sum();
  if (dx) {
    dx->resize({N, in});
    MapR<T>(dx->data(), n, i).noalias() = dY * W.transpose();
  }
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (x.rank() != 2) throw ShapeError("softmax expects a rank-2 tensor");
  const std::size_t N = x.dim(0), K = x.dim(1);
  Tensor<T> y(x.shape());
  for (std::size_t n = 0; n < N; ++n) {
    const T* r = x.data() + n * K;
    T* o = y.data() + n * K;
    const T m = *std::max_element(r, r + K);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      o[k] = static_cast<T>(std::exp(static_cast<double>(r[k] - m)));
      sum += o[k];
    }
    for (std::size_t k = 0; k < K; ++k) o[k] = static_cast<T>(o[k] / sum);
  }
  return y;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  require_shape(dy.shape(), y.shape(), "softmax gradient");
  const std::size_t N = y.dim(0), K = y.dim(1);
  Tensor<T> dx(y.shape());
  for (std::size_t n = 0; n < N; ++n) {
    double dot = 0.0;
    for (std::size_t k = 0; k < K; ++k) dot += static_cast<double>(y[n * K + k]) * dy[n * K + k];
    for (std::size_t k = 0; k < K; ++k) dx[n * K + k] = static_cast<T>(y[n * K + k] * (dy[n * K + k] - dot));
  }
  return dx;
}

template <typename T>
double bce_loss(const Tensor<T>& pred, const Tensor<T>& target, BceReduction reduction) {
  require_shape(target.shape(), pred.shape(), "bce target");
  if (pred.rank() != 2) throw ShapeError("bce expects N x K predictions");
  const double denom = reduction == BceReduction::AllEntries ? static_cast<double>(pred.size())
                                                             : static_cast<double>(pred.dim(0));
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(static_cast<double>(pred[i]), kBceClamp, 1.0 - kBceClamp);
    const double y = target[i];
    sum += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return -sum / denom;
}

template <typename T>
Tensor<T> bce_grad(const Tensor<T>& pred, const Tensor<T>& target, BceReduction reduction) {
  require_shape(target.shape(), pred.shape(), "bce target");
  const double denom = reduction == BceReduction::AllEntries ? static_cast<double>(pred.size())
                                                             : static_cast<double>(pred.dim(0));
  Tensor<T> g(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i];
    if (p < kBceClamp || p > 1.0 - kBceClamp) continue;
    const double y = target[i];
    g[i] = static_cast<T>((-y / p + (1.0 - y) / (1.0 - p)) / denom);
  }
  return g;
}

#define DEEPSTF_INSTANTIATE_OPS(T)                                                                                   \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                                   \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*, Tensor<T>&,        \
                                Tensor<T>&);                                                                         \
  template Tensor<T> permute_channels_width(const Tensor<T>&);                                                       \
  template Tensor<T> batchnorm_train(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&, Tensor<T>&,   \
                                     double, double, BatchNormCache<T>&);                                            \
  template Tensor<T> batchnorm_eval(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                    const Tensor<T>&, double);                                                       \
  template Tensor<T> batchnorm_backward(const Tensor<T>&, const BatchNormCache<T>&, const Tensor<T>&, Tensor<T>&,    \
                                        Tensor<T>&);                                                                 \
  template Tensor<T> leaky_relu(const Tensor<T>&, double);                                                           \
  template void leaky_relu_inplace(Tensor<T>&, double);                                                              \
  template Tensor<T> leaky_relu_backward(const Tensor<T>&, const Tensor<T>&, double);                                \
  template Tensor<T> maxpool_h(const Tensor<T>&, std::size_t, std::vector<std::uint8_t>&);                           \
  template Tensor<T> maxpool_h_backward(const Tensor<T>&, const std::vector<std::uint8_t>&, const Shape&,            \
                                        std::size_t);                                                                \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                                   \
  template void linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*, Tensor<T>&,        \
                                Tensor<T>&);                                                                         \
  template Tensor<T> softmax(const Tensor<T>&);                                                                      \
  template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&);                                           \
  template double bce_loss(const Tensor<T>&, const Tensor<T>&, BceReduction);                                        \
  template Tensor<T> bce_grad(const Tensor<T>&, const Tensor<T>&, BceReduction);

DEEPSTF_INSTANTIATE_OPS(float)
DEEPSTF_INSTANTIATE_OPS(double)

}  // namespace deepstf::nn
