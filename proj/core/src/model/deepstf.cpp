// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/model/deepstf.hpp"

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"
#include "deepstf/nn/checkpoint.hpp"

namespace deepstf {

using nn::Shape;
using nn::Tensor;

namespace {

constexpr const char* kModelKind = "deepstf-model";

// BatchNorm output recomputed from the cached normalized activations, so the
// Leaky-Relu mask needs no extra storage.
template <typename T>
void apply_leaky_mask(Tensor<T>& dz, const nn::BatchNorm<T>& bn, double slope) {
  const Tensor<T>& xh = bn.xhat();
  const std::size_t N = xh.dim(0), C = xh.dim(1), S = xh.size() / (N * C);
  const T s = static_cast<T>(slope);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const T g = bn.gamma.value[c], b = bn.beta.value[c];
      const std::size_t off = (n * C + c) * S;
      const T* x = xh.data() + off;
      T* d = dz.data() + off;
      for (std::size_t k = 0; k < S; ++k) d[k] *= (g * x[k] + b < T(0)) ? s : T(1);
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (window_len == 0 || channels == 0 || spatial_filters == 0) throw ConfigError("model: zero-sized input");
  if (temporal_filters.size() != 4) throw ConfigError("model: temporal block needs exactly 4 conv layers");
  if (kernel_h == 0 || pool < 2) throw ConfigError("model: invalid kernel or pool size");
  if (lstm_hidden == 0 || lstm_layers == 0 || branch_features == 0 || classes < 2) {
    throw ConfigError("model: invalid recurrent or dense sizes");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("model: leaky slope must be in (0, 1)");
  (void)sequence_length();
}

std::size_t ModelConfig::sequence_length() const {
  std::size_t h = window_len;
  for (std::size_t k = 0; k < 4; ++k) {
    if (h < kernel_h) throw ConfigError("model: window too short for the temporal block");
    h = h - kernel_h + 1;
    if (k < 3) {
      if (h < pool) throw ConfigError("model: window too short for the temporal block");
      h /= pool;
    }
  }
  return h;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"window_len", c.window_len},     {"channels", c.channels},
                     {"spatial_filters", c.spatial_filters}, {"temporal_filters", c.temporal_filters},
                     {"kernel_h", c.kernel_h},         {"pool", c.pool},
                     {"lstm_hidden", c.lstm_hidden},   {"lstm_layers", c.lstm_layers},
                     {"branch_features", c.branch_features}, {"classes", c.classes},
                     {"leaky_slope", c.leaky_slope},   {"bn_eps", c.bn_eps},
                     {"bn_momentum", c.bn_momentum},   {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  const ModelConfig d;
  c.window_len = j.value("window_len", d.window_len);
  c.channels = j.value("channels", d.channels);
  c.spatial_filters = j.value("spatial_filters", d.spatial_filters);
  c.temporal_filters = j.value("temporal_filters", d.temporal_filters);
  c.kernel_h = j.value("kernel_h", d.kernel_h);
  c.pool = j.value("pool", d.pool);
  c.lstm_hidden = j.value("lstm_hidden", d.lstm_hidden);
  c.lstm_layers = j.value("lstm_layers", d.lstm_layers);
  c.branch_features = j.value("branch_features", d.branch_features);
  c.classes = j.value("classes", d.classes);
  c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
  c.bn_eps = j.value("bn_eps", d.bn_eps);
  c.bn_momentum = j.value("bn_momentum", d.bn_momentum);
  c.init_seed = j.value("init_seed", d.init_seed);
}

// ConvStage

template <typename T>
ConvStage<T>::ConvStage(std::string name, std::size_t in_channels, std::size_t out_channels, const ModelConfig& cfg,
                        bool pool)
    : conv(name + ".conv", in_channels, out_channels, cfg.kernel_h, 1),
      bn(name + ".bn", out_channels, cfg.bn_eps, cfg.bn_momentum),
      pool_(pool),
      pool_size_(cfg.pool),
      slope_(cfg.leaky_slope) {}

template <typename T>
Tensor<T> ConvStage<T>::forward(const Tensor<T>& x, bool train, nn::ShapeTrace* trace, const std::string& module) {
  Tensor<T> y = conv.forward(x, train);
  if (trace) trace->add(module, "Conv", y.shape());
  Tensor<T> z = bn.forward(y, train);
  y = {};
  if (trace) trace->add(module, "BatchNorm", z.shape());
  nn::leaky_relu_inplace(z, slope_);
  if (trace) trace->add(module, "Leaky-Relu", z.shape());
  if (!pool_) return z;
  pre_pool_shape_ = z.shape();
  Tensor<T> p = nn::maxpool_h(z, pool_size_, argmax_);
  if (!train) argmax_ = {};
  if (trace) trace->add(module, "Max Pooling", p.shape());
  return p;
}

template <typename T>
Tensor<T> ConvStage<T>::backward(const Tensor<T>& dy, bool need_dx) {
  Tensor<T> dz = pool_ ? nn::maxpool_h_backward(dy, argmax_, pre_pool_shape_, pool_size_) : dy;
  argmax_ = {};
  apply_leaky_mask(dz, bn, slope_);
  const Tensor<T> dbn = bn.backward(dz);
  return conv.backward(dbn, need_dx);
}

template <typename T>
void ConvStage<T>::collect(nn::ParameterList<T>& out) {
  conv.collect(out);
  bn.collect(out);
}

// SpatialBlock

template <typename T>
SpatialBlock<T>::SpatialBlock(std::string name, const ModelConfig& cfg)
    : conv(name + ".conv", 1, cfg.spatial_filters, 1, cfg.channels),
      bn(name + ".bn", 1, cfg.bn_eps, cfg.bn_momentum),
      slope_(cfg.leaky_slope) {}

template <typename T>
Tensor<T> SpatialBlock<T>::forward(const Tensor<T>& x, bool train, nn::ShapeTrace* trace) {
  const std::string module = "Spatial block";
  Tensor<T> y = conv.forward(x, train);
  if (trace) trace->add(module, "Conv", y.shape());
  Tensor<T> p = nn::permute_channels_width(y);
  y = {};
  if (trace) trace->add(module, "Permute", p.shape());
  Tensor<T> z = bn.forward(p, train);
  if (trace) trace->add(module, "BatchNorm", z.shape());
  nn::leaky_relu_inplace(z, slope_);
  if (trace) trace->add(module, "Leaky-Relu", z.shape());
  return z;
}

template <typename T>
Tensor<T> SpatialBlock<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dz = dy;
  apply_leaky_mask(dz, bn, slope_);
  const Tensor<T> dp = bn.backward(dz);
  conv.backward(nn::permute_channels_width(dp), false);
  return {};
}

template <typename T>
void SpatialBlock<T>::collect(nn::ParameterList<T>& out) {
  conv.collect(out);
  bn.collect(out);
}

// TemporalBlock

template <typename T>
TemporalBlock<T>::TemporalBlock(std::string name, const ModelConfig& cfg) {
  std::size_t in = 1;
  for (std::size_t k = 0; k < 4; ++k) {
    stages.emplace_back(name + ".s" + std::to_string(k), in, cfg.temporal_filters[k], cfg, k < 3);
    in = cfg.temporal_filters[k];
  }
}

template <typename T>
void TemporalBlock<T>::init(nn::Rng& rng) {
  for (auto& s : stages) s.init(rng);
}

template <typename T>
Tensor<T> TemporalBlock<T>::forward(const Tensor<T>& x, bool train, nn::ShapeTrace* trace) {
  const std::string module = "Temporal/Frequency block";
  Tensor<T> h = stages[0].forward(x, train, trace, module);
  for (std::size_t k = 1; k < stages.size(); ++k) h = stages[k].forward(h, train, trace, module);
  return h;
}

template <typename T>
Tensor<T> TemporalBlock<T>::backward(const Tensor<T>& dy, bool need_dx) {
  Tensor<T> g = dy;
  for (std::size_t k = stages.size(); k-- > 0;) g = stages[k].backward(g, k > 0 || need_dx);
  return g;
}

template <typename T>
void TemporalBlock<T>::collect(nn::ParameterList<T>& out) {
  for (auto& s : stages) s.collect(out);
}

// Branch

template <typename T>
Branch<T>::Branch(std::string n, const ModelConfig& cfg, BranchInput in, bool spatial_)
    : name(n),
      input(in),
      has_spatial(spatial_),
      temporal(n + ".temporal", cfg),
      slope_(cfg.leaky_slope) {
  const std::size_t width = has_spatial ? cfg.spatial_filters : cfg.channels;
  if (has_spatial) spatial = SpatialBlock<T>(n + ".spatial", cfg);
  lstm = nn::BiLstmStack<T>(n + ".bilstm", cfg.temporal_filters.back() * width, cfg.lstm_hidden, cfg.lstm_layers);
  fc = nn::Linear<T>(n + ".fc", cfg.sequence_length() * 2 * cfg.lstm_hidden, cfg.branch_features);
}

template <typename T>
void Branch<T>::init(nn::Rng& rng) {
  if (has_spatial) spatial.init(rng);
  temporal.init(rng);
  lstm.init(rng);
  fc.init(rng);
}

template <typename T>
Tensor<T> Branch<T>::forward(const Tensor<T>& x, bool train, nn::ShapeTrace* trace) {
  Tensor<T> c = has_spatial ? temporal.forward(spatial.forward(x, train, trace), train, trace)
                            : temporal.forward(x, train, trace);
  cnn_shape_ = c.shape();
  const std::size_t N = c.dim(0), C = c.dim(1), S = c.dim(2), W = c.dim(3), F = C * W;
  // Height is the time axis; channel-major features: f = c * W + w.
  Tensor<T> seq({S, N, F});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t ch = 0; ch < C; ++ch) {
      for (std::size_t t = 0; t < S; ++t) {
        const T* src = c.data() + ((n * C + ch) * S + t) * W;
        std::copy_n(src, W, seq.data() + (t * N + n) * F + ch * W);
      }
    }
  }
  c = {};
  const Tensor<T> l = lstm.forward(seq, train);
  const std::size_t D = l.dim(2);
  if (trace) trace->add_shape("Bi-Lstm", "layers " + std::to_string(lstm.layers.size()), {S, D});
  Tensor<T> flat({N, S * D});
  for (std::size_t t = 0; t < S; ++t) {
    for (std::size_t n = 0; n < N; ++n) std::copy_n(l.data() + (t * N + n) * D, D, flat.data() + n * S * D + t * D);
  }
  if (trace) trace->add_shape("Flatten", "-", {1, S * D});
  Tensor<T> f = fc.forward(flat, train);
  if (trace) trace->add_shape("Fully-connected 1", std::to_string(S * D) + ", " + std::to_string(f.dim(1)),
                              {1, f.dim(1)});
  nn::leaky_relu_inplace(f, slope_);
  if (trace) trace->add_shape("Leaky-Relu", "0.01", {1, f.dim(1)});
  if (train) fc_out_ = f;
  return f;
}

template <typename T>
void Branch<T>::backward(const Tensor<T>& dy) {
  const Tensor<T> d = nn::leaky_relu_backward(fc_out_, dy, slope_);
  fc_out_ = {};
  const Tensor<T> dflat = fc.backward(d);
  const std::size_t N = cnn_shape_[0], C = cnn_shape_[1], S = cnn_shape_[2], W = cnn_shape_[3], F = C * W;
  const std::size_t D = dflat.dim(1) / S;
  Tensor<T> dl({S, N, D});
  for (std::size_t t = 0; t < S; ++t) {
    for (std::size_t n = 0; n < N; ++n) std::copy_n(dflat.data() + n * S * D + t * D, D, dl.data() + (t * N + n) * D);
  }
  const Tensor<T> dseq = lstm.backward(dl);
  Tensor<T> dc(cnn_shape_);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t ch = 0; ch < C; ++ch) {
      for (std::size_t t = 0; t < S; ++t) {
        std::copy_n(dseq.data() + (t * N + n) * F + ch * W, W, dc.data() + ((n * C + ch) * S + t) * W);
      }
    }
  }
  const Tensor<T> dh = temporal.backward(dc, has_spatial);
  if (has_spatial) spatial.backward(dh);
}

template <typename T>
void Branch<T>::collect(nn::ParameterList<T>& out) {
  if (has_spatial) spatial.collect(out);
  temporal.collect(out);
  lstm.collect(out);
  fc.collect(out);
}

// DeepStfModel

template <typename T>
DeepStfModel<T>::DeepStfModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  branches = {Branch<T>("spatial_temporal", cfg_, BranchInput::Time, true),
              Branch<T>("temporal", cfg_, BranchInput::Time, false),
              Branch<T>("spatial_frequency", cfg_, BranchInput::Freq, true),
              Branch<T>("frequency", cfg_, BranchInput::Freq, false)};
  head = nn::Linear<T>("head.fc", 4 * cfg_.branch_features, cfg_.classes);
  init();
}

template <typename T>
void DeepStfModel<T>::init() {
  nn::Rng rng(cfg_.init_seed);
  for (auto& b : branches) b.init(rng);
  head.init(rng);
}

template <typename T>
Tensor<T> DeepStfModel<T>::forward(const Tensor<T>& time, const Tensor<T>& freq, bool train, nn::ShapeTrace* trace) {
  if (time.rank() != 4 || time.dim(1) != 1 || time.dim(2) != cfg_.window_len || time.dim(3) != cfg_.channels) {
    throw ShapeError("Input: expected N x 1x" + std::to_string(cfg_.window_len) + "x" + std::to_string(cfg_.channels) +
                     ", got " + nn::shape_string(time.shape()));
  }
  nn::require_shape(freq.shape(), time.shape(), "Input (frequency)");
  if (trace) trace->add("Input", "-", time.shape());
  const std::size_t N = time.dim(0), F = cfg_.branch_features;
  Tensor<T> cat({N, 4 * F});
  for (std::size_t b = 0; b < 4; ++b) {
    branch_out_[b] = branches[b].forward(branches[b].input == BranchInput::Time ? time : freq, train, trace);
    for (std::size_t n = 0; n < N; ++n) {
      std::copy_n(branch_out_[b].data() + n * F, F, cat.data() + n * 4 * F + b * F);
    }
  }
  if (trace) trace->add("Fully connected layer", "Concatenation", cat.shape());
  const Tensor<T> logits = head.forward(cat, train);
  if (trace) trace->add("Fully connected layer", "Fully-connected 2", logits.shape());
  Tensor<T> probs = nn::softmax(logits);
  if (trace) trace->add("Fully connected layer", "SoftMax", probs.shape());
  if (train) probs_ = probs;
  return probs;
}

template <typename T>
void DeepStfModel<T>::backward(const Tensor<T>& dprobs) {
  const Tensor<T> dlogits = nn::softmax_backward(probs_, dprobs);
  probs_ = {};
  const Tensor<T> dcat = head.backward(dlogits);
  const std::size_t N = dcat.dim(0), F = cfg_.branch_features;
  for (std::size_t b = 0; b < 4; ++b) {
    Tensor<T> d({N, F});
    for (std::size_t n = 0; n < N; ++n) std::copy_n(dcat.data() + n * 4 * F + b * F, F, d.data() + n * F);
    branches[b].backward(d);
  }
}

template <typename T>
nn::ParameterList<T> DeepStfModel<T>::parameters() {
  nn::ParameterList<T> out;
  for (auto& b : branches) b.collect(out);
  head.collect(out);
  return out;
}

template <typename T>
nlohmann::json DeepStfModel<T>::architecture() const {
  auto& self = const_cast<DeepStfModel<T>&>(*this);
  nlohmann::json params = nlohmann::json::array();
  const auto list = self.parameters();
  for (const auto* p : list.params) params.push_back({{"name", p->name}, {"shape", p->value.shape()}});
  for (const auto* b : list.buffers) params.push_back({{"name", b->name}, {"shape", b->value.shape()}, {"buffer", true}});
  nlohmann::json br = nlohmann::json::array();
  for (const auto& b : branches) {
    br.push_back({{"name", b.name},
                  {"input", b.input == BranchInput::Time ? "time" : "freq"},
                  {"spatial", b.has_spatial},
                  {"lstm_layers", b.lstm.layers.size()}});
  }
  return {{"config", cfg_}, {"branches", br}, {"parameters", params}};
}

template class ConvStage<float>;
template class ConvStage<double>;
template class SpatialBlock<float>;
template class SpatialBlock<double>;
template class TemporalBlock<float>;
template class TemporalBlock<double>;
template class Branch<float>;
template class Branch<double>;
template class DeepStfModel<float>;
template class DeepStfModel<double>;

Container model_to_container(DeepStfModel<float>& model, bool with_moments, const nlohmann::json& extra) {
  Container c(kModelKind);
  nlohmann::json meta = {{"architecture", model.architecture()},
                         {"init", "uniform(+-1/sqrt(fan_in)) conv/linear; uniform(+-1/sqrt(H)) lstm, forget bias 1"},
                         {"extra", extra}};
  c.set_metadata(meta.dump());
  nn::add_parameters(c, model.parameters(), with_moments);
  return c;
}

DeepStfModel<float> model_from_container(const Container& c) {
  if (c.kind() != kModelKind) throw DataError("not a model checkpoint: kind '" + c.kind() + "'");
  const auto meta = nlohmann::json::parse(c.metadata());
  const auto& arch = meta.at("architecture");
  DeepStfModel<float> model(arch.at("config").get<ModelConfig>());
  if (model.architecture() != arch) throw DataError("checkpoint architecture does not match the model topology");
  nn::load_parameters(c, model.parameters());
  return model;
}

WeightSnapshot snapshot(const nn::ParameterList<float>& list) {
  WeightSnapshot s;
  for (const auto* p : list.params) s.values.push_back(p->value);
  for (const auto* b : list.buffers) s.values.push_back(b->value);
  return s;
}

void restore(const WeightSnapshot& snap, const nn::ParameterList<float>& list) {
  if (snap.values.size() != list.params.size() + list.buffers.size()) throw ShapeError("snapshot size mismatch");
  std::size_t k = 0;
  for (auto* p : list.params) p->value = snap.values[k++];
  for (auto* b : list.buffers) b->value = snap.values[k++];
}

}  // namespace deepstf
