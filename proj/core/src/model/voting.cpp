// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/model/voting.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"
#include "deepstf/nn/checkpoint.hpp"

namespace deepstf {

using nn::Tensor;

namespace {

constexpr const char* kHeadKind = "voting-head";

std::vector<float> pad_vector(std::size_t classes, PadMode pad) {
  std::vector<float> v(classes, 0.0f);
  if (pad == PadMode::Standing) v[0] = 1.0f;
  return v;
}

}  // namespace

std::string pad_mode_name(PadMode mode) { return mode == PadMode::Zero ? "zero" : "standing"; }

PadMode pad_mode_from_name(const std::string& name) {
  if (name == "zero") return PadMode::Zero;
  if (name == "standing") return PadMode::Standing;
  throw ConfigError("unknown pad mode '" + name + "' (expected zero or standing)");
}

template <typename T>
VotingHead<T>::VotingHead(std::size_t classes, std::uint64_t init_seed)
    : fc("vote.fc", kVoteDepth * classes, classes), classes_(classes) {
  nn::Rng rng(init_seed);
  fc.init(rng);
}

template <typename T>
Tensor<T> VotingHead<T>::forward(const Tensor<T>& history, bool train, nn::ShapeTrace* trace) {
  if (history.rank() != 2 || history.dim(1) != kVoteDepth * classes_) {
    throw ShapeError("vote: expected N x " + std::to_string(kVoteDepth * classes_) + " history, got " +
                     nn::shape_string(history.shape()));
  }
  if (trace) {
    trace->add_shape("Adaptive voting", "Concatenation", {kVoteDepth, classes_});
    trace->add("Adaptive voting", "Flatten", {history.dim(0), 1, history.dim(1)});
  }
  const Tensor<T> logits = fc.forward(history, train);
  if (trace) trace->add("Adaptive voting", "Fully-connected 3", {logits.dim(0), 1, logits.dim(1)});
  Tensor<T> probs = nn::softmax(logits);
  if (trace) trace->add("Adaptive voting", "SoftMax", {probs.dim(0), 1, probs.dim(1)});
  if (train) probs_ = probs;
  return probs;
}

template <typename T>
void VotingHead<T>::backward(const Tensor<T>& dprobs) {
  fc.backward(nn::softmax_backward(probs_, dprobs), false);
  probs_ = {};
}

template <typename T>
nn::ParameterList<T> VotingHead<T>::parameters() {
  nn::ParameterList<T> out;
  fc.collect(out);
  return out;
}

template class VotingHead<float>;
template class VotingHead<double>;

VoteBuffer::VoteBuffer(std::size_t classes, PadMode pad) : classes_(classes) {
  for (std::size_t k = 0; k < kVoteDepth; ++k) slots_.push_back(pad_vector(classes, pad));
}

void VoteBuffer::push(std::span<const float> probs) {
  if (probs.size() != classes_) throw ShapeError("vote buffer: wrong probability vector length");
  slots_.pop_front();
  slots_.emplace_back(probs.begin(), probs.end());
  ++real_;
}

std::vector<float> VoteBuffer::history() const {
  std::vector<float> out;
  out.reserve(kVoteDepth * classes_);
  for (const auto& s : slots_) out.insert(out.end(), s.begin(), s.end());
  return out;
}

Tensor<float> build_histories(const Tensor<float>& raw, PadMode pad) {
  if (raw.rank() != 2) throw ShapeError("build_histories expects n x classes");
  const std::size_t n = raw.dim(0), K = raw.dim(1);
  const auto padv = pad_vector(K, pad);
  Tensor<float> out({n, kVoteDepth * K});
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s = 0; s < kVoteDepth; ++s) {
      // slot s holds step k - (4 - s)
      const auto step = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(kVoteDepth - 1 - s);
      const float* src = step < 0 ? padv.data() : raw.data() + static_cast<std::size_t>(step) * K;
      std::copy_n(src, K, out.data() + k * kVoteDepth * K + s * K);
    }
  }
  return out;
}

int argmax(std::span<const float> probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::vector<StreamStep> vote_stream(VotingHead<float>& head, const Tensor<float>& raw,
                                    const std::vector<std::int64_t>& window_ends, PadMode pad) {
  const std::size_t n = raw.dim(0), K = raw.dim(1);
  if (window_ends.size() != n) throw ShapeError("vote_stream: window_ends length differs from predictions");
  for (std::size_t k = 1; k < n; ++k) {
    if (window_ends[k] <= window_ends[k - 1]) throw DataError("vote_stream: windows not in trial order");
  }
  VoteBuffer buffer(K, pad);
  std::vector<StreamStep> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::span<const float> row(raw.data() + k * K, K);
    buffer.push(row);
    const Tensor<float> probs = head.forward(Tensor<float>({1, kVoteDepth * K}, buffer.history()), false);
    StreamStep s;
    s.window_end = window_ends[k];
    s.raw_class = argmax(row);
    s.voted_probs = probs.storage();
    s.voted_class = argmax(s.voted_probs);
    out.push_back(std::move(s));
  }
  return out;
}

Tensor<float> predict_raw(DeepStfModel<float>& model, const std::vector<LabeledWindow>& windows, std::size_t batch) {
  const auto& cfg = model.config();
  const std::size_t per = cfg.window_len * cfg.channels, K = cfg.classes;
  Tensor<float> out({windows.size(), K});
  for (std::size_t start = 0; start < windows.size(); start += batch) {
    const std::size_t nb = std::min(batch, windows.size() - start);
    Tensor<float> time({nb, 1, cfg.window_len, cfg.channels}), freq({nb, 1, cfg.window_len, cfg.channels});
    for (std::size_t i = 0; i < nb; ++i) {
      const auto& w = windows[start + i];
      if (w.time_data.size() != per || w.freq_data.size() != per) throw ShapeError("window size does not match model");
      std::copy(w.time_data.begin(), w.time_data.end(), time.data() + i * per);
      std::copy(w.freq_data.begin(), w.freq_data.end(), freq.data() + i * per);
    }
    const Tensor<float> p = model.forward(time, freq, false);
    std::copy(p.values().begin(), p.values().end(), out.data() + start * K);
  }
  return out;
}

std::vector<StreamStep> predict_stream(DeepStfModel<float>& model, VotingHead<float>& head,
                                       const std::vector<LabeledWindow>& windows, PadMode pad) {
  std::vector<std::int64_t> ends;
  ends.reserve(windows.size());
  for (const auto& w : windows) ends.push_back(w.window_end);
  for (std::size_t k = 1; k < ends.size(); ++k) {
    if (ends[k] <= ends[k - 1]) throw DataError("predict_stream: windows not in trial order");
  }
  return vote_stream(head, predict_raw(model, windows), ends, pad);
}

Container head_to_container(VotingHead<float>& head, bool with_moments, const nlohmann::json& extra) {
  Container c(kHeadKind);
  c.set_metadata(nlohmann::json{{"classes", head.classes()}, {"depth", kVoteDepth}, {"extra", extra}}.dump());
  nn::add_parameters(c, head.parameters(), with_moments);
  return c;
}

VotingHead<float> head_from_container(const Container& c) {
  if (c.kind() != kHeadKind) throw DataError("not a voting-head checkpoint: kind '" + c.kind() + "'");
  const auto meta = nlohmann::json::parse(c.metadata());
  if (meta.at("depth").get<std::size_t>() != kVoteDepth) throw DataError("voting-head depth mismatch");
  VotingHead<float> head(meta.at("classes").get<std::size_t>());
  nn::load_parameters(c, head.parameters());
  return head;
}

}  // namespace deepstf
