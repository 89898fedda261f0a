// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deepstf/model/deepstf.hpp"
#include "deepstf/nn/layers.hpp"
#include "deepstf/segmentation/windows.hpp"

namespace deepstf {

inline constexpr std::size_t kVoteDepth = 5;

/// How history slots before the first window are filled.
enum class PadMode : std::uint8_t {
  Zero,      // all-zero probability vectors
  Standing,  // one-hot class 0 (ST)
};

std::string pad_mode_name(PadMode mode);
PadMode pad_mode_from_name(const std::string& name);

/// FC (depth * classes -> classes) + softmax over the flattened history.
template <typename T>
class VotingHead {
 public:
  explicit VotingHead(std::size_t classes = kModeCount, std::uint64_t init_seed = 1);

  /// history: N x (5 * classes), oldest step first.
  nn::Tensor<T> forward(const nn::Tensor<T>& history, bool train, nn::ShapeTrace* trace = nullptr);
  void backward(const nn::Tensor<T>& dprobs);
  nn::ParameterList<T> parameters();
  std::size_t classes() const { return classes_; }

  nn::Linear<T> fc;

 private:
  std::size_t classes_;
  nn::Tensor<T> probs_;
};

/// Rolling buffer of the last five probability vectors.
class VoteBuffer {
 public:
  VoteBuffer(std::size_t classes, PadMode pad);

  void push(std::span<const float> probs);
  /// Flattened contents, oldest first; padded until five vectors were pushed.
  std::vector<float> history() const;
  std::size_t real_steps() const { return real_; }

 private:
  std::size_t classes_;
  std::deque<std::vector<float>> slots_;
  std::size_t real_ = 0;
};

/// Offline construction: row k holds raw rows k-4..k, padded at the start.
/// raw: n x classes.
nn::Tensor<float> build_histories(const nn::Tensor<float>& raw, PadMode pad);

struct StreamStep {
  std::int64_t window_end = 0;
  int raw_class = 0;
  int voted_class = 0;
  std::vector<float> voted_probs;
};

int argmax(std::span<const float> probs);

/// Streams raw probabilities (n x classes, in window order) through the head.
/// Throws DataError unless window_ends is strictly increasing.
std::vector<StreamStep> vote_stream(VotingHead<float>& head, const nn::Tensor<float>& raw,
                                    const std::vector<std::int64_t>& window_ends, PadMode pad);

/// Raw model probabilities for windows of one trial, evaluated in batches.
nn::Tensor<float> predict_raw(DeepStfModel<float>& model, const std::vector<LabeledWindow>& windows,
                              std::size_t batch = 64);

/// Model + head over one trial's windows in order.
std::vector<StreamStep> predict_stream(DeepStfModel<float>& model, VotingHead<float>& head,
                                       const std::vector<LabeledWindow>& windows, PadMode pad);

Container head_to_container(VotingHead<float>& head, bool with_moments, const nlohmann::json& extra);
VotingHead<float> head_from_container(const Container& c);

}  // namespace deepstf
