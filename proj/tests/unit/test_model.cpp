// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"
#include "deepstf/model/deepstf.hpp"
#include "deepstf/model/voting.hpp"
#include "deepstf/nn/checkpoint.hpp"
#include "deepstf/nn/gradcheck.hpp"
#include "deepstf/nn/ops.hpp"
#include "deepstf/nn/optim.hpp"

namespace deepstf {
namespace {

using nn::Shape;
using nn::Tensor;

ModelConfig small_config() {
  ModelConfig c;
  c.window_len = 64;
  c.channels = 3;
  c.spatial_filters = 2;
  c.temporal_filters = {2, 3, 2, 2};
  c.pool = 2;
  c.lstm_hidden = 2;
  c.lstm_layers = 2;
  c.branch_features = 3;
  c.classes = 4;
  return c;
}

template <typename T>
Tensor<T> random_input(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(g(rng));
  return t;
}

TEST(ModelConfig, SequenceLengthAndValidation) {
  EXPECT_EQ(ModelConfig{}.sequence_length(), 16u);
  EXPECT_EQ(small_config().sequence_length(), 4u);
  ModelConfig bad;
  bad.window_len = 20;
  EXPECT_THROW(bad.validate(), ConfigError);
  const nlohmann::json j = small_config();
  EXPECT_EQ(j.get<ModelConfig>(), small_config());
}

TEST(Model, DefaultShapeTrace) {
  DeepStfModel<float> m;
  nn::ShapeTrace t;
  const auto x = random_input<float>({2, 1, 1200, 8}, 1);
  const auto p = m.forward(x, x, false, &t);
  EXPECT_EQ(p.shape(), (Shape{2, 9}));
  auto find = [&](const std::string& module, const std::string& layer, std::size_t nth = 0) -> Shape {
    for (const auto& r : t.rows) {
      if (r.module == module && r.layer == layer && nth-- == 0) return r.output;
    }
    return {};
  };
  EXPECT_EQ(find("Input", "-"), (Shape{1, 1200, 8}));
  EXPECT_EQ(find("Spatial block", "Conv"), (Shape{8, 1200, 1}));
  EXPECT_EQ(find("Spatial block", "Permute"), (Shape{1, 1200, 8}));
  EXPECT_EQ(find("Temporal/Frequency block", "Conv"), (Shape{8, 1198, 8}));
  EXPECT_EQ(find("Temporal/Frequency block", "Max Pooling"), (Shape{8, 299, 8}));
  EXPECT_EQ(find("Temporal/Frequency block", "Max Pooling", 1), (Shape{16, 74, 8}));
  EXPECT_EQ(find("Temporal/Frequency block", "Conv", 3), (Shape{16, 16, 8}));
  EXPECT_EQ(find("Temporal/Frequency block", "Conv", 15), (Shape{16, 16, 8}));
  EXPECT_EQ(find("Bi-Lstm", "layers 3"), (Shape{16, 128}));
  EXPECT_EQ(find("Flatten", "-"), (Shape{1, 2048}));
  EXPECT_EQ(find("Fully-connected 1", "2048, 64"), (Shape{1, 64}));
  EXPECT_EQ(find("Fully connected layer", "Concatenation"), (Shape{256}));
  EXPECT_EQ(find("Fully connected layer", "SoftMax"), (Shape{9}));
}

TEST(Model, ProbabilitiesAndBadInput) {
  DeepStfModel<float> m(small_config());
  const auto x = random_input<float>({3, 1, 64, 3}, 2);
  const auto p = m.forward(x, x, false);
  for (std::size_t n = 0; n < 3; ++n) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_GT(p[n * 4 + k], 0.0f);
      s += p[n * 4 + k];
    }
    EXPECT_NEAR(s, 1.0, 1e-5);
  }
  EXPECT_THROW(m.forward(random_input<float>({1, 1, 63, 3}, 3), x, false), ShapeError);
}

TEST(Model, BranchesSeeOnlyTheirInput) {
  DeepStfModel<float> m(small_config());
  const auto t = random_input<float>({2, 1, 64, 3}, 4);
  const auto f1 = random_input<float>({2, 1, 64, 3}, 5), f2 = random_input<float>({2, 1, 64, 3}, 6);
  m.forward(t, f1, false);
  const auto a = m.branch_outputs();
  m.forward(t, f2, false);
  const auto& b = m.branch_outputs();
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[1], b[1]);
  EXPECT_NE(a[2], b[2]);
  EXPECT_NE(a[3], b[3]);
}

TEST(Model, InitIsSeeded) {
  ModelConfig c = small_config();
  DeepStfModel<float> a(c), b(c);
  EXPECT_EQ(nn::parameter_digest(a.parameters()), nn::parameter_digest(b.parameters()));
  c.init_seed = 2;
  DeepStfModel<float> d(c);
  EXPECT_NE(nn::parameter_digest(a.parameters()), nn::parameter_digest(d.parameters()));
}

TEST(Model, GradCheckSmallConfig) {
  DeepStfModel<double> m(small_config());
  auto time = random_input<double>({2, 1, 64, 3}, 7), freq = random_input<double>({2, 1, 64, 3}, 8);
  Tensor<double> target({2, 4});
  target[1] = 1.0;
  target[4 + 3] = 1.0;
  auto params = m.parameters();
  for (auto* p : params.params) p->zero_grad();
  const auto probs = m.forward(time, freq, true);
  m.backward(nn::bce_grad(probs, target));
  // Train-mode forward also updates running statistics; they do not enter the loss.
  auto loss = [&] { return nn::bce_loss(m.forward(time, freq, true), target); };
  double worst = 0.0;
  std::string worst_name;
  for (auto* p : params.params) {
    const auto r = nn::grad_check(loss, p->value.values(), p->grad.values(), 1e-5, 1e-6, 40);
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_name = p->name;
    }
  }
  EXPECT_LT(worst, 1e-3) << worst_name;
}

TEST(Model, CheckpointRoundTripIsExact) {
  DeepStfModel<float> m(small_config());
  // Move the weights and running statistics off their initial values.
  const auto x = random_input<float>({4, 1, 64, 3}, 9);
  Tensor<float> target({4, 4});
  for (std::size_t n = 0; n < 4; ++n) target[n * 4 + n] = 1.0f;
  nn::Adam opt;
  auto params = m.parameters();
  for (int s = 0; s < 3; ++s) {
    nn::zero_grads(params.params);
    m.backward(nn::bce_grad(m.forward(x, x, true), target));
    opt.step(params.params, 1e-2);
  }
  const Container c = model_to_container(m, true, {{"note", "x"}});
  const DeepStfModel<float> back = model_from_container(Container::from_bytes(c.to_bytes()));
  auto& b = const_cast<DeepStfModel<float>&>(back);
  EXPECT_EQ(nn::parameter_digest(b.parameters()), nn::parameter_digest(m.parameters()));
  EXPECT_EQ(b.forward(x, x, false), m.forward(x, x, false));
  EXPECT_EQ(b.parameters().params[0]->adam_m, params.params[0]->adam_m);
  EXPECT_EQ(b.config(), m.config());
}

TEST(Model, CheckpointRejectsArchitectureMismatch) {
  DeepStfModel<float> m(small_config());
  Container c = model_to_container(m, false, nlohmann::json::object());
  auto meta = nlohmann::json::parse(c.metadata());
  meta["architecture"]["config"]["lstm_hidden"] = 3;
  c.set_metadata(meta.dump());
  EXPECT_THROW(model_from_container(c), DataError);
  EXPECT_THROW(model_from_container(Container("trial")), DataError);
}

TEST(Model, SnapshotRestore) {
  DeepStfModel<float> m(small_config());
  auto params = m.parameters();
  const auto snap = snapshot(params);
  const std::string before = nn::parameter_digest(params);
  for (auto* p : params.params) p->value.fill(0.5f);
  EXPECT_NE(nn::parameter_digest(params), before);
  restore(snap, params);
  EXPECT_EQ(nn::parameter_digest(params), before);
}

TEST(Voting, HistoriesPadOldestFirst) {
  Tensor<float> raw({3, 2}, std::vector<float>{0.1f, 0.9f, 0.6f, 0.4f, 0.3f, 0.7f});
  const auto z = build_histories(raw, PadMode::Zero);
  ASSERT_EQ(z.shape(), (Shape{3, 10}));
  EXPECT_EQ(std::vector<float>(z.data(), z.data() + 10), (std::vector<float>{0, 0, 0, 0, 0, 0, 0, 0, 0.1f, 0.9f}));
  EXPECT_EQ(std::vector<float>(z.data() + 20, z.data() + 30),
            (std::vector<float>{0, 0, 0, 0, 0.1f, 0.9f, 0.6f, 0.4f, 0.3f, 0.7f}));
  const auto s = build_histories(raw, PadMode::Standing);
  EXPECT_EQ(std::vector<float>(s.data(), s.data() + 4), (std::vector<float>{1, 0, 1, 0}));
  EXPECT_EQ(pad_mode_from_name(pad_mode_name(PadMode::Standing)), PadMode::Standing);
  EXPECT_THROW(pad_mode_from_name("ones"), ConfigError);
}

TEST(Voting, StreamMatchesOfflineBatch) {
  VotingHead<float> head(9, 3);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor<float> raw({23, 9});
  for (auto& v : raw.values()) v = u(rng);
  std::vector<std::int64_t> ends;
  for (int k = 0; k < 23; ++k) ends.push_back(1199 + 60 * k);
  for (auto pad : {PadMode::Zero, PadMode::Standing}) {
    const auto stream = vote_stream(head, raw, ends, pad);
    const auto batch = head.forward(build_histories(raw, pad), false);
    ASSERT_EQ(stream.size(), 23u);
    for (std::size_t k = 0; k < 23; ++k) {
      for (std::size_t c = 0; c < 9; ++c) EXPECT_NEAR(stream[k].voted_probs[c], batch[k * 9 + c], 1e-6f);
      EXPECT_EQ(stream[k].raw_class, argmax(std::span<const float>(raw.data() + k * 9, 9)));
      EXPECT_EQ(stream[k].window_end, ends[k]);
    }
  }
  std::swap(ends[3], ends[4]);
  EXPECT_THROW(vote_stream(head, raw, ends, PadMode::Zero), DataError);
}

TEST(Voting, TraceAndGradCheck) {
  VotingHead<double> head(9, 4);
  nn::ShapeTrace t;
  auto h = random_input<double>({3, 45}, 11);
  head.forward(h, false, &t);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.rows[0].output, (Shape{5, 9}));
  EXPECT_EQ(t.rows[1].output, (Shape{1, 45}));
  EXPECT_EQ(t.rows[3].output, (Shape{1, 9}));
  Tensor<double> target({3, 9});
  target[2] = target[9 + 5] = target[18] = 1.0;
  auto params = head.parameters();
  for (auto* p : params.params) p->zero_grad();
  head.backward(nn::bce_grad(head.forward(h, true), target));
  auto loss = [&] { return nn::bce_loss(head.forward(h, false), target); };
  for (auto* p : params.params) {
    EXPECT_LT(nn::grad_check(loss, p->value.values(), p->grad.values()).max_rel_error, 1e-5) << p->name;
  }
}

TEST(Voting, HeadCheckpointRoundTrip) {
  VotingHead<float> a(9, 5);
  const auto c = head_to_container(a, false, nlohmann::json::object());
  auto b = head_from_container(Container::from_bytes(c.to_bytes()));
  EXPECT_EQ(nn::parameter_digest(b.parameters()), nn::parameter_digest(a.parameters()));
}

}  // namespace
}  // namespace deepstf
