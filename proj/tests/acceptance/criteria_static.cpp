// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "common/metric_oracles.hpp"
#include "criteria.hpp"
#include "deepstf/model/voting.hpp"
#include "deepstf/nn/gradcheck.hpp"
#include "deepstf/nn/ops.hpp"
#include "deepstf/preprocess/filter.hpp"
#include "deepstf/preprocess/pipeline.hpp"

namespace deepstf::acceptance {

namespace {

using nn::Shape;
using TD = nn::Tensor<double>;

std::string shape_text(const Shape& s) {
  // Leading unit axes are dropped so "1x256" and "256" compare equal.
  std::size_t i = 0;
  while (i + 1 < s.size() && s[i] == 1) ++i;
  return nn::shape_string(Shape(s.begin() + static_cast<std::ptrdiff_t>(i), s.end()));
}

struct Row {
  std::string module;
  std::string layer;
  std::string output;
};

Shape parse_shape(const std::string& text) {
  Shape s;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) s.push_back(std::stoul(part));
  return s;
}

void append_branch(std::vector<Row>& rows, bool spatial) {
  const std::string sb = "Spatial block", tb = "Temporal/Frequency block";
  if (spatial) {
    rows.push_back({sb, "Conv", "8x1200x1"});
    rows.push_back({sb, "Permute", "1x1200x8"});
    rows.push_back({sb, "BatchNorm", "1x1200x8"});
    rows.push_back({sb, "Leaky-Relu", "1x1200x8"});
  }
  const char* stages[][3] = {{"8x1198x8", "8x299x8", ""}, {"16x297x8", "16x74x8", ""},
                             {"16x72x8", "16x18x8", ""}, {"16x16x8", "", ""}};
  for (const auto& st : stages) {
    rows.push_back({tb, "Conv", st[0]});
    rows.push_back({tb, "BatchNorm", st[0]});
    rows.push_back({tb, "Leaky-Relu", st[0]});
    if (*st[1]) rows.push_back({tb, "Max Pooling", st[1]});
  }
  rows.push_back({"Bi-Lstm", "layers 3", "16x128"});
  rows.push_back({"Flatten", "-", "1x2048"});
  rows.push_back({"Fully-connected 1", "2048, 64", "1x64"});
  rows.push_back({"Leaky-Relu", "0.01", "1x64"});
}

// Expected layer table: input, the four branches in order, the fusion head and the voting layer.
std::vector<Row> expected_rows() {
  std::vector<Row> rows{{"Input", "-", "1x1200x8"}};
  for (bool spatial : {true, false, true, false}) append_branch(rows, spatial);
  rows.push_back({"Fully connected layer", "Concatenation", "1x256"});
  rows.push_back({"Fully connected layer", "Fully-connected 2", "1x9"});
  rows.push_back({"Fully connected layer", "SoftMax", "1x9"});
  rows.push_back({"Adaptive voting", "Concatenation", "5x9"});
  rows.push_back({"Adaptive voting", "Flatten", "1x45"});
  rows.push_back({"Adaptive voting", "Fully-connected 3", "1x9"});
  rows.push_back({"Adaptive voting", "SoftMax", "1x9"});
  return rows;
}

TD random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  TD t(std::move(shape));
  for (auto& v : t.values()) v = g(rng);
  return t;
}

double weighted_sum(const TD& y, const TD& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

struct GradLog {
  std::size_t failures = 0;
  double worst_ratio = 0.0;  // max error / tolerance
  std::ostringstream text;

  void check(const std::string& name, const nn::GradCheckResult& r, double tol) {
    worst_ratio = std::max(worst_ratio, r.max_rel_error / tol);
    if (!(r.max_rel_error < tol)) {
      ++failures;
      text << " " << name << " " << r.max_rel_error << " >= " << tol << ";";
    }
  }
};

template <typename Layer>
std::vector<nn::Parameter<double>*> params_of(Layer& l) {
  nn::ParameterList<double> pl;
  l.collect(pl);
  return pl.params;
}

template <typename Layer>
void check_layer(GradLog& g, const std::string& name, Layer& m, TD x, const TD& w, double tol) {
  m.forward(x, true);
  auto params = params_of(m);
  for (auto* p : params) p->zero_grad();
  const TD dx = m.backward(w);
  auto loss = [&] { return weighted_sum(m.forward(x, false), w); };
  g.check(name + " dx", nn::grad_check(loss, x.values(), dx.values()), tol);
  for (auto* p : params) g.check(name + " " + p->name, nn::grad_check(loss, p->value.values(), p->grad.values()), tol);
}

}  // namespace

Outcome shape_fidelity() {
  DeepStfModel<float> model;
  VotingHead<float> head(kModeCount);
  nn::ShapeTrace t;
  const nn::Tensor<float> x({1, 1, 1200, 8}, 0.25f);
  const auto p = model.forward(x, x, false, &t);
  const nn::Tensor<float> hist({1, kVoteDepth * kModeCount}, 1.0f / kModeCount);
  head.forward(hist, false, &t);

  const auto want = expected_rows();
  std::size_t mismatches = 0;
  std::ostringstream log;
  if (t.rows.size() != want.size()) {
    ++mismatches;
    log << " trace has " << t.rows.size() << " rows;";
  }
  for (std::size_t i = 0; i < std::min(want.size(), t.rows.size()); ++i) {
    const auto& g = t.rows[i];
    const auto& w = want[i];
    if (g.module != w.module || g.layer != w.layer || shape_text(g.output) != shape_text(parse_shape(w.output))) {
      ++mismatches;
      log << " row " << i << ": " << g.module << "/" << g.layer << " " << nn::shape_string(g.output) << " expected "
          << w.module << "/" << w.layer << " " << w.output << ";";
    }
  }
  if (p.shape() != Shape{1, 9}) {
    ++mismatches;
    log << " output " << nn::shape_string(p.shape()) << ";";
  }
  return {mismatches == 0, std::to_string(want.size()) + " rows checked, " + std::to_string(mismatches) +
                               " mismatches" + log.str()};
}

Outcome gradient_suite() {
  GradLog g;
  using namespace nn;
  {
    TD x = random_tensor({2, 2, 6, 4}, 4), k = random_tensor({3, 2, 3, 1}, 5), b = random_tensor({3}, 6);
    const TD w = random_tensor({2, 3, 4, 4}, 7);
    TD dx, dk(k.shape()), db(b.shape());
    conv2d_backward(x, k, w, &dx, dk, db);
    auto loss = [&] { return weighted_sum(conv2d(x, k, b), w); };
    g.check("conv dx", grad_check(loss, x.values(), dx.values()), 1e-5);
    g.check("conv dk", grad_check(loss, k.values(), dk.values()), 1e-5);
    g.check("conv db", grad_check(loss, b.values(), db.values()), 1e-5);
  }
  {
    TD x = random_tensor({2, 1, 5, 8}, 8), k = random_tensor({8, 1, 1, 8}, 9), b = random_tensor({8}, 10);
    const TD w = random_tensor({2, 8, 5, 1}, 11);
    TD dx, dk(k.shape()), db(b.shape());
    conv2d_backward(x, k, w, &dx, dk, db);
    auto loss = [&] { return weighted_sum(conv2d(x, k, b), w); };
    g.check("spatial conv dx", grad_check(loss, x.values(), dx.values()), 1e-5);
    g.check("spatial conv dk", grad_check(loss, k.values(), dk.values()), 1e-5);
  }
  {
    TD x = random_tensor({2, 3, 4, 2}, 12);
    const TD w = random_tensor({2, 2, 4, 3}, 13);
    auto loss = [&] { return weighted_sum(permute_channels_width(x), w); };
    const TD dx = permute_channels_width(w);
    g.check("permute dx", grad_check(loss, x.values(), dx.values()), 1e-5);
  }
  {
    TD x = random_tensor({3, 2, 4, 1}, 14), gamma = random_tensor({2}, 15), beta = random_tensor({2}, 16);
    const TD w = random_tensor(x.shape(), 17);
    TD rm({2}), rv({2}, 1.0);
    BatchNormCache<double> cache;
    batchnorm_train(x, gamma, beta, rm, rv, 1e-5, 0.1, cache);
    TD dg({2}), dbeta({2});
    const TD dx = batchnorm_backward(w, cache, gamma, dg, dbeta);
    auto loss = [&] {
      TD m({2}), v({2}, 1.0);
      BatchNormCache<double> c;
      return weighted_sum(batchnorm_train(x, gamma, beta, m, v, 1e-5, 0.1, c), w);
    };
    g.check("batchnorm dx", grad_check(loss, x.values(), dx.values()), 1e-4);
    g.check("batchnorm dgamma", grad_check(loss, gamma.values(), dg.values()), 1e-4);
    g.check("batchnorm dbeta", grad_check(loss, beta.values(), dbeta.values()), 1e-4);
  }
  {
    TD x = random_tensor({2, 3, 4, 2}, 18);
    for (auto& v : x.values()) v += v >= 0 ? 0.01 : -0.01;  // keep clear of the kink
    const TD w = random_tensor(x.shape(), 19);
    const TD dx = leaky_relu_backward(leaky_relu(x, 0.01), w, 0.01);
    auto loss = [&] { return weighted_sum(leaky_relu(x, 0.01), w); };
    g.check("leaky-relu dx", grad_check(loss, x.values(), dx.values()), 1e-4);
  }
  {
    TD x = random_tensor({2, 2, 9, 3}, 20);
    std::vector<std::uint8_t> am;
    const TD y = maxpool_h(x, 4, am);
    const TD w = random_tensor(y.shape(), 21);
    const TD dx = maxpool_h_backward(w, am, x.shape(), 4);
    auto loss = [&] {
      std::vector<std::uint8_t> a;
      return weighted_sum(maxpool_h(x, 4, a), w);
    };
    g.check("max-pool dx", grad_check(loss, x.values(), dx.values()), 1e-4);
  }
  {
    TD x = random_tensor({4, 5}, 22), wt = random_tensor({5, 3}, 23), b = random_tensor({3}, 24);
    const TD w = random_tensor({4, 3}, 25);
    TD dx, dw(wt.shape()), db(b.shape());
    linear_backward(x, wt, w, &dx, dw, db);
    auto loss = [&] { return weighted_sum(linear(x, wt, b), w); };
    g.check("linear dx", grad_check(loss, x.values(), dx.values()), 1e-5);
    g.check("linear dW", grad_check(loss, wt.values(), dw.values()), 1e-5);
    g.check("linear db", grad_check(loss, b.values(), db.values()), 1e-5);
  }
  {
    TD x = random_tensor({3, 9}, 26);
    const TD w = random_tensor({3, 9}, 27);
    const TD dx = softmax_backward(softmax(x), w);
    auto loss = [&] { return weighted_sum(softmax(x), w); };
    g.check("softmax dx", grad_check(loss, x.values(), dx.values()), 1e-5);
  }
  {
    std::mt19937_64 rng(28);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    TD p({4, 9}), t({4, 9});
    for (auto& v : p.values()) v = u(rng);
    for (std::size_t n = 0; n < 4; ++n) t[n * 9 + (n * 2) % 9] = 1.0;
    for (auto red : {BceReduction::AllEntries, BceReduction::Batch}) {
      const TD dp = bce_grad(p, t, red);
      auto loss = [&] { return bce_loss(p, t, red); };
      g.check("bce dp", grad_check(loss, p.values(), dp.values()), 1e-5);
    }
  }
  for (bool reverse : {false, true}) {
    Lstm<double> m(reverse ? "lstm-rev" : "lstm", 3, 2, reverse);
    nn::Rng rng(29);
    m.init(rng);
    check_layer(g, reverse ? "lstm reverse" : "lstm", m, random_tensor({4, 2, 3}, 30), random_tensor({4, 2, 2}, 31), 1e-4);
  }
  {
    BiLstmStack<double> m("bilstm", 6, 2, 3);
    nn::Rng rng(32);
    m.init(rng);
    check_layer(g, "bilstm-stack", m, random_tensor({4, 2, 6}, 33), random_tensor({4, 2, 4}, 34), 1e-4);
  }
  {
    VotingHead<double> h(4, 35);
    TD x = random_tensor({3, 20}, 36);
    const TD w = random_tensor({3, 4}, 37);
    h.forward(x, true);
    auto params = h.parameters();
    for (auto* p : params.params) p->zero_grad();
    h.backward(w);
    auto loss = [&] { return weighted_sum(h.forward(x, false), w); };
    for (auto* p : params.params) g.check("vote " + p->name, grad_check(loss, p->value.values(), p->grad.values()), 1e-5);
  }
  std::ostringstream d;
  d << "worst error/tolerance " << g.worst_ratio << g.text.str();
  return {g.failures == 0, d.str()};
}

namespace {

// Steady-state amplitude gain of a unit sinusoid, by least-squares fit of the
// filtered tail onto sin and cos at the probe frequency.
double probe_gain_db(const BiquadCascade& c, double f, double fs) {
  const std::size_t n = static_cast<std::size_t>(fs * 30), skip = static_cast<std::size_t>(fs * 20);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  const auto y = filter_forward(std::span<const double>(x), c);
  double ss = 0, cc = 0, sc = 0, ys = 0, yc = 0;
  for (std::size_t i = skip; i < n; ++i) {
    const double w = 2.0 * std::numbers::pi * f * static_cast<double>(i) / fs;
    const double s = std::sin(w), co = std::cos(w);
    ss += s * s;
    cc += co * co;
    sc += s * co;
    ys += y[i] * s;
    yc += y[i] * co;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det, b = (yc * ss - ys * sc) / det;
  return 20.0 * std::log10(std::hypot(a, b));
}

}  // namespace

Outcome filter_contracts() {
  const PreprocessConfig cfg;
  const double fs = kEmgRate;
  const auto bp = design_bandpass(fs, cfg.bandpass_lo, cfg.bandpass_hi, cfg.bandpass_order);
  const auto notch = design_notch(fs, cfg.notch_f0, cfg.notch_bandwidth);
  struct Probe {
    const char* name;
    const BiquadCascade* filter;
    double f;
    double lo, hi;  // allowed gain range, dB
  };
  const Probe probes[] = {
      {"bandpass 20 Hz", &bp, 20.0, -3.5, -2.5},   {"bandpass 500 Hz", &bp, 500.0, -3.5, -2.5},
      {"bandpass 5 Hz", &bp, 5.0, -1e9, -40.0},    {"bandpass 590 Hz", &bp, 590.0, -1e9, -40.0},
      {"notch 50 Hz", &notch, 50.0, -1e9, -30.0},  {"notch 100 Hz", &notch, 100.0, -1.0, 1.0},
  };
  bool pass = bp.is_stable() && notch.is_stable();
  std::ostringstream d;
  d.precision(4);
  for (const auto& p : probes) {
    const double g = probe_gain_db(*p.filter, p.f, fs);
    const bool ok = g >= p.lo && g <= p.hi;
    pass = pass && ok;
    d << p.name << " " << g << " dB" << (ok ? "" : " (out of range)") << "; ";
  }
  return {pass, d.str()};
}

Outcome metric_oracles() {
  constexpr int kCases = 10000;
  std::mt19937_64 rng(20261014);
  std::size_t bad_detect = 0, bad_rate = 0, bad_ss = 0, bad_ts = 0, bad_arith = 0, detected = 0;
  std::uniform_int_distribution<std::int64_t> tc(2000, 4200);
  std::uniform_int_distribution<int> kind(0, static_cast<int>(kTransitionKindCount) - 1);
  for (int c = 0; c < kCases; ++c) {
    const TransitionKind k = transition_from_index(kind(rng));
    const auto t = oracle::make_trace(70, tc(rng), k, oracle::random_votes(rng, 70, k));
    const auto got = detect_stable(t, t.transitions[0]);
    const auto want = oracle::brute_force_t_d(t, t.transitions[0], 5, 500.0);
    if (got.has_value() != want.has_value() || (got && got->t_d != *want)) ++bad_detect;
    if (got) {
      ++detected;
      const double ps = static_cast<double>(t.transitions[0].transition_point - got->t_d) / 1.2;
      if (std::abs(got->p_stable_ms - ps) > 1e-9 * std::max(1.0, std::abs(ps))) ++bad_arith;
    }
  }
  if (p_stable_ms(6000, 5760) != 200.0) ++bad_arith;
  for (int c = 0; c < kCases; ++c) {
    const int nt = 1 + static_cast<int>(rng() % 60);
    std::vector<TransitionOutcome> outs;
    for (int i = 0; i < nt; ++i) {
      TransitionOutcome o{"t", {TransitionKind::W_O, 6000, GaitEventKind::HC}, std::nullopt};
      if (rng() % 3 != 0) {
        const std::int64_t t_d = 6000 + static_cast<std::int64_t>(rng() % 801) - 400;
        o.detection = StableDetection{o.transition, t_d, p_stable_ms(6000, t_d)};
      }
      outs.push_back(o);
    }
    if (predict_rate(outs) != oracle::recount_predict_rate(outs)) ++bad_rate;
  }
  for (int c = 0; c < kCases; ++c) {
    const auto traces = oracle::random_traces(rng, 1 + static_cast<int>(rng() % 3));
    const auto outs = detect_all(traces);
    if (steady_accuracy(traces) != oracle::recount_steady_accuracy(traces)) ++bad_ss;
    if (transition_accuracy(traces, outs) != oracle::recount_transition_accuracy(traces, outs)) ++bad_ts;
  }
  std::ostringstream d;
  d << kCases << " traces per metric; mismatches: detect_stable " << bad_detect << " (" << detected
    << " detections), p_stable arithmetic " << bad_arith << ", predict_rate " << bad_rate << ", steady_accuracy "
    << bad_ss << ", transition_accuracy " << bad_ts;
  return {bad_detect + bad_rate + bad_ss + bad_ts + bad_arith == 0 && detected > 0, d.str()};
}

}  // namespace deepstf::acceptance
