// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"
#include "deepstf/synth/synth.hpp"
#include "deepstf/train/experiment.hpp"

namespace deepstf {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("trial" + std::to_string(100 + i));
  return ids;
}

TEST(Folds, FiftyTrialsSplit35To5To10) {
  const auto ids = make_ids(50);
  const auto folds = make_folds(ids, 7);
  ASSERT_EQ(folds.size(), 5u);
  std::multiset<std::string> tested;
  for (const auto& f : folds) {
    EXPECT_EQ(f.train1.size(), 35u);
    EXPECT_EQ(f.train2.size(), 5u);
    EXPECT_EQ(f.test.size(), 10u);
    tested.insert(f.test.begin(), f.test.end());
  }
  EXPECT_EQ(tested, std::multiset<std::string>(ids.begin(), ids.end()));
}

TEST(Folds, PartitionPropertyOverSeedsAndSizes) {
  for (int n = 10; n <= 64; n += 3) {
    const auto ids = make_ids(n);
    std::vector<std::string> strata;
    for (int i = 0; i < n; ++i) strata.push_back(i % 3 == 0 ? "a" : i % 3 == 1 ? "b" : "c");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (const auto& folds : {make_folds(ids, seed), make_folds(ids, seed, 5, strata)}) {
        std::set<std::string> tested;
        for (const auto& f : folds) {
          std::set<std::string> all;
          all.insert(f.train1.begin(), f.train1.end());
          all.insert(f.train2.begin(), f.train2.end());
          all.insert(f.test.begin(), f.test.end());
          ASSERT_EQ(all.size(), static_cast<std::size_t>(n)) << "overlap or loss, n=" << n;
          ASSERT_EQ(f.train1.size() + f.train2.size() + f.test.size(), static_cast<std::size_t>(n));
          const std::size_t rest = n - f.test.size();
          ASSERT_EQ(f.train2.size(), static_cast<std::size_t>(std::llround(rest / 8.0)));
          ASSERT_GE(f.test.size(), static_cast<std::size_t>(n / 5));
          ASSERT_LE(f.test.size(), static_cast<std::size_t>(n / 5 + 1));
          for (const auto& t : f.test) ASSERT_TRUE(tested.insert(t).second);
        }
        ASSERT_EQ(tested.size(), static_cast<std::size_t>(n));
      }
    }
  }
}

TEST(Folds, DeterministicInSeed) {
  const auto ids = make_ids(30);
  EXPECT_EQ(make_folds(ids, 3), make_folds(ids, 3));
  EXPECT_NE(make_folds(ids, 3), make_folds(ids, 4));
  auto reordered = ids;
  std::reverse(reordered.begin(), reordered.end());
  EXPECT_EQ(make_folds(ids, 3), make_folds(reordered, 3));
}

TEST(Folds, StrataAreMixedEvenly) {
  std::vector<std::string> ids, strata;
  for (int i = 0; i < 30; ++i) {
    ids.push_back("t" + std::to_string(i));
    strata.push_back(i < 10 ? "main" : i < 20 ? "backstep" : "sidestep");
  }
  std::map<std::string, std::string> task;
  for (int i = 0; i < 30; ++i) task[ids[i]] = strata[i];
  for (const auto& f : make_folds(ids, 11, 5, strata)) {
    EXPECT_EQ(f.train1.size(), 21u);
    EXPECT_EQ(f.train2.size(), 3u);
    std::map<std::string, int> in_test, in_val;
    for (const auto& t : f.test) ++in_test[task[t]];
    for (const auto& t : f.train2) ++in_val[task[t]];
    for (const auto& s : {"main", "backstep", "sidestep"}) {
      EXPECT_EQ(in_test[s], 2) << s;
      EXPECT_EQ(in_val[s], 1) << s;
    }
  }
}

TEST(Folds, Errors) {
  EXPECT_THROW(make_folds(make_ids(9), 1), ConfigError);
  auto dup = make_ids(12);
  dup[3] = dup[4];
  EXPECT_THROW(make_folds(dup, 1), ConfigError);
  EXPECT_THROW(make_folds(make_ids(12), 1, 5, {"a", "b"}), ConfigError);
}

TEST(Folds, JsonRoundTrip) {
  const auto f = make_folds(make_ids(20), 2)[1];
  EXPECT_EQ(nlohmann::json(f).get<FoldPlan>(), f);
}

TEST(PortableShuffle, UniformIndexInRangeAndPermutation) {
  std::uint64_t s = 5;
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) ++hist[uniform_index(s, 7)];
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  auto w = v;
  portable_shuffle(w, 9);
  EXPECT_NE(w, v);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(w, v);
}

// Small synthetic dataset shared by the training tests.
const TrackedDataset& tiny_dataset() {
  static const TrackedDataset data = [] {
    SynthConfig sc;
    sc.seed = 21;
    std::vector<PreprocessedTrial> trials;
    for (const auto& s : generate_dataset(sc, 5)) trials.push_back(preprocess_trial(s.trial, PreprocessConfig{}));
    return TrackedDataset(std::move(trials));
  }();
  return data;
}

WindowSpec tiny_spec() {
  WindowSpec s;
  s.window_len = 64;
  s.stride = 600;
  s.p_label = 300;
  return s;
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.window_len = 64;
  c.channels = 8;
  c.spatial_filters = 2;
  c.temporal_filters = {2, 3, 2, 2};
  c.pool = 2;
  c.lstm_hidden = 4;
  c.lstm_layers = 1;
  c.branch_features = 4;
  return c;
}

struct Sets {
  WindowSet train, val;
};

Sets tiny_sets() {
  const auto& data = tiny_dataset();
  const std::vector<std::size_t> t1 = {0, 1, 5, 6, 10, 11}, t2 = {2, 7, 12};
  const auto cols = all_columns();
  const auto stats = fit_normalization(data, t1, cols);
  return {build_window_set(data, t1, AccessPhase::Step1Train, stats, tiny_spec(), cols),
          build_window_set(data, t2, AccessPhase::Step1Validation, stats, tiny_spec(), cols)};
}

Step1Config quick_step1() {
  Step1Config c;
  c.batch = 16;
  c.max_epochs = 3;
  c.max_windows_per_epoch = 48;
  return c;
}

std::vector<std::uint8_t> backbone_bytes(DeepStfModel<float>& m) { return model_to_container(m, false, {}).to_bytes(); }

TEST(Trainer, Step1IsDeterministic) {
  const auto sets = tiny_sets();
  DeepStfModel<float> a(tiny_model()), b(tiny_model());
  const auto ra = train_step1(a, sets.train, sets.val, quick_step1(), 4);
  const auto rb = train_step1(b, sets.train, sets.val, quick_step1(), 4);
  EXPECT_EQ(ra.epochs, rb.epochs);
  EXPECT_EQ(backbone_bytes(a), backbone_bytes(b));
  DeepStfModel<float> c(tiny_model());
  const auto rc = train_step1(c, sets.train, sets.val, quick_step1(), 5);
  EXPECT_NE(ra.epochs[0].train_loss, rc.epochs[0].train_loss);
}

TEST(Trainer, Step1LossDecreasesAndRestoresBest) {
  const auto sets = tiny_sets();
  DeepStfModel<float> m(tiny_model());
  Step1Config cfg = quick_step1();
  cfg.lr = 5e-3;
  cfg.max_epochs = 8;
  const auto r = train_step1(m, sets.train, sets.val, cfg, 1);
  ASSERT_EQ(r.epochs.size(), 8u);
  EXPECT_LT(r.epochs.back().train_loss, r.epochs.front().train_loss);
  for (const auto& e : r.epochs) EXPECT_TRUE(std::isnan(e.val_loss) == false);
  EXPECT_NEAR(evaluate_loss(m, sets.val, cfg.reduction), r.best_val_loss, 1e-6);
  double best = r.epochs[0].val_loss;
  for (const auto& e : r.epochs) best = std::min(best, e.val_loss);
  EXPECT_DOUBLE_EQ(r.best_val_loss, best);
}

TEST(Trainer, FlatValidationLossStopsAfterPatience) {
  const auto sets = tiny_sets();
  ModelConfig mc = tiny_model();
  mc.bn_momentum = 0.0;  // running statistics stay fixed
  DeepStfModel<float> m(mc);
  Step1Config cfg = quick_step1();
  cfg.lr = 1e-30;
  cfg.max_epochs = 40;
  cfg.max_windows_per_epoch = 16;
  cfg.early_stop_min_delta = 1e-9;
  const auto r = train_step1(m, sets.train, sets.val, cfg, 1);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.best_epoch, 0);
  EXPECT_EQ(r.epochs.size(), 11u);
}

TEST(Trainer, TrailingSingleWindowBatchIsMerged) {
  const auto sets = tiny_sets();
  DeepStfModel<float> m(tiny_model());
  Step1Config cfg = quick_step1();
  cfg.batch = 8;
  cfg.max_windows_per_epoch = 17;  // 8 + 8 + 1 would leave a batch of one
  cfg.max_epochs = 1;
  EXPECT_NO_THROW(train_step1(m, sets.train, sets.val, cfg, 1));
}

TEST(Trainer, NonFiniteLossRaisesDivergence) {
  auto sets = tiny_sets();
  for (auto& s : sets.train.signals) std::ranges::fill(s.values(), std::numeric_limits<float>::quiet_NaN());
  DeepStfModel<float> m(tiny_model());
  EXPECT_THROW(train_step1(m, sets.train, sets.val, quick_step1(), 1), DivergenceError);
}

TEST(Trainer, Step2RunsExactBudgetAndFreezesBackbone) {
  const auto sets = tiny_sets();
  DeepStfModel<float> m(tiny_model());
  train_step1(m, sets.train, sets.val, quick_step1(), 2);
  const auto before = backbone_bytes(m);
  VotingHead<float> head(kModeCount, 3);
  Step2Config cfg;
  cfg.epochs = 7;
  cfg.batch = 32;
  int calls = 0;
  const auto r = train_step2(m, head, sets.val, cfg, 9, [&](const EpochLog&) { ++calls; });
  EXPECT_EQ(r.epochs.size(), 7u);
  EXPECT_EQ(calls, 7);
  EXPECT_EQ(backbone_bytes(m), before);
  EXPECT_LT(r.epochs.back().train_loss, r.epochs.front().train_loss);
  for (const auto& e : r.epochs) EXPECT_TRUE(std::isnan(e.val_loss));

  const auto traces = predict_traces(m, head, sets.val, cfg.pad);
  ASSERT_EQ(traces.size(), sets.val.trial_ids.size());
  std::size_t n = 0;
  for (const auto& t : traces) {
    n += t.records.size();
    EXPECT_NO_THROW(t.validate());
  }
  EXPECT_EQ(n, sets.val.windows.size());
}

TEST(Trainer, StreamHistoriesRestartPerTrial) {
  const auto sets = tiny_sets();
  DeepStfModel<float> m(tiny_model());
  const auto raw = predict_windows(m, sets.val);
  const auto h = stream_histories(raw, sets.val, PadMode::Zero);
  ASSERT_EQ(h.dim(0), sets.val.windows.size());
  for (std::size_t t = 0; t < sets.val.trial_ids.size(); ++t) {
    const auto first = sets.val.trial_windows(t).front();
    // Only the newest slot is filled at a trial's first window.
    for (std::size_t j = 0; j < 4 * kModeCount; ++j) EXPECT_EQ(h.data()[first * 5 * kModeCount + j], 0.0f);
    for (std::size_t j = 0; j < kModeCount; ++j) {
      EXPECT_EQ(h.data()[first * 5 * kModeCount + 4 * kModeCount + j], raw.data()[first * kModeCount + j]);
    }
  }
}

TEST(Configs, JsonRoundTripAndValidation) {
  Step1Config s1;
  s1.max_windows_per_epoch = 100;
  s1.reduction = nn::BceReduction::Batch;
  EXPECT_EQ(nlohmann::json(s1).get<Step1Config>(), s1);
  Step2Config s2;
  s2.pad = PadMode::Standing;
  EXPECT_EQ(nlohmann::json(s2).get<Step2Config>(), s2);
  ExperimentConfig e;
  e.run_folds = {0, 2};
  e.channel_config = "UFLB";
  EXPECT_EQ(nlohmann::json(e).get<ExperimentConfig>(), e);
  nlohmann::json bad = e;
  bad["channel_config"] = "NOPE";
  EXPECT_THROW(bad.get<ExperimentConfig>(), ConfigError);
  bad = e;
  bad["run_folds"] = {7};
  EXPECT_THROW(bad.get<ExperimentConfig>(), ConfigError);
  ExperimentConfig other = e;
  other.jobs = 4;
  EXPECT_EQ(config_hash(e), config_hash(other));
  other.seed = 2;
  EXPECT_NE(config_hash(e), config_hash(other));
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.window = tiny_spec();
  c.model = tiny_model();
  c.p_label_ms = {250};
  c.run_folds = {0};
  c.step1 = quick_step1();
  c.step2.epochs = 2;
  c.step2.batch = 32;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path(DEEPSTF_TEST_TMP) / name;
  fs::remove_all(p);
  return p;
}

TEST(Experiment, TestSetIsOnlyReadForEvaluation) {
  const auto& data = tiny_dataset();
  data.clear_log();
  const auto cfg = tiny_experiment();
  const auto res = run_experiment(data, cfg, fresh_dir("leak"));
  ASSERT_TRUE(res.cells[0].ok) << res.cells[0].error;
  const auto& fold = res.folds[0];
  const std::set<std::string> t1(fold.train1.begin(), fold.train1.end()), t2(fold.train2.begin(), fold.train2.end()),
      te(fold.test.begin(), fold.test.end());
  std::set<std::string> evaluated;
  for (const auto& a : data.access_log()) {
    switch (a.phase) {
      case AccessPhase::NormalizationFit:
      case AccessPhase::Step1Train:
        EXPECT_TRUE(t1.count(a.trial_id)) << phase_name(a.phase) << " read " << a.trial_id;
        break;
      case AccessPhase::Step1Validation:
      case AccessPhase::Step2Train:
        EXPECT_TRUE(t2.count(a.trial_id)) << phase_name(a.phase) << " read " << a.trial_id;
        break;
      case AccessPhase::Evaluation:
        EXPECT_TRUE(te.count(a.trial_id)) << a.trial_id;
        evaluated.insert(a.trial_id);
        break;
    }
  }
  EXPECT_EQ(evaluated, te);
}

TEST(Experiment, WritesArtifactsAndResumes) {
  const auto& data = tiny_dataset();
  const auto out = fresh_dir("resume");
  auto cfg = tiny_experiment();
  const auto first = run_experiment(data, cfg, out);
  ASSERT_TRUE(first.cells[0].ok) << first.cells[0].error;
  EXPECT_FALSE(first.cells[0].resumed);
  const fs::path cell = out / "cells" / cell_name(250, 0);
  for (const char* f : {"step1.dstf", "step2.dstf", "report.json", "report.csv", "pstable.csv", "confusion.csv",
                        "epochs.json", "normalization.json", "cell.json"}) {
    EXPECT_TRUE(fs::exists(cell / f)) << f;
  }
  for (const char* f : {"manifest.json", "metrics.csv", "summary.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  std::ifstream is(out / "manifest.json");
  const auto manifest = nlohmann::json::parse(is);
  EXPECT_EQ(manifest.at("config_hash"), config_hash(cfg));
  EXPECT_EQ(manifest.at("config").get<ExperimentConfig>(), cfg);
  EXPECT_EQ(manifest.at("cells").size(), 1u);

  EXPECT_EQ(evaluate_cell(data, cfg, first.folds[0], 250, cell), first.cells[0].report);
  fs::remove(cell / "step2.dstf");
  EXPECT_THROW(evaluate_cell(data, cfg, first.folds[0], 250, cell), DataError);
  fs::remove(cell / "cell.json");

  const auto rerun = run_experiment(data, cfg, out);
  EXPECT_FALSE(rerun.cells[0].resumed);
  EXPECT_EQ(rerun.cells[0].report, first.cells[0].report);
  const auto second = run_experiment(data, cfg, out);
  EXPECT_TRUE(second.cells[0].resumed);
  EXPECT_EQ(second.cells[0].report, first.cells[0].report);

  cfg.step2.epochs = 3;
  const auto third = run_experiment(data, cfg, out);
  EXPECT_FALSE(third.cells[0].resumed);
}

TEST(Experiment, ParallelCellsMatchSerial) {
  const auto& data = tiny_dataset();
  auto cfg = tiny_experiment();
  cfg.run_folds = {1, 3};
  const auto serial = run_experiment(data, cfg, fresh_dir("serial"));
  cfg.jobs = 2;
  const auto parallel = run_experiment(data, cfg, fresh_dir("parallel"));
  ASSERT_EQ(serial.cells.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_TRUE(serial.cells[i].ok && parallel.cells[i].ok);
    EXPECT_EQ(serial.cells[i].report, parallel.cells[i].report);
    EXPECT_EQ(read_file_bytes(serial.cells[i].directory / "step1.dstf"),
              read_file_bytes(parallel.cells[i].directory / "step1.dstf"));
  }
}

TEST(Experiment, FailingCellIsRecorded) {
  auto sets = std::vector<PreprocessedTrial>{};
  for (std::size_t i = 0; i < tiny_dataset().size(); ++i) sets.push_back(tiny_dataset().read(i, AccessPhase::Evaluation));
  for (auto& t : sets) std::ranges::fill(t.rectified.values(), std::numeric_limits<float>::quiet_NaN());
  const TrackedDataset bad(std::move(sets));
  const auto res = run_experiment(bad, tiny_experiment(), fresh_dir("fail"));
  ASSERT_EQ(res.cells.size(), 1u);
  EXPECT_FALSE(res.cells[0].ok);
  EXPECT_FALSE(res.cells[0].error.empty());
  EXPECT_FALSE(res.cells[0].error_kind.empty());
}

}  // namespace
}  // namespace deepstf
