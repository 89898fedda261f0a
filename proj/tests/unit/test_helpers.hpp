// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "deepstf/store/trial.hpp"

namespace deepstf::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::path(DEEPSTF_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Minimal valid trial: ST then W with one ST->W transition anchored at a TO.
inline Trial tiny_trial(std::int64_t length = 2401, std::int64_t boundary = 1216) {
  Trial t;
  t.emg.subject_id = "S00";
  t.emg.trial_id = "tiny";
  t.emg.samples = SampleMatrix(static_cast<std::size_t>(length), kEmgChannels);
  for (std::size_t i = 0; i < t.emg.samples.rows(); ++i) {
    for (std::size_t c = 0; c < kEmgChannels; ++c) {
      t.emg.samples(i, c) = static_cast<float>(((i * 7 + c * 13) % 17) - 8) * 0.01f;
    }
  }
  const std::size_t tp = static_cast<std::size_t>((length - 1) / 30 + 1);
  t.pressure.heel.assign(tp, 50.0f);
  t.pressure.toe.assign(tp, 50.0f);
  t.annotation.segments = {{LocomotionMode::ST, 0, boundary}, {LocomotionMode::W, boundary, length}};
  t.transitions = {{TransitionKind::ST_W, boundary, GaitEventKind::TO}};
  t.task = "main";
  t.seed = 7;
  return t;
}

}  // namespace deepstf::testing
