// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "deepstf/store/trial.hpp"

namespace deepstf {

struct GaitEvent {
  GaitEventKind kind;
  std::int64_t index;  // EMG-rate sample

  bool operator==(const GaitEvent&) const = default;
};

struct GaitEventTrack {
  std::vector<GaitEvent> events;

  /// Strictly increasing indices and HC/TO alternation.
  bool is_valid() const;
  std::size_t count(GaitEventKind kind) const;
  bool operator==(const GaitEventTrack&) const = default;
};

/// HC at every false->true edge (index of the first contact sample), TO at
/// every true->false edge (index of the first non-contact sample).
GaitEventTrack detect_gait_events(const std::vector<bool>& contact);

/// Anchors every annotation boundary that forms a known transition to the
/// nearest lead-leg event of the kind its transition requires. Boundaries
/// between modes without a transition kind are skipped. Throws DataError
/// ("unanchored transition") when no such event lies within `tolerance`.
std::vector<TransitionEvent> derive_transition_points(const ModeAnnotation& annotation,
                                                      const GaitEventTrack& events,
                                                      std::int64_t tolerance);

}  // namespace deepstf
