// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/preprocess/gait.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "deepstf/error.hpp"

namespace deepstf {

bool GaitEventTrack::is_valid() const {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].index <= events[i - 1].index) return false;
    if (events[i].kind == events[i - 1].kind) return false;
  }
  return true;
}

std::size_t GaitEventTrack::count(GaitEventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [&](const GaitEvent& e) { return e.kind == kind; }));
}

GaitEventTrack detect_gait_events(const std::vector<bool>& contact) {
  GaitEventTrack track;
  for (std::size_t i = 1; i < contact.size(); ++i) {
    if (contact[i] == contact[i - 1]) continue;
    track.events.push_back({contact[i] ? GaitEventKind::HC : GaitEventKind::TO, static_cast<std::int64_t>(i)});
  }
  return track;
}

std::vector<TransitionEvent> derive_transition_points(const ModeAnnotation& annotation,
                                                      const GaitEventTrack& events,
                                                      std::int64_t tolerance) {
  std::vector<TransitionEvent> out;
  const auto& segs = annotation.segments;
  for (std::size_t i = 1; i < segs.size(); ++i) {
    const auto kind = find_transition(segs[i - 1].mode, segs[i].mode);
    if (!kind) continue;
    const auto& info = transition_info(*kind);
    const std::int64_t boundary = segs[i].start;

    std::int64_t best = -1;
    std::int64_t best_dist = std::numeric_limits<std::int64_t>::max();
    for (const auto& e : events.events) {
      if (e.kind != info.critical_event) continue;
      const std::int64_t d = e.index > boundary ? e.index - boundary : boundary - e.index;
      if (d < best_dist) {  // earlier event wins ties
        best_dist = d;
        best = e.index;
      }
    }
    if (best < 0 || best_dist > tolerance) {
      throw DataError("unanchored transition " + std::string(info.name) + " at sample " +
                      std::to_string(boundary) + ": no lead " + std::string(event_name(info.critical_event)) +
                      " within tolerance");
    }
    out.push_back({*kind, best, info.critical_event});
  }
  std::sort(out.begin(), out.end(),
            [](const TransitionEvent& a, const TransitionEvent& b) { return a.transition_point < b.transition_point; });
  return out;
}

}  // namespace deepstf
