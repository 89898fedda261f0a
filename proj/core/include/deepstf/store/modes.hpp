// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace deepstf {

// The integer value of a mode is its label index and its softmax index.
enum class LocomotionMode : std::uint8_t {
  ST = 0,  // standing
  O = 1,   // obstacle
  W = 2,   // level walking
  SA = 3,  // stair ascent
  SD = 4,  // stair descent
  RA = 5,  // ramp ascent
  RD = 6,  // ramp descent
  BS = 7,  // back stepping
  SS = 8,  // side stepping
};

inline constexpr std::size_t kModeCount = 9;

enum class GaitEventKind : std::uint8_t { HC = 0, TO = 1 };

enum class TransitionKind : std::uint8_t {
  W_O = 0,
  O_W,
  W_SA,
  SA_W,
  W_SD,
  SD_W,
  W_RA,
  RA_W,
  W_RD,
  RD_W,
  W_ST,
  ST_W,
  ST_SS,
  ST_BS,
  ST_O,
};

inline constexpr std::size_t kTransitionKindCount = 15;

struct TransitionInfo {
  TransitionKind kind;
  LocomotionMode from;
  LocomotionMode to;
  // Lead-leg gait event that marks the transition point.
  GaitEventKind critical_event;
  std::string_view name;
};

std::string_view mode_name(LocomotionMode mode);
std::optional<LocomotionMode> mode_from_name(std::string_view name);
/// Throws DataError for values outside 0..8.
LocomotionMode mode_from_index(std::int64_t index);
constexpr std::size_t mode_index(LocomotionMode mode) { return static_cast<std::size_t>(mode); }

std::string_view event_name(GaitEventKind kind);

std::span<const TransitionInfo> transition_table();
const TransitionInfo& transition_info(TransitionKind kind);
TransitionKind transition_from_index(std::int64_t index);
std::optional<TransitionKind> find_transition(LocomotionMode from, LocomotionMode to);
std::optional<TransitionKind> transition_from_name(std::string_view name);

enum class TaskKind : std::uint8_t { Main = 0, BackStep = 1, SideStep = 2 };

std::string_view task_name(TaskKind task);
std::optional<TaskKind> task_from_name(std::string_view name);

/// One element of a task: either a steady mode (from == to) or a switch between
/// two modes. A switch carries a TransitionKind when it is one of the 15
/// anchored transitions; the closing obstacle-to-standing switch has none.
struct ParadigmElement {
  LocomotionMode from;
  LocomotionMode to;
  std::optional<TransitionKind> transition;

  bool is_switch() const { return from != to; }
};

struct ParadigmTask {
  TaskKind task;
  std::vector<ParadigmElement> elements;

  /// The steady modes in order, i.e. the annotation segment sequence.
  std::vector<LocomotionMode> modes() const;
};

/// The continuous walking circuit (both directions, turn-back excised) plus
/// the back-stepping and side-stepping tasks.
std::vector<ParadigmTask> mode_sequence_of_paradigm();

const ParadigmTask& paradigm_task(TaskKind task);

/// Throws ConfigError unless the task alternates steady/switch elements with
/// consistent endpoints.
void validate_paradigm(const ParadigmTask& task);

}  // namespace deepstf
