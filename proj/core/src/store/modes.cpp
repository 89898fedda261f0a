// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/store/modes.hpp"

#include <string>

#include "deepstf/error.hpp"

namespace deepstf {
namespace {

using M = LocomotionMode;
using E = GaitEventKind;
using K = TransitionKind;

constexpr std::array<std::string_view, kModeCount> kModeNames = {"ST", "O",  "W",  "SA", "SD",
                                                                  "RA", "RD", "BS", "SS"};

constexpr std::array<TransitionInfo, kTransitionKindCount> kTransitions = {{
    {K::W_O, M::W, M::O, E::HC, "W->O"},
    {K::O_W, M::O, M::W, E::HC, "O->W"},
    {K::W_SA, M::W, M::SA, E::HC, "W->SA"},
    {K::SA_W, M::SA, M::W, E::HC, "SA->W"},
    {K::W_SD, M::W, M::SD, E::HC, "W->SD"},
    {K::SD_W, M::SD, M::W, E::HC, "SD->W"},
    {K::W_RA, M::W, M::RA, E::HC, "W->RA"},
    {K::RA_W, M::RA, M::W, E::HC, "RA->W"},
    {K::W_RD, M::W, M::RD, E::HC, "W->RD"},
    {K::RD_W, M::RD, M::W, E::HC, "RD->W"},
    {K::W_ST, M::W, M::ST, E::HC, "W->ST"},
    {K::ST_W, M::ST, M::W, E::TO, "ST->W"},
    {K::ST_SS, M::ST, M::SS, E::TO, "ST->SS"},
    {K::ST_BS, M::ST, M::BS, E::TO, "ST->BS"},
    {K::ST_O, M::ST, M::O, E::TO, "ST->O"},
}};

std::vector<ParadigmElement> chain(std::initializer_list<LocomotionMode> modes) {
  std::vector<ParadigmElement> out;
  const M* prev = nullptr;
  for (const M& m : modes) {
    if (prev != nullptr) out.push_back({*prev, m, find_transition(*prev, m)});
    out.push_back({m, m, std::nullopt});
    prev = &m;
  }
  return out;
}

std::vector<ParadigmTask> build_paradigm() {
  // Outbound leg ends standing; after the (unrecorded) turn the return leg
  // starts from the same standing segment.
  return {
      {TaskKind::Main, chain({M::ST, M::O, M::W, M::SA, M::W, M::RD, M::W, M::ST, M::W, M::RA,
                              M::W, M::SD, M::W, M::O, M::ST})},
      {TaskKind::BackStep, chain({M::ST, M::BS})},
      {TaskKind::SideStep, chain({M::ST, M::SS})},
  };
}

}  // namespace

std::string_view mode_name(LocomotionMode mode) { return kModeNames.at(mode_index(mode)); }

std::optional<LocomotionMode> mode_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kModeCount; ++i) {
    if (kModeNames[i] == name) return static_cast<LocomotionMode>(i);
  }
  return std::nullopt;
}

LocomotionMode mode_from_index(std::int64_t index) {
  if (index < 0 || index >= static_cast<std::int64_t>(kModeCount)) {
    throw DataError("mode index out of range: " + std::to_string(index));
  }
  return static_cast<LocomotionMode>(index);
}

std::string_view event_name(GaitEventKind kind) { return kind == GaitEventKind::HC ? "HC" : "TO"; }

std::span<const TransitionInfo> transition_table() { return kTransitions; }

const TransitionInfo& transition_info(TransitionKind kind) {
  return kTransitions.at(static_cast<std::size_t>(kind));
}

TransitionKind transition_from_index(std::int64_t index) {
  if (index < 0 || index >= static_cast<std::int64_t>(kTransitionKindCount)) {
    throw DataError("transition kind out of range: " + std::to_string(index));
  }
  return static_cast<TransitionKind>(index);
}

std::optional<TransitionKind> find_transition(LocomotionMode from, LocomotionMode to) {
  for (const auto& t : kTransitions) {
    if (t.from == from && t.to == to) return t.kind;
  }
  return std::nullopt;
}

std::optional<TransitionKind> transition_from_name(std::string_view name) {
  for (const auto& t : kTransitions) {
    if (t.name == name) return t.kind;
  }
  return std::nullopt;
}

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::Main:
      return "main";
    case TaskKind::BackStep:
      return "back-step";
    case TaskKind::SideStep:
      return "side-step";
  }
  return "unknown";
}

std::optional<TaskKind> task_from_name(std::string_view name) {
  for (TaskKind t : {TaskKind::Main, TaskKind::BackStep, TaskKind::SideStep}) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::vector<LocomotionMode> ParadigmTask::modes() const {
  std::vector<LocomotionMode> out;
  for (const auto& e : elements) {
    if (!e.is_switch()) out.push_back(e.from);
  }
  return out;
}

std::vector<ParadigmTask> mode_sequence_of_paradigm() { return build_paradigm(); }

const ParadigmTask& paradigm_task(TaskKind task) {
  static const std::vector<ParadigmTask> tasks = build_paradigm();
  return tasks.at(static_cast<std::size_t>(task));
}

void validate_paradigm(const ParadigmTask& task) {
  const auto& el = task.elements;
  if (el.empty() || el.front().is_switch() || el.back().is_switch()) {
    throw ConfigError("paradigm must start and end with a steady mode");
  }
  for (std::size_t i = 0; i < el.size(); ++i) {
    const bool expect_switch = (i % 2) == 1;
    if (el[i].is_switch() != expect_switch) {
      throw ConfigError("paradigm must alternate steady modes and switches");
    }
    if (expect_switch) {
      if (el[i].from != el[i - 1].to || el[i].to != el[i + 1].from) {
        throw ConfigError("paradigm switch endpoints do not match adjacent modes");
      }
      if (el[i].transition && (transition_info(*el[i].transition).from != el[i].from ||
                               transition_info(*el[i].transition).to != el[i].to)) {
        throw ConfigError("paradigm switch carries a mismatched transition kind");
      }
    }
  }
}

}  // namespace deepstf
