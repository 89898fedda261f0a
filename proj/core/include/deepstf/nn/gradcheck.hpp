// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace deepstf::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares `analytic` against central differences of `loss` with respect to
/// each coordinate of `x` (perturbed in place and restored).
/// rel = |a - n| / max(|a|, |n|, floor). `max_coords` > 0 checks an evenly
/// strided subset.
GradCheckResult grad_check(const std::function<double()>& loss, std::span<double> x, std::span<const double> analytic,
                           double h = 1e-5, double floor = 1e-6, std::size_t max_coords = 0);

}  // namespace deepstf::nn
