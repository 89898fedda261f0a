// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "deepstf/error.hpp"

namespace deepstf::nn {

GradCheckResult grad_check(const std::function<double()>& loss, std::span<double> x, std::span<const double> analytic,
                           double h, double floor, std::size_t max_coords) {
  if (analytic.size() != x.size()) throw ShapeError("grad_check: gradient and input sizes differ");
  GradCheckResult r;
  const std::size_t n = x.size();
  const std::size_t step = (max_coords == 0 || max_coords >= n) ? 1 : (n + max_coords - 1) / max_coords;
  for (std::size_t i = 0; i < n; i += step) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = loss();
    x[i] = orig - h;
    const double down = loss();
    x[i] = orig;
    const double num = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor});
    if (rel > r.max_rel_error || r.checked == 0) {
      r.max_rel_error = rel;
      r.worst_index = i;
      r.worst_analytic = a;
      r.worst_numeric = num;
    }
    ++r.checked;
  }
  return r;
}

}  // namespace deepstf::nn
