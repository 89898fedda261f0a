// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/nn/tensor.hpp"

namespace deepstf::nn {

std::string shape_string(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out.empty() ? "scalar" : out;
}

void require_shape(const Shape& actual, const Shape& expected, const std::string& what) {
  if (actual != expected) {
    throw ShapeError(what + ": expected " + shape_string(expected) + ", got " + shape_string(actual));
  }
}

}  // namespace deepstf::nn
