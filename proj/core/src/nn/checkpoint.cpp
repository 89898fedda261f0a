// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/nn/checkpoint.hpp"

#include <cstring>

#include "deepstf/error.hpp"

namespace deepstf::nn {
namespace {

std::vector<std::uint64_t> dims(const Shape& s) { return {s.begin(), s.end()}; }

void load_into(const Container& c, const std::string& name, Tensor<float>& dst) {
  const NamedArray& a = c.f32(name);
  if (a.shape != dims(dst.shape())) {
    throw DataError("checkpoint: shape mismatch for '" + name + "': stored " +
                    shape_string(Shape(a.shape.begin(), a.shape.end())) + ", model " + shape_string(dst.shape()));
  }
  std::copy(a.f32.begin(), a.f32.end(), dst.data());
}

}  // namespace

void add_parameters(Container& c, const ParameterList<float>& list, bool with_moments) {
  for (const auto* p : list.params) {
    c.add_f32(p->name, dims(p->value.shape()), p->value.storage());
    if (with_moments) {
      c.add_f32(p->name + ".adam_m", dims(p->adam_m.shape()), p->adam_m.storage());
      c.add_f32(p->name + ".adam_v", dims(p->adam_v.shape()), p->adam_v.storage());
    }
  }
  for (const auto* b : list.buffers) c.add_f32(b->name, dims(b->value.shape()), b->value.storage());
}

void load_parameters(const Container& c, const ParameterList<float>& list) {
  for (auto* p : list.params) {
    load_into(c, p->name, p->value);
    if (c.contains(p->name + ".adam_m")) {
      load_into(c, p->name + ".adam_m", p->adam_m);
      load_into(c, p->name + ".adam_v", p->adam_v);
    }
  }
  for (auto* b : list.buffers) load_into(c, b->name, b->value);
}

std::string parameter_digest(const ParameterList<float>& list) {
  std::string bytes;
  auto append = [&](const Tensor<float>& t) {
    const std::size_t off = bytes.size();
    bytes.resize(off + t.size() * sizeof(float));
    std::memcpy(bytes.data() + off, t.data(), t.size() * sizeof(float));
  };
  for (const auto* p : list.params) append(p->value);
  for (const auto* b : list.buffers) append(b->value);
  return hex64(fnv1a64(bytes));
}

}  // namespace deepstf::nn
