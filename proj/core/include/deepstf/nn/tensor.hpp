// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "deepstf/error.hpp"

namespace deepstf::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

/// 64-byte aligned storage. Vectorized reductions peel by address, so a fixed
/// base alignment keeps results independent of where buffers land.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// "8x1198x8"
std::string shape_string(const Shape& s);

/// Dense row-major array.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  /// Copy of the values.
  std::vector<T> storage() const { return {data_.begin(), data_.end()}; }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  /// Same data, new shape of equal size.
  void reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
  }
  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  /// Resizes to `shape` (contents unspecified unless the size is unchanged).
  void resize(const Shape& shape) {
    shape_ = shape;
    data_.resize(shape_size(shape_));
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  AlignedVector<T> data_;
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;

  Parameter() = default;
  Parameter(std::string n, const Shape& shape)
      : name(std::move(n)), value(shape), grad(shape), adam_m(shape), adam_v(shape) {}

  void zero_grad() { grad.fill(T(0)); }
};

/// Non-trainable state saved with a model (batch-norm running statistics).
template <typename T>
struct Buffer {
  std::string name;
  Tensor<T> value;
};

void require_shape(const Shape& actual, const Shape& expected, const std::string& what);

}  // namespace deepstf::nn
