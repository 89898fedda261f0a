// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace deepstf {

// Binary container shared by trial, window-cache and checkpoint files:
//
//   "DSTF"             magic
//   u32                format version
//   u32 + bytes        kind ("trial", "checkpoint", ...)
//   u64 + bytes        metadata (JSON text)
//   u32                array count
//   per array:         u32 + bytes name, u8 dtype, u8 rank, u64[rank] dims, payload
//
// All integers and payloads are little-endian.

inline constexpr std::uint32_t kContainerVersion = 1;

enum class ArrayType : std::uint8_t { Float32 = 1, Int64 = 2 };

struct NamedArray {
  std::string name;
  ArrayType type = ArrayType::Float32;
  std::vector<std::uint64_t> shape;
  std::vector<float> f32;
  std::vector<std::int64_t> i64;

  std::size_t element_count() const;
  bool operator==(const NamedArray&) const = default;
};

class Container {
 public:
  Container() = default;
  explicit Container(std::string kind) : kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }
  const std::string& metadata() const { return metadata_; }
  void set_metadata(std::string json_text) { metadata_ = std::move(json_text); }

  void add_f32(std::string name, std::vector<std::uint64_t> shape, std::vector<float> values);
  void add_i64(std::string name, std::vector<std::uint64_t> shape, std::vector<std::int64_t> values);

  bool contains(std::string_view name) const;
  /// Throws DataError if the array is missing or has the wrong type.
  const NamedArray& f32(std::string_view name) const;
  const NamedArray& i64(std::string_view name) const;
  const std::vector<NamedArray>& arrays() const { return arrays_; }

  std::vector<std::uint8_t> to_bytes() const;
  static Container from_bytes(std::span<const std::uint8_t> bytes);

  bool operator==(const Container&) const = default;

 private:
  const NamedArray& find(std::string_view name, ArrayType type) const;

  std::string kind_;
  std::string metadata_ = "{}";
  std::vector<NamedArray> arrays_;
};

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

void write_container(const Container& container, const std::filesystem::path& path);
Container read_container(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

}  // namespace deepstf
