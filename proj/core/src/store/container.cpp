// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/store/container.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "deepstf/error.hpp"

namespace deepstf {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'D', 'S', 'T', 'F'};

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    return value;
  } else {
    std::array<std::uint8_t, sizeof(T)> b;
    std::memcpy(b.data(), &value, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&value, b.data(), sizeof(T));
    return value;
  }
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    value = to_little(value);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_string32(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_string64(std::string_view s) {
    put(static_cast<std::uint64_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  template <typename T>
  void put_span(std::span<const T> values) {
    for (T v : values) put(v);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("container: unexpected end of data");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(value);
  }
  std::string get_string(std::uint64_t size) {
    need(size);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), size);
    pos_ += size;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::size_t product(const std::vector<std::uint64_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::uint64_t b) { return a * b; });
}

}  // namespace

std::size_t NamedArray::element_count() const { return product(shape); }

void Container::add_f32(std::string name, std::vector<std::uint64_t> shape, std::vector<float> values) {
  if (product(shape) != values.size()) throw DataError("container: array '" + name + "' size mismatch");
  if (contains(name)) throw DataError("container: duplicate array '" + name + "'");
  arrays_.push_back({std::move(name), ArrayType::Float32, std::move(shape), std::move(values), {}});
}

void Container::add_i64(std::string name, std::vector<std::uint64_t> shape,
                        std::vector<std::int64_t> values) {
  if (product(shape) != values.size()) throw DataError("container: array '" + name + "' size mismatch");
  if (contains(name)) throw DataError("container: duplicate array '" + name + "'");
  arrays_.push_back({std::move(name), ArrayType::Int64, std::move(shape), {}, std::move(values)});
}

bool Container::contains(std::string_view name) const {
  return std::any_of(arrays_.begin(), arrays_.end(), [&](const NamedArray& a) { return a.name == name; });
}

const NamedArray& Container::find(std::string_view name, ArrayType type) const {
  for (const auto& a : arrays_) {
    if (a.name == name) {
      if (a.type != type) throw DataError("container: array '" + std::string(name) + "' has wrong type");
      return a;
    }
  }
  throw DataError("container: missing array '" + std::string(name) + "'");
}

const NamedArray& Container::f32(std::string_view name) const { return find(name, ArrayType::Float32); }
const NamedArray& Container::i64(std::string_view name) const { return find(name, ArrayType::Int64); }

std::vector<std::uint8_t> Container::to_bytes() const {
  Writer w;
  for (auto b : kMagic) w.put(b);
  w.put(kContainerVersion);
  w.put_string32(kind_);
  w.put_string64(metadata_);
  w.put(static_cast<std::uint32_t>(arrays_.size()));
  for (const auto& a : arrays_) {
    w.put_string32(a.name);
    w.put(static_cast<std::uint8_t>(a.type));
    w.put(static_cast<std::uint8_t>(a.shape.size()));
    for (auto d : a.shape) w.put(d);
    if (a.type == ArrayType::Float32) {
      w.put_span<float>(a.f32);
    } else {
      w.put_span<std::int64_t>(a.i64);
    }
  }
  return w.take();
}

Container Container::from_bytes(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (auto b : kMagic) {
    if (r.get<std::uint8_t>() != b) throw DataError("container: bad magic bytes");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kContainerVersion) {
    throw DataError("container: version mismatch (file " + std::to_string(version) + ", expected " +
                    std::to_string(kContainerVersion) + ")");
  }
  Container c(r.get_string(r.get<std::uint32_t>()));
  c.metadata_ = r.get_string(r.get<std::uint64_t>());
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.get_string(r.get<std::uint32_t>());
    const auto type = r.get<std::uint8_t>();
    if (type != static_cast<std::uint8_t>(ArrayType::Float32) &&
        type != static_cast<std::uint8_t>(ArrayType::Int64)) {
      throw DataError("container: array '" + a.name + "' has unknown dtype");
    }
    a.type = static_cast<ArrayType>(type);
    const auto rank = r.get<std::uint8_t>();
    for (std::uint8_t d = 0; d < rank; ++d) a.shape.push_back(r.get<std::uint64_t>());
    const std::size_t n = product(a.shape);
    r.need(n * (a.type == ArrayType::Float32 ? 4 : 8));
    if (a.type == ArrayType::Float32) {
      a.f32.resize(n);
      for (auto& v : a.f32) v = r.get<float>();
    } else {
      a.i64.resize(n);
      for (auto& v : a.i64) v = r.get<std::int64_t>();
    }
    if (c.contains(a.name)) throw DataError("container: duplicate array '" + a.name + "'");
    c.arrays_.push_back(std::move(a));
  }
  if (!r.done()) throw DataError("container: trailing bytes after last array");
  return c;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "': missing file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_container(const Container& container, const std::filesystem::path& path) {
  write_file_bytes(path, container.to_bytes());
}

Container read_container(const std::filesystem::path& path) {
  return Container::from_bytes(read_file_bytes(path));
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) {
  return fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return s;
}

}  // namespace deepstf
