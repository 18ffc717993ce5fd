// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "molgraph/autodiff/tensor.hpp"
#include "molgraph/error.hpp"

namespace molgraph {

static_assert(std::endian::native == std::endian::little, "blob format assumes a little-endian host");

/// Append-only little-endian byte buffer.
class BlobWriter {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_doubles(const std::vector<double>& xs) {
    const auto* p = reinterpret_cast<const char*>(xs.data());
    bytes_.insert(bytes_.end(), p, p + xs.size() * sizeof(double));
  }
  [[nodiscard]] const std::vector<char>& bytes() const noexcept { return bytes_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
  }

 private:
  std::vector<char> bytes_;
};

class BlobReader {
 public:
  explicit BlobReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  static BlobReader load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return BlobReader(std::move(b));
  }

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> get_doubles(std::size_t n) {
    need(n * sizeof(double));
    std::vector<double> xs(n);
    std::memcpy(xs.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return xs;
  }
  [[nodiscard]] bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error("truncated blob");
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

inline constexpr std::uint32_t kParamBlobMagic = 0x4250474d;  // "MGPB"
inline constexpr std::uint32_t kParamBlobVersion = 1;

struct NamedMatrix {
  std::string name;
  ad::Matrix value;
};

inline BlobWriter param_blob(const std::vector<NamedMatrix>& params) {
  BlobWriter w;
  w.put(kParamBlobMagic);
  w.put(kParamBlobVersion);
  w.put(static_cast<std::uint64_t>(params.size()));
  for (const auto& p : params) {
    w.put_string(p.name);
    w.put(static_cast<std::uint64_t>(p.value.rows));
    w.put(static_cast<std::uint64_t>(p.value.cols));
    w.put_doubles(p.value.data);
  }
  return w;
}

inline std::vector<NamedMatrix> read_param_blob(BlobReader r) {
  if (r.get<std::uint32_t>() != kParamBlobMagic) throw Error("not a parameter blob");
  if (const auto v = r.get<std::uint32_t>(); v != kParamBlobVersion)
    throw Error("unsupported parameter blob version " + std::to_string(v));
  const auto n = r.get<std::uint64_t>();
  std::vector<NamedMatrix> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    NamedMatrix p;
    p.name = r.get_string();
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    p.value = ad::Matrix(rows, cols, r.get_doubles(rows * cols));
    out.push_back(std::move(p));
  }
  if (!r.at_end()) throw Error("trailing bytes in parameter blob");
  return out;
}

}  // namespace molgraph
