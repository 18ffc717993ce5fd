// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>
#include <span>
#include <string_view>

namespace molgraph {

/// Seed used by every fingerprint unless a caller overrides it. Reports
/// record the value so hashed features can be reproduced elsewhere.
inline constexpr std::uint64_t kDefaultHashSeed = 0x6d6f6c6772617068ULL;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded streaming 64-bit hash over integer words. Platform independent:
/// only fixed-width arithmetic is involved.
class StableHasher {
 public:
  explicit constexpr StableHasher(std::uint64_t seed = kDefaultHashSeed) noexcept
      : state_(mix64(seed)) {}

  constexpr StableHasher& add(std::uint64_t word) noexcept {
    state_ = mix64(state_ ^ mix64(word + length_));
    ++length_;
    return *this;
  }

  constexpr StableHasher& add_signed(std::int64_t word) noexcept {
    return add(static_cast<std::uint64_t>(word));
  }

  template <class Int>
  constexpr StableHasher& add_range(std::span<const Int> words) noexcept {
    add(words.size());
    for (Int w : words) add(static_cast<std::uint64_t>(w));
    return *this;
  }

  StableHasher& add_string(std::string_view s) noexcept {
    add(s.size());
    for (unsigned char c : s) add(c);
    return *this;
  }

  [[nodiscard]] constexpr std::uint64_t digest() const noexcept {
    return mix64(state_ ^ (length_ * 0xd6e8feb86659fd93ULL));
  }

 private:
  std::uint64_t state_;
  std::uint64_t length_ = 0;
};

/// Order-independent hash of a row-index set. Every object fitted on a
/// training split carries this value so leakage can be audited.
inline std::uint64_t index_set_hash(std::span<const std::size_t> indices) {
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  StableHasher h(0x7472616e);
  h.add_range(std::span<const std::size_t>(sorted));
  return h.digest();
}

}  // namespace molgraph
