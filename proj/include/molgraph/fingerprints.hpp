// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "molgraph/error.hpp"
#include "molgraph/feature_table.hpp"
#include "molgraph/graph.hpp"
#include "molgraph/hash.hpp"
#include "molgraph/subgraph.hpp"

namespace molgraph {

inline std::uint64_t feature_row_hash(std::span<const std::int32_t> row, std::uint64_t seed) {
  return StableHasher(seed).add_range(row).digest();
}

// ---------------------------------------------------------------------------
// Circular (Morgan-style) fingerprint

struct CircularFPSpec {
  std::int32_t radius = 2;
  std::int32_t bits_per_radius = 2048;
  bool counted = false;
  std::uint64_t seed = kDefaultHashSeed;

  [[nodiscard]] std::size_t length() const {
    return static_cast<std::size_t>(radius + 1) * static_cast<std::size_t>(bits_per_radius);
  }
  void validate() const {
    if (radius < 0) throw Error("circular fingerprint radius must be non-negative");
    if (bits_per_radius < 1) throw Error("bits_per_radius must be positive");
  }
};

/// Unfolded identifiers, ids[k][v] for level k in [0, radius].
inline std::vector<std::vector<std::uint64_t>> circular_identifiers(const Graph& g, std::int32_t radius,
                                                                     std::uint64_t seed = kDefaultHashSeed) {
  const auto n = static_cast<std::size_t>(g.node_count());
  std::vector<std::vector<std::uint64_t>> ids(static_cast<std::size_t>(radius) + 1, std::vector<std::uint64_t>(n));
  for (NodeId v = 0; v < g.node_count(); ++v) ids[0][v] = feature_row_hash(g.feature_row(v), seed);
  std::vector<std::uint64_t> nbr;
  for (std::int32_t k = 0; k < radius; ++k) {
    for (NodeId v = 0; v < g.node_count(); ++v) {
      nbr.clear();
      for (NodeId u : g.neighbors(v)) nbr.push_back(ids[k][u]);
      std::sort(nbr.begin(), nbr.end());
      StableHasher h(seed);
      h.add(ids[k][v]).add_range(std::span<const std::uint64_t>(nbr));
      ids[k + 1][v] = h.digest();
    }
  }
  return ids;
}

/// One segment of `bits_per_radius` slots per level; identifiers fold
/// modulo the segment width.
inline std::vector<double> circular_fingerprint(const Graph& g, const CircularFPSpec& spec) {
  spec.validate();
  auto ids = circular_identifiers(g, spec.radius, spec.seed);
  std::vector<double> fp(spec.length(), 0.0);
  const auto bits = static_cast<std::uint64_t>(spec.bits_per_radius);
  for (std::size_t k = 0; k < ids.size(); ++k)
    for (std::uint64_t id : ids[k]) {
      double& slot = fp[k * bits + id % bits];
      slot = spec.counted ? slot + 1.0 : 1.0;
    }
  return fp;
}

// ---------------------------------------------------------------------------
// Path (RDKit-style) fingerprint

struct PathFPSpec {
  std::int32_t max_path_len = 5;
  std::int32_t n_bits = 2048;
  bool counted = false;
  std::uint64_t seed = kDefaultHashSeed;
  std::uint64_t max_paths = 10'000'000;

  void validate() const {
    if (max_path_len < 1) throw Error("max_path_len must be at least 1");
    if (n_bits < 1) throw Error("n_bits must be positive");
  }
};

/// Canonical key of every simple path with 1..max_path_len edges, counted
/// once per undirected path. Node tokens combine feature row and degree.
inline std::map<std::uint64_t, std::uint64_t> path_keys(const Graph& g, const PathFPSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(g.node_count());
  std::vector<std::uint64_t> token(n);
  for (NodeId v = 0; v < g.node_count(); ++v)
    token[v] = StableHasher(spec.seed).add(feature_row_hash(g.feature_row(v), spec.seed))
                   .add(static_cast<std::uint64_t>(g.degree(v)))
                   .digest();

  std::map<std::uint64_t, std::uint64_t> keys;
  std::vector<NodeId> path;
  std::vector<char> on_path(n, 0);
  std::uint64_t visited = 0;
  auto key_of = [&]() {
    StableHasher fwd(spec.seed), rev(spec.seed);
    for (std::size_t i = 0; i < path.size(); ++i) {
      fwd.add(token[path[i]]);
      rev.add(token[path[path.size() - 1 - i]]);
    }
    return std::min(fwd.digest(), rev.digest());
  };
  auto extend = [&](auto&& self) -> void {
    if (++visited > spec.max_paths)
      throw Error("path enumeration exceeded " + std::to_string(spec.max_paths) + " paths on graph '" + g.id() +
                  "' (" + std::to_string(g.node_count()) + " nodes)");
    if (path.size() >= 2 && path.front() < path.back()) ++keys[key_of()];
    if (static_cast<std::int32_t>(path.size()) - 1 >= spec.max_path_len) return;
    for (NodeId u : g.neighbors(path.back())) {
      if (on_path[u]) continue;
      on_path[u] = 1;
      path.push_back(u);
      self(self);
      path.pop_back();
      on_path[u] = 0;
    }
  };
  for (NodeId s = 0; s < g.node_count(); ++s) {
    path.assign(1, s);
    on_path[s] = 1;
    extend(extend);
    on_path[s] = 0;
  }
  return keys;
}

inline std::vector<double> path_fingerprint(const Graph& g, const PathFPSpec& spec) {
  std::vector<double> fp(static_cast<std::size_t>(spec.n_bits), 0.0);
  for (auto [key, count] : path_keys(g, spec)) {
    double& slot = fp[key % static_cast<std::uint64_t>(spec.n_bits)];
    slot = spec.counted ? slot + static_cast<double>(count) : 1.0;
  }
  return fp;
}

// ---------------------------------------------------------------------------
// Structural keys

struct StructuralKeySet {
  std::vector<std::string> names;
  std::vector<Graph> patterns;

  [[nodiscard]] std::size_t size() const noexcept { return patterns.size(); }

  void validate() const {
    if (names.size() != patterns.size()) throw Error("structural key names and patterns differ in length");
    for (std::size_t i = 0; i < patterns.size(); ++i)
      if (patterns[i].node_count() > 8) throw Error("structural key '" + names[i] + "' has more than 8 nodes");
  }
};

namespace keys_detail {

inline Graph path_pattern(std::int32_t nodes) {
  std::vector<Edge> e;
  for (NodeId v = 0; v + 1 < nodes; ++v) e.emplace_back(v, v + 1);
  return Graph::with_labels(std::vector<std::int32_t>(static_cast<std::size_t>(nodes), -1), std::move(e));
}
inline Graph cycle_pattern(std::int32_t nodes) {
  std::vector<Edge> e;
  for (NodeId v = 0; v < nodes; ++v) e.emplace_back(v, (v + 1) % nodes);
  return Graph::with_labels(std::vector<std::int32_t>(static_cast<std::size_t>(nodes), -1), std::move(e));
}
inline Graph star_pattern(std::int32_t leaves) {
  std::vector<Edge> e;
  for (NodeId v = 1; v <= leaves; ++v) e.emplace_back(0, v);
  return Graph::with_labels(std::vector<std::int32_t>(static_cast<std::size_t>(leaves) + 1, -1), std::move(e));
}

}  // namespace keys_detail

/// Default 24-key library over single-column categorical graphs:
/// unlabeled paths, cycles, stars and a diamond, plus label-constrained
/// atoms, bonds and small label motifs. Wildcard (-1) matches anything.
inline StructuralKeySet default_structural_keys() {
  using namespace keys_detail;
  StructuralKeySet k;
  auto add = [&](std::string name, Graph g) {
    k.names.push_back(std::move(name));
    k.patterns.push_back(std::move(g));
  };
  for (std::int32_t nodes = 2; nodes <= 6; ++nodes) add("path" + std::to_string(nodes), path_pattern(nodes));
  for (std::int32_t nodes = 3; nodes <= 6; ++nodes) add("cycle" + std::to_string(nodes), cycle_pattern(nodes));
  add("star3", star_pattern(3));
  add("star4", star_pattern(4));
  add("diamond", Graph::with_labels({-1, -1, -1, -1}, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}}));
  for (std::int32_t l = 0; l < 4; ++l) add("atom" + std::to_string(l), Graph::with_labels({l}, {}));
  for (auto [a, b] : std::vector<Edge>{{0, 0}, {0, 1}, {1, 1}, {0, 2}, {1, 2}, {2, 2}})
    add("bond" + std::to_string(a) + std::to_string(b), Graph::with_labels({a, b}, {{0, 1}}));
  add("bridge0x0", Graph::with_labels({0, -1, 0}, {{0, 1}, {1, 2}}));
  add("ring3_with0", Graph::with_labels({0, -1, -1}, {{0, 1}, {0, 2}, {1, 2}}));
  return k;
}

/// Bit i set iff pattern i embeds in g. Oversized patterns give 0.
inline std::vector<double> structural_keys(const Graph& g, const StructuralKeySet& keys) {
  std::vector<double> out(keys.size(), 0.0);
  for (std::size_t i = 0; i < keys.size(); ++i) out[i] = contains_subgraph(g, keys.patterns[i]) ? 1.0 : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Concatenation and tables

inline std::vector<double> concat_fingerprints(std::span<const std::vector<double>> parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<double> out;
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

/// Which fingerprint blocks to compute, in circular, path, keys order.
struct FingerprintConfig {
  std::optional<CircularFPSpec> circular;
  std::optional<PathFPSpec> path;
  std::optional<StructuralKeySet> keys;

  [[nodiscard]] std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    if (circular)
      for (std::int32_t k = 0; k <= circular->radius; ++k)
        for (std::int32_t b = 0; b < circular->bits_per_radius; ++b)
          names.push_back("circ_r" + std::to_string(k) + "_" + std::to_string(b));
    if (path)
      for (std::int32_t b = 0; b < path->n_bits; ++b) names.push_back("path_" + std::to_string(b));
    if (keys)
      for (const auto& n : keys->names) names.push_back("key_" + n);
    return names;
  }
};

inline std::vector<double> fingerprint(const Graph& g, const FingerprintConfig& cfg) {
  std::vector<std::vector<double>> parts;
  if (cfg.circular) parts.push_back(circular_fingerprint(g, *cfg.circular));
  if (cfg.path) parts.push_back(path_fingerprint(g, *cfg.path));
  if (cfg.keys) parts.push_back(structural_keys(g, *cfg.keys));
  return concat_fingerprints(parts);
}

inline FeatureTable fingerprint_table(std::span<const Graph> graphs, const FingerprintConfig& cfg) {
  FeatureTable t(0, cfg.column_names());
  for (const auto& g : graphs) t.push_row(fingerprint(g, cfg));
  return t;
}

// ---------------------------------------------------------------------------
// Constant / correlated column pruning

/// Column mask fit on training rows; replays on any table of the same width.
struct PruneMask {
  std::vector<bool> keep;
  std::vector<std::string> names;
  std::uint64_t fit_hash = 0;
  double threshold = 0.95;

  [[nodiscard]] std::size_t kept() const { return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true)); }

  [[nodiscard]] FeatureTable apply(const FeatureTable& t) const {
    if (t.names() != names) throw ShapeError("feature table columns differ from the pruning fit");
    return t.select_columns(keep);
  }
};

namespace prune_detail {

struct ColumnStats {
  std::vector<double> values;            // training rows, dense
  std::vector<std::uint32_t> nonzeros;   // row positions with value != 0
  double mean = 0.0;
  double sxx = 0.0;                      // sum of squared deviations
  bool binary = false;
  bool sparse = false;
};

inline double centered_cross(const ColumnStats& x, const ColumnStats& y, std::size_t n) {
  if (x.sparse || y.sparse) {
    const ColumnStats& s = x.nonzeros.size() <= y.nonzeros.size() ? x : y;
    const ColumnStats& d = &s == &x ? y : x;
    double sxy = 0.0;
    for (auto r : s.nonzeros) sxy += s.values[r] * d.values[r];
    return sxy - static_cast<double>(n) * x.mean * y.mean;
  }
  double c = 0.0;
  for (std::size_t r = 0; r < n; ++r) c += (x.values[r] - x.mean) * (y.values[r] - y.mean);
  return c;
}

// Upper bound on |r| between two 0/1 columns from their counts alone.
inline double binary_r_bound(double a, double b, double n) {
  const double denom = std::sqrt(a * (n - a) * b * (n - b));
  const double o_hi = std::min(a, b), o_lo = std::max(0.0, a + b - n);
  return std::max(std::abs(n * o_hi - a * b), std::abs(n * o_lo - a * b)) / denom;
}

}  // namespace prune_detail

/// Drops zero-variance columns, then scans left to right dropping any
/// column with |Pearson r| >= threshold against an already kept column.
/// Statistics use only `train_rows`.
inline PruneMask fit_prune_mask(const FeatureTable& table, std::span<const std::size_t> train_rows,
                                double threshold = 0.95) {
  using prune_detail::ColumnStats;
  const std::size_t n = train_rows.size();
  const std::size_t p = table.cols();
  PruneMask mask;
  mask.names = table.names();
  mask.keep.assign(p, false);
  mask.fit_hash = index_set_hash(train_rows);
  mask.threshold = threshold;
  if (n == 0) throw Error("cannot fit a pruning mask on zero training rows");

  std::vector<ColumnStats> kept;
  for (std::size_t c = 0; c < p; ++c) {
    ColumnStats s;
    s.values.resize(n);
    bool constant = true, binary = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = table.at(train_rows[i], c);
      s.values[i] = x;
      if (x != s.values[0]) constant = false;
      if (x != 0.0 && x != 1.0) binary = false;
      if (x != 0.0) s.nonzeros.push_back(static_cast<std::uint32_t>(i));
    }
    if (constant) continue;
    double sum = 0.0;
    for (double x : s.values) sum += x;
    s.mean = sum / static_cast<double>(n);
    for (double x : s.values) s.sxx += (x - s.mean) * (x - s.mean);
    if (!(s.sxx > 0.0)) continue;
    s.binary = binary;
    s.sparse = s.nonzeros.size() * 4 <= n;

    bool drop = false;
    for (const auto& k : kept) {
      if (s.binary && k.binary &&
          prune_detail::binary_r_bound(static_cast<double>(s.nonzeros.size()), static_cast<double>(k.nonzeros.size()),
                                       static_cast<double>(n)) < threshold)
        continue;
      const double r = prune_detail::centered_cross(s, k, n) / std::sqrt(s.sxx * k.sxx);
      if (std::abs(r) >= threshold) {
        drop = true;
        break;
      }
    }
    if (drop) continue;
    mask.keep[c] = true;
    kept.push_back(std::move(s));
  }
  return mask;
}

}  // namespace molgraph
