// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <numeric>
#include <vector>

#include "molgraph/graph.hpp"
#include "molgraph/rng.hpp"

namespace molgraph::testing {

/// G(n, p) with `arity` categorical columns drawn from [0, n_labels).
inline Graph random_graph(Rng& rng, std::int32_t n, double p, std::int32_t n_labels = 3, std::int32_t arity = 1,
                          std::optional<double> y = std::nullopt) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
  std::vector<std::int32_t> x(static_cast<std::size_t>(n) * arity);
  for (auto& c : x) c = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n_labels)));
  return Graph(n, std::move(edges), std::move(x), arity, y);
}

/// Random connected graph: random tree plus G(n, p) extras.
inline Graph random_connected_graph(Rng& rng, std::int32_t n, double p, std::int32_t n_labels = 3) {
  std::vector<Edge> edges;
  for (NodeId v = 1; v < n; ++v) edges.emplace_back(static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(v))), v);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) {
      bool present = false;
      for (auto [a, b] : edges) present = present || (std::min(a, b) == u && std::max(a, b) == v);
      if (!present && rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  std::vector<std::int32_t> x(static_cast<std::size_t>(n));
  for (auto& c : x) c = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n_labels)));
  return Graph(n, std::move(edges), std::move(x), 1);
}

inline std::vector<NodeId> random_permutation(Rng& rng, std::int32_t n) {
  std::vector<NodeId> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(p);
  return p;
}

inline Graph path_graph(std::int32_t n) {
  std::vector<Edge> e;
  for (NodeId v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  return Graph(n, e, std::vector<std::int32_t>(static_cast<std::size_t>(n), 0), 1);
}

inline Graph cycle_graph(std::int32_t n) {
  std::vector<Edge> e;
  for (NodeId v = 0; v < n; ++v) e.emplace_back(v, (v + 1) % n);
  return Graph(n, e, std::vector<std::int32_t>(static_cast<std::size_t>(n), 0), 1);
}

/// Star with `leaves` leaves; node 0 is the center.
inline Graph star_graph(std::int32_t leaves) {
  std::vector<Edge> e;
  for (NodeId v = 1; v <= leaves; ++v) e.emplace_back(0, v);
  return Graph(leaves + 1, e, std::vector<std::int32_t>(static_cast<std::size_t>(leaves) + 1, 0), 1);
}

inline Graph complete_graph(std::int32_t n) {
  std::vector<Edge> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return Graph(n, e, std::vector<std::int32_t>(static_cast<std::size_t>(n), 0), 1);
}

/// Small dataset of random graphs with binary labels.
inline Dataset random_dataset(std::uint64_t seed, std::size_t count, std::int32_t min_n, std::int32_t max_n,
                              std::int32_t n_labels = 3, std::int32_t arity = 1, Task task = Task::kBinaryClassification) {
  Rng rng(seed);
  Dataset d;
  d.task = task;
  for (std::int32_t c = 0; c < arity; ++c) d.schema.columns.push_back({"x" + std::to_string(c), n_labels + 1});
  for (std::size_t i = 0; i < count; ++i) {
    const auto n = static_cast<std::int32_t>(rng.uniform_int(min_n, max_n));
    const double y = task == Task::kRegression ? rng.uniform(-1.0, 1.0) : static_cast<double>(i % 2);
    d.graphs.push_back(random_graph(rng, n, 0.35, n_labels, arity, y));
  }
  return d;
}

}  // namespace molgraph::testing
