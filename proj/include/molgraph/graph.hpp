// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "molgraph/error.hpp"
#include "molgraph/hash.hpp"

namespace molgraph {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected simple graph with categorical node features.
///
/// Edges are stored once, smaller endpoint first, sorted. Self-loops are
/// never stored; algorithms that need A + I add the identity themselves.
/// Instances are immutable after construction.
class Graph {
 public:
  Graph() = default;

  /// Validates and canonicalizes. `features` holds `node_count` rows of
  /// `arity` integers, row-major. Throws GraphError on self-loops, duplicate
  /// edges, out-of-range endpoints or a feature block of the wrong size.
  Graph(std::int32_t node_count, std::vector<Edge> edges, std::vector<std::int32_t> features,
        std::int32_t arity, std::optional<double> label = std::nullopt,
        std::optional<std::string> group = std::nullopt, std::string id = {})
      : n_(node_count),
        arity_(arity),
        edges_(std::move(edges)),
        features_(std::move(features)),
        label_(label),
        group_(std::move(group)),
        id_(std::move(id)) {
    if (n_ < 1) throw GraphError("graph must have at least one node");
    if (arity_ < 0) throw GraphError("negative feature arity");
    if (features_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(arity_))
      throw GraphError("feature block has " + std::to_string(features_.size()) +
                       " values, expected " + std::to_string(n_) + " x " + std::to_string(arity_));
    for (auto& [u, v] : edges_) {
      if (u < 0 || v < 0 || u >= n_ || v >= n_)
        throw GraphError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                         ") has an endpoint out of range for " + std::to_string(n_) + " nodes");
      if (u == v) throw GraphError("self-loop on node " + std::to_string(u));
      if (u > v) std::swap(u, v);
    }
    std::sort(edges_.begin(), edges_.end());
    auto dup = std::adjacent_find(edges_.begin(), edges_.end());
    if (dup != edges_.end())
      throw GraphError("duplicate edge (" + std::to_string(dup->first) + "," +
                       std::to_string(dup->second) + ")");
    build_adjacency();
  }

  /// Convenience for single-column features.
  static Graph with_labels(std::vector<std::int32_t> labels, std::vector<Edge> edges,
                           std::optional<double> y = std::nullopt) {
    const auto n = static_cast<std::int32_t>(labels.size());
    return Graph(n, std::move(edges), std::move(labels), 1, y);
  }

  [[nodiscard]] std::int32_t node_count() const noexcept { return n_; }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
  [[nodiscard]] std::int32_t arity() const noexcept { return arity_; }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] std::span<const std::int32_t> features() const noexcept { return features_; }
  [[nodiscard]] std::span<const std::int32_t> feature_row(NodeId v) const noexcept {
    return {features_.data() + static_cast<std::size_t>(v) * arity_, static_cast<std::size_t>(arity_)};
  }
  [[nodiscard]] std::span<const NodeId> neighbors(NodeId v) const noexcept {
    return {adj_.data() + offsets_[v], static_cast<std::size_t>(offsets_[v + 1] - offsets_[v])};
  }
  [[nodiscard]] std::int32_t degree(NodeId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  [[nodiscard]] bool has_edge(NodeId u, NodeId v) const noexcept {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  [[nodiscard]] const std::optional<double>& label() const noexcept { return label_; }
  [[nodiscard]] const std::optional<std::string>& group() const noexcept { return group_; }
  [[nodiscard]] const std::string& id() const noexcept { return id_; }

  /// Same structure, new label/group/id.
  [[nodiscard]] Graph relabeled_target(std::optional<double> y) const {
    Graph g = *this;
    g.label_ = y;
    return g;
  }
  [[nodiscard]] Graph with_meta(std::string id, std::optional<std::string> group) const {
    Graph g = *this;
    g.id_ = std::move(id);
    g.group_ = std::move(group);
    return g;
  }

  /// Node relabeling: node v of this graph becomes node perm[v].
  [[nodiscard]] Graph permuted(std::span<const NodeId> perm) const {
    if (perm.size() != static_cast<std::size_t>(n_)) throw GraphError("permutation size mismatch");
    std::vector<Edge> e;
    e.reserve(edges_.size());
    for (auto [u, v] : edges_) e.emplace_back(perm[u], perm[v]);
    std::vector<std::int32_t> f(features_.size());
    for (NodeId v = 0; v < n_; ++v)
      std::copy_n(features_.begin() + static_cast<std::ptrdiff_t>(v) * arity_, arity_,
                  f.begin() + static_cast<std::ptrdiff_t>(perm[v]) * arity_);
    return Graph(n_, std::move(e), std::move(f), arity_, label_, group_, id_);
  }

  /// Structural equality including features, label and group.
  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.arity_ == b.arity_ && a.edges_ == b.edges_ &&
           a.features_ == b.features_ && a.label_ == b.label_ && a.group_ == b.group_ &&
           a.id_ == b.id_;
  }

 private:
  void build_adjacency() {
    offsets_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (auto [u, v] : edges_) {
      ++offsets_[u + 1];
      ++offsets_[v + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    adj_.resize(edges_.size() * 2);
    std::vector<std::int32_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (auto [u, v] : edges_) {
      adj_[fill[u]++] = v;
      adj_[fill[v]++] = u;
    }
    for (NodeId v = 0; v < n_; ++v) std::sort(adj_.begin() + offsets_[v], adj_.begin() + offsets_[v + 1]);
  }

  std::int32_t n_ = 0;
  std::int32_t arity_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::int32_t> features_;
  std::optional<double> label_;
  std::optional<std::string> group_;
  std::string id_;
  std::vector<std::int32_t> offsets_{0};
  std::vector<NodeId> adj_;
};

enum class Task { kBinaryClassification, kRegression };

inline const char* to_string(Task t) {
  return t == Task::kBinaryClassification ? "binary-classification" : "regression";
}

inline Task parse_task(const std::string& s) {
  if (s == "binary-classification" || s == "classification") return Task::kBinaryClassification;
  if (s == "regression") return Task::kRegression;
  throw Error("unknown task '" + s + "'");
}

/// One categorical feature column. Category `categories - 1` is the
/// overflow ("misc") bucket that absorbs unseen or out-of-range values.
struct FeatureColumn {
  std::string name;
  std::int32_t categories = 2;

  [[nodiscard]] std::int32_t overflow() const noexcept { return categories - 1; }
  [[nodiscard]] std::int32_t encode(std::int32_t value) const noexcept {
    return (value < 0 || value >= overflow()) ? overflow() : value;
  }
};

struct FeatureSchema {
  std::vector<FeatureColumn> columns;

  [[nodiscard]] std::size_t arity() const noexcept { return columns.size(); }
  [[nodiscard]] std::int32_t total_categories() const noexcept {
    std::int32_t t = 0;
    for (const auto& c : columns) t += c.categories;
    return t;
  }

  void validate() const {
    for (const auto& c : columns)
      if (c.categories < 2)
        throw Error("feature column '" + c.name + "' needs at least one regular and one overflow category");
  }

  /// Smallest schema covering the observed values, plus one overflow slot.
  template <class Graphs>
  static FeatureSchema infer(const Graphs& graphs) {
    FeatureSchema s;
    if (graphs.empty()) return s;
    const auto arity = static_cast<std::size_t>(graphs.front().arity());
    std::vector<std::int32_t> max_seen(arity, -1);
    for (const auto& g : graphs)
      for (NodeId v = 0; v < g.node_count(); ++v) {
        auto row = g.feature_row(v);
        for (std::size_t c = 0; c < arity; ++c) max_seen[c] = std::max(max_seen[c], row[c]);
      }
    for (std::size_t c = 0; c < arity; ++c)
      s.columns.push_back({"x" + std::to_string(c), std::max(max_seen[c], 0) + 2});
    return s;
  }

  friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) {
    if (a.columns.size() != b.columns.size()) return false;
    for (std::size_t i = 0; i < a.columns.size(); ++i)
      if (a.columns[i].name != b.columns[i].name || a.columns[i].categories != b.columns[i].categories)
        return false;
    return true;
  }
};

/// Immutable collection of graphs sharing a feature schema and task.
struct Dataset {
  std::vector<Graph> graphs;
  Task task = Task::kBinaryClassification;
  FeatureSchema schema;

  [[nodiscard]] std::size_t size() const noexcept { return graphs.size(); }

  /// Checks arity consistency, schema coverage and label domain.
  void validate() const {
    schema.validate();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      const Graph& g = graphs[i];
      if (static_cast<std::size_t>(g.arity()) != schema.arity())
        throw GraphError("graph " + std::to_string(i) + " has feature arity " + std::to_string(g.arity()) +
                         ", dataset uses " + std::to_string(schema.arity()));
      for (std::int32_t v : g.features())
        if (v < 0) throw GraphError("graph " + std::to_string(i) + " has a negative category value");
      for (NodeId v = 0; v < g.node_count(); ++v) {
        auto row = g.feature_row(v);
        for (std::size_t c = 0; c < row.size(); ++c)
          if (row[c] >= schema.columns[c].categories)
            throw GraphError("graph " + std::to_string(i) + " column " + schema.columns[c].name +
                             " value " + std::to_string(row[c]) + " outside schema");
      }
      if (task == Task::kBinaryClassification && g.label()) {
        double y = *g.label();
        if (y != 0.0 && y != 1.0)
          throw GraphError("graph " + std::to_string(i) + " label " + std::to_string(y) +
                           " is not a binary class index");
      }
    }
  }

  [[nodiscard]] std::vector<double> labels() const {
    std::vector<double> y;
    y.reserve(graphs.size());
    for (const auto& g : graphs) y.push_back(g.label().value_or(0.0));
    return y;
  }

  /// Content hash over structure, features and labels. Embedded in reports.
  [[nodiscard]] std::uint64_t content_hash() const {
    StableHasher h;
    h.add(static_cast<std::uint64_t>(task));
    for (const auto& c : schema.columns) h.add_string(c.name).add(static_cast<std::uint64_t>(c.categories));
    for (const auto& g : graphs) {
      h.add_string(g.id()).add(static_cast<std::uint64_t>(g.node_count()));
      for (auto [u, v] : g.edges()) h.add(static_cast<std::uint64_t>(u)).add(static_cast<std::uint64_t>(v));
      h.add_range(g.features());
      double y = g.label().value_or(std::nan(""));
      std::uint64_t bits = 0;
      static_assert(sizeof bits == sizeof y);
      std::memcpy(&bits, &y, sizeof bits);
      h.add(bits);
      h.add_string(g.group().value_or(""));
    }
    return h.digest();
  }
};

/// Row-compressed D̃^(-1/2) (A + I) D̃^(-1/2). Row v lists v itself and its
/// neighbors in ascending order with weight 1 / sqrt(d̃(u) d̃(v)).
struct NormalizedAdjacency {
  std::vector<std::int32_t> offsets;
  std::vector<NodeId> cols;
  std::vector<double> weights;

  [[nodiscard]] std::int32_t rows() const noexcept { return static_cast<std::int32_t>(offsets.size()) - 1; }
};

struct AdjacencyViews {
  std::vector<std::vector<NodeId>> neighbors;
  std::vector<std::int32_t> degree;
  NormalizedAdjacency normalized;
};

inline NormalizedAdjacency normalized_adjacency(const Graph& g) {
  NormalizedAdjacency s;
  const auto n = g.node_count();
  s.offsets.reserve(static_cast<std::size_t>(n) + 1);
  s.offsets.push_back(0);
  for (NodeId v = 0; v < n; ++v) {
    const double dv = g.degree(v) + 1.0;
    auto nb = g.neighbors(v);
    bool self_done = false;
    auto push = [&](NodeId u) {
      s.cols.push_back(u);
      s.weights.push_back(1.0 / std::sqrt(dv * (g.degree(u) + 1.0)));
    };
    for (NodeId u : nb) {
      if (!self_done && u > v) {
        push(v);
        self_done = true;
      }
      push(u);
    }
    if (!self_done) push(v);
    s.offsets.push_back(static_cast<std::int32_t>(s.cols.size()));
  }
  return s;
}

inline AdjacencyViews adjacency_views(const Graph& g) {
  AdjacencyViews a;
  const auto n = g.node_count();
  a.neighbors.resize(static_cast<std::size_t>(n));
  a.degree.resize(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) {
    auto nb = g.neighbors(v);
    a.neighbors[v].assign(nb.begin(), nb.end());
    a.degree[v] = g.degree(v);
  }
  a.normalized = normalized_adjacency(g);
  return a;
}

}  // namespace molgraph
