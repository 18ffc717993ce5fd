// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "molgraph/graph.hpp"

namespace molgraph {

/// Label-respecting subgraph monomorphism search (pattern edges must map to
/// host edges; the host may have extra edges). Pattern feature value -1 is
/// a wildcard.
class SubgraphMatcher {
 public:
  SubgraphMatcher(const Graph& pattern, const Graph& host) : p_(pattern), h_(host) {
    order_matching();
  }

  [[nodiscard]] bool exists() {
    if (!feasible()) return false;
    limit_ = 1;
    found_ = 0;
    search(0);
    return found_ > 0;
  }

  /// Number of injective maps (automorphic images counted separately).
  [[nodiscard]] std::uint64_t count(std::uint64_t limit = UINT64_MAX) {
    if (!feasible()) return 0;
    limit_ = limit;
    found_ = 0;
    search(0);
    return found_;
  }

 private:
  [[nodiscard]] bool feasible() const {
    return p_.node_count() <= h_.node_count() && p_.edge_count() <= h_.edge_count() &&
           p_.arity() <= h_.arity();
  }

  [[nodiscard]] bool label_ok(NodeId pv, NodeId hv) const {
    auto pr = p_.feature_row(pv);
    auto hr = h_.feature_row(hv);
    for (std::size_t c = 0; c < pr.size(); ++c)
      if (pr[c] >= 0 && pr[c] != hr[c]) return false;
    return true;
  }

  // Pattern nodes in BFS order from the highest-degree node of each
  // component so every later node has an already-mapped neighbor.
  void order_matching() {
    const auto n = p_.node_count();
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    while (static_cast<std::int32_t>(order_.size()) < n) {
      NodeId root = -1;
      for (NodeId v = 0; v < n; ++v)
        if (!seen[v] && (root < 0 || p_.degree(v) > p_.degree(root))) root = v;
      seen[root] = 1;
      std::size_t head = order_.size();
      order_.push_back(root);
      while (head < order_.size()) {
        NodeId v = order_[head++];
        for (NodeId u : p_.neighbors(v))
          if (!seen[u]) {
            seen[u] = 1;
            order_.push_back(u);
          }
      }
    }
    map_.assign(static_cast<std::size_t>(n), -1);
    used_.assign(static_cast<std::size_t>(h_.node_count()), 0);
  }

  void search(std::size_t depth) {
    if (found_ >= limit_) return;
    if (depth == order_.size()) {
      ++found_;
      return;
    }
    const NodeId pv = order_[depth];
    // Candidate set: neighbors of an already-mapped pattern neighbor, else all.
    NodeId anchor = -1;
    for (NodeId pu : p_.neighbors(pv))
      if (map_[pu] >= 0) {
        anchor = map_[pu];
        break;
      }
    auto try_host = [&](NodeId hv) {
      if (used_[hv] || h_.degree(hv) < p_.degree(pv) || !label_ok(pv, hv)) return;
      for (NodeId pu : p_.neighbors(pv))
        if (map_[pu] >= 0 && !h_.has_edge(map_[pu], hv)) return;
      map_[pv] = hv;
      used_[hv] = 1;
      search(depth + 1);
      used_[hv] = 0;
      map_[pv] = -1;
    };
    if (anchor >= 0) {
      for (NodeId hv : h_.neighbors(anchor)) {
        try_host(hv);
        if (found_ >= limit_) return;
      }
    } else {
      for (NodeId hv = 0; hv < h_.node_count(); ++hv) {
        try_host(hv);
        if (found_ >= limit_) return;
      }
    }
  }

  const Graph& p_;
  const Graph& h_;
  std::vector<NodeId> order_;
  std::vector<NodeId> map_;
  std::vector<char> used_;
  std::uint64_t limit_ = 1;
  std::uint64_t found_ = 0;
};

inline bool contains_subgraph(const Graph& host, const Graph& pattern) {
  return SubgraphMatcher(pattern, host).exists();
}

inline std::uint64_t count_embeddings(const Graph& host, const Graph& pattern) {
  return SubgraphMatcher(pattern, host).count();
}

}  // namespace molgraph
