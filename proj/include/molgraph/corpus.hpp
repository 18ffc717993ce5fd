// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "molgraph/graph.hpp"
#include "molgraph/rng.hpp"
#include "molgraph/subgraph.hpp"

namespace molgraph {

struct CorpusOptions {
  std::int32_t min_nodes = 10;
  std::int32_t max_nodes = 30;
  /// Regular categories per feature column; the schema adds one overflow slot.
  std::int32_t n_labels = 5;
  /// Extra (non-tree) background edges per node.
  double extra_edge_ratio = 0.2;
  std::int32_t max_retries = 200;
};

/// Triangle whose three nodes carry category `label`.
inline Graph triangle_motif(std::int32_t label = 0) {
  return Graph::with_labels({label, label, label}, {{0, 1}, {0, 2}, {1, 2}});
}

namespace corpus_detail {

class EdgeSet {
 public:
  explicit EdgeSet(std::int32_t n) : n_(n), bits_(static_cast<std::size_t>(n) * n, 0), nbr_(n) {}

  [[nodiscard]] bool has(NodeId u, NodeId v) const { return bits_[idx(u, v)] != 0; }
  void add(NodeId u, NodeId v) {
    bits_[idx(u, v)] = bits_[idx(v, u)] = 1;
    nbr_[u].push_back(v);
    nbr_[v].push_back(u);
  }
  void remove(NodeId u, NodeId v) {
    bits_[idx(u, v)] = bits_[idx(v, u)] = 0;
    std::erase(nbr_[u], v);
    std::erase(nbr_[v], u);
  }
  [[nodiscard]] bool share_neighbor(NodeId u, NodeId v) const {
    for (NodeId w : nbr_[u])
      if (has(w, v)) return true;
    return false;
  }
  [[nodiscard]] std::vector<Edge> edges() const {
    std::vector<Edge> e;
    for (NodeId u = 0; u < n_; ++u)
      for (NodeId v : nbr_[u])
        if (u < v) e.emplace_back(u, v);
    std::sort(e.begin(), e.end());
    return e;
  }

 private:
  [[nodiscard]] std::size_t idx(NodeId u, NodeId v) const { return static_cast<std::size_t>(u) * n_ + v; }
  std::int32_t n_;
  std::vector<char> bits_;
  std::vector<std::vector<NodeId>> nbr_;
};

struct Template {
  std::int32_t n = 0;
  std::vector<std::int32_t> features;
  std::vector<Edge> edges;
  std::vector<Edge> motif_edges;
  std::vector<char> is_motif;
};

/// Motif on nodes [0, m), random tree growth for the rest, then extra
/// edges that never close a triangle and never join two motif nodes.
inline Template make_template(const Graph& motif, const CorpusOptions& opt,
                              const std::vector<std::vector<std::int32_t>>& background_labels,
                              Rng& rng) {
  Template t;
  const std::int32_t m = motif.node_count();
  const std::int32_t arity = motif.arity();
  t.n = static_cast<std::int32_t>(rng.uniform_int(std::max(opt.min_nodes, m), opt.max_nodes));
  t.features.resize(static_cast<std::size_t>(t.n) * arity);
  t.is_motif.assign(static_cast<std::size_t>(t.n), 0);
  for (NodeId v = 0; v < t.n; ++v)
    for (std::int32_t c = 0; c < arity; ++c) {
      std::int32_t value = v < m ? motif.feature_row(v)[c] : -1;
      if (value < 0) {
        const auto& pool = background_labels[c];
        value = pool[rng.below(pool.size())];
      }
      t.features[static_cast<std::size_t>(v) * arity + c] = value;
    }
  EdgeSet es(t.n);
  for (auto [u, v] : motif.edges()) {
    es.add(u, v);
    t.motif_edges.emplace_back(u, v);
  }
  for (NodeId v = 0; v < m; ++v) t.is_motif[v] = 1;
  // Join motif components so the template is connected.
  std::vector<std::int32_t> comp(static_cast<std::size_t>(m), -1);
  std::int32_t ncomp = 0;
  for (NodeId s = 0; s < m; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<NodeId> stack{s};
    comp[s] = ncomp;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (NodeId u : motif.neighbors(v))
        if (comp[u] < 0) {
          comp[u] = ncomp;
          stack.push_back(u);
        }
    }
    ++ncomp;
  }
  for (NodeId v = m; v < t.n; ++v) {
    NodeId u = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(v)));
    es.add(u, v);
  }
  for (std::int32_t c = 1; c < ncomp; ++c) {
    NodeId rep = -1;
    for (NodeId v = 0; v < m && rep < 0; ++v)
      if (comp[v] == c) rep = v;
    // Route through a background node to avoid a motif-motif edge.
    NodeId hub = t.n > m ? static_cast<NodeId>(m + rng.below(static_cast<std::uint64_t>(t.n - m))) : 0;
    if (hub != rep && !es.has(hub, rep) && !es.share_neighbor(hub, rep)) es.add(hub, rep);
  }
  const auto extra = static_cast<std::int32_t>(std::lround(opt.extra_edge_ratio * t.n));
  std::int32_t added = 0;
  for (std::int32_t attempt = 0; attempt < 50 * std::max(extra, 1) && added < extra; ++attempt) {
    auto u = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(t.n)));
    auto v = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(t.n)));
    if (u == v || es.has(u, v) || (t.is_motif[u] && t.is_motif[v]) || es.share_neighbor(u, v)) continue;
    es.add(u, v);
    ++added;
  }
  t.edges = es.edges();
  return t;
}

/// Degree-preserving double-edge swaps (a,b),(x,y) -> (a,x),(b,y) that
/// remove every motif edge without closing triangles or joining motif
/// nodes. Partners are tried in order of |deg(x) - deg(b)| + |deg(y) - deg(a)|
/// so neighbor-degree statistics move as little as possible. Returns false
/// when stuck.
inline bool rewire_motif(Template& t, Rng& rng) {
  EdgeSet es(t.n);
  for (auto [u, v] : t.edges) es.add(u, v);
  std::vector<std::int32_t> deg(static_cast<std::size_t>(t.n), 0);
  for (auto [u, v] : t.edges) ++deg[u], ++deg[v];
  std::vector<Edge> targets = t.motif_edges;
  rng.shuffle(targets);
  for (auto [a, b] : targets) {
    if (!es.has(a, b)) continue;
    std::vector<std::array<NodeId, 4>> cands;  // a, b, x, y
    for (auto [u, v] : es.edges()) {
      if (t.is_motif[u] || t.is_motif[v]) continue;
      for (auto [p, q] : {Edge{a, b}, Edge{b, a}})
        for (auto [x, y] : {Edge{u, v}, Edge{v, u}}) cands.push_back({p, q, x, y});
    }
    rng.shuffle(cands);
    auto cost = [&](const std::array<NodeId, 4>& c) {
      return std::abs(deg[c[2]] - deg[c[1]]) + std::abs(deg[c[3]] - deg[c[0]]);
    };
    std::stable_sort(cands.begin(), cands.end(),
                     [&](const auto& l, const auto& r) { return cost(l) < cost(r); });
    bool done = false;
    for (const auto& [p, q, x, y] : cands) {
      if (es.has(p, x) || es.has(q, y)) continue;
      es.remove(p, q);
      es.remove(x, y);
      if (es.share_neighbor(p, x) || es.share_neighbor(q, y)) {
        es.add(p, q);
        es.add(x, y);
        continue;
      }
      es.add(p, x);
      es.add(q, y);
      done = true;
      break;
    }
    if (!done) return false;
  }
  t.edges = es.edges();
  return true;
}

}  // namespace corpus_detail

/// Synthetic labeled-graph benchmark: positives embed `motif`, negatives
/// are degree-preserving rewirings of the same template distribution with
/// every embedding destroyed. Deterministic per seed.
inline Dataset generate_motif_corpus(std::int32_t n_graphs, std::uint64_t seed, const Graph& motif,
                                     double positive_fraction, const CorpusOptions& opt = {}) {
  if (motif.node_count() > 6) throw Error("motif must have at most 6 nodes");
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0))
    throw Error("positive_fraction must lie strictly between 0 and 1");
  if (n_graphs < 1) throw Error("n_graphs must be positive");
  if (opt.max_nodes < std::max(opt.min_nodes, motif.node_count()))
    throw Error("max_nodes is smaller than the motif or min_nodes");
  const std::int32_t arity = motif.arity();
  if (arity < 1) throw Error("motif needs at least one feature column");

  std::vector<std::vector<std::int32_t>> background(static_cast<std::size_t>(arity));
  for (std::int32_t c = 0; c < arity; ++c) {
    std::set<std::int32_t> used;
    for (NodeId v = 0; v < motif.node_count(); ++v) {
      auto value = motif.feature_row(v)[c];
      if (value >= opt.n_labels) throw Error("motif category exceeds n_labels");
      if (value >= 0) used.insert(value);
    }
    for (std::int32_t l = 0; l < opt.n_labels; ++l)
      if (!used.contains(l)) background[c].push_back(l);
    if (background[c].empty())
      for (std::int32_t l = 0; l < opt.n_labels; ++l) background[c].push_back(l);
  }

  const auto n_pos = static_cast<std::int32_t>(std::lround(n_graphs * positive_fraction));
  std::vector<std::int32_t> cls(static_cast<std::size_t>(n_graphs), 0);
  std::fill_n(cls.begin(), n_pos, 1);
  Rng order_rng(derive_seed(seed, 0xC1A55));
  order_rng.shuffle(cls);

  Dataset d;
  d.task = Task::kBinaryClassification;
  for (std::int32_t c = 0; c < arity; ++c)
    d.schema.columns.push_back({arity == 1 ? "label" : "x" + std::to_string(c), opt.n_labels + 1});
  d.graphs.reserve(static_cast<std::size_t>(n_graphs));

  for (std::int32_t i = 0; i < n_graphs; ++i) {
    Rng rng(derive_seed(seed, i));
    const bool positive = cls[i] == 1;
    bool ok = false;
    for (std::int32_t retry = 0; retry < opt.max_retries && !ok; ++retry) {
      auto t = corpus_detail::make_template(motif, opt, background, rng);
      // Both classes are conditioned on a feasible rewiring so their
      // template distributions match.
      auto rewired = t;
      if (!corpus_detail::rewire_motif(rewired, rng)) continue;
      if (!positive) t = std::move(rewired);
      std::vector<NodeId> perm(static_cast<std::size_t>(t.n));
      for (NodeId v = 0; v < t.n; ++v) perm[v] = v;
      rng.shuffle(perm);
      Graph raw(t.n, t.edges, t.features, arity);
      Graph g = raw.permuted(perm);
      if (contains_subgraph(g, motif) != positive) continue;
      d.graphs.push_back(Graph(g.node_count(), g.edges(), {g.features().begin(), g.features().end()}, arity,
                               positive ? 1.0 : 0.0, "n" + std::to_string(t.n), "g" + std::to_string(i)));
      ok = true;
    }
    if (!ok)
      throw Error("infeasible motif/size combination: graph " + std::to_string(i) + " failed after " +
                  std::to_string(opt.max_retries) + " retries");
  }
  return d;
}

}  // namespace molgraph
