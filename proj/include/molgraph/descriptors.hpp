// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "molgraph/error.hpp"
#include "molgraph/feature_table.hpp"
#include "molgraph/graph.hpp"
#include "molgraph/hash.hpp"
#include "molgraph/numeric.hpp"

namespace molgraph {

/// Named per-node descriptor columns. values[c][v] is column c at node v.
struct NodeDescriptors {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;

  [[nodiscard]] std::size_t node_count() const noexcept { return values.empty() ? 0 : values.front().size(); }

  void append(std::string name, std::vector<double> column) {
    columns.push_back(std::move(name));
    values.push_back(std::move(column));
  }
  [[nodiscard]] const std::vector<double>& column(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == name) return values[c];
    throw Error("no descriptor column '" + name + "'");
  }
};

/// Degree, then min/max/mean/population-std of neighbor degrees, then
/// (extended) their sum. Isolated nodes get all zeros.
inline NodeDescriptors ldp_features(const Graph& g, bool extended) {
  const auto n = static_cast<std::size_t>(g.node_count());
  std::vector<double> deg(n), mn(n), mx(n), mean(n), sd(n), sum(n);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto nb = g.neighbors(v);
    deg[v] = static_cast<double>(nb.size());
    if (nb.empty()) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, s = 0.0;
    for (NodeId u : nb) {
      const double d = g.degree(u);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      s += d;
    }
    const double m = s / static_cast<double>(nb.size());
    std::vector<double> sq;
    sq.reserve(nb.size());
    for (NodeId u : nb) sq.push_back((g.degree(u) - m) * (g.degree(u) - m));
    const double ss = order_free_sum(sq);
    mn[v] = lo;
    mx[v] = hi;
    mean[v] = m;
    sd[v] = std::sqrt(ss / static_cast<double>(nb.size()));
    sum[v] = s;
  }
  NodeDescriptors d;
  d.append("degree", std::move(deg));
  d.append("min_nbr_deg", std::move(mn));
  d.append("max_nbr_deg", std::move(mx));
  d.append("mean_nbr_deg", std::move(mean));
  d.append("std_nbr_deg", std::move(sd));
  if (extended) d.append("sum_nbr_deg", std::move(sum));
  return d;
}

/// 2 T(v) / (d(v) (d(v) - 1)); 0 when d(v) < 2.
inline std::vector<double> clustering_coefficient(const Graph& g) {
  std::vector<double> out(static_cast<std::size_t>(g.node_count()), 0.0);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto nb = g.neighbors(v);
    const auto d = static_cast<double>(nb.size());
    if (nb.size() < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j)
        if (g.has_edge(nb[i], nb[j])) ++links;
    out[v] = 2.0 * static_cast<double>(links) / (d * (d - 1.0));
  }
  return out;
}

/// Brandes single-source accumulation over unordered pairs, unnormalized.
/// Dependencies are accumulated from successor lists with order-free sums,
/// so relabeling the nodes permutes the output bit-exactly.
inline std::vector<double> betweenness(const Graph& g) {
  const auto n = static_cast<std::size_t>(g.node_count());
  std::vector<double> sigma(n), delta(n);
  std::vector<std::int32_t> dist(n);
  std::vector<NodeId> order;
  std::vector<std::vector<double>> per_source(n);
  std::vector<double> terms;
  for (NodeId s = 0; s < g.node_count(); ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<NodeId> q;
    q.push(s);
    while (!q.empty()) {
      NodeId v = q.front();
      q.pop();
      order.push_back(v);
      for (NodeId w : g.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      NodeId v = *it;
      terms.clear();
      for (NodeId w : g.neighbors(v))
        if (dist[w] == dist[v] + 1) terms.push_back(sigma[v] / sigma[w] * (1.0 + delta[w]));
      delta[v] = order_free_sum(terms);
      if (v != s) per_source[v].push_back(delta[v]);
    }
  }
  std::vector<double> cb(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) cb[v] = 0.5 * order_free_sum(per_source[v]);
  return cb;
}

/// BFS distances from `source`; -1 marks unreachable nodes.
inline std::vector<std::int32_t> bfs_distances(const Graph& g, NodeId source) {
  std::vector<std::int32_t> dist(static_cast<std::size_t>(g.node_count()), -1);
  std::queue<NodeId> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop();
    for (NodeId w : g.neighbors(v))
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
  }
  return dist;
}

/// Closeness on the reachable set R(v), scaled by (|R(v)| - 1) / (|V| - 1)
/// so disconnected graphs keep informative values.
inline std::vector<double> closeness(const Graph& g) {
  const auto n = g.node_count();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  if (n < 2) return out;
  for (NodeId v = 0; v < n; ++v) {
    auto dist = bfs_distances(g, v);
    double reach = 0.0, total = 0.0;
    for (auto d : dist)
      if (d > 0) {
        reach += 1.0;
        total += d;
      }
    if (reach == 0.0) continue;
    out[v] = (reach / total) * (reach / (n - 1.0));
  }
  return out;
}

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-9;
  std::int32_t max_iter = 1000;
};

/// Power iteration; isolated nodes are dangling and spread uniformly.
/// Throws Error carrying the residual when `max_iter` is exhausted.
inline std::vector<double> pagerank(const Graph& g, const PageRankOptions& opt = {}) {
  const auto n = static_cast<std::size_t>(g.node_count());
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> pr(n, inv_n), next(n), terms, scratch;
  double residual = 0.0;
  for (std::int32_t it = 0; it < opt.max_iter; ++it) {
    terms.clear();
    for (NodeId v = 0; v < g.node_count(); ++v)
      if (g.degree(v) == 0) terms.push_back(pr[v]);
    const double dangling = order_free_sum(terms);
    const double base = (1.0 - opt.damping) * inv_n + opt.damping * dangling * inv_n;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      terms.clear();
      for (NodeId u : g.neighbors(v)) terms.push_back(pr[u] / g.degree(u));
      next[v] = base + opt.damping * order_free_sum(terms);
    }
    terms.clear();
    for (std::size_t v = 0; v < n; ++v) terms.push_back(std::abs(next[v] - pr[v]));
    residual = order_free_sum(terms);
    pr.swap(next);
    if (residual < opt.tol) {
      scratch = pr;
      const double total = order_free_sum(scratch);
      for (double& x : pr) x /= total;
      return pr;
    }
  }
  throw Error("pagerank did not converge in " + std::to_string(opt.max_iter) +
              " iterations (L1 residual " + std::to_string(residual) + ")");
}

/// Finite all-pairs distances over unordered pairs plus the count of
/// disconnected pairs.
struct PairDistances {
  std::vector<std::int32_t> finite;
  std::size_t unreachable = 0;
};

inline PairDistances pair_distances(const Graph& g) {
  PairDistances out;
  for (NodeId s = 0; s < g.node_count(); ++s) {
    auto dist = bfs_distances(g, s);
    for (NodeId t = s + 1; t < g.node_count(); ++t) {
      if (dist[t] < 0)
        ++out.unreachable;
      else
        out.finite.push_back(dist[t]);
    }
  }
  return out;
}

/// Bin count plus normalization flag. Ranges live in HistogramFit.
struct HistogramSpec {
  std::int32_t bins = 10;
  bool normalize = false;

  void validate() const {
    if (bins < 1) throw Error("histogram needs at least one bin");
  }
};

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Equal-width histogram over [range.lo, range.hi]; values outside clamp to
/// the edge bins, a degenerate range puts everything in bin 0.
inline void accumulate_histogram(std::span<const double> values, ValueRange range, std::int32_t bins,
                                 std::span<double> out) {
  const double width = range.hi - range.lo;
  for (double x : values) {
    std::int64_t b = 0;
    if (width > 0.0) {
      const double pos = (x - range.lo) / width * bins;
      b = pos <= 0.0 ? 0 : static_cast<std::int64_t>(std::floor(pos));
      b = std::clamp<std::int64_t>(b, 0, bins - 1);
    }
    out[static_cast<std::size_t>(b)] += 1.0;
  }
}

inline void normalize_in_place(std::span<double> h) {
  double total = 0.0;
  for (double x : h) total += x;
  if (total > 0.0)
    for (double& x : h) x /= total;
}

/// Per-column ranges fit on training graphs only.
struct HistogramFit {
  std::vector<std::string> columns;
  std::vector<ValueRange> ranges;
  ValueRange distance_range;
  bool has_distances = false;
  std::uint64_t fit_hash = 0;
};

/// Fits per-column [min, max] over the given training descriptor matrices.
inline HistogramFit fit_histograms(std::span<const NodeDescriptors* const> train,
                                   std::span<const PairDistances* const> train_distances,
                                   std::uint64_t fit_hash) {
  HistogramFit fit;
  fit.fit_hash = fit_hash;
  if (train.empty()) throw Error("cannot fit histogram ranges on an empty training split");
  fit.columns = train.front()->columns;
  const auto cols = fit.columns.size();
  fit.ranges.assign(cols, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (const auto* m : train)
    for (std::size_t c = 0; c < cols; ++c)
      for (double x : m->values[c]) {
        fit.ranges[c].lo = std::min(fit.ranges[c].lo, x);
        fit.ranges[c].hi = std::max(fit.ranges[c].hi, x);
      }
  if (!train_distances.empty()) {
    fit.has_distances = true;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* pd : train_distances)
      for (auto d : pd->finite) {
        lo = std::min<double>(lo, d);
        hi = std::max<double>(hi, d);
      }
    if (!std::isfinite(lo)) lo = hi = 1.0;
    fit.distance_range = {lo, hi};
  }
  return fit;
}

inline HistogramFit fit_histograms(const std::vector<NodeDescriptors>& all, const std::vector<PairDistances>& dists,
                                   std::span<const std::size_t> train_idx) {
  std::vector<const NodeDescriptors*> t;
  std::vector<const PairDistances*> d;
  for (auto i : train_idx) {
    t.push_back(&all[i]);
    if (!dists.empty()) d.push_back(&dists[i]);
  }
  return fit_histograms(t, d, index_set_hash(train_idx));
}

/// Concatenated per-column histograms in declared column order.
inline std::vector<double> aggregate(const NodeDescriptors& m, const HistogramFit& fit, const HistogramSpec& spec) {
  spec.validate();
  if (m.columns != fit.columns) throw ShapeError("descriptor columns differ from the fitted columns");
  std::vector<double> out(m.columns.size() * static_cast<std::size_t>(spec.bins), 0.0);
  for (std::size_t c = 0; c < m.columns.size(); ++c) {
    std::span<double> h(out.data() + c * spec.bins, static_cast<std::size_t>(spec.bins));
    accumulate_histogram(m.values[c], fit.ranges[c], spec.bins, h);
    if (spec.normalize) normalize_in_place(h);
  }
  return out;
}

/// `bins` bins over the fitted finite-distance range plus a final bin
/// collecting disconnected pairs.
inline std::vector<double> shortest_path_histogram(const PairDistances& pd, ValueRange range,
                                                   const HistogramSpec& spec) {
  spec.validate();
  std::vector<double> out(static_cast<std::size_t>(spec.bins) + 1, 0.0);
  std::vector<double> finite(pd.finite.begin(), pd.finite.end());
  accumulate_histogram(finite, range, spec.bins, std::span<double>(out.data(), static_cast<std::size_t>(spec.bins)));
  out.back() = static_cast<double>(pd.unreachable);
  if (spec.normalize) normalize_in_place(out);
  return out;
}

inline std::vector<double> shortest_path_histogram(const Graph& g, ValueRange range, const HistogramSpec& spec) {
  return shortest_path_histogram(pair_distances(g), range, spec);
}

/// Which descriptor groups an LDP featurization includes.
struct LdpConfig {
  bool extended = false;      ///< neighbor-degree sum + shortest-path histogram
  bool clustering = false;
  bool betweenness = false;
  bool closeness = false;
  bool pagerank = false;

  static LdpConfig plain() { return {}; }
  static LdpConfig extended_only() { return {true, false, false, false, false}; }
  static LdpConfig with_additional() { return {true, true, true, true, true}; }

  [[nodiscard]] bool any_additional() const { return clustering || betweenness || closeness || pagerank; }
};

inline NodeDescriptors node_descriptors(const Graph& g, const LdpConfig& cfg) {
  NodeDescriptors d = ldp_features(g, cfg.extended);
  if (cfg.clustering) d.append("clustering_coef", clustering_coefficient(g));
  if (cfg.betweenness) d.append("betweenness", betweenness(g));
  if (cfg.closeness) d.append("closeness", closeness(g));
  if (cfg.pagerank) d.append("pagerank", pagerank(g));
  return d;
}

/// Computes node descriptors once per graph; fit/transform then rebuild
/// histogram tables for any bin setting.
class LdpFeaturizer {
 public:
  LdpFeaturizer(std::span<const Graph> graphs, LdpConfig cfg) : cfg_(cfg) {
    nodes_.reserve(graphs.size());
    for (const auto& g : graphs) nodes_.push_back(node_descriptors(g, cfg_));
    if (cfg_.extended) {
      dists_.reserve(graphs.size());
      for (const auto& g : graphs) dists_.push_back(pair_distances(g));
    }
  }

  [[nodiscard]] const LdpConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const std::vector<NodeDescriptors>& node_matrices() const noexcept { return nodes_; }

  [[nodiscard]] HistogramFit fit(std::span<const std::size_t> train_idx) const {
    return fit_histograms(nodes_, dists_, train_idx);
  }

  [[nodiscard]] FeatureTable transform(const HistogramFit& fit, const HistogramSpec& spec) const {
    std::vector<std::string> names;
    for (const auto& col : fit.columns)
      for (std::int32_t b = 0; b < spec.bins; ++b) names.push_back(col + "_b" + std::to_string(b));
    if (cfg_.extended) {
      for (std::int32_t b = 0; b < spec.bins; ++b) names.push_back("spd_b" + std::to_string(b));
      names.push_back("spd_inf");
    }
    FeatureTable t(0, names);
    std::vector<double> row;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      row = aggregate(nodes_[i], fit, spec);
      if (cfg_.extended) {
        auto sp = shortest_path_histogram(dists_[i], fit.distance_range, spec);
        row.insert(row.end(), sp.begin(), sp.end());
      }
      t.push_row(row);
    }
    return t;
  }

 private:
  LdpConfig cfg_;
  std::vector<NodeDescriptors> nodes_;
  std::vector<PairDistances> dists_;
};

}  // namespace molgraph
