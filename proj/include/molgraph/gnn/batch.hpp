// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "molgraph/autodiff/ops.hpp"
#include "molgraph/graph.hpp"

namespace molgraph::gnn {

using ad::IndexPtr;
using ad::Matrix;
using ad::SegmentPtr;

/// Disjoint union of several graphs, laid out for gather/segment message
/// passing. Directed messages run src -> dst; every undirected edge yields
/// two of them.
struct GraphBatch {
  std::size_t n_graphs = 0;
  std::size_t n_nodes = 0;
  std::vector<std::size_t> indices;  // dataset positions, batch order

  /// Per feature column: node -> category row in that column's table.
  std::vector<IndexPtr> column_codes;
  /// Raw one-hot node features across all columns (overflow included).
  Matrix one_hot;

  SegmentPtr node_graph;  // node -> graph

  IndexPtr nbr_src;  // neighbor messages, no self-loops
  SegmentPtr nbr_dst;

  IndexPtr loop_src;  // neighbor messages plus one self-loop per node
  SegmentPtr loop_dst;
  IndexPtr loop_dst_index;  // same ids as loop_dst, as a gather index
  Matrix loop_weight;  // D̃^(-1/2) Ã D̃^(-1/2) entry per loop message, E' x 1

  std::vector<int> classes;     // classification targets
  std::vector<double> targets;  // raw labels
};

inline GraphBatch make_batch(const Dataset& data, std::span<const std::size_t> idx) {
  GraphBatch b;
  b.n_graphs = idx.size();
  b.indices.assign(idx.begin(), idx.end());
  const auto& schema = data.schema;
  const std::size_t arity = schema.arity();

  std::size_t n_total = 0;
  for (auto i : idx) n_total += static_cast<std::size_t>(data.graphs.at(i).node_count());
  b.n_nodes = n_total;

  std::vector<std::vector<std::int32_t>> codes(arity);
  for (auto& c : codes) c.reserve(n_total);
  std::vector<std::int32_t> col_offset(arity + 1, 0);
  for (std::size_t c = 0; c < arity; ++c) col_offset[c + 1] = col_offset[c] + schema.columns[c].categories;
  b.one_hot = Matrix(n_total, static_cast<std::size_t>(col_offset[arity]));

  std::vector<std::int32_t> node_graph, nbr_src, nbr_dst, loop_src, loop_dst;
  std::vector<double> loop_w;
  node_graph.reserve(n_total);

  std::int32_t base = 0;
  for (std::size_t gi = 0; gi < idx.size(); ++gi) {
    const Graph& g = data.graphs[idx[gi]];
    if (static_cast<std::size_t>(g.arity()) != arity) throw ShapeError("graph arity differs from schema");
    const NormalizedAdjacency s = normalized_adjacency(g);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      const auto row = g.feature_row(v);
      for (std::size_t c = 0; c < arity; ++c) {
        const auto code = schema.columns[c].encode(row[c]);
        codes[c].push_back(code);
        b.one_hot(static_cast<std::size_t>(base + v), static_cast<std::size_t>(col_offset[c] + code)) = 1.0;
      }
      node_graph.push_back(static_cast<std::int32_t>(gi));
      for (NodeId u : g.neighbors(v)) {
        nbr_src.push_back(base + u);
        nbr_dst.push_back(base + v);
      }
      for (auto k = s.offsets[v]; k < s.offsets[v + 1]; ++k) {
        loop_src.push_back(base + s.cols[k]);
        loop_dst.push_back(base + v);
        loop_w.push_back(s.weights[k]);
      }
    }
    base += g.node_count();
    const double y = g.label().value_or(0.0);
    b.targets.push_back(y);
    b.classes.push_back(static_cast<int>(y));
  }

  for (auto& c : codes) b.column_codes.push_back(std::make_shared<const std::vector<std::int32_t>>(std::move(c)));
  b.node_graph = ad::make_segments(std::move(node_graph), b.n_graphs);
  b.nbr_src = std::make_shared<const std::vector<std::int32_t>>(std::move(nbr_src));
  b.nbr_dst = ad::make_segments(std::move(nbr_dst), n_total);
  b.loop_src = std::make_shared<const std::vector<std::int32_t>>(std::move(loop_src));
  b.loop_dst_index = std::make_shared<const std::vector<std::int32_t>>(loop_dst);
  b.loop_dst = ad::make_segments(std::move(loop_dst), n_total);
  const std::size_t n_loop = loop_w.size();
  b.loop_weight = Matrix(n_loop, 1, std::move(loop_w));
  return b;
}

}  // namespace molgraph::gnn
