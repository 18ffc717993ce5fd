// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "molgraph/autodiff/ops.hpp"
#include "molgraph/gnn/batch.hpp"
#include "molgraph/rng.hpp"

namespace molgraph::gnn {

using ad::Tensor;

struct NamedParam {
  std::string name;
  Tensor tensor;
};

/// x W + b.
struct Linear {
  Tensor w;
  Tensor b;

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng)
      : w(ad::parameter(ad::glorot_uniform(in, out, rng))), b(ad::parameter(Matrix(1, out))) {}
  Linear(Matrix weight, Matrix bias) : w(ad::parameter(std::move(weight))), b(ad::parameter(std::move(bias))) {}

  [[nodiscard]] Tensor operator()(const Tensor& x) const { return ad::add_row_vector(ad::matmul(x, w), b); }
  [[nodiscard]] std::size_t in() const { return w.rows(); }
  [[nodiscard]] std::size_t out() const { return w.cols(); }

  void collect(const std::string& prefix, std::vector<NamedParam>& out) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
  }
};

/// Sum of per-column embedding lookups.
struct Encoder {
  std::vector<std::string> names;
  std::vector<Tensor> tables;

  Encoder() = default;
  Encoder(const FeatureSchema& schema, std::size_t width, Rng& rng) {
    for (const auto& c : schema.columns) {
      names.push_back(c.name);
      tables.push_back(ad::parameter(ad::glorot_uniform(static_cast<std::size_t>(c.categories), width, rng)));
    }
  }

  [[nodiscard]] Tensor operator()(const GraphBatch& b) const {
    if (b.column_codes.size() != tables.size()) throw ShapeError("encoder: feature column count differs");
    Tensor h = ad::gather_rows(tables[0], b.column_codes[0]);
    for (std::size_t c = 1; c < tables.size(); ++c) h = ad::add(h, ad::gather_rows(tables[c], b.column_codes[c]));
    return h;
  }

  void collect(const std::string& prefix, std::vector<NamedParam>& out) const {
    for (std::size_t c = 0; c < tables.size(); ++c) out.push_back({prefix + "." + names[c], tables[c]});
  }
};

// ---------------------------------------------------------------------------
// Propagation primitives

/// S H with S the self-loop normalized adjacency.
inline Tensor normalized_propagate(const Tensor& h, const GraphBatch& b) {
  Tensor msg = ad::mul_rows(ad::gather_rows(h, b.loop_src), ad::constant(b.loop_weight));
  return ad::segment_sum(msg, b.loop_dst, ad::EmptySegment::kError);
}

/// Σ_{u ∈ N(v)} h_u; zero row for isolated nodes.
inline Tensor neighbor_sum(const Tensor& h, const GraphBatch& b) {
  return ad::segment_sum(ad::gather_rows(h, b.nbr_src), b.nbr_dst, ad::EmptySegment::kZero);
}

inline Tensor neighbor_mean(const Tensor& h, const GraphBatch& b) {
  return ad::segment_mean(ad::gather_rows(h, b.nbr_src), b.nbr_dst, ad::EmptySegment::kZero);
}

inline Tensor neighbor_max(const Tensor& h, const GraphBatch& b) {
  return ad::segment_max(ad::gather_rows(h, b.nbr_src), b.nbr_dst, ad::EmptySegment::kZero);
}

// ---------------------------------------------------------------------------
// Convolutions (pre-activation forms are exposed for oracle checks)

/// S (H W) + b.
inline Tensor gcn_conv(const Tensor& h, const GraphBatch& b, const Linear& lin) {
  return ad::add_row_vector(normalized_propagate(ad::matmul(h, lin.w), b), lin.b);
}

inline Tensor gcn_layer(const Tensor& h, const GraphBatch& b, const Linear& lin) {
  return ad::relu(gcn_conv(h, b, lin));
}

/// S^K X, one sparse application at a time.
inline Tensor sgc_propagate(const Tensor& x, const GraphBatch& b, int k) {
  if (k < 1) throw ShapeError("sgc needs K >= 1");
  Tensor h = x;
  for (int i = 0; i < k; ++i) h = normalized_propagate(h, b);
  return h;
}

/// (S^K X) W + b; no nonlinearity.
inline Tensor sgc_forward(const Tensor& x, const GraphBatch& b, const Linear& lin, int k) {
  return lin(sgc_propagate(x, b, k));
}

enum class SageAggregator { kMean, kPool };

/// ReLU(W [h_v ∥ agg_v]). `pool` is the per-neighbor map of the pool
/// aggregator and is ignored for mean.
inline Tensor sage_layer(const Tensor& h, const GraphBatch& b, const Linear& lin, SageAggregator agg,
                         const Linear* pool = nullptr) {
  Tensor a;
  if (agg == SageAggregator::kMean) {
    a = neighbor_mean(h, b);
  } else {
    if (!pool) throw ShapeError("sage pool aggregator needs its pooling map");
    a = neighbor_max(ad::relu((*pool)(h)), b);
  }
  return ad::relu(lin(ad::concat_cols({h, a})));
}

struct Mlp2 {
  Linear l1;
  Linear l2;
  [[nodiscard]] Tensor operator()(const Tensor& x) const { return ad::relu(l2(ad::relu(l1(x)))); }
};

/// (1 + eps) h_v + Σ_{u ∈ N(v)} h_u, before the MLP. `eps` is 1x1.
inline Tensor gin_aggregate(const Tensor& h, const GraphBatch& b, const Tensor& eps) {
  Tensor self = h;
  if (eps.requires_grad() || eps.item() != 0.0) self = ad::add(h, ad::mul_scalar(h, eps));
  return ad::add(self, neighbor_sum(h, b));
}

inline Tensor gin_layer(const Tensor& h, const GraphBatch& b, const Mlp2& mlp, const Tensor& eps) {
  return mlp(gin_aggregate(h, b, eps));
}

struct GatHead {
  Tensor w;      // in x d
  Tensor a_dst;  // d x 1, scores the receiving node
  Tensor a_src;  // d x 1, scores the neighbor

  void collect(const std::string& prefix, std::vector<NamedParam>& out) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".a_dst", a_dst});
    out.push_back({prefix + ".a_src", a_src});
  }
};

constexpr double kGatSlope = 0.2;

/// Attention coefficients per loop message (neighbors and self):
/// softmax over v ∈ N(u) ∪ {u} of LeakyReLU(a^T [W h_u ∥ W h_v]).
inline Tensor gat_attention(const Tensor& z, const GraphBatch& b, const GatHead& head) {
  Tensor s_dst = ad::matmul(z, head.a_dst);
  Tensor s_src = ad::matmul(z, head.a_src);
  Tensor e = ad::leaky_relu(ad::add(ad::gather_rows(s_dst, b.loop_dst_index), ad::gather_rows(s_src, b.loop_src)), kGatSlope);
  return ad::segment_softmax(e, b.loop_dst);
}

/// One head: Σ_v α_uv W h_v, pre-activation.
inline Tensor gat_head(const Tensor& h, const GraphBatch& b, const GatHead& head) {
  Tensor z = ad::matmul(h, head.w);
  Tensor alpha = gat_attention(z, b, head);
  return ad::segment_sum(ad::mul_rows(ad::gather_rows(z, b.loop_src), alpha), b.loop_dst, ad::EmptySegment::kError);
}

/// Multi-head attention layer. Heads are concatenated, except in the last
/// layer where they are averaged. Bias and ReLU follow the combination.
inline Tensor gat_layer(const Tensor& h, const GraphBatch& b, const std::vector<GatHead>& heads, const Tensor& bias,
                        bool is_last) {
  if (heads.empty()) throw ShapeError("gat needs at least one head");
  std::vector<Tensor> outs;
  outs.reserve(heads.size());
  for (const auto& hd : heads) outs.push_back(gat_head(h, b, hd));
  Tensor combined;
  if (is_last) {
    combined = outs[0];
    for (std::size_t i = 1; i < outs.size(); ++i) combined = ad::add(combined, outs[i]);
    if (outs.size() > 1) combined = ad::scale(combined, 1.0 / static_cast<double>(outs.size()));
  } else {
    combined = ad::concat_cols(outs);
  }
  return ad::relu(ad::add_row_vector(combined, bias));
}

// ---------------------------------------------------------------------------
// Readout and Jumping Knowledge

enum class Readout { kMean, kMax, kSum };

inline Tensor readout(const Tensor& h, const SegmentPtr& node_graph, Readout kind) {
  switch (kind) {
    case Readout::kMean: return ad::segment_mean(h, node_graph, ad::EmptySegment::kError);
    case Readout::kMax: return ad::segment_max(h, node_graph, ad::EmptySegment::kError);
    case Readout::kSum: return ad::segment_sum(h, node_graph, ad::EmptySegment::kError);
  }
  throw ShapeError("unknown readout");
}

enum class JumpingKnowledge { kNone, kMax, kConcat };

inline Tensor jumping_knowledge(const std::vector<Tensor>& layers, JumpingKnowledge mode) {
  if (layers.empty()) throw ShapeError("jumping knowledge needs at least one layer output");
  switch (mode) {
    case JumpingKnowledge::kNone: return layers.back();
    case JumpingKnowledge::kMax: return ad::elementwise_max(layers);
    case JumpingKnowledge::kConcat: return layers.size() == 1 ? layers.front() : ad::concat_cols(layers);
  }
  throw ShapeError("unknown jumping knowledge mode");
}

}  // namespace molgraph::gnn
