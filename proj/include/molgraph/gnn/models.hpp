// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molgraph/gnn/layers.hpp"

namespace molgraph::gnn {

enum class Family { kGnn, kMfp, kDeepMultisets };
enum class LayerKind { kGcn, kSgc, kSageMean, kSagePool, kGin, kGat };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::kGnn: return "gnn";
    case Family::kMfp: return "mfp";
    case Family::kDeepMultisets: return "deep_multisets";
  }
  return "?";
}
inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::kGcn: return "gcn";
    case LayerKind::kSgc: return "sgc";
    case LayerKind::kSageMean: return "sage_mean";
    case LayerKind::kSagePool: return "sage_pool";
    case LayerKind::kGin: return "gin";
    case LayerKind::kGat: return "gat";
  }
  return "?";
}
inline const char* to_string(Readout r) {
  switch (r) {
    case Readout::kMean: return "mean";
    case Readout::kMax: return "max";
    case Readout::kSum: return "sum";
  }
  return "?";
}
inline const char* to_string(JumpingKnowledge j) {
  switch (j) {
    case JumpingKnowledge::kNone: return "none";
    case JumpingKnowledge::kMax: return "max";
    case JumpingKnowledge::kConcat: return "concat";
  }
  return "?";
}

namespace models_detail {
template <class E, std::size_t N>
E parse_enum(const std::string& s, const E (&all)[N], const char* what) {
  for (E e : all)
    if (s == to_string(e)) return e;
  throw Error(std::string("unknown ") + what + " '" + s + "'");
}
}  // namespace models_detail

inline Family parse_family(const std::string& s) {
  static constexpr Family all[] = {Family::kGnn, Family::kMfp, Family::kDeepMultisets};
  return models_detail::parse_enum(s, all, "model family");
}
inline LayerKind parse_layer_kind(const std::string& s) {
  static constexpr LayerKind all[] = {LayerKind::kGcn,      LayerKind::kSgc, LayerKind::kSageMean,
                                      LayerKind::kSagePool, LayerKind::kGin, LayerKind::kGat};
  return models_detail::parse_enum(s, all, "layer kind");
}
inline Readout parse_readout(const std::string& s) {
  static constexpr Readout all[] = {Readout::kMean, Readout::kMax, Readout::kSum};
  return models_detail::parse_enum(s, all, "readout");
}
inline JumpingKnowledge parse_jk(const std::string& s) {
  static constexpr JumpingKnowledge all[] = {JumpingKnowledge::kNone, JumpingKnowledge::kMax,
                                             JumpingKnowledge::kConcat};
  return models_detail::parse_enum(s, all, "jumping knowledge mode");
}

/// Declarative model configuration. `channels`, `n_layers`, `readout`,
/// `heads`, `jk` and `learn_eps` apply to the GNN family; `hidden` and
/// `use_encoder` to the baselines (the GNN always embeds its inputs unless
/// `use_encoder` is false). For SGC `n_layers` is the propagation power K.
struct ModelSpec {
  Family family = Family::kGnn;
  LayerKind layer = LayerKind::kGcn;
  int channels = 64;
  int n_layers = 3;
  Readout readout = Readout::kMean;
  double dropout = 0.0;
  double lr = 1e-3;
  int heads = 0;
  JumpingKnowledge jk = JumpingKnowledge::kNone;
  bool learn_eps = false;
  int hidden = 64;
  bool use_encoder = true;

  /// Structural sanity; small values are allowed for tests.
  void validate() const {
    if (channels < 1 || hidden < 1) throw Error("model widths must be positive");
    if (n_layers < 1) throw Error("n_layers must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw Error("dropout must lie in [0, 1)");
    if (!(lr >= 0.0)) throw Error("learning rate must be non-negative");
    if (family == Family::kGnn) {
      const bool gat = layer == LayerKind::kGat;
      if (gat && heads < 1) throw Error("gat needs heads >= 1");
      if (!gat && heads != 0) throw Error("heads are only meaningful for gat");
      if (gat && n_layers > 1 && channels % heads != 0)
        throw Error("gat channels must be divisible by heads for concatenating layers");
    }
  }

  /// Whether every value sits inside the published tuning ranges.
  [[nodiscard]] bool within_tuning_ranges(bool large_corpus = false) const {
    const int max_ch = large_corpus ? 512 : 256;
    auto on_grid = [](double x, double lo, double hi, double step) {
      if (x < lo - 1e-12 || x > hi + 1e-12) return false;
      const double k = (x - lo) / step;
      return std::abs(k - std::round(k)) < 1e-9;
    };
    if (family == Family::kGnn) {
      if (!on_grid(channels, 64, max_ch, 64) || n_layers < 1 || n_layers > 5) return false;
      if (!on_grid(dropout, 0.0, 0.3, 0.1)) return false;
      if (lr < 1e-5 || lr > 1e-3) return false;
      if (layer == LayerKind::kGat && (heads < 2 || heads > 8 || heads % 2 != 0)) return false;
      return true;
    }
    return on_grid(hidden, 64, 512, 64) && on_grid(dropout, 0.0, 0.3, 0.1) && lr >= 1e-5 && lr <= 1e-3;
  }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["family"] = to_string(family);
    if (family == Family::kGnn) {
      j["layer"] = to_string(layer);
      j["channels"] = channels;
      j["n_layers"] = n_layers;
      j["readout"] = to_string(readout);
      if (layer == LayerKind::kGat) j["heads"] = heads;
      j["jk"] = to_string(jk);
      if (layer == LayerKind::kGin) j["learn_eps"] = learn_eps;
    } else {
      j["hidden"] = hidden;
    }
    j["use_encoder"] = use_encoder;
    j["dropout"] = dropout;
    j["lr"] = lr;
    return j;
  }

  static ModelSpec from_json(const nlohmann::ordered_json& j) {
    ModelSpec s;
    s.family = parse_family(j.value("family", std::string("gnn")));
    if (j.contains("layer")) s.layer = parse_layer_kind(j.at("layer").get<std::string>());
    s.channels = j.value("channels", s.channels);
    s.n_layers = j.value("n_layers", s.n_layers);
    if (j.contains("readout")) s.readout = parse_readout(j.at("readout").get<std::string>());
    s.heads = j.value("heads", s.layer == LayerKind::kGat ? 2 : 0);
    if (j.contains("jk")) s.jk = parse_jk(j.at("jk").get<std::string>());
    s.learn_eps = j.value("learn_eps", false);
    s.hidden = j.value("hidden", s.hidden);
    s.use_encoder = j.value("use_encoder", true);
    s.dropout = j.value("dropout", 0.0);
    s.lr = j.value("lr", s.lr);
    s.validate();
    return s;
  }
};

/// A full graph-level predictor: encoder, convolutions or baseline body,
/// readout, and a single linear head (2 logits, or 1 output for regression).
class GraphModel {
 public:
  GraphModel(ModelSpec spec, const FeatureSchema& schema, Task task, std::uint64_t seed)
      : spec_(spec), task_(task), seed_(seed) {
    spec_.validate();
    if (schema.arity() == 0) throw Error("model needs at least one feature column");
    Rng rng(derive_seed(seed, 0x1417));
    const std::size_t n_cat = static_cast<std::size_t>(schema.total_categories());
    const std::size_t out_dim = task == Task::kRegression ? 1 : 2;
    std::size_t width = 0;
    if (spec_.family == Family::kGnn) {
      const auto ch = static_cast<std::size_t>(spec_.channels);
      if (spec_.use_encoder) encoder_ = Encoder(schema, ch, rng);
      std::size_t in = spec_.use_encoder ? ch : n_cat;
      if (spec_.layer == LayerKind::kSgc) {
        Conv c;
        c.lin = Linear(in, ch, rng);
        convs_.push_back(std::move(c));
        width = ch;
      } else {
        for (int k = 0; k < spec_.n_layers; ++k) {
          convs_.push_back(make_conv(in, ch, k == spec_.n_layers - 1, rng));
          in = ch;
        }
        width = spec_.jk == JumpingKnowledge::kConcat ? ch * static_cast<std::size_t>(spec_.n_layers) : ch;
      }
    } else {
      const auto hid = static_cast<std::size_t>(spec_.hidden);
      if (spec_.use_encoder) encoder_ = Encoder(schema, hid, rng);
      const std::size_t in = spec_.use_encoder ? hid : n_cat;
      if (spec_.family == Family::kDeepMultisets) node_map_ = Linear(in, hid, rng);
      graph_map_ = Linear(spec_.family == Family::kDeepMultisets ? hid : in, hid, rng);
      width = hid;
    }
    head_ = Linear(width, out_dim, rng);
  }

  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] Task task() const noexcept { return task_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  /// Node inputs: embedded (summed per-column lookups) or raw one-hot.
  [[nodiscard]] Tensor node_inputs(const GraphBatch& b) const {
    return spec_.use_encoder ? encoder_(b) : ad::constant(b.one_hot);
  }

  /// Per-layer node embeddings of the GNN family.
  [[nodiscard]] std::vector<Tensor> layer_outputs(const GraphBatch& b, bool train, ad::DropoutStream& ds) const {
    if (spec_.family != Family::kGnn) throw Error("layer outputs exist only for message-passing models");
    Tensor h = node_inputs(b);
    std::vector<Tensor> outs;
    if (spec_.layer == LayerKind::kSgc) {
      h = ad::dropout(h, spec_.dropout, train, ds);
      outs.push_back(sgc_forward(h, b, convs_[0].lin, spec_.n_layers));
      return outs;
    }
    for (std::size_t k = 0; k < convs_.size(); ++k) {
      h = ad::dropout(h, spec_.dropout, train, ds);
      h = apply_conv(convs_[k], h, b, k + 1 == convs_.size());
      outs.push_back(h);
    }
    return outs;
  }

  /// Graph-level embedding fed to the head.
  [[nodiscard]] Tensor graph_embedding(const GraphBatch& b, bool train, ad::DropoutStream& ds) const {
    if (spec_.family == Family::kGnn) {
      const auto outs = layer_outputs(b, train, ds);
      return readout(jumping_knowledge(outs, spec_.jk), b.node_graph, spec_.readout);
    }
    Tensor h = node_inputs(b);
    if (spec_.family == Family::kDeepMultisets) h = ad::relu(node_map_(ad::dropout(h, spec_.dropout, train, ds)));
    Tensor pooled = readout(h, b.node_graph, Readout::kSum);
    return ad::relu(graph_map_(ad::dropout(pooled, spec_.dropout, train, ds)));
  }

  [[nodiscard]] Tensor forward(const GraphBatch& b, bool train, ad::DropoutStream& ds) const {
    return head_(graph_embedding(b, train, ds));
  }

  [[nodiscard]] Tensor forward(const GraphBatch& b) const {
    ad::DropoutStream ds(0);
    return forward(b, false, ds);
  }

  /// Every trainable tensor, in a fixed order with stable names.
  [[nodiscard]] std::vector<NamedParam> parameters() const {
    std::vector<NamedParam> p;
    if (spec_.use_encoder) encoder_.collect("enc", p);
    for (std::size_t k = 0; k < convs_.size(); ++k) {
      const std::string pre = "conv" + std::to_string(k);
      const Conv& c = convs_[k];
      if (c.lin.w) c.lin.collect(pre, p);
      if (c.pool.w) c.pool.collect(pre + ".pool", p);
      if (c.mlp.l1.w) {
        c.mlp.l1.collect(pre + ".mlp1", p);
        c.mlp.l2.collect(pre + ".mlp2", p);
      }
      if (c.eps.requires_grad()) p.push_back({pre + ".eps", c.eps});
      for (std::size_t h = 0; h < c.heads.size(); ++h) c.heads[h].collect(pre + ".head" + std::to_string(h), p);
      if (c.bias) p.push_back({pre + ".bias", c.bias});
    }
    if (node_map_.w) node_map_.collect("node_map", p);
    if (graph_map_.w) graph_map_.collect("graph_map", p);
    head_.collect("head", p);
    return p;
  }

  [[nodiscard]] std::vector<Tensor> parameter_tensors() const {
    std::vector<Tensor> t;
    for (auto& p : parameters()) t.push_back(p.tensor);
    return t;
  }

 private:
  struct Conv {
    Linear lin;    // gcn, sgc, sage
    Linear pool;   // sage_pool
    Mlp2 mlp;      // gin
    Tensor eps;    // gin, 1x1
    std::vector<GatHead> heads;
    Tensor bias;   // gat
  };

  Conv make_conv(std::size_t in, std::size_t ch, bool last, Rng& rng) const {
    Conv c;
    switch (spec_.layer) {
      case LayerKind::kGcn: c.lin = Linear(in, ch, rng); break;
      case LayerKind::kSageMean: c.lin = Linear(2 * in, ch, rng); break;
      case LayerKind::kSagePool:
        c.pool = Linear(in, in, rng);
        c.lin = Linear(2 * in, ch, rng);
        break;
      case LayerKind::kGin:
        c.mlp = Mlp2{Linear(in, ch, rng), Linear(ch, ch, rng)};
        c.eps = spec_.learn_eps ? ad::parameter(Matrix(1, 1)) : ad::constant(Matrix(1, 1));
        break;
      case LayerKind::kGat: {
        const auto heads = static_cast<std::size_t>(spec_.heads);
        // concatenating layers split the width across heads; the averaging
        // last layer keeps full width per head
        const std::size_t d = last ? ch : ch / heads;
        for (std::size_t h = 0; h < heads; ++h)
          c.heads.push_back(GatHead{ad::parameter(ad::glorot_uniform(in, d, rng)),
                                    ad::parameter(ad::glorot_uniform(d, 1, rng)),
                                    ad::parameter(ad::glorot_uniform(d, 1, rng))});
        c.bias = ad::parameter(Matrix(1, last ? d : d * heads));
        break;
      }
      case LayerKind::kSgc: break;
    }
    return c;
  }

  Tensor apply_conv(const Conv& c, const Tensor& h, const GraphBatch& b, bool last) const {
    switch (spec_.layer) {
      case LayerKind::kGcn: return gcn_layer(h, b, c.lin);
      case LayerKind::kSageMean: return sage_layer(h, b, c.lin, SageAggregator::kMean);
      case LayerKind::kSagePool: return sage_layer(h, b, c.lin, SageAggregator::kPool, &c.pool);
      case LayerKind::kGin: return gin_layer(h, b, c.mlp, c.eps);
      case LayerKind::kGat: return gat_layer(h, b, c.heads, c.bias, last);
      case LayerKind::kSgc: break;
    }
    throw Error("unsupported layer kind");
  }

  ModelSpec spec_;
  Task task_;
  std::uint64_t seed_;
  Encoder encoder_;
  std::vector<Conv> convs_;
  Linear node_map_;
  Linear graph_map_;
  Linear head_;
};

}  // namespace molgraph::gnn
