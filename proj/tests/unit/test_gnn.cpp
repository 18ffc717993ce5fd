// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include <numeric>

#include <gtest/gtest.h>

#include "molgraph/gnn/train.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/random_graphs.hpp"

namespace molgraph::gnn {
namespace {

using oracle::Dense;
using testing::random_matrix;

constexpr double kDenseTol = 1e-12;

Dataset dataset_of(std::vector<Graph> graphs, std::int32_t categories = 4, Task task = Task::kBinaryClassification) {
  Dataset d;
  d.task = task;
  d.schema.columns.push_back({"x0", categories});
  d.graphs = std::move(graphs);
  return d;
}

GraphBatch batch_all(const Dataset& d) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  return make_batch(d, idx);
}

void expect_dense_near(const Tensor& got, const Dense& want, double tol = kDenseTol) {
  ASSERT_EQ(got.rows(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    ASSERT_EQ(got.cols(), want[i].size());
    for (std::size_t j = 0; j < want[i].size(); ++j)
      EXPECT_NEAR(got.value()(i, j), want[i][j], tol) << "(" << i << "," << j << ")";
  }
}

Dense dense(const Tensor& t) { return oracle::from_matrix(t.value()); }

Dense linear_dense(const Dense& x, const Linear& l) { return oracle::add_bias(oracle::dmul(x, dense(l.w)), dense(l.b)); }

Linear random_linear(Rng& rng, std::size_t in, std::size_t out) {
  return Linear(random_matrix(rng, in, out), random_matrix(rng, 1, out));
}

std::vector<Graph> random_graphs(Rng& rng, int count, std::int32_t max_n = 8) {
  std::vector<Graph> gs;
  for (int i = 0; i < count; ++i)
    gs.push_back(testing::random_graph(rng, static_cast<std::int32_t>(rng.uniform_int(1, max_n)), 0.35, 3));
  return gs;
}

// ---------------------------------------------------------------------------
// Layers against dense references

class LayerOracle : public ::testing::Test {
 protected:
  void SetUp() override {
    gs = random_graphs(rng, 6);
    data = dataset_of(gs);
    b = batch_all(data);
    a = oracle::block_adjacency(gs);
    x = ad::parameter(random_matrix(rng, b.n_nodes, 3));
  }
  Rng rng{404};
  std::vector<Graph> gs;
  Dataset data;
  GraphBatch b;
  Dense a;
  Tensor x;
};

TEST_F(LayerOracle, Gcn) {
  for (int rep = 0; rep < 20; ++rep) {
    SetUp();
    Linear lin = random_linear(rng, 3, 5);
    auto want = oracle::drelu(linear_dense(oracle::dmul(oracle::normalized(a), dense(x)), lin));
    expect_dense_near(gcn_layer(x, b, lin), want);
  }
}

TEST(Layers, GcnIsolatedNode) {
  Dataset d = dataset_of({Graph(1, {}, {0}, 1)});
  GraphBatch b = batch_all(d);
  Rng rng(1);
  Linear lin = random_linear(rng, 2, 3);
  Tensor x = ad::constant(random_matrix(rng, 1, 2));
  expect_dense_near(gcn_layer(x, b, lin), oracle::drelu(linear_dense(dense(x), lin)), 0.0);
}

TEST_F(LayerOracle, SgcPowers) {
  Linear lin = random_linear(rng, 3, 4);
  const Dense s = oracle::normalized(a);
  for (int k : {1, 2, 3}) {
    auto want = linear_dense(oracle::dmul(oracle::mat_power(s, k), dense(x)), lin);
    expect_dense_near(sgc_forward(x, b, lin, k), want);
  }
  // K = 1 is an unactivated GCN layer, up to summation order
  const auto sgc1 = sgc_forward(x, b, lin, 1).value(), gcn1 = gcn_conv(x, b, lin).value();
  ASSERT_TRUE(sgc1.same_shape(gcn1));
  for (std::size_t i = 0; i < sgc1.size(); ++i) EXPECT_NEAR(sgc1.data[i], gcn1.data[i], kDenseTol);
  EXPECT_THROW((void)sgc_propagate(x, b, 0), ShapeError);
}

TEST(Layers, SgcEdgelessIsLinear) {
  Dataset d = dataset_of({Graph(4, {}, {0, 1, 2, 0}, 1)});
  GraphBatch b = batch_all(d);
  Rng rng(2);
  Linear lin = random_linear(rng, 3, 2);
  Tensor x = ad::constant(random_matrix(rng, 4, 3));
  for (int k : {1, 2, 5}) EXPECT_EQ(sgc_forward(x, b, lin, k).value(), lin(x).value());
}

TEST_F(LayerOracle, SageMeanAndPool) {
  for (int rep = 0; rep < 20; ++rep) {
    SetUp();
    Linear lin = random_linear(rng, 6, 4), pool = random_linear(rng, 3, 3);
    auto want_mean = oracle::drelu(linear_dense(oracle::hcat(dense(x), oracle::mean_neighbors(a, dense(x))), lin));
    expect_dense_near(sage_layer(x, b, lin, SageAggregator::kMean), want_mean);
    auto pooled = oracle::max_neighbors(a, oracle::drelu(linear_dense(dense(x), pool)));
    auto want_pool = oracle::drelu(linear_dense(oracle::hcat(dense(x), pooled), lin));
    expect_dense_near(sage_layer(x, b, lin, SageAggregator::kPool, &pool), want_pool);
  }
  EXPECT_THROW((void)sage_layer(x, b, random_linear(rng, 6, 4), SageAggregator::kPool), ShapeError);
}

TEST(Layers, SageSymmetricAndIsolated) {
  Rng rng(3);
  Linear lin = random_linear(rng, 4, 3);
  Dataset k2 = dataset_of({Graph(2, {{0, 1}}, {1, 1}, 1)});
  Tensor same = ad::constant(Matrix(2, 2, std::vector<double>{0.3, -0.7, 0.3, -0.7}));
  auto out = sage_layer(same, batch_all(k2), lin, SageAggregator::kMean).value();
  for (std::size_t c = 0; c < out.cols; ++c) EXPECT_EQ(out(0, c), out(1, c));

  Dataset iso = dataset_of({Graph(1, {}, {0}, 1)});
  Tensor h = ad::constant(Matrix(1, 2, std::vector<double>{0.5, 2.0}));
  auto want = oracle::drelu(linear_dense(Dense{{0.5, 2.0, 0.0, 0.0}}, lin));
  expect_dense_near(sage_layer(h, batch_all(iso), lin, SageAggregator::kMean), want, 0.0);
}

Dense mlp_dense(const Dense& x, const Mlp2& m) {
  return oracle::drelu(linear_dense(oracle::drelu(linear_dense(x, m.l1)), m.l2));
}

TEST_F(LayerOracle, GinMatrixForm) {
  for (int rep = 0; rep < 20; ++rep) {
    SetUp();
    Mlp2 mlp{random_linear(rng, 3, 4), random_linear(rng, 4, 4)};
    Tensor eps0 = ad::constant(Matrix(1, 1));
    auto ai = oracle::dadd(a, oracle::identity(a.size()));
    expect_dense_near(gin_layer(x, b, mlp, eps0), mlp_dense(oracle::dmul(ai, dense(x)), mlp));
    Tensor eps = ad::parameter(Matrix(1, 1, 0.3));
    auto with_eps = oracle::dadd(oracle::dmul(a, dense(x)), oracle::dscale(dense(x), 1.3));
    expect_dense_near(gin_layer(x, b, mlp, eps), mlp_dense(with_eps, mlp));
  }
}

TEST(Layers, GinEdgeless) {
  Rng rng(4);
  Dataset d = dataset_of({Graph(3, {}, {0, 1, 2}, 1)});
  Mlp2 mlp{random_linear(rng, 2, 3), random_linear(rng, 3, 3)};
  Tensor h = ad::constant(random_matrix(rng, 3, 2));
  Tensor eps = ad::constant(Matrix(1, 1, 0.5));
  expect_dense_near(gin_layer(h, batch_all(d), mlp, eps), mlp_dense(oracle::dscale(dense(h), 1.5), mlp));
}

GatHead random_head(Rng& rng, std::size_t in, std::size_t d) {
  return GatHead{ad::parameter(random_matrix(rng, in, d)), ad::parameter(random_matrix(rng, d, 1)),
                 ad::parameter(random_matrix(rng, d, 1))};
}

TEST_F(LayerOracle, GatHeadsAgainstDenseSoftmax) {
  for (int rep = 0; rep < 20; ++rep) {
    SetUp();
    GatHead h1 = random_head(rng, 3, 2), h2 = random_head(rng, 3, 2);
    auto head_dense = [&](const GatHead& h) {
      return oracle::gat_head(a, dense(x), dense(h.w), dense(h.a_dst), dense(h.a_src), kGatSlope);
    };
    expect_dense_near(gat_head(x, b, h1), head_dense(h1));
    Tensor bias = ad::parameter(random_matrix(rng, 1, 4));
    auto concat = oracle::drelu(oracle::add_bias(oracle::hcat(head_dense(h1), head_dense(h2)), dense(bias)));
    expect_dense_near(gat_layer(x, b, {h1, h2}, bias, false), concat);
    Tensor bias2 = ad::parameter(random_matrix(rng, 1, 2));
    auto avg = oracle::drelu(
        oracle::add_bias(oracle::dscale(oracle::dadd(head_dense(h1), head_dense(h2)), 0.5), dense(bias2)));
    expect_dense_near(gat_layer(x, b, {h1, h2}, bias2, true), avg);
  }
}

TEST_F(LayerOracle, GatZeroAttentionIsUniform) {
  GatHead h = random_head(rng, 3, 4);
  h.a_dst = ad::constant(Matrix(4, 1));
  h.a_src = ad::constant(Matrix(4, 1));
  Dense z = oracle::dmul(dense(x), dense(h.w));
  Dense ai = oracle::dadd(a, oracle::identity(a.size()));
  Dense want = oracle::dmul(ai, z);
  for (std::size_t u = 0; u < want.size(); ++u) {
    double deg = 0.0;
    for (double v : ai[u]) deg += v;
    for (double& v : want[u]) v /= deg;
  }
  expect_dense_near(gat_head(x, b, h), want);
}

TEST(Layers, GatAttentionIsDistribution) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    auto gs = random_graphs(rng, 2, 9);
    Dataset d = dataset_of(gs);
    GraphBatch b = batch_all(d);
    Tensor x = ad::constant(random_matrix(rng, b.n_nodes, 3, -3.0, 3.0));
    GatHead h = random_head(rng, 3, 4);
    Matrix alpha = gat_attention(ad::matmul(x, h.w), b, h).value();
    std::vector<double> sums(b.n_nodes, 0.0);
    for (std::size_t m = 0; m < alpha.rows; ++m) {
      EXPECT_GE(alpha.data[m], 0.0);
      sums[static_cast<std::size_t>((*b.loop_dst_index)[m])] += alpha.data[m];
    }
    for (double s : sums) EXPECT_NEAR(s, 1.0, 1e-12);
  }
  Dataset iso = dataset_of({Graph(1, {}, {0}, 1)});
  GatHead h = random_head(rng, 2, 2);
  Tensor x = ad::constant(random_matrix(rng, 1, 2));
  EXPECT_EQ(gat_attention(ad::matmul(x, h.w), batch_all(iso), h).value().data, std::vector<double>{1.0});
}

// ---------------------------------------------------------------------------
// Readout and Jumping Knowledge

TEST(Readout, CountDiscrimination) {
  Dataset d = dataset_of({Graph(2, {}, {1, 1}, 1), Graph(1, {}, {1}, 1)});
  GraphBatch b = batch_all(d);
  Tensor h = ad::constant(Matrix(3, 1, 1.0));
  EXPECT_EQ(readout(h, b.node_graph, Readout::kMean).value().data, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(readout(h, b.node_graph, Readout::kSum).value().data, (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(readout(h, b.node_graph, Readout::kMax).value().data, (std::vector<double>{1.0, 1.0}));
}

TEST(Readout, MatchesPerGraphLoop) {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    auto gs = random_graphs(rng, 5);
    GraphBatch b = batch_all(dataset_of(gs));
    Matrix h = random_matrix(rng, b.n_nodes, 3, 0.0, 1.0);
    auto mean = readout(ad::constant(h), b.node_graph, Readout::kMean).value();
    auto mx = readout(ad::constant(h), b.node_graph, Readout::kMax).value();
    auto sum = readout(ad::constant(h), b.node_graph, Readout::kSum).value();
    std::size_t base = 0;
    for (std::size_t g = 0; g < gs.size(); ++g) {
      const auto n = static_cast<std::size_t>(gs[g].node_count());
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0, m = -1.0;
        for (std::size_t v = base; v < base + n; ++v) {
          s += h(v, c);
          m = std::max(m, h(v, c));
        }
        EXPECT_NEAR(sum(g, c), s, 1e-12);
        EXPECT_NEAR(mean(g, c), s / static_cast<double>(n), 1e-12);
        EXPECT_EQ(mx(g, c), m);
        EXPECT_GE(mx(g, c), mean(g, c));
      }
      base += n;
    }
  }
}

TEST(JumpingKnowledge, Examples) {
  Tensor l1 = ad::constant(Matrix(1, 2, std::vector<double>{1, 0}));
  Tensor l2 = ad::constant(Matrix(1, 2, std::vector<double>{0, 2}));
  EXPECT_EQ(jumping_knowledge({l1, l2}, JumpingKnowledge::kMax).value().data, (std::vector<double>{1, 2}));
  EXPECT_EQ(jumping_knowledge({l1, l2}, JumpingKnowledge::kConcat).value().data, (std::vector<double>{1, 0, 0, 2}));
  for (auto mode : {JumpingKnowledge::kMax, JumpingKnowledge::kConcat, JumpingKnowledge::kNone})
    EXPECT_EQ(jumping_knowledge({l1}, mode).value(), l1.value());
  EXPECT_THROW((void)jumping_knowledge({l1, ad::constant(Matrix(1, 3))}, JumpingKnowledge::kMax), ShapeError);
}

// ---------------------------------------------------------------------------
// Full models

ModelSpec small_spec(LayerKind kind, JumpingKnowledge jk = JumpingKnowledge::kNone, Readout r = Readout::kMean) {
  ModelSpec s;
  s.layer = kind;
  s.channels = 4;
  s.n_layers = 2;
  s.jk = jk;
  s.readout = r;
  s.heads = kind == LayerKind::kGat ? 2 : 0;
  return s;
}

ModelSpec baseline_spec(Family f, bool encoder, int hidden = 4) {
  ModelSpec s;
  s.family = f;
  s.hidden = hidden;
  s.use_encoder = encoder;
  return s;
}

std::vector<ModelSpec> all_specs() {
  std::vector<ModelSpec> out;
  for (auto k : {LayerKind::kGcn, LayerKind::kSgc, LayerKind::kSageMean, LayerKind::kSagePool, LayerKind::kGin,
                 LayerKind::kGat})
    for (auto jk : {JumpingKnowledge::kNone, JumpingKnowledge::kMax, JumpingKnowledge::kConcat})
      for (auto r : {Readout::kMean, Readout::kMax, Readout::kSum}) out.push_back(small_spec(k, jk, r));
  for (auto f : {Family::kMfp, Family::kDeepMultisets})
    for (bool enc : {false, true}) out.push_back(baseline_spec(f, enc));
  return out;
}

std::string describe(const ModelSpec& s) { return s.to_json().dump(); }

TEST(Models, PermutationInvariantBitExact) {
  Rng rng(7);
  const auto specs = all_specs();
  for (int t = 0; t < 50; ++t) {
    Graph g = testing::random_graph(rng, static_cast<std::int32_t>(rng.uniform_int(1, 10)), 0.3, 3);
    std::vector<Graph> variants{g};
    for (int r = 0; r < 5; ++r) variants.push_back(g.permuted(testing::random_permutation(rng, g.node_count())));
    Dataset d = dataset_of(variants);
    const auto& spec = specs[static_cast<std::size_t>(t) % specs.size()];
    for (const auto& s : {spec, specs[(static_cast<std::size_t>(t) * 7 + 3) % specs.size()]}) {
      GraphModel m(s, d.schema, d.task, 11);
      Matrix out = m.forward(batch_all(d)).value();
      for (std::size_t r = 1; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c) EXPECT_EQ(out(r, c), out(0, c)) << describe(s);
    }
  }
}

TEST(Models, LayersArePermutationEquivariant) {
  Rng rng(8);
  for (auto k : {LayerKind::kGcn, LayerKind::kSageMean, LayerKind::kSagePool, LayerKind::kGin, LayerKind::kGat}) {
    Graph g = testing::random_graph(rng, 9, 0.35, 3);
    auto perm = testing::random_permutation(rng, g.node_count());
    Graph p = g.permuted(perm);
    GraphModel m(small_spec(k), dataset_of({g}).schema, Task::kBinaryClassification, 3);
    ad::DropoutStream ds(0);
    auto a = m.layer_outputs(batch_all(dataset_of({g})), false, ds).back().value();
    auto b = m.layer_outputs(batch_all(dataset_of({p})), false, ds).back().value();
    // node v of g is node perm[v] of the permuted graph
    for (NodeId v = 0; v < g.node_count(); ++v)
      for (std::size_t c = 0; c < a.cols; ++c)
        EXPECT_EQ(a(static_cast<std::size_t>(v), c), b(static_cast<std::size_t>(perm[v]), c)) << to_string(k);
  }
}

TEST(Models, EndToEndGradientsMatchFiniteDifferences) {
  Rng rng(9);
  Dataset d = dataset_of({testing::random_graph(rng, 4, 0.6, 3, 1, 1.0), testing::random_graph(rng, 3, 0.6, 3, 1, 0.0)});
  GraphBatch b = batch_all(d);
  for (const auto& spec : all_specs()) {
    if (spec.family == Family::kGnn && spec.readout != Readout::kSum) continue;
    GraphModel m(spec, d.schema, d.task, 21);
    auto loss = [&] { return ad::weighted_cross_entropy(m.forward(b), b.classes, {1.0, 1.5}); };
    auto res = testing::check_gradients(loss, m.parameter_tensors());
    EXPECT_TRUE(res.ok()) << describe(spec) << ": " << res.max_rel_error << " at " << res.worst;
  }
  Dataset r = dataset_of({testing::random_graph(rng, 4, 0.6, 3, 1, 0.4), testing::random_graph(rng, 5, 0.6, 3, 1, -1.2)},
                         4, Task::kRegression);
  GraphBatch rb = batch_all(r);
  GraphModel m(small_spec(LayerKind::kGin, JumpingKnowledge::kConcat, Readout::kSum), r.schema, r.task, 5);
  auto res = testing::check_gradients([&] { return ad::mse(m.forward(rb), rb.targets); }, m.parameter_tensors());
  EXPECT_TRUE(res.ok()) << res.max_rel_error;
}

TEST(Models, GinSumVersusMeanOnCountPair) {
  Dataset d = dataset_of({Graph(2, {}, {1, 1}, 1), Graph(1, {}, {1}, 1)});
  GraphBatch b = batch_all(d);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GraphModel sum(small_spec(LayerKind::kGin, JumpingKnowledge::kNone, Readout::kSum), d.schema, d.task, seed);
    GraphModel mean(small_spec(LayerKind::kGin, JumpingKnowledge::kNone, Readout::kMean), d.schema, d.task, seed);
    ad::DropoutStream ds(0);
    auto es = sum.graph_embedding(b, false, ds).value();
    auto em = mean.graph_embedding(b, false, ds).value();
    bool nonzero = false;
    for (std::size_t c = 0; c < em.cols; ++c) {
      EXPECT_EQ(em(0, c), em(1, c));
      EXPECT_EQ(es(0, c), 2.0 * es(1, c));
      nonzero |= es(1, c) != 0.0;
    }
    if (nonzero) {
      EXPECT_NE(sum.forward(b).value().data[0], sum.forward(b).value().data[2]);
    }
  }
}

TEST(Models, ConcatWidthAndHeads) {
  Dataset d = dataset_of({testing::path_graph(3)});
  ModelSpec s = small_spec(LayerKind::kGcn, JumpingKnowledge::kConcat);
  s.n_layers = 3;
  GraphModel m(s, d.schema, d.task, 1);
  ad::DropoutStream ds(0);
  EXPECT_EQ(m.graph_embedding(batch_all(d), false, ds).cols(), 12u);
  ModelSpec gat = small_spec(LayerKind::kGat);
  gat.heads = 3;
  EXPECT_THROW(gat.validate(), Error);
  gat.n_layers = 1;
  EXPECT_NO_THROW(gat.validate());
}

void set_value(Tensor t, std::vector<double> values) {
  t.mutable_value() = Matrix(t.rows(), t.cols(), std::move(values));
}

TEST(Baselines, MfpRawSumPoolingCountsCategories) {
  Rng rng(10);
  auto gs = random_graphs(rng, 8, 10);
  Dataset d = dataset_of(gs);
  GraphBatch b = batch_all(d);
  Matrix pooled = readout(ad::constant(b.one_hot), b.node_graph, Readout::kSum).value();
  for (std::size_t g = 0; g < gs.size(); ++g)
    for (std::int32_t c = 0; c < 4; ++c) {
      double count = 0;
      for (NodeId v = 0; v < gs[g].node_count(); ++v) count += gs[g].feature_row(v)[0] == c;
      EXPECT_EQ(pooled(g, static_cast<std::size_t>(c)), count);
    }
}

TEST(Baselines, MfpHandComputedTwoNodes) {
  Dataset d = dataset_of({Graph(2, {{0, 1}}, {0, 2}, 1)}, 3);
  GraphModel m(baseline_spec(Family::kMfp, false, 2), d.schema, d.task, 1);
  auto p = m.parameters();
  ASSERT_EQ(p.size(), 4u);  // graph_map.w/b, head.w/b
  set_value(p[0].tensor, {1, -1, 0.5, 2, -3, 1});  // 3x2
  set_value(p[1].tensor, {0.25, -4});
  set_value(p[2].tensor, {1, 2, -1, 0.5});  // 2x2
  set_value(p[3].tensor, {0.1, -0.1});
  // pooled one-hot [1, 0, 1] -> pre-activation [-1.75, -4] -> hidden [0, 0]
  EXPECT_EQ(m.forward(batch_all(d)).value().data, (std::vector<double>{0.1, -0.1}));
  set_value(p[1].tensor, {3, 5});
  // hidden = [1, 5]; logits = [1 - 5 + 0.1, 2 + 2.5 - 0.1]
  auto out = m.forward(batch_all(d)).value().data;
  EXPECT_NEAR(out[0], -3.9, 1e-15);
  EXPECT_NEAR(out[1], 4.4, 1e-15);
  Dataset iso = dataset_of({Graph(2, {{0, 1}}, {2, 0}, 1)}, 3);
  EXPECT_EQ(m.forward(batch_all(iso)).value().data, out);
}

TEST(Baselines, DeepMultisetsZeroWeightsGiveHeadBias) {
  Rng rng(12);
  Dataset d = dataset_of(random_graphs(rng, 4));
  for (bool enc : {false, true}) {
    GraphModel m(baseline_spec(Family::kDeepMultisets, enc, 3), d.schema, d.task, 2);
    auto params = m.parameters();
    for (auto& p : params)
      if (p.name != "head.b") set_value(p.tensor, std::vector<double>(p.tensor.value().size(), 0.0));
    set_value(params.back().tensor, {0.7, -0.2});
    Matrix out = m.forward(batch_all(d)).value();
    for (std::size_t r = 0; r < out.rows; ++r) {
      EXPECT_EQ(out(r, 0), 0.7);
      EXPECT_EQ(out(r, 1), -0.2);
    }
  }
}

TEST(Baselines, DeepMultisetsHandComputedThreeNodes) {
  Dataset d = dataset_of({Graph(3, {{0, 1}, {1, 2}}, {0, 1, 1}, 1)}, 2);
  GraphModel m(baseline_spec(Family::kDeepMultisets, false, 2), d.schema, d.task, 1);
  auto p = m.parameters();
  ASSERT_EQ(p.size(), 6u);  // node_map, graph_map, head
  set_value(p[0].tensor, {1, -1, -2, 1});  // 2x2
  set_value(p[1].tensor, {0.5, 0});
  set_value(p[2].tensor, {1, 0, 1, -1});
  set_value(p[3].tensor, {0, 1});
  set_value(p[4].tensor, {2, 0, 0, -1});
  set_value(p[5].tensor, {0, 0});
  // node rows: label0 -> relu([1.5, -1]) = [1.5, 0]; label1 -> relu([-1.5, 1]) = [0, 1]
  // sum = [1.5, 2]; graph = relu([1.5 + 2, -2 + 1]) = [3.5, 0]; logits = [7, 0]
  EXPECT_EQ(m.forward(batch_all(d)).value().data, (std::vector<double>{7.0, 0.0}));
}

TEST(Baselines, IsomorphicGraphsIdenticalLogits) {
  Rng rng(13);
  Graph g = testing::random_graph(rng, 8, 0.4, 3);
  Dataset d = dataset_of({g, g.permuted(testing::random_permutation(rng, 8))});
  GraphModel m(baseline_spec(Family::kMfp, true, 8), d.schema, d.task, 4);
  Matrix out = m.forward(batch_all(d)).value();
  EXPECT_EQ(out(0, 0), out(1, 0));
  EXPECT_EQ(out(0, 1), out(1, 1));
}

TEST(ModelSpec, JsonRoundTripAndRanges) {
  for (const auto& s : all_specs()) {
    auto back = ModelSpec::from_json(s.to_json());
    EXPECT_EQ(back.to_json(), s.to_json());
  }
  ModelSpec defaults;
  EXPECT_TRUE(defaults.within_tuning_ranges());
  defaults.channels = 512;
  EXPECT_FALSE(defaults.within_tuning_ranges());
  EXPECT_TRUE(defaults.within_tuning_ranges(true));
  EXPECT_THROW(ModelSpec::from_json(nlohmann::ordered_json{{"layer", "lstm"}}), Error);
}

// ---------------------------------------------------------------------------
// Training loop

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v(hi - lo);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

TEST(Train, ZeroLearningRateStopsAfterTwoEpochs) {
  Dataset d = testing::random_dataset(3, 40, 3, 8);
  ModelSpec s = small_spec(LayerKind::kGcn);
  s.lr = 0.0;
  GraphModel m(s, d.schema, d.task, 1);
  TrainSpec t;
  t.max_epochs = 50;
  t.patience = 1;
  t.seed = 2;
  auto res = train(m, d, range(0, 30), range(30, 40), t);
  EXPECT_EQ(res.status, TrainStatus::kOk);
  EXPECT_EQ(res.epochs_run, 2);
  EXPECT_EQ(res.curve.size(), 2u);
  EXPECT_EQ(res.best_epoch, 1);
}

TEST(Train, CurvesDeterministic) {
  Dataset d = testing::random_dataset(4, 40, 3, 8);
  auto run = [&] {
    ModelSpec s = small_spec(LayerKind::kSageMean);
    s.dropout = 0.2;
    s.lr = 1e-2;
    GraphModel m(s, d.schema, d.task, 9);
    TrainSpec t;
    t.max_epochs = 8;
    t.patience = 7;
    t.batch_size = 8;
    t.seed = 5;
    auto r = train(m, d, range(0, 30), range(30, 40), t);
    return std::make_pair(r, snapshot(m));
  };
  auto [a, pa] = run();
  auto [b, pb] = run();
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].train_loss, b.curve[i].train_loss);
    EXPECT_EQ(a.curve[i].valid_metric, b.curve[i].valid_metric);
  }
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].value, pb[i].value);
}

TEST(Train, BalancedClassWeights) {
  std::vector<int> y{0, 0, 0, 1};
  EXPECT_EQ(balanced_class_weights(y), (std::vector<double>{4.0 / 6.0, 2.0}));
  std::vector<int> only{0, 0};
  EXPECT_EQ(balanced_class_weights(only), (std::vector<double>{1.0, 0.0}));
}

TEST(Train, SeparableToyReachesPerfectTrainingAuroc) {
  // label 1 iff more nodes carry category 1 than category 0
  Rng rng(14);
  std::vector<Graph> gs;
  std::vector<double> score;
  while (gs.size() < 60) {
    const auto n = static_cast<std::int32_t>(rng.uniform_int(3, 8));
    std::vector<std::int32_t> lab(static_cast<std::size_t>(n));
    int c1 = 0;
    for (auto& l : lab) c1 += (l = static_cast<std::int32_t>(rng.below(2)));
    const int diff = 2 * c1 - n;
    if (diff == 0) continue;
    gs.push_back(Graph::with_labels(lab, {}, diff > 0 ? 1.0 : 0.0));
    score.push_back(diff);
  }
  // separability check: some threshold on the linear score c1 - c0 splits perfectly
  bool separable = false;
  for (double thr = -8.5; thr <= 8.5; thr += 1.0) {
    bool ok = true;
    for (std::size_t i = 0; i < gs.size(); ++i) ok &= (score[i] > thr) == (*gs[i].label() == 1.0);
    separable |= ok;
  }
  ASSERT_TRUE(separable);

  Dataset d = dataset_of(gs, 2);
  ModelSpec s = baseline_spec(Family::kMfp, false, 16);
  s.lr = 1e-2;
  GraphModel m(s, d.schema, d.task, 3);
  TrainSpec t;
  t.max_epochs = 200;
  t.patience = 199;
  t.batch_size = 0;
  t.seed = 1;
  t.track_train_metric = true;
  auto train_idx = range(0, 40), valid_idx = range(40, 60);
  auto res = train(m, d, train_idx, valid_idx, t);
  ASSERT_EQ(res.status, TrainStatus::kOk);
  // the restored snapshot is chosen on validation, so look at the curve
  ASSERT_FALSE(res.curve.empty());
  EXPECT_LE(res.curve.size(), 200u);
  double best_train = 0.0;
  for (const auto& r : res.curve) best_train = std::max(best_train, r.train_metric);
  EXPECT_EQ(best_train, 1.0);
}

TEST(Train, RejectsBadSpecs) {
  TrainSpec t;
  t.max_epochs = 10;
  t.patience = 10;
  EXPECT_THROW(t.validate(), Error);
  EXPECT_EQ(TrainSpec::for_gnn(1).patience, 100);
  EXPECT_EQ(TrainSpec::for_baseline(1).patience, 500);
  EXPECT_EQ(TrainSpec::for_gnn(1).batch_size, 64u);
}

}  // namespace
}  // namespace molgraph::gnn
