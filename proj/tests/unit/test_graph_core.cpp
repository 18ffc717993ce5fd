// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "molgraph/corpus.hpp"
#include "molgraph/graph_io.hpp"
#include "support/oracles.hpp"
#include "support/random_graphs.hpp"

namespace molgraph {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("molgraph_gc_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] fs::path file(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

fs::path write_lines(const TempDir& dir, const std::string& name, const std::vector<std::string>& lines) {
  auto p = dir.file(name);
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
  return p;
}

TEST(Graph, SmallestLegalGraphLoads) {
  TempDir dir;
  auto p = write_lines(dir, "one.jsonl", {R"({"n":1,"edges":[],"x":[[0]],"y":0})"});
  Dataset d = load_dataset(p, Task::kBinaryClassification);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.graphs[0].node_count(), 1);
  EXPECT_EQ(d.graphs[0].edge_count(), 0u);
  EXPECT_EQ(d.graphs[0].label(), 0.0);
}

TEST(Graph, SelfLoopRejectedWithLine) {
  TempDir dir;
  auto p = write_lines(dir, "loop.jsonl",
                       {R"({"n":2,"edges":[[0,1]],"x":[[0],[0]],"y":1})", R"({"n":1,"edges":[[0,0]],"x":[[0]],"y":0})"});
  try {
    (void)load_dataset(p, Task::kBinaryClassification);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("self-loop"), std::string::npos);
  }
}

TEST(Graph, TriangleEdgesAreCanonical) {
  TempDir dir;
  auto p = write_lines(dir, "tri.jsonl", {R"({"n":3,"edges":[[2,1],[1,0],[0,2]],"x":[[0],[0],[0]],"y":1})"});
  Dataset d = load_dataset(p, Task::kBinaryClassification);
  const std::vector<Edge> want{{0, 1}, {0, 2}, {1, 2}};
  EXPECT_EQ(d.graphs[0].edges(), want);
}

TEST(Graph, InvalidRecordsReportErrors) {
  EXPECT_THROW(Graph(2, {{0, 2}}, {0, 0}, 1), GraphError);
  EXPECT_THROW(Graph(2, {{0, 1}, {1, 0}}, {0, 0}, 1), GraphError);
  EXPECT_THROW(Graph(0, {}, {}, 1), GraphError);
  TempDir dir;
  auto p = write_lines(dir, "arity.jsonl",
                       {R"({"n":1,"edges":[],"x":[[0]]})", R"({"n":1,"edges":[],"x":[[0,1]]})"});
  try {
    (void)load_dataset(p, Task::kRegression);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  auto q = write_lines(dir, "bad.jsonl", {R"({"n":1,"edges":[],"x":[[0]]})", "{not json"});
  try {
    (void)load_dataset(q, Task::kRegression);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Graph, SaveLoadRoundTrip) {
  TempDir dir;
  Dataset d = testing::random_dataset(11, 25, 1, 9, 4, 2);
  for (std::size_t i = 0; i < d.graphs.size(); ++i)
    d.graphs[i] = d.graphs[i].with_meta("g" + std::to_string(i), i % 3 ? std::optional<std::string>("grp" + std::to_string(i % 3)) : std::nullopt);
  save_dataset(d, dir.file("d.jsonl"));
  Dataset back = load_dataset(dir.file("d.jsonl"), d.task);
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.schema, d.schema);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.graphs[i], d.graphs[i]);
    EXPECT_EQ(back.graphs[i].group(), d.graphs[i].group());
    EXPECT_EQ(back.graphs[i].id(), d.graphs[i].id());
  }
  EXPECT_EQ(back.content_hash(), d.content_hash());
}

TEST(Adjacency, IsolatedNodeAndK2) {
  auto s1 = normalized_adjacency(Graph(1, {}, {0}, 1));
  ASSERT_EQ(s1.weights.size(), 1u);
  EXPECT_EQ(s1.weights[0], 1.0);
  auto s2 = normalized_adjacency(Graph(2, {{0, 1}}, {0, 0}, 1));
  ASSERT_EQ(s2.weights.size(), 4u);
  for (double w : s2.weights) EXPECT_DOUBLE_EQ(w, 0.5);
}

oracle::Dense sparse_to_dense(const NormalizedAdjacency& s) {
  const auto n = static_cast<std::size_t>(s.rows());
  auto d = oracle::zeros(n, n);
  for (std::size_t v = 0; v < n; ++v)
    for (auto k = s.offsets[v]; k < s.offsets[v + 1]; ++k) d[v][static_cast<std::size_t>(s.cols[k])] = s.weights[k];
  return d;
}

TEST(Adjacency, StarMatchesDenseProduct) {
  Graph g = testing::star_graph(3);
  auto got = sparse_to_dense(normalized_adjacency(g));
  auto want = oracle::normalized(oracle::adjacency(g));
  for (std::size_t i = 0; i < got.size(); ++i)
    for (std::size_t j = 0; j < got.size(); ++j) EXPECT_NEAR(got[i][j], want[i][j], 1e-15);
}

TEST(Adjacency, RowSumsMatchDenseOracle) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    Graph g = testing::random_graph(rng, static_cast<std::int32_t>(rng.uniform_int(1, 8)), 0.4);
    auto got = sparse_to_dense(normalized_adjacency(g));
    auto want = oracle::normalized(oracle::adjacency(g));
    for (std::size_t i = 0; i < got.size(); ++i) {
      double a = 0, b = 0;
      for (std::size_t j = 0; j < got.size(); ++j) {
        a += got[i][j];
        b += want[i][j];
        EXPECT_NEAR(got[i][j], want[i][j], 1e-12);
      }
      EXPECT_NEAR(a, b, 1e-12);
    }
    auto views = adjacency_views(g);
    for (NodeId v = 0; v < g.node_count(); ++v) EXPECT_EQ(views.degree[v], g.degree(v));
  }
}

TEST(Corpus, CountsDeterminismAndOracleLabels) {
  const Graph motif = triangle_motif();
  Dataset a = generate_motif_corpus(300, 7, motif, 0.5);
  Dataset b = generate_motif_corpus(300, 7, motif, 0.5);
  EXPECT_EQ(dataset_to_jsonl(a), dataset_to_jsonl(b));
  std::size_t pos = 0;
  for (const auto& g : a.graphs) {
    EXPECT_GE(g.node_count(), 10);
    EXPECT_LE(g.node_count(), 30);
    const bool positive = *g.label() == 1.0;
    pos += positive;
    EXPECT_EQ(oracle::has_injection(g, motif), positive) << g.id();
  }
  EXPECT_EQ(pos, 150u);
  Dataset c = generate_motif_corpus(300, 8, motif, 0.5);
  EXPECT_NE(dataset_to_jsonl(a), dataset_to_jsonl(c));
}

TEST(Corpus, FullSizeCounts) {
  Dataset d = generate_motif_corpus(2000, 7, triangle_motif(), 0.5);
  std::size_t pos = 0;
  for (const auto& g : d.graphs) pos += *g.label() == 1.0;
  EXPECT_EQ(pos, 1000u);
  EXPECT_EQ(d.size(), 2000u);
}

// Pooled degree histograms of the two classes stay close in total
// variation; the rewiring preserves every node's degree.
TEST(Corpus, DegreeDistributionsMatched) {
  Dataset d = generate_motif_corpus(2000, 7, triangle_motif(), 0.5);
  std::vector<double> h[2];
  double tot[2] = {0, 0};
  for (auto& v : h) v.assign(40, 0.0);
  for (const auto& g : d.graphs) {
    const int c = static_cast<int>(*g.label());
    for (NodeId v = 0; v < g.node_count(); ++v) {
      h[c][std::min(g.degree(v), 39)] += 1.0;
      tot[c] += 1.0;
    }
  }
  double tv = 0.0;
  for (int k = 0; k < 40; ++k) tv += 0.5 * std::abs(h[0][k] / tot[0] - h[1][k] / tot[1]);
  EXPECT_LT(tv, 0.02);
}

TEST(Corpus, RejectsBadArguments) {
  EXPECT_THROW(generate_motif_corpus(10, 1, triangle_motif(), 0.0), Error);
  EXPECT_THROW(generate_motif_corpus(10, 1, triangle_motif(), 1.0), Error);
  EXPECT_THROW(generate_motif_corpus(10, 1, testing::path_graph(7), 0.5), Error);
  CorpusOptions tight;
  tight.min_nodes = 3;
  tight.max_nodes = 3;
  tight.max_retries = 5;
  EXPECT_THROW(generate_motif_corpus(4, 1, triangle_motif(), 0.5, tight), Error);
}

TEST(Subgraph, MatcherAgreesWithInjectionOracle) {
  Rng rng(21);
  for (int t = 0; t < 150; ++t) {
    Graph host = testing::random_graph(rng, static_cast<std::int32_t>(rng.uniform_int(1, 9)), 0.4, 2);
    Graph pat = testing::random_graph(rng, static_cast<std::int32_t>(rng.uniform_int(1, 4)), 0.6, 2);
    EXPECT_EQ(contains_subgraph(host, pat), oracle::has_injection(host, pat));
  }
}

}  // namespace
}  // namespace molgraph
