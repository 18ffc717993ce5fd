// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "molgraph/corpus.hpp"
#include "molgraph/eval/pipeline.hpp"
#include "support/oracles.hpp"
#include "support/random_graphs.hpp"

namespace molgraph::eval {
namespace {

Dataset labeled(std::size_t n, std::size_t positives, std::uint64_t seed = 1) {
  Dataset d = testing::random_dataset(seed, n, 2, 6);
  for (std::size_t i = 0; i < n; ++i)
    d.graphs[i] = Graph(d.graphs[i].node_count(), d.graphs[i].edges(),
                        std::vector<std::int32_t>(d.graphs[i].features().begin(), d.graphs[i].features().end()), 1,
                        i < positives ? 1.0 : 0.0, "grp" + std::to_string(i % 7), "g" + std::to_string(i));
  return d;
}

// ---------------------------------------------------------------------------
// Splits

TEST(Split, TwoGroupsStayWhole) {
  Dataset d = labeled(10, 5);
  for (std::size_t i = 0; i < 10; ++i) d.graphs[i] = d.graphs[i].with_meta(d.graphs[i].id(), i < 5 ? "A" : "B");
  auto plan = make_split(d, SplitStrategy::kGroup, {0.5, 0.25, 0.25}, 3);
  std::map<std::string, std::set<int>> where;
  const std::vector<std::size_t>* sets[] = {&plan.train, &plan.valid, &plan.test};
  for (int s = 0; s < 3; ++s)
    for (auto i : *sets[s]) where[*d.graphs[i].group()].insert(s);
  for (auto& [g, sets] : where) EXPECT_EQ(sets.size(), 1u) << g;
  EXPECT_EQ(plan.train.size(), 5u);
}

TEST(Split, GroupDisjointOverSeeds) {
  Dataset d = labeled(300, 120);
  Rng rng(4);
  for (std::size_t i = 0; i < d.size(); ++i)
    d.graphs[i] = d.graphs[i].with_meta(d.graphs[i].id(), "s" + std::to_string(rng.below(40)));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto plan = make_split(d, SplitStrategy::kGroup, {}, seed);
    plan.validate(d.size());
    std::map<std::string, int> owner;
    const std::vector<std::size_t>* sets[] = {&plan.train, &plan.valid, &plan.test};
    for (int s = 0; s < 3; ++s)
      for (auto i : *sets[s]) {
        auto [it, fresh] = owner.emplace(*d.graphs[i].group(), s);
        EXPECT_EQ(it->second, s) << "seed " << seed;
      }
    EXPECT_LE(static_cast<double>(plan.train.size()), 0.8 * 300 + 1e-9);
  }
}

TEST(Split, GroupErrors) {
  Dataset d = labeled(10, 5);
  for (std::size_t i = 0; i < 10; ++i) d.graphs[i] = d.graphs[i].with_meta(d.graphs[i].id(), i < 9 ? "big" : "small");
  EXPECT_THROW(make_split(d, SplitStrategy::kGroup, {}, 1), Error);
  Dataset untagged = labeled(10, 5);
  untagged.graphs[3] = untagged.graphs[3].with_meta("g3", std::nullopt);
  EXPECT_THROW(make_split(untagged, SplitStrategy::kGroup, {}, 1), Error);
  EXPECT_NO_THROW(make_split(untagged, SplitStrategy::kStratified, {}, 1));
  EXPECT_THROW(make_split(d, SplitStrategy::kStratified, {0.5, 0.5, 0.5}, 1), Error);
}

TEST(Split, StratifiedProportions) {
  Dataset d = labeled(100, 10);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto plan = make_split(d, SplitStrategy::kStratified, {}, seed);
    plan.validate(100);
    auto pos = [&](const std::vector<std::size_t>& s) {
      return std::count_if(s.begin(), s.end(), [&](std::size_t i) { return *d.graphs[i].label() == 1.0; });
    };
    EXPECT_NEAR(static_cast<double>(pos(plan.test)), 1.0, 1.0);
    EXPECT_NEAR(static_cast<double>(pos(plan.valid)), 1.0, 1.0);
    EXPECT_NEAR(static_cast<double>(pos(plan.train)), 8.0, 1.0);
    EXPECT_EQ(plan.train.size() + plan.valid.size() + plan.test.size(), 100u);
  }
  auto a = make_split(d, SplitStrategy::kStratified, {}, 9), b = make_split(d, SplitStrategy::kStratified, {}, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
}

// ---------------------------------------------------------------------------
// Metrics

TEST(Metrics, AurocExamples) {
  EXPECT_EQ(auroc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 1.0);
  EXPECT_EQ(auroc(std::vector<double>{0.4, 0.4, 0.4}, std::vector<int>{1, 0, 1}), 0.5);
  EXPECT_EQ(auroc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}), 0.0);
  EXPECT_THROW(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), Error);
}

TEST(Metrics, AurocMatchesPairCountingOracle) {
  Rng rng(50);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> s(500);
    std::vector<int> y(500);
    for (std::size_t i = 0; i < 500; ++i) {
      s[i] = static_cast<double>(rng.below(40)) / 40.0;  // many duplicates
      y[i] = rng.bernoulli(0.3);
    }
    EXPECT_EQ(auroc(s, y), oracle::auroc_pairs(s, y));
    std::vector<double> cubed(s);
    for (double& x : cubed) x = x * x * x;
    EXPECT_EQ(auroc(cubed, y), auroc(s, y));
  }
}

TEST(Metrics, RmseExamples) {
  std::vector<double> a{0, 2}, z{0, 0};
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(rmse(a, z), std::sqrt(2.0));
  Rng rng(51);
  std::vector<double> p(100), q(100);
  double s = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    p[i] = rng.normal();
    q[i] = rng.normal();
    s += (p[i] - q[i]) * (p[i] - q[i]);
  }
  EXPECT_NEAR(rmse(p, q), std::sqrt(s / 100.0), 1e-15);
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(Metrics, Confusion) {
  auto c = confusion_at(std::vector<double>{0.9, 0.6, 0.2, 0.7}, std::vector<int>{1, 0, 0, 0});
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fp, 2u);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_EQ(c.fn, 0u);
}

// ---------------------------------------------------------------------------
// Search

TEST(Search, GridEnumeratesProduct) {
  SearchSpace s{Dimension::choice("a", {1, 2}), Dimension::choice("b", {"x", "y", "z"})};
  auto pts = grid_points(s);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0], (ordered_json{{"a", 1}, {"b", "x"}}));
  EXPECT_EQ(pts[5], (ordered_json{{"a", 2}, {"b", "z"}}));
  std::set<std::string> uniq;
  for (auto& p : pts) uniq.insert(p.dump());
  EXPECT_EQ(uniq.size(), 6u);
  EXPECT_THROW(grid_points(SearchSpace{Dimension::log_uniform("lr", 1e-5, 1e-3)}), Error);
  EXPECT_THROW(grid_points(SearchSpace{}), Error);
}

TEST(Search, RandomReplaysAndRespectsRanges) {
  SearchSpace s{Dimension::log_uniform("lr", 1e-5, 1e-3), Dimension::int_grid("channels", 64, 256, 64),
                Dimension::real_grid("dropout", 0.0, 0.3, 0.1)};
  auto a = random_points(s, 40, 7), b = random_points(s, 40, 7);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, random_points(s, 40, 8));
  std::size_t below = 0;
  for (auto& p : a) {
    const double lr = p["lr"].get<double>();
    EXPECT_GE(lr, 1e-5);
    EXPECT_LE(lr, 1e-3);
    below += lr < 1e-4;
    EXPECT_EQ(p["channels"].get<int>() % 64, 0);
    const double d = p["dropout"].get<double>();
    EXPECT_NEAR(d * 10, std::round(d * 10), 1e-9);
  }
  EXPECT_GT(below, 8u);  // log-uniform puts half the mass below 1e-4
}

TEST(Search, BestIsExtremeOfTrialTableFirstWins) {
  SearchSpace s{Dimension::choice("v", {3, 9, 1, 9, 4})};
  auto obj = [](const ordered_json& p, std::size_t) { return p["v"].get<double>(); };
  auto hi = search(s, SearchMode::kGrid, 1, obj, MetricKind::kAuroc, 0);
  EXPECT_EQ(hi.best, 1u);
  EXPECT_TRUE(hi.trials[1].chosen);
  EXPECT_FALSE(hi.trials[3].chosen);
  auto lo = search(s, SearchMode::kGrid, 1, obj, MetricKind::kRmse, 0, 3);
  EXPECT_EQ(lo.best, 2u);
  double mx = -1;
  for (auto& t : hi.trials) mx = std::max(mx, t.value);
  EXPECT_EQ(hi.best_trial().value, mx);
  EXPECT_THROW(search(s, SearchMode::kRandom, 0, obj, MetricKind::kRmse, 0), Error);
}

TEST(Search, DivergedTrialsSkipped) {
  SearchSpace s{Dimension::choice("v", {1, 2, 3})};
  auto obj = [](const ordered_json& p, std::size_t) -> double {
    if (p["v"] == 3) throw DivergenceError("boom");
    return p["v"].get<double>();
  };
  auto r = search(s, SearchMode::kGrid, 1, obj, MetricKind::kAuroc, 0);
  EXPECT_EQ(r.best, 1u);
  EXPECT_EQ(r.trials[2].status, "diverged");
  auto all_bad = [](const ordered_json&, std::size_t) -> double { throw DivergenceError("x"); };
  EXPECT_THROW(search(s, SearchMode::kGrid, 1, all_bad, MetricKind::kAuroc, 0), DivergenceError);
}

TEST(Search, SpaceFromJson) {
  auto s = space_from_json(ordered_json::parse(R"({"bins":[10,20],"lr":{"dist":"log_uniform","lo":1e-5,"hi":1e-3},"k":5})"));
  ASSERT_EQ(s.size(), 3u);
  EXPECT_TRUE(s[0].discrete());
  EXPECT_TRUE(s[1].log_scale);
  EXPECT_EQ(s[2].choices.size(), 1u);
  EXPECT_THROW(space_from_json(ordered_json::parse(R"({"x":{"dist":"beta","lo":0,"hi":1}})")), Error);
}

// ---------------------------------------------------------------------------
// Pipelines

std::size_t count_events(const ordered_json& audit, const std::string& action, const std::string& split) {
  std::size_t n = 0;
  for (const auto& e : audit) n += e["action"] == action && e["split"] == split;
  return n;
}

bool fits_on(const ordered_json& audit, std::uint64_t train_hash) {
  for (const auto& e : audit)
    if (e["action"] == "fit" && e["index_hash"].get<std::uint64_t>() != train_hash) return false;
  return true;
}

class Pipelines : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data = new Dataset(generate_motif_corpus(160, 3, triangle_motif(), 0.5));
    plan = new SplitPlan(make_split(*data, SplitStrategy::kStratified, {}, 3));
  }
  static void TearDownTestSuite() {
    delete data;
    delete plan;
  }
  static inline Dataset* data = nullptr;
  static inline SplitPlan* plan = nullptr;
};

TEST_F(Pipelines, RfDegenerateSpacesSinglePass) {
  RfPipelineConfig cfg;
  cfg.featurizer = {{"kind", "ldp"}, {"variant", "additional"}, {"bins", 10}};
  cfg.tuning_trees = 5;
  cfg.final_trees = 10;
  cfg.seed = 4;
  auto rep = rf_pipeline(*data, *plan, cfg);
  ASSERT_EQ(rep.stages.size(), 2u);
  EXPECT_EQ(rep.stages[0].result.trials.size(), 1u);
  EXPECT_EQ(rep.stages[1].result.trials.size(), 1u);
  EXPECT_EQ(count_events(rep.audit, "score", "test"), 1u);
  EXPECT_EQ(count_events(rep.audit, "score", "valid"), 3u);
  EXPECT_TRUE(fits_on(rep.audit, rep.train_hash));
  EXPECT_EQ(rep.model, "rf:ldp_additional");
  EXPECT_GE(rep.test_metric, 0.0);
  EXPECT_LE(rep.test_metric, 1.0);
  ASSERT_TRUE(rep.test_confusion.has_value());
  EXPECT_EQ(rep.test_confusion->tp + rep.test_confusion->fp + rep.test_confusion->tn + rep.test_confusion->fn,
            plan->test.size());
  EXPECT_EQ(rep.to_json(false).dump(), rf_pipeline(*data, *plan, cfg).to_json(false).dump());
}

TEST_F(Pipelines, RfTunesAndTouchesTestOnce) {
  RfPipelineConfig cfg;
  cfg.featurizer = {{"kind", "fingerprint"}, {"blocks", "keys"}};
  cfg.featurizer_space = {Dimension::choice("neg_fraction", {0.5, 1.0})};
  cfg.forest_space = {Dimension::choice("min_samples_split", {2, 6}), Dimension::choice("class_weight", {"none", "balanced"})};
  cfg.tuning_trees = 5;
  cfg.final_trees = 10;
  cfg.jobs = 2;
  auto rep = rf_pipeline(*data, *plan, cfg);
  EXPECT_EQ(rep.stages[0].result.trials.size(), 2u);
  EXPECT_EQ(rep.stages[1].result.trials.size(), 4u);
  EXPECT_EQ(count_events(rep.audit, "score", "test"), 1u);
  EXPECT_TRUE(fits_on(rep.audit, rep.train_hash));
  EXPECT_EQ(rep.model, "rf:fp_keys");
  auto csv = rep.trial_table_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  auto j = rep.to_json();
  EXPECT_TRUE(j.contains("seconds"));
  EXPECT_FALSE(rep.to_json(false).contains("seconds"));
  EXPECT_EQ(j["dataset_hash"].get<std::string>().size(), 16u);
}

TEST_F(Pipelines, RfReportIndependentOfJobs) {
  RfPipelineConfig cfg;
  cfg.featurizer = {{"kind", "ldp"}, {"variant", "plain"}};
  cfg.featurizer_space = {Dimension::choice("bins", {5, 10, 20})};
  cfg.forest_space = {Dimension::choice("min_samples_split", {2, 4, 6, 8})};
  cfg.tuning_trees = 4;
  cfg.final_trees = 8;
  cfg.jobs = 1;
  const auto serial = rf_pipeline(*data, *plan, cfg).to_json(false).dump();
  cfg.jobs = 4;
  for (int rep = 0; rep < 3; ++rep) EXPECT_EQ(rf_pipeline(*data, *plan, cfg).to_json(false).dump(), serial);
}

TEST_F(Pipelines, GnnSingleConfig) {
  GnnPipelineConfig cfg;
  cfg.model = {{"family", "gnn"}, {"layer", "gin"}, {"channels", 8}, {"n_layers", 2}, {"readout", "sum"}, {"lr", 1e-2}};
  cfg.train.max_epochs = 4;
  cfg.train.patience = 3;
  cfg.train.batch_size = 32;
  cfg.seed = 2;
  auto a = gnn_pipeline(*data, *plan, cfg);
  EXPECT_EQ(a.report.model, "gnn:gin");
  EXPECT_EQ(count_events(a.report.audit, "score", "test"), 1u);
  EXPECT_TRUE(fits_on(a.report.audit, a.report.train_hash));
  EXPECT_EQ(a.report.curve.size(), static_cast<std::size_t>(a.train.epochs_run));
  auto b = gnn_pipeline(*data, *plan, cfg);
  EXPECT_EQ(a.report.to_json(false).dump(), b.report.to_json(false).dump());
}

TEST_F(Pipelines, GnnSearchPicksBestValidation) {
  GnnPipelineConfig cfg;
  cfg.model = {{"family", "mfp"}, {"hidden", 8}};
  cfg.space = {Dimension::choice("lr", {0.0, 1e-2})};
  cfg.train.max_epochs = 3;
  cfg.train.patience = 2;
  auto r = gnn_pipeline(*data, *plan, cfg);
  const auto& trials = r.report.stages[0].result.trials;
  ASSERT_EQ(trials.size(), 2u);
  const auto best = r.report.stages[0].result.best;
  for (const auto& t : trials) EXPECT_LE(t.value, trials[best].value);
  EXPECT_EQ(r.report.valid_metric, trials[best].value);
  EXPECT_EQ(count_events(r.report.audit, "score", "test"), 1u);
  EXPECT_EQ(count_events(r.report.audit, "score", "valid"), 2u);
}

}  // namespace
}  // namespace molgraph::eval
