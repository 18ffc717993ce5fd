// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molgraph/eval/audit.hpp"
#include "molgraph/eval/featurize.hpp"
#include "molgraph/eval/search.hpp"
#include "molgraph/eval/split.hpp"
#include "molgraph/forest.hpp"
#include "molgraph/gnn/train.hpp"
#include "molgraph/metrics.hpp"

namespace molgraph::eval {

/// One tuning stage's trial table.
struct Stage {
  std::string name;
  SearchResult result;
};

struct EvalReport {
  std::string model;
  Task task = Task::kBinaryClassification;
  double valid_metric = 0.0;
  double test_metric = 0.0;
  std::optional<Confusion> test_confusion;
  ordered_json chosen = ordered_json::object();
  ordered_json config = ordered_json::object();
  std::uint64_t dataset_hash = 0;
  std::uint64_t seed = 0;
  std::uint64_t train_hash = 0;
  SplitPlan split;
  std::vector<Stage> stages;
  std::vector<gnn::EpochRecord> curve;
  std::string status = "ok";
  double seconds = 0.0;
  ordered_json audit = ordered_json::array();

  [[nodiscard]] const char* metric_name() const { return task == Task::kRegression ? "rmse" : "auroc"; }

  /// Full record; `include_timing` false drops wall-clock fields so two
  /// replays compare byte-for-byte.
  [[nodiscard]] ordered_json to_json(bool include_timing = true) const {
    ordered_json j;
    j["model"] = model;
    j["task"] = molgraph::to_string(task);
    j["metric"] = metric_name();
    j["valid_metric"] = valid_metric;
    j["test_metric"] = test_metric;
    if (test_confusion)
      j["test_confusion"] = {{"threshold", 0.5}, {"tp", test_confusion->tp}, {"tn", test_confusion->tn},
                             {"fp", test_confusion->fp}, {"fn", test_confusion->fn}};
    j["status"] = status;
    j["chosen"] = chosen;
    j["dataset_hash"] = hex(dataset_hash);
    j["train_hash"] = hex(train_hash);
    j["seed"] = seed;
    j["split"] = split.to_json();
    j["config"] = config;
    auto st = ordered_json::array();
    for (const auto& s : stages) {
      auto trials = ordered_json::array();
      for (const auto& t : s.result.trials) {
        ordered_json tj{{"index", t.index}, {"params", t.params}, {"value", t.value}, {"status", t.status},
                        {"chosen", t.chosen}};
        if (!t.message.empty()) tj["message"] = t.message;
        if (include_timing) tj["seconds"] = t.seconds;
        trials.push_back(std::move(tj));
      }
      st.push_back({{"stage", s.name}, {"trials", std::move(trials)}});
    }
    j["stages"] = std::move(st);
    j["audit"] = audit;
    if (include_timing) j["seconds"] = seconds;
    return j;
  }

  /// stage,index,status,value,chosen,seconds,params
  [[nodiscard]] std::string trial_table_csv() const {
    std::ostringstream os;
    os << "stage,index,status,value,chosen,seconds,params\n";
    for (const auto& s : stages)
      for (const auto& t : s.result.trials) {
        std::string p = t.params.dump();
        std::string quoted;
        for (char c : p) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", t.value);
        os << s.name << ',' << t.index << ',' << t.status << ',' << buf << ',' << (t.chosen ? 1 : 0) << ','
           << t.seconds << ",\"" << quoted << "\"\n";
      }
    return os.str();
  }

  static std::string hex(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
  }
};

namespace pipeline_detail {

inline std::vector<double> labels_of(const Dataset& d, std::span<const std::size_t> idx) {
  std::vector<double> y;
  y.reserve(idx.size());
  for (auto i : idx) y.push_back(d.graphs[i].label().value_or(0.0));
  return y;
}

inline double metric(Task task, std::span<const double> scores, std::span<const double> y) {
  if (task == Task::kRegression) return rmse(scores, y);
  std::vector<int> yi(y.begin(), y.end());
  return auroc(scores, yi);
}

inline Confusion confusion(std::span<const double> scores, std::span<const double> y) {
  std::vector<int> yi(y.begin(), y.end());
  return confusion_at(scores, yi, 0.5);
}

}  // namespace pipeline_detail

// ---------------------------------------------------------------------------
// Random Forest pipeline

struct RfPipelineConfig {
  ordered_json featurizer = {{"kind", "ldp"}};  // fixed fields
  SearchSpace featurizer_space;                 // tuned in step 1; may include "neg_fraction"
  SearchSpace forest_space;                     // tuned in step 3
  SearchMode mode = SearchMode::kGrid;
  std::size_t budget = 40;
  int tuning_trees = 40;
  int final_trees = 1000;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Four steps: (1) tune featurizer settings with a default forest,
/// (2) materialize the winning table, (3) tune the forest on it, (4) refit
/// with the final tree count and score validation and, once, test.
/// `final_model`, when given, receives the refit forest.
inline EvalReport rf_pipeline(const Dataset& data, const SplitPlan& split, const RfPipelineConfig& cfg,
                              FeatureFactory* shared_factory = nullptr,
                              std::optional<forest::Forest>* final_model = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  const Task task = data.task;
  const MetricKind kind = gnn::metric_for(task);
  AuditLog audit;
  std::unique_ptr<FeatureFactory> own;
  FeatureFactory& factory = shared_factory ? *shared_factory : *(own = std::make_unique<FeatureFactory>(data));
  const auto y_valid = pipeline_detail::labels_of(data, split.valid);

  auto train_rows_for = [&](const ordered_json& params, std::size_t stream) {
    std::vector<std::size_t> rows = split.train;
    if (params.contains("neg_fraction") && task == Task::kBinaryClassification) {
      const auto all_y = data.labels();
      rows = forest::subsample_negatives(split.train, all_y, params.at("neg_fraction").get<double>(),
                                         derive_seed(cfg.seed, 0x5B5, stream));
    }
    return rows;
  };
  auto default_forest = [&](int trees) {
    forest::ForestSpec f;
    f.n_trees = trees;
    f.criterion = task == Task::kRegression ? forest::Criterion::kSquaredError : forest::Criterion::kEntropy;
    f.seed = derive_seed(cfg.seed, 0xF0);
    return f;
  };
  auto fit_and_score = [&](const FeatureTable& table, std::span<const std::size_t> rows,
                           const forest::ForestSpec& fs, AuditLog& log) {
    const FeatureTable tr = table.select_rows(rows);
    const auto y = pipeline_detail::labels_of(data, rows);
    const forest::Forest f = forest::Forest::fit(tr, y, task, fs);
    log.record("train", "forest", "train", rows);
    const auto scores = f.predict_score(table.select_rows(split.valid));
    log.record("score", "metric", "valid", split.valid);
    return std::make_pair(f, pipeline_detail::metric(task, scores, y_valid));
  };

  EvalReport rep;
  rep.task = task;
  rep.seed = cfg.seed;
  rep.split = split;
  rep.dataset_hash = data.content_hash();
  rep.train_hash = index_set_hash(split.train);

  // step 1
  SearchSpace fspace = cfg.featurizer_space;
  if (fspace.empty()) fspace.push_back(Dimension::choice("_fixed", {true}));
  TrialAudits step1_audit;
  auto step1 = search(
      fspace, cfg.mode, cfg.budget,
      [&](const ordered_json& p, std::size_t i) {
        ordered_json fp = merge_params(cfg.featurizer, p);
        fp.erase("neg_fraction");
        fp.erase("_fixed");
        AuditLog& log = step1_audit[i];
        const auto feats = factory.build(FeaturizerSpec::from_json(fp), split.train, &log);
        forest::ForestSpec fs = default_forest(cfg.tuning_trees);
        fs.n_jobs = 1;
        return fit_and_score(feats.table, train_rows_for(p, i), fs, log).second;
      },
      kind, derive_seed(cfg.seed, 1), cfg.jobs);
  step1_audit.merge_into(audit);
  const ordered_json best_feat_params = step1.best_trial().params;
  rep.stages.push_back({"featurizer", std::move(step1)});

  // step 2
  ordered_json feat_json = merge_params(cfg.featurizer, best_feat_params);
  feat_json.erase("neg_fraction");
  feat_json.erase("_fixed");
  const FeaturizerSpec feat_spec = FeaturizerSpec::from_json(feat_json);
  const FittedFeatures feats = factory.build(feat_spec, split.train, &audit);
  const std::vector<std::size_t> rows = train_rows_for(best_feat_params, rep.stages.front().result.best);

  // step 3
  SearchSpace rspace = cfg.forest_space;
  if (rspace.empty()) rspace.push_back(Dimension::choice("_fixed", {true}));
  auto forest_from = [&](const ordered_json& p, int trees) {
    forest::ForestSpec fs = default_forest(trees);
    if (p.contains("min_samples_split")) fs.min_samples_split = p.at("min_samples_split").get<int>();
    if (p.contains("class_weight")) fs.class_weight = forest::parse_class_weight(p.at("class_weight").get<std::string>());
    if (p.contains("mtry")) fs.mtry = p.at("mtry").get<int>();
    return fs;
  };
  TrialAudits step3_audit;
  auto step3 = search(
      rspace, cfg.mode, cfg.budget,
      [&](const ordered_json& p, std::size_t i) {
        forest::ForestSpec fs = forest_from(p, cfg.tuning_trees);
        fs.n_jobs = 1;
        return fit_and_score(feats.table, rows, fs, step3_audit[i]).second;
      },
      kind, derive_seed(cfg.seed, 3), cfg.jobs);
  step3_audit.merge_into(audit);
  const ordered_json best_forest_params = step3.best_trial().params;
  rep.stages.push_back({"forest", std::move(step3)});

  // step 4
  forest::ForestSpec final_spec = forest_from(best_forest_params, cfg.final_trees);
  final_spec.n_jobs = cfg.jobs;
  auto [final_forest, valid_metric] = fit_and_score(feats.table, rows, final_spec, audit);
  rep.valid_metric = valid_metric;
  if (final_model) *final_model = final_forest;
  const auto test_scores = final_forest.predict_score(feats.table.select_rows(split.test));
  const auto y_test = pipeline_detail::labels_of(data, split.test);
  audit.record("score", "metric", "test", split.test);
  rep.test_metric = pipeline_detail::metric(task, test_scores, y_test);
  if (task == Task::kBinaryClassification) rep.test_confusion = pipeline_detail::confusion(test_scores, y_test);

  ordered_json chosen = feat_spec.to_json();
  if (best_feat_params.contains("neg_fraction")) chosen["neg_fraction"] = best_feat_params.at("neg_fraction");
  chosen["forest"] = final_spec.to_json();
  rep.chosen = std::move(chosen);
  rep.model = "rf:" + (feat_spec.kind == FeaturizerSpec::Kind::kLdp ? "ldp_" + feat_spec.variant
                                                                     : "fp_" + [&] {
                                                                         std::string s;
                                                                         for (const auto& b : feat_spec.blocks)
                                                                           s += (s.empty() ? "" : "+") + b;
                                                                         return s;
                                                                       }());
  rep.audit = audit.to_json();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Neural pipeline

struct GnnPipelineConfig {
  ordered_json model = {{"family", "gnn"}, {"layer", "gcn"}};  // fixed fields
  SearchSpace space;                                             // tuned fields
  SearchMode mode = SearchMode::kGrid;
  std::size_t budget = 40;
  gnn::TrainSpec train;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct GnnPipelineResult {
  EvalReport report;
  std::unique_ptr<gnn::GraphModel> model;  // best-validation model
  gnn::TrainResult train;
};

/// Tunes the model over `space` (each trial trains with early stopping),
/// keeps the best-validation checkpoint, then scores the test set once.
inline GnnPipelineResult gnn_pipeline(const Dataset& data, const SplitPlan& split, const GnnPipelineConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Task task = data.task;
  const MetricKind kind = gnn::metric_for(task);
  AuditLog audit;
  SearchSpace space = cfg.space;
  if (space.empty()) space.push_back(Dimension::choice("_fixed", {true}));

  struct Slot {
    std::unique_ptr<gnn::GraphModel> model;
    gnn::TrainResult train;
  };
  std::vector<Slot> slots;
  std::mutex slots_mu;
  const std::size_t n_points = cfg.mode == SearchMode::kGrid ? grid_points(space).size() : cfg.budget;
  slots.resize(n_points);
  TrialAudits trial_audit;

  auto result = search(
      space, cfg.mode, cfg.budget,
      [&](const ordered_json& p, std::size_t i) {
        ordered_json mj = merge_params(cfg.model, p);
        mj.erase("_fixed");
        const gnn::ModelSpec spec = gnn::ModelSpec::from_json(mj);
        auto model = std::make_unique<gnn::GraphModel>(spec, data.schema, task, derive_seed(cfg.seed, 0x600, i));
        gnn::TrainSpec ts = cfg.train;
        ts.seed = derive_seed(cfg.seed, 0x700, i);
        gnn::TrainResult tr = gnn::train(*model, data, split.train, split.valid, ts);
        AuditLog& log = trial_audit[i];
        log.record("train", "gnn", "train", split.train);
        if (task == Task::kBinaryClassification) log.record("fit", "class_weights", "train", split.train);
        log.record("score", "metric", "valid", split.valid);
        const double v = tr.best_valid;
        const bool diverged = tr.status == gnn::TrainStatus::kDiverged;
        const std::string msg = tr.message;
        {
          std::lock_guard lock(slots_mu);
          slots[i] = Slot{std::move(model), std::move(tr)};
        }
        if (diverged) throw DivergenceError(msg);
        return v;
      },
      kind, derive_seed(cfg.seed, 5), cfg.jobs);
  trial_audit.merge_into(audit);

  GnnPipelineResult out;
  EvalReport& rep = out.report;
  const std::size_t best = result.best;
  out.model = std::move(slots[best].model);
  out.train = std::move(slots[best].train);
  rep.task = task;
  rep.seed = cfg.seed;
  rep.split = split;
  rep.dataset_hash = data.content_hash();
  rep.train_hash = index_set_hash(split.train);
  rep.valid_metric = out.train.best_valid;
  rep.curve = out.train.curve;
  ordered_json chosen = out.model->spec().to_json();
  chosen["best_epoch"] = out.train.best_epoch;
  chosen["epochs_run"] = out.train.epochs_run;
  rep.chosen = std::move(chosen);
  rep.stages.push_back({"model", std::move(result)});

  const auto scores = gnn::predict(*out.model, data, split.test);
  audit.record("score", "metric", "test", split.test);
  const auto y_test = pipeline_detail::labels_of(data, split.test);
  rep.test_metric = pipeline_detail::metric(task, scores, y_test);
  if (task == Task::kBinaryClassification) rep.test_confusion = pipeline_detail::confusion(scores, y_test);
  const auto& s = out.model->spec();
  rep.model = std::string(gnn::to_string(s.family)) +
              (s.family == gnn::Family::kGnn
                   ? std::string(":") + gnn::to_string(s.layer) +
                         (s.jk != gnn::JumpingKnowledge::kNone ? std::string("+jk_") + gnn::to_string(s.jk) : "")
                   : std::string(s.use_encoder ? ":encoded" : ":onehot"));
  rep.audit = audit.to_json();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace molgraph::eval
