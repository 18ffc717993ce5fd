// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

// molgraph command-line front end: gen, featurize, train, tune, eval, report.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "molgraph/corpus.hpp"
#include "molgraph/eval/pipeline.hpp"
#include "molgraph/graph_io.hpp"
#include "molgraph/serialize.hpp"

namespace {

namespace fs = std::filesystem;
using molgraph::Error;
using nlohmann::ordered_json;
namespace ev = molgraph::eval;
namespace gnn = molgraph::gnn;
namespace forest = molgraph::forest;

struct Globals {
  std::string out = ".";
  std::string config;
  std::vector<std::string> sets;
  std::string data, task, family;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

fs::path under(const fs::path& out, const fs::path& p) { return p.is_absolute() ? p : out / p; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

ordered_json read_json(const fs::path& p) {
  const std::string text = read_text(p);
  try {
    return ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// --set a.b=value, value parsed as JSON when it parses, a string otherwise.
void apply_set(ordered_json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const ordered_json::parse_error&) {
    value = raw;
  }
  ordered_json* node = &cfg;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error("--set key '" + key + "' has an empty component");
    if (!node->is_object()) *node = ordered_json::object();
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::uint64_t seed_from_env() {
  const char* s = std::getenv("MOLGRAPH_SEED");
  if (!s || !*s) return 0;
  char* end = nullptr;
  const auto v = std::strtoull(s, &end, 10);
  if (*end) throw Error(std::string("MOLGRAPH_SEED is not an unsigned integer: '") + s + "'");
  return v;
}

/// Config file, then --set overrides, then the dedicated flags.
ordered_json load_config(const Globals& g) {
  ordered_json cfg = g.config.empty() ? ordered_json::object() : read_json(g.config);
  if (!cfg.is_object()) throw Error("config must be a JSON object");
  for (const auto& s : g.sets) apply_set(cfg, s);
  if (!g.data.empty()) cfg["data"] = g.data;
  if (!g.task.empty()) cfg["task"] = g.task;
  if (!g.family.empty()) cfg["family"] = g.family;
  if (g.seed) cfg["seed"] = *g.seed;
  else if (!cfg.contains("seed")) cfg["seed"] = seed_from_env();
  return cfg;
}

std::uint64_t seed_of(const ordered_json& cfg) { return cfg.at("seed").get<std::uint64_t>(); }

molgraph::Dataset load_data(const fs::path& out, const ordered_json& cfg) {
  if (!cfg.contains("data")) throw Error("config lacks 'data' (dataset path)");
  const fs::path p = under(out, cfg.at("data").get<std::string>());
  if (!fs::exists(p)) throw Error("dataset " + p.string() + " does not exist");
  return molgraph::load_dataset(p, molgraph::parse_task(cfg.value("task", std::string("binary-classification"))));
}

ev::SplitPlan split_of(const molgraph::Dataset& d, const ordered_json& cfg) {
  const ordered_json s = cfg.value("split", ordered_json::object());
  ev::Proportions p;
  if (s.contains("proportions")) {
    const auto v = s.at("proportions").get<std::vector<double>>();
    if (v.size() != 3) throw Error("split.proportions needs three values");
    p = {v[0], v[1], v[2]};
  }
  return ev::make_split(d, ev::parse_split_strategy(s.value("strategy", std::string("stratified"))), p,
                        s.value("seed", seed_of(cfg)));
}

ev::SearchSpace space_of(const ordered_json& cfg, const char* key) {
  return cfg.contains(key) ? ev::space_from_json(cfg.at(key)) : ev::SearchSpace{};
}

std::string family_of(const ordered_json& cfg) {
  const std::string f = cfg.value("family", std::string("rf"));
  if (f != "rf" && f != "gnn") throw Error("family must be 'rf' or 'gnn', got '" + f + "'");
  return f;
}

gnn::TrainSpec train_spec_of(const ordered_json& cfg) {
  const ordered_json t = cfg.value("train", ordered_json::object());
  const bool baseline = cfg.value("model", ordered_json::object()).value("family", std::string("gnn")) != "gnn";
  gnn::TrainSpec s = baseline ? gnn::TrainSpec::for_baseline(0) : gnn::TrainSpec::for_gnn(0);
  s.max_epochs = t.value("max_epochs", s.max_epochs);
  s.patience = t.value("patience", s.patience);
  s.batch_size = t.value("batch_size", s.batch_size);
  s.track_train_metric = t.value("track_train_metric", s.track_train_metric);
  if (t.contains("class_weight"))
    s.class_weight = t.at("class_weight") == "none" ? gnn::ClassWeightMode::kNone : gnn::ClassWeightMode::kBalanced;
  s.validate();
  return s;
}

// Each dimension is a box, so checking every choice (or both endpoints)
// against the fixed fields covers every point the search can draw.
void check_ranges(const ordered_json& base, const ev::SearchSpace& space, bool forest_space, bool large) {
  auto check = [&](const ordered_json& j) {
    if (forest_space) {
      if (j.contains("min_samples_split")) {
        forest::ForestSpec f;
        f.min_samples_split = j.at("min_samples_split").get<int>();
        if (!f.within_tuning_ranges()) throw Error("forest point " + j.dump() + " is outside the tuning ranges");
      }
      return;
    }
    if (!gnn::ModelSpec::from_json(j).within_tuning_ranges(large))
      throw Error("model point " + j.dump() + " is outside the tuning ranges");
  };
  for (const auto& d : space) {
    std::vector<ordered_json> values = d.choices;
    if (!d.discrete()) values = {d.lo, d.hi};
    for (const auto& v : values) check(ev::merge_params(base, ordered_json{{d.name, v}}));
  }
  if (space.empty()) check(base);
}

// ---------------------------------------------------------------------------
// Plots

struct Series {
  std::string name;
  std::vector<double> x, y;
};

std::string svg_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series) {
  const double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << svg_escape(title)
     << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << svg_escape(xlabel) << "</text>\n"
     << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << (T + H - B) / 2 << ")\">" << svg_escape(ylabel) << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt4(yv)
       << "</text>\n"
       << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
       << fmt4(xv) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* c = colors[s % 5];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      if (std::isfinite(series[s].y[i])) os << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
    os << "\"/>\n<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (s + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
       << c << "\">" << svg_escape(series[s].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bar_plot(const std::string& title, const std::vector<std::pair<std::string, double>>& bars) {
  const double W = 640, row = 28, L = 220, T = 40;
  const double H = T + row * static_cast<double>(bars.size()) + 20;
  double mx = 0;
  for (const auto& b : bars) mx = std::max(mx, std::isfinite(b.second) ? b.second : 0.0);
  if (mx <= 0) mx = 1;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << svg_escape(title)
     << "</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double y = T + row * static_cast<double>(i);
    const double v = std::isfinite(bars[i].second) ? bars[i].second : 0.0;
    os << "<text x=\"" << L - 8 << "\" y=\"" << y + 17 << "\" text-anchor=\"end\" font-size=\"12\">"
       << svg_escape(bars[i].first) << "</text>\n"
       << "<rect x=\"" << L << "\" y=\"" << y + 4 << "\" width=\"" << v / mx * (W - L - 80) << "\" height=\"" << row - 8
       << "\" fill=\"#1f77b4\"/>\n"
       << "<text x=\"" << L + v / mx * (W - L - 80) + 6 << "\" y=\"" << y + 17 << "\" font-size=\"12\">" << fmt4(v)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Report artifacts

std::string curve_csv(const std::vector<gnn::EpochRecord>& curve) {
  std::string s = "epoch,train_loss,train_metric,valid_metric\n";
  for (const auto& r : curve)
    s += std::to_string(r.epoch) + ',' + fmt(r.train_loss) + ',' + fmt(r.train_metric) + ',' + fmt(r.valid_metric) + '\n';
  return s;
}

std::string chosen_brief(const ordered_json& chosen) {
  std::string s;
  for (auto it = chosen.begin(); it != chosen.end(); ++it) {
    if (!s.empty()) s += ", ";
    s += it.key() + "=" + (it.value().is_string() ? it.value().get<std::string>() : it.value().dump());
  }
  for (auto& c : s)
    if (c == '|') c = '/';
  return s;
}

std::string summary_table(const std::vector<ordered_json>& reports) {
  std::string s = "| model | metric | validation | test | bar | chosen hyperparameters |\n|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    const double test = r.at("test_metric").get<double>();
    const int width = std::isfinite(test) ? static_cast<int>(std::lround(std::clamp(test, 0.0, 1.0) * 20)) : 0;
    std::string bar;
    for (int i = 0; i < width; ++i) bar += "#";
    s += "| " + r.at("model").get<std::string>() + " | " + r.at("metric").get<std::string>() + " | " +
         fmt4(r.at("valid_metric").get<double>()) + " | " + fmt4(test) + " | `" + bar + "` | " +
         chosen_brief(r.at("chosen")) + " |\n";
  }
  return s;
}

void write_run_outputs(const fs::path& out, const std::string& name, const ev::EvalReport& rep) {
  const ordered_json j = rep.to_json(true);
  write_text(out / (name + ".report.json"), j.dump(2) + "\n");
  write_text(out / (name + ".trials.csv"), rep.trial_table_csv());
  write_text(out / (name + ".summary.md"), summary_table({j}));
  if (!rep.curve.empty()) {
    write_text(out / (name + ".curve.csv"), curve_csv(rep.curve));
    Series tr{"train " + std::string(rep.metric_name()), {}, {}}, va{"valid " + std::string(rep.metric_name()), {}, {}};
    for (const auto& r : rep.curve) {
      tr.x.push_back(r.epoch);
      tr.y.push_back(r.train_metric);
      va.x.push_back(r.epoch);
      va.y.push_back(r.valid_metric);
    }
    write_text(out / (name + ".curve.svg"), line_plot(rep.model + " learning curve", "epoch", rep.metric_name(), {tr, va}));
  }
  std::vector<Series> ts;
  for (const auto& st : rep.stages) {
    Series s{st.name, {}, {}};
    for (const auto& t : st.result.trials) {
      s.x.push_back(static_cast<double>(t.index));
      s.y.push_back(t.value);
    }
    ts.push_back(std::move(s));
  }
  write_text(out / (name + ".trials.svg"), line_plot(rep.model + " trials", "trial", rep.metric_name(), ts));
}

// ---------------------------------------------------------------------------
// Runs

struct RunOutput {
  ev::EvalReport report;
  ordered_json manifest;
  molgraph::BlobWriter blob;
};

/// Runs the configured pipeline; `tune` false drops the search spaces.
RunOutput run_pipeline(const fs::path& out, ordered_json cfg, bool tune, int jobs) {
  if (!tune) {
    cfg.erase("featurizer_space");
    cfg.erase("forest_space");
    cfg.erase("space");
  }
  const auto data = load_data(out, cfg);
  const auto split = split_of(data, cfg);
  const std::uint64_t seed = seed_of(cfg);
  const ev::SearchMode mode = ev::parse_search_mode(cfg.value("mode", std::string("grid")));
  const std::size_t budget = cfg.value("budget", std::size_t{40});
  const bool check = tune && cfg.value("check_ranges", true);
  RunOutput r;
  if (family_of(cfg) == "rf") {
    ev::RfPipelineConfig c;
    c.featurizer = cfg.value("featurizer", ordered_json{{"kind", "ldp"}});
    c.featurizer_space = space_of(cfg, "featurizer_space");
    c.forest_space = space_of(cfg, "forest_space");
    if (check) check_ranges(ordered_json::object(), c.forest_space, true, false);
    c.mode = mode;
    c.budget = budget;
    c.tuning_trees = cfg.value("tuning_trees", c.tuning_trees);
    c.final_trees = cfg.value("final_trees", c.final_trees);
    c.seed = seed;
    c.jobs = jobs;
    std::optional<forest::Forest> final_forest;
    r.report = ev::rf_pipeline(data, split, c, nullptr, &final_forest);
    r.blob = final_forest->to_blob();
    r.manifest = {{"family", "rf"}, {"forest", final_forest->manifest()}};
  } else {
    ev::GnnPipelineConfig c;
    c.model = cfg.value("model", c.model);
    c.space = space_of(cfg, "space");
    if (check) check_ranges(c.model, c.space, false, cfg.value("large_corpus", false));
    c.mode = mode;
    c.budget = budget;
    c.train = train_spec_of(cfg);
    c.seed = seed;
    c.jobs = jobs;
    auto res = ev::gnn_pipeline(data, split, c);
    r.report = std::move(res.report);
    r.blob = molgraph::param_blob(gnn::snapshot(*res.model));
    r.manifest = {{"family", "gnn"},
                  {"spec", res.model->spec().to_json()},
                  {"schema", molgraph::schema_json(data.schema, data.task)}};
  }
  r.report.config = cfg;
  r.report.status = "ok";
  for (const auto& st : r.report.stages)
    for (const auto& t : st.result.trials)
      if (t.status != "ok") r.report.status = "ok_with_diverged_trials";
  r.manifest["config"] = cfg;
  r.manifest["dataset_hash"] = ev::EvalReport::hex(data.content_hash());
  r.manifest["task"] = molgraph::to_string(data.task);
  r.manifest["chosen"] = r.report.chosen;
  return r;
}

int cmd_train_or_tune(const Globals& g, const std::string& name, bool tune) {
  const fs::path out = g.out;
  fs::create_directories(out);
  const ordered_json cfg = load_config(g);
  auto r = run_pipeline(out, cfg, tune, g.jobs);
  write_run_outputs(out, name, r.report);
  r.blob.save(out / (name + ".model.bin"));
  r.manifest["blob"] = name + ".model.bin";
  write_text(out / (name + ".model.json"), r.manifest.dump(2) + "\n");
  std::cout << r.report.model << ' ' << r.report.metric_name() << " valid=" << fmt4(r.report.valid_metric)
            << " test=" << fmt4(r.report.test_metric) << '\n';
  return 0;
}

int cmd_gen(const Globals& g, int n, const std::string& motif, double positive_fraction, int min_nodes, int max_nodes,
            int labels, const std::string& output) {
  const fs::path out = g.out;
  fs::create_directories(out);
  const ordered_json cfg = load_config(g);
  molgraph::Graph m;
  if (motif == "triangle") {
    m = molgraph::triangle_motif();
  } else {
    const auto patterns = molgraph::load_patterns(under(out, motif));
    if (patterns.empty()) throw Error("motif file " + motif + " holds no graph");
    m = patterns.front();
  }
  molgraph::CorpusOptions opt;
  opt.min_nodes = min_nodes;
  opt.max_nodes = max_nodes;
  opt.n_labels = labels;
  const auto d = molgraph::generate_motif_corpus(n, seed_of(cfg), m, positive_fraction, opt);
  const fs::path p = under(out, output);
  molgraph::save_dataset(d, p);
  std::cout << "wrote " << d.size() << " graphs to " << p.string() << '\n';
  return 0;
}

ordered_json mask_json(const molgraph::PruneMask& m) {
  return {{"names", m.names}, {"keep", m.keep}, {"fit_hash", ev::EvalReport::hex(m.fit_hash)}, {"threshold", m.threshold}};
}

molgraph::PruneMask mask_from_json(const ordered_json& j) {
  molgraph::PruneMask m;
  m.names = j.at("names").get<std::vector<std::string>>();
  m.keep = j.at("keep").get<std::vector<bool>>();
  m.fit_hash = std::stoull(j.at("fit_hash").get<std::string>(), nullptr, 16);
  m.threshold = j.value("threshold", m.threshold);
  if (m.names.size() != m.keep.size()) throw Error("mask has " + std::to_string(m.keep.size()) + " flags for " +
                                                   std::to_string(m.names.size()) + " columns");
  return m;
}

int cmd_featurize(const Globals& g, const std::string& ldp, const std::string& fp, std::optional<int> bins,
                  bool no_prune, const std::string& mask_file, const std::string& output) {
  const fs::path out = g.out;
  fs::create_directories(out);
  ordered_json cfg = load_config(g);
  ordered_json fj = cfg.value("featurizer", ordered_json{{"kind", "ldp"}});
  if (!ldp.empty() && !fp.empty()) throw Error("--ldp and --fp are exclusive");
  if (!ldp.empty()) fj = {{"kind", "ldp"}, {"variant", ldp}};
  if (!fp.empty()) {
    fj = {{"kind", "fingerprint"}};
    if (fp == "concat") fj["blocks"] = "concat";
    else {
      std::vector<std::string> blocks;
      std::stringstream ss(fp);
      for (std::string b; std::getline(ss, b, ',');) blocks.push_back(b);
      fj["blocks"] = blocks;
    }
  }
  if (bins) fj["bins"] = *bins;
  if (no_prune) fj["prune"] = false;
  const auto spec = ev::FeaturizerSpec::from_json(fj);
  const auto data = load_data(out, cfg);
  ev::FeatureFactory factory(data);
  const fs::path csv = under(out, output);
  fs::path stem = csv;
  stem.replace_extension();
  molgraph::FeatureTable table;
  if (!mask_file.empty()) {
    if (spec.kind != ev::FeaturizerSpec::Kind::kFingerprint) throw Error("--mask applies to fingerprint featurizers");
    table = mask_from_json(read_json(under(out, mask_file))).apply(factory.fingerprints(spec));
  } else {
    const auto split = split_of(data, cfg);
    auto feats = factory.build(spec, split.train);
    table = std::move(feats.table);
    if (feats.mask) write_text(stem.string() + ".mask.json", mask_json(*feats.mask).dump(2) + "\n");
  }
  std::ostringstream os;
  table.write_csv(os);
  write_text(csv, os.str());
  std::cout << "wrote " << table.rows() << " rows x " << table.cols() << " columns to " << csv.string() << '\n';
  return 0;
}

/// Scores a saved checkpoint on its run's test split, once.
int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& output) {
  const fs::path out = g.out;
  const fs::path mpath = under(out, checkpoint);
  const ordered_json manifest = read_json(mpath);
  const ordered_json cfg = manifest.at("config");
  const auto data = load_data(out, cfg);
  if (ev::EvalReport::hex(data.content_hash()) != manifest.at("dataset_hash").get<std::string>())
    throw Error("dataset content differs from the one the checkpoint was trained on");
  const auto split = split_of(data, cfg);
  const auto blob = molgraph::BlobReader::load(mpath.parent_path() / manifest.at("blob").get<std::string>());
  ev::AuditLog audit;
  std::vector<double> scores;
  std::string model;
  if (manifest.at("family") == "rf") {
    const auto& chosen = manifest.at("chosen");
    ordered_json fj = chosen;
    fj.erase("forest");
    fj.erase("neg_fraction");
    const auto spec = ev::FeaturizerSpec::from_json(fj);
    ev::FeatureFactory factory(data);
    const auto feats = factory.build(spec, split.train, &audit);
    const auto f = forest::Forest::from_blob(blob, manifest.at("forest"));
    scores = f.predict_score(feats.table.select_rows(split.test));
    model = "rf";
  } else {
    const auto spec = gnn::ModelSpec::from_json(manifest.at("spec"));
    const auto schema = molgraph::schema_from_json(manifest.at("schema"));
    gnn::GraphModel m(spec, schema, data.task, 0);
    gnn::restore(m, molgraph::read_param_blob(blob));
    scores = gnn::predict(m, data, split.test);
    model = "gnn";
  }
  audit.record("score", "metric", "test", split.test);
  const auto y = ev::pipeline_detail::labels_of(data, split.test);
  ordered_json j;
  j["checkpoint"] = checkpoint;
  j["model"] = model;
  j["metric"] = data.task == molgraph::Task::kRegression ? "rmse" : "auroc";
  j["test_metric"] = ev::pipeline_detail::metric(data.task, scores, y);
  if (data.task == molgraph::Task::kBinaryClassification) {
    const auto c = ev::pipeline_detail::confusion(scores, y);
    j["test_confusion"] = {{"threshold", 0.5}, {"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}};
  }
  j["test_touches"] = audit.touches("test");
  j["audit"] = audit.to_json();
  fs::path dst = output.empty() ? fs::path(mpath).replace_extension().replace_extension(".eval.json") : under(out, output);
  write_text(dst, j.dump(2) + "\n");
  std::cout << j["metric"].get<std::string>() << " test=" << fmt4(j["test_metric"].get<double>()) << '\n';
  return 0;
}

int cmd_report(const Globals& g, const std::vector<std::string>& inputs, const std::string& output, bool replay) {
  const fs::path out = g.out;
  std::vector<ordered_json> reports;
  int mismatches = 0;
  for (const auto& in : inputs) {
    ordered_json r = read_json(under(out, in));
    if (replay) {
      if (!r.contains("config") || r["config"].empty()) throw Error(in + " has no embedded config to replay");
      const bool tune = r["config"].contains("featurizer_space") || r["config"].contains("forest_space") ||
                        r["config"].contains("space");
      const auto again = run_pipeline(out, r["config"], tune, g.jobs).report.to_json(false);
      ordered_json before = r;
      before.erase("seconds");
      for (auto& st : before["stages"])
        for (auto& t : st["trials"]) t.erase("seconds");
      const bool same = before.dump() == again.dump();
      std::cout << "replay " << in << ": " << (same ? "identical" : "DIFFERS") << '\n';
      if (!same) {
        ++mismatches;
        const auto patch = ordered_json::diff(before, again);
        std::string where = patch.empty() ? "(key order)" : patch[0].value("path", std::string("?"));
        std::cerr << "molgraph: replay of " << in << " differs first at " << where << '\n';
      }
    }
    reports.push_back(std::move(r));
  }
  const fs::path md = under(out, output);
  write_text(md, summary_table(reports));
  std::vector<std::pair<std::string, double>> bars;
  for (const auto& r : reports) bars.emplace_back(r.at("model").get<std::string>(), r.at("test_metric").get<double>());
  fs::path svg = md;
  svg.replace_extension(".svg");
  write_text(svg, bar_plot("test metric by model", bars));
  std::cout << "wrote " << md.string() << " and " << svg.string() << '\n';
  return mismatches ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"molgraph: graph featurization, models and evaluation"};
  app.require_subcommand(1);
  Globals g;
  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("-o,--out", g.out, "output directory; relative paths resolve under it");
    sub->add_option("-c,--config", g.config, "JSON run config");
    sub->add_option("--set", g.sets, "override a config field: key.path=json")->allow_extra_args(false);
    sub->add_option("--data", g.data, "dataset JSONL");
    sub->add_option("--task", g.task, "binary-classification or regression");
    sub->add_option("--family", g.family, "rf or gnn")->check(CLI::IsMember({"rf", "gnn"}));
    sub->add_option("--seed", g.seed, "global seed (falls back to the config, then MOLGRAPH_SEED)");
    sub->add_option("-j,--jobs", g.jobs, "worker thread cap")->check(CLI::PositiveNumber);
  };
  std::function<int()> run;

  auto* gen = app.add_subcommand("gen", "generate a motif benchmark corpus");
  add_globals(gen);
  int n = 2000, min_nodes = 10, max_nodes = 30, labels = 5;
  double pos = 0.5;
  std::string motif = "triangle", gen_out = "dataset.jsonl";
  gen->add_option("--n", n, "graph count")->check(CLI::PositiveNumber);
  gen->add_option("--motif", motif, "'triangle' or a JSONL pattern file");
  gen->add_option("--positive-fraction", pos, "share of positives");
  gen->add_option("--min-nodes", min_nodes);
  gen->add_option("--max-nodes", max_nodes);
  gen->add_option("--labels", labels, "regular node categories");
  gen->add_option("--output", gen_out, "dataset file");
  gen->callback([&] { run = [&] { return cmd_gen(g, n, motif, pos, min_nodes, max_nodes, labels, gen_out); }; });

  auto* feat = app.add_subcommand("featurize", "write a feature table CSV");
  add_globals(feat);
  std::string ldp, fp, mask, feat_out = "features.csv";
  std::optional<int> bins;
  bool no_prune = false;
  feat->add_option("--ldp", ldp, "LDP variant: plain, extended, additional");
  feat->add_option("--fp", fp, "fingerprint blocks: concat or a comma list of circular, path, keys");
  feat->add_option("--bins", bins, "LDP histogram bins");
  feat->add_flag("--no-prune", no_prune, "keep constant and correlated fingerprint columns");
  feat->add_option("--mask", mask, "apply a saved pruning mask instead of fitting one");
  feat->add_option("--output", feat_out, "CSV file");
  feat->callback([&] { run = [&] { return cmd_featurize(g, ldp, fp, bins, no_prune, mask, feat_out); }; });

  auto* train = app.add_subcommand("train", "fit one fixed configuration and score it");
  add_globals(train);
  std::string train_name = "train";
  train->add_option("--name", train_name, "output file prefix");
  train->callback([&] { run = [&] { return cmd_train_or_tune(g, train_name, false); }; });

  auto* tune = app.add_subcommand("tune", "search the configured spaces, refit the best, score it");
  add_globals(tune);
  std::string tune_name = "tune", mode;
  std::optional<std::size_t> budget;
  tune->add_option("--name", tune_name, "output file prefix");
  tune->add_option("--mode", mode, "grid or random")->check(CLI::IsMember({"grid", "random"}));
  tune->add_option("--budget", budget, "random-search trial count");
  tune->callback([&] {
    if (!mode.empty()) g.sets.push_back("mode=\"" + mode + "\"");
    if (budget) g.sets.push_back("budget=" + std::to_string(*budget));
    run = [&] { return cmd_train_or_tune(g, tune_name, true); };
  });

  auto* evalc = app.add_subcommand("eval", "score a saved checkpoint on its test split");
  add_globals(evalc);
  std::string checkpoint, eval_out;
  evalc->add_option("checkpoint", checkpoint, "<name>.model.json")->required();
  evalc->add_option("--output", eval_out, "result JSON (default <name>.eval.json)");
  evalc->callback([&] { run = [&] { return cmd_eval(g, checkpoint, eval_out); }; });

  auto* report = app.add_subcommand("report", "Markdown comparison table and bar plot over run reports");
  add_globals(report);
  std::vector<std::string> inputs;
  std::string report_out = "report.md";
  bool replay = false;
  report->add_option("reports", inputs, "<name>.report.json files")->required();
  report->add_option("--output", report_out, "Markdown file; the plot goes next to it as .svg");
  report->add_flag("--replay", replay, "rerun each embedded config and require identical results");
  report->callback([&] { run = [&] { return cmd_report(g, inputs, report_out, replay); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cerr, std::cerr);
  }
  try {
    return run();
  } catch (const std::exception& e) {
    std::cerr << "molgraph: error: " << e.what() << '\n';
    return 1;
  }
}
