// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "molgraph/error.hpp"
#include "molgraph/feature_table.hpp"
#include "molgraph/graph.hpp"
#include "molgraph/hash.hpp"
#include "molgraph/rng.hpp"
#include "molgraph/serialize.hpp"

namespace molgraph::forest {

enum class Criterion { kEntropy, kSquaredError };
enum class ClassWeight { kNone, kBalanced, kBalancedSubsample };

inline const char* to_string(Criterion c) { return c == Criterion::kEntropy ? "entropy" : "squared_error"; }
inline const char* to_string(ClassWeight w) {
  switch (w) {
    case ClassWeight::kNone: return "none";
    case ClassWeight::kBalanced: return "balanced";
    case ClassWeight::kBalancedSubsample: return "balanced_subsample";
  }
  return "?";
}
inline Criterion parse_criterion(const std::string& s) {
  if (s == "entropy") return Criterion::kEntropy;
  if (s == "squared_error") return Criterion::kSquaredError;
  throw Error("unknown split criterion '" + s + "'");
}
inline ClassWeight parse_class_weight(const std::string& s) {
  if (s == "none") return ClassWeight::kNone;
  if (s == "balanced") return ClassWeight::kBalanced;
  if (s == "balanced_subsample") return ClassWeight::kBalancedSubsample;
  throw Error("unknown class weight mode '" + s + "'");
}

struct ForestSpec {
  int n_trees = 100;
  Criterion criterion = Criterion::kEntropy;
  int min_samples_split = 2;
  ClassWeight class_weight = ClassWeight::kNone;
  std::optional<int> mtry;  // default: ceil(sqrt(p)) or ceil(p / 3)
  bool bootstrap = true;
  std::uint64_t seed = 0;
  int n_jobs = 1;

  void validate(Task task) const {
    if (n_trees < 1) throw Error("forest needs at least one tree");
    if (min_samples_split < 2) throw Error("min_samples_split must be >= 2");
    if (mtry && *mtry < 1) throw Error("mtry must be >= 1");
    if ((task == Task::kRegression) != (criterion == Criterion::kSquaredError))
      throw Error(std::string("split criterion '") + to_string(criterion) + "' does not match task '" +
                  molgraph::to_string(task) + "'");
    if (task == Task::kRegression && class_weight != ClassWeight::kNone)
      throw Error("class weighting applies to classification only");
  }

  [[nodiscard]] bool within_tuning_ranges() const {
    return min_samples_split >= 2 && min_samples_split <= 10 && min_samples_split % 2 == 0;
  }

  [[nodiscard]] int features_per_split(std::size_t p) const {
    if (mtry) return std::min<int>(*mtry, static_cast<int>(p));
    const double pd = static_cast<double>(p);
    const double m = criterion == Criterion::kEntropy ? std::ceil(std::sqrt(pd)) : std::ceil(pd / 3.0);
    return std::max(1, static_cast<int>(m));
  }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["n_trees"] = n_trees;
    j["criterion"] = to_string(criterion);
    j["min_samples_split"] = min_samples_split;
    j["class_weight"] = to_string(class_weight);
    if (mtry) j["mtry"] = *mtry;
    j["bootstrap"] = bootstrap;
    j["seed"] = seed;
    return j;
  }

  static ForestSpec from_json(const nlohmann::ordered_json& j) {
    ForestSpec s;
    s.n_trees = j.value("n_trees", s.n_trees);
    if (j.contains("criterion")) s.criterion = parse_criterion(j.at("criterion").get<std::string>());
    s.min_samples_split = j.value("min_samples_split", s.min_samples_split);
    if (j.contains("class_weight")) s.class_weight = parse_class_weight(j.at("class_weight").get<std::string>());
    if (j.contains("mtry")) s.mtry = j.at("mtry").get<int>();
    s.bootstrap = j.value("bootstrap", true);
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
  }
};

// ---------------------------------------------------------------------------
// Impurity

/// Entropy in bits of weighted class totals.
inline double entropy_bits(std::span<const double> totals) {
  double w = 0.0;
  for (double t : totals) w += t;
  if (w <= 0.0) return 0.0;
  double h = 0.0;
  for (double t : totals)
    if (t > 0.0) {
      const double p = t / w;
      h -= p * std::log2(p);
    }
  return h;
}

/// Weighted variance from (sum w, sum w y, sum w y^2).
inline double weighted_variance(double w, double wy, double wyy) {
  if (w <= 0.0) return 0.0;
  const double mean = wy / w;
  return std::max(0.0, wyy / w - mean * mean);
}

/// Column-major view of the training matrix plus targets.
struct TrainingData {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<std::vector<double>> columns;  // [feature][row]
  std::vector<double> y;
  std::size_t n_classes = 0;  // 0 for regression

  TrainingData(const FeatureTable& table, std::span<const double> labels, Task task)
      : n_rows(table.rows()), n_features(table.cols()), y(labels.begin(), labels.end()) {
    if (table.rows() == 0 || table.cols() == 0) throw Error("cannot fit a forest on an empty table");
    if (labels.size() != table.rows()) throw Error("label count differs from table rows");
    columns.assign(n_features, std::vector<double>(n_rows));
    for (std::size_t r = 0; r < n_rows; ++r) {
      auto row = table.row(r);
      for (std::size_t f = 0; f < n_features; ++f) columns[f][r] = row[f];
    }
    if (task == Task::kBinaryClassification) {
      n_classes = 2;
      for (double v : y)
        if (v != 0.0 && v != 1.0) throw Error("classification forest needs labels in {0, 1}");
    }
  }
};

struct Split {
  bool found = false;
  std::int32_t feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // weighted impurity decrease, per unit of node weight
};

/// Best axis-aligned split of `samples` over the features in `order`, a
/// candidate list consumed until `mtry` non-constant features were scored.
/// Gain = I(parent) - (W_L / W) I(left) - (W_R / W) I(right). Equal gains go
/// to the lowest feature index, then the lowest threshold.
inline Split best_split(const TrainingData& d, std::span<const std::int32_t> samples, std::span<const double> weight,
                        std::span<const std::int32_t> order, int mtry, double parent_impurity) {
  Split best;
  const bool cls = d.n_classes > 0;
  std::vector<std::int32_t> sorted(samples.begin(), samples.end());
  std::vector<double> left(d.n_classes), right(d.n_classes), total(d.n_classes);
  double tw = 0.0, twy = 0.0, twyy = 0.0;
  for (auto s : samples) {
    const double w = weight[static_cast<std::size_t>(s)];
    tw += w;
    if (cls) total[static_cast<std::size_t>(d.y[s])] += w;
    else {
      twy += w * d.y[s];
      twyy += w * d.y[s] * d.y[s];
    }
  }
  if (tw <= 0.0) return best;
  int scored = 0;
  for (auto f : order) {
    if (scored >= mtry) break;
    const auto& col = d.columns[static_cast<std::size_t>(f)];
    std::sort(sorted.begin(), sorted.end(), [&](std::int32_t a, std::int32_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });
    if (col[sorted.front()] == col[sorted.back()]) continue;  // constant here; does not count toward mtry
    ++scored;
    std::fill(left.begin(), left.end(), 0.0);
    double lw = 0.0, lwy = 0.0, lwyy = 0.0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      const auto s = sorted[i];
      const double w = weight[static_cast<std::size_t>(s)];
      lw += w;
      if (cls) left[static_cast<std::size_t>(d.y[s])] += w;
      else {
        lwy += w * d.y[s];
        lwyy += w * d.y[s] * d.y[s];
      }
      const double a = col[s];
      const double b = col[sorted[i + 1]];
      if (a == b) continue;
      const double rw = tw - lw;
      double il, ir;
      if (cls) {
        for (std::size_t c = 0; c < d.n_classes; ++c) right[c] = total[c] - left[c];
        il = entropy_bits(left);
        ir = entropy_bits(right);
      } else {
        il = weighted_variance(lw, lwy, lwyy);
        ir = weighted_variance(rw, twy - lwy, twyy - lwyy);
      }
      const double gain = parent_impurity - (lw / tw) * il - (rw / tw) * ir;
      double thr = a + (b - a) / 2.0;
      if (thr >= b) thr = a;  // midpoint rounded up onto b
      const bool better = !best.found || gain > best.gain ||
                          (gain == best.gain && (f < best.feature || (f == best.feature && thr < best.threshold)));
      if (better) best = Split{true, f, thr, gain};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Trees

/// Flat binary tree; leaves hold normalized weighted class frequencies (or
/// the weighted mean target) in `value`.
struct Tree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t value = 0;  // offset into values
  };
  std::vector<Node> nodes;
  std::vector<double> values;
  std::size_t n_outputs = 1;

  [[nodiscard]] std::span<const double> leaf_value(std::span<const double> row) const {
    std::int32_t i = 0;
    while (nodes[i].feature >= 0)
      i = row[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return {values.data() + nodes[i].value, n_outputs};
  }

  [[nodiscard]] std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
  }
};

namespace forest_detail {

inline double node_impurity(const TrainingData& d, std::span<const std::int32_t> samples, std::span<const double> w,
                            std::vector<double>& leaf_out) {
  double tw = 0.0;
  if (d.n_classes > 0) {
    std::vector<double> t(d.n_classes, 0.0);
    for (auto s : samples) {
      t[static_cast<std::size_t>(d.y[s])] += w[static_cast<std::size_t>(s)];
      tw += w[static_cast<std::size_t>(s)];
    }
    leaf_out.resize(d.n_classes);
    for (std::size_t c = 0; c < d.n_classes; ++c) leaf_out[c] = tw > 0 ? t[c] / tw : 0.0;
    return entropy_bits(t);
  }
  double wy = 0.0, wyy = 0.0;
  for (auto s : samples) {
    const double ws = w[static_cast<std::size_t>(s)];
    tw += ws;
    wy += ws * d.y[s];
    wyy += ws * d.y[s] * d.y[s];
  }
  leaf_out.assign(1, tw > 0 ? wy / tw : 0.0);
  return weighted_variance(tw, wy, wyy);
}

inline constexpr double kMinGain = 1e-12;

inline Tree grow_tree(const TrainingData& d, std::vector<std::int32_t> samples, const std::vector<double>& weight,
                      int mtry, int min_samples_split, Rng& rng) {
  Tree t;
  t.n_outputs = d.n_classes > 0 ? d.n_classes : 1;
  struct Pending {
    std::int32_t node;
    std::size_t lo, hi;  // range in `samples`
  };
  std::vector<std::int32_t> features(d.n_features);
  std::iota(features.begin(), features.end(), 0);
  t.nodes.push_back({});
  std::vector<Pending> stack{{0, 0, samples.size()}};
  std::vector<double> leaf;
  while (!stack.empty()) {
    const Pending task = stack.back();
    stack.pop_back();
    std::span<std::int32_t> node_samples(samples.data() + task.lo, task.hi - task.lo);
    const double imp = node_impurity(d, node_samples, weight, leaf);
    auto make_leaf = [&] {
      t.nodes[task.node].value = static_cast<std::int32_t>(t.values.size());
      t.values.insert(t.values.end(), leaf.begin(), leaf.end());
    };
    if (imp <= 0.0 || node_samples.size() < static_cast<std::size_t>(min_samples_split)) {
      make_leaf();
      continue;
    }
    rng.shuffle(features);
    const Split s = best_split(d, node_samples, weight, features, mtry, imp);
    if (!s.found || s.gain <= kMinGain) {
      make_leaf();
      continue;
    }
    const auto& col = d.columns[static_cast<std::size_t>(s.feature)];
    auto mid = std::stable_partition(node_samples.begin(), node_samples.end(),
                                     [&](std::int32_t r) { return col[r] <= s.threshold; });
    const std::size_t n_left = static_cast<std::size_t>(mid - node_samples.begin());
    const auto li = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.push_back({});
    t.nodes.push_back({});
    t.nodes[task.node].feature = s.feature;
    t.nodes[task.node].threshold = s.threshold;
    t.nodes[task.node].left = li;
    t.nodes[task.node].right = li + 1;
    stack.push_back({li + 1, task.lo + n_left, task.hi});
    stack.push_back({li, task.lo, task.lo + n_left});
  }
  return t;
}

/// Runs f(i) for i in [0, n) on up to `jobs` threads; each index is
/// independent, so results do not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const std::size_t workers = std::min<std::size_t>(std::max(1, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace forest_detail

/// n / (k * n_c) per class over the given labels (and multiplicities).
inline std::vector<double> balanced_weights(std::span<const double> y, std::span<const double> multiplicity,
                                            std::size_t k) {
  std::vector<double> count(k, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = multiplicity.empty() ? 1.0 : multiplicity[i];
    count[static_cast<std::size_t>(y[i])] += m;
    n += m;
  }
  std::vector<double> w(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    if (count[c] > 0) w[c] = n / (static_cast<double>(k) * count[c]);
  return w;
}

class Forest {
 public:
  Forest() = default;

  static Forest fit(const FeatureTable& table, std::span<const double> labels, Task task, const ForestSpec& spec) {
    spec.validate(task);
    const TrainingData d(table, labels, task);
    Forest f;
    f.spec_ = spec;
    f.task_ = task;
    f.n_features_ = d.n_features;
    f.feature_names_ = table.names();
    f.trees_.resize(static_cast<std::size_t>(spec.n_trees));
    const int mtry = spec.features_per_split(d.n_features);
    std::vector<double> global_cw;
    if (spec.class_weight == ClassWeight::kBalanced) global_cw = balanced_weights(d.y, {}, d.n_classes);

    forest_detail::parallel_for(f.trees_.size(), spec.n_jobs, [&](std::size_t ti) {
      Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(ti)));
      std::vector<double> mult(d.n_rows, spec.bootstrap ? 0.0 : 1.0);
      if (spec.bootstrap)
        for (std::size_t i = 0; i < d.n_rows; ++i) mult[rng.below(d.n_rows)] += 1.0;
      std::vector<double> cw;
      if (spec.class_weight == ClassWeight::kBalanced) cw = global_cw;
      if (spec.class_weight == ClassWeight::kBalancedSubsample) cw = balanced_weights(d.y, mult, d.n_classes);
      std::vector<double> weight(d.n_rows);
      std::vector<std::int32_t> samples;
      for (std::size_t i = 0; i < d.n_rows; ++i) {
        weight[i] = mult[i] * (cw.empty() ? 1.0 : cw[static_cast<std::size_t>(d.y[i])]);
        if (mult[i] > 0) samples.push_back(static_cast<std::int32_t>(i));
      }
      f.trees_[ti] = forest_detail::grow_tree(d, std::move(samples), weight, mtry, spec.min_samples_split, rng);
    });
    return f;
  }

  /// Mean over trees of leaf class frequencies: n x k (k = 1 for regression).
  [[nodiscard]] std::vector<std::vector<double>> predict_proba(const FeatureTable& rows) const {
    if (rows.cols() != n_features_)
      throw Error("row width " + std::to_string(rows.cols()) + " differs from the " + std::to_string(n_features_) +
                  " features the forest was fit on");
    const std::size_t k = trees_.empty() ? 1 : trees_.front().n_outputs;
    std::vector<std::vector<double>> out(rows.rows(), std::vector<double>(k, 0.0));
    forest_detail::parallel_for(rows.rows(), spec_.n_jobs, [&](std::size_t r) {
      const auto row = rows.row(r);
      for (const auto& t : trees_) {
        const auto v = t.leaf_value(row);
        for (std::size_t c = 0; c < k; ++c) out[r][c] += v[c];
      }
      for (double& x : out[r]) x /= static_cast<double>(trees_.size());
    });
    return out;
  }

  /// Class-1 probability, or the prediction for regression.
  [[nodiscard]] std::vector<double> predict_score(const FeatureTable& rows) const {
    const auto p = predict_proba(rows);
    std::vector<double> out;
    out.reserve(p.size());
    for (const auto& r : p) out.push_back(task_ == Task::kRegression ? r[0] : r[1]);
    return out;
  }

  [[nodiscard]] const std::vector<Tree>& trees() const noexcept { return trees_; }
  [[nodiscard]] const ForestSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] Task task() const noexcept { return task_; }
  [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  void set_jobs(int jobs) { spec_.n_jobs = jobs; }

  static constexpr std::uint32_t kMagic = 0x46524d47;  // "GMRF"
  static constexpr std::uint32_t kVersion = 1;

  [[nodiscard]] BlobWriter to_blob() const {
    BlobWriter w;
    w.put(kMagic);
    w.put(kVersion);
    w.put(static_cast<std::uint32_t>(task_));
    w.put(static_cast<std::uint64_t>(n_features_));
    w.put(static_cast<std::uint64_t>(trees_.size()));
    for (const auto& t : trees_) {
      w.put(static_cast<std::uint64_t>(t.n_outputs));
      w.put(static_cast<std::uint64_t>(t.nodes.size()));
      for (const auto& n : t.nodes) {
        w.put(n.feature);
        w.put(n.threshold);
        w.put(n.left);
        w.put(n.right);
        w.put(n.value);
      }
      w.put(static_cast<std::uint64_t>(t.values.size()));
      w.put_doubles(t.values);
    }
    return w;
  }

  [[nodiscard]] nlohmann::ordered_json manifest() const {
    nlohmann::ordered_json j;
    j["format"] = "molgraph-forest";
    j["version"] = kVersion;
    j["task"] = molgraph::to_string(task_);
    j["spec"] = spec_.to_json();
    j["seed"] = spec_.seed;
    j["feature_names"] = feature_names_;
    return j;
  }

  static Forest from_blob(BlobReader r, const nlohmann::ordered_json& manifest) {
    if (r.get<std::uint32_t>() != kMagic) throw Error("not a forest blob");
    if (const auto v = r.get<std::uint32_t>(); v != kVersion)
      throw Error("unsupported forest blob version " + std::to_string(v));
    Forest f;
    f.task_ = static_cast<Task>(r.get<std::uint32_t>());
    f.n_features_ = r.get<std::uint64_t>();
    f.trees_.resize(r.get<std::uint64_t>());
    for (auto& t : f.trees_) {
      t.n_outputs = r.get<std::uint64_t>();
      t.nodes.resize(r.get<std::uint64_t>());
      for (auto& n : t.nodes) {
        n.feature = r.get<std::int32_t>();
        n.threshold = r.get<double>();
        n.left = r.get<std::int32_t>();
        n.right = r.get<std::int32_t>();
        n.value = r.get<std::int32_t>();
      }
      t.values = r.get_doubles(r.get<std::uint64_t>());
    }
    if (!r.at_end()) throw Error("trailing bytes in forest blob");
    f.spec_ = ForestSpec::from_json(manifest.at("spec"));
    f.feature_names_ = manifest.at("feature_names").get<std::vector<std::string>>();
    if (f.feature_names_.size() != f.n_features_) throw Error("forest manifest feature count differs from blob");
    return f;
  }

 private:
  ForestSpec spec_;
  Task task_ = Task::kBinaryClassification;
  std::size_t n_features_ = 0;
  std::vector<std::string> feature_names_;
  std::vector<Tree> trees_;
};

/// Keeps every positive and a seeded uniform `fraction` of the negatives
/// (rounded to nearest), preserving the input order.
inline std::vector<std::size_t> subsample_negatives(std::span<const std::size_t> rows, std::span<const double> labels,
                                                    double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("negative retain fraction must lie in (0, 1]");
  std::vector<std::size_t> neg;
  bool any_pos = false;
  for (auto r : rows) {
    if (labels[r] == 1.0) any_pos = true;
    else neg.push_back(r);
  }
  if (!any_pos) throw Error("negative subsampling needs at least one positive sample");
  if (fraction == 1.0) return {rows.begin(), rows.end()};
  Rng rng(derive_seed(seed, 0x4E36));
  rng.shuffle(neg);
  const auto keep_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(neg.size())));
  std::vector<std::size_t> kept_neg(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(keep_n));
  std::sort(kept_neg.begin(), kept_neg.end());
  std::vector<std::size_t> out;
  for (auto r : rows)
    if (labels[r] == 1.0 || std::binary_search(kept_neg.begin(), kept_neg.end(), r)) out.push_back(r);
  return out;
}

}  // namespace molgraph::forest
