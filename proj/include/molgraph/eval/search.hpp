// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molgraph/error.hpp"
#include "molgraph/forest.hpp"
#include "molgraph/metrics.hpp"
#include "molgraph/rng.hpp"

namespace molgraph::eval {

using nlohmann::ordered_json;

/// One hyperparameter: a finite list of choices, or a continuous
/// [lo, hi] range sampled uniformly or log-uniformly.
struct Dimension {
  std::string name;
  std::vector<ordered_json> choices;
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;

  [[nodiscard]] bool discrete() const noexcept { return !choices.empty(); }

  static Dimension choice(std::string name, std::vector<ordered_json> values) {
    if (values.empty()) throw Error("dimension '" + name + "' has no choices");
    Dimension d;
    d.name = std::move(name);
    d.choices = std::move(values);
    return d;
  }
  static Dimension uniform(std::string name, double lo, double hi) {
    if (!(lo <= hi)) throw Error("dimension '" + name + "' has an empty range");
    Dimension d;
    d.name = std::move(name);
    d.lo = lo;
    d.hi = hi;
    return d;
  }
  static Dimension log_uniform(std::string name, double lo, double hi) {
    if (!(lo > 0 && lo <= hi)) throw Error("dimension '" + name + "' needs 0 < lo <= hi for log sampling");
    Dimension d = uniform(std::move(name), lo, hi);
    d.log_scale = true;
    return d;
  }

  /// Integer grid lo, lo+step, ..., hi.
  static Dimension int_grid(std::string name, int lo, int hi, int step) {
    std::vector<ordered_json> v;
    for (int x = lo; x <= hi; x += step) v.emplace_back(x);
    return choice(std::move(name), std::move(v));
  }
  static Dimension real_grid(std::string name, double lo, double hi, double step) {
    std::vector<ordered_json> v;
    const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int k = 0; k <= n; ++k) v.emplace_back(std::round((lo + k * step) * 1e12) / 1e12);
    return choice(std::move(name), std::move(v));
  }

  ordered_json sample(Rng& rng) const {
    if (discrete()) return choices[rng.below(choices.size())];
    if (log_scale) return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    return rng.uniform(lo, hi);
  }
};

using SearchSpace = std::vector<Dimension>;

enum class SearchMode { kGrid, kRandom };

inline SearchMode parse_search_mode(const std::string& s) {
  if (s == "grid") return SearchMode::kGrid;
  if (s == "random") return SearchMode::kRandom;
  throw Error("unknown search mode '" + s + "'");
}
inline const char* to_string(SearchMode m) { return m == SearchMode::kGrid ? "grid" : "random"; }

/// Full Cartesian product, last dimension varying fastest.
inline std::vector<ordered_json> grid_points(const SearchSpace& space) {
  if (space.empty()) throw Error("search space is empty");
  std::size_t total = 1;
  for (const auto& d : space) {
    if (!d.discrete()) throw Error("grid search needs discrete choices for '" + d.name + "'");
    total *= d.choices.size();
  }
  std::vector<ordered_json> out;
  out.reserve(total);
  std::vector<std::size_t> pos(space.size(), 0);
  for (std::size_t t = 0; t < total; ++t) {
    ordered_json p = ordered_json::object();
    for (std::size_t i = 0; i < space.size(); ++i) p[space[i].name] = space[i].choices[pos[i]];
    out.push_back(std::move(p));
    for (std::size_t i = space.size(); i-- > 0;) {
      if (++pos[i] < space[i].choices.size()) break;
      pos[i] = 0;
    }
  }
  return out;
}

/// `budget` independent draws; trial t uses its own stream of `seed`.
inline std::vector<ordered_json> random_points(const SearchSpace& space, std::size_t budget, std::uint64_t seed) {
  if (space.empty()) throw Error("search space is empty");
  std::vector<ordered_json> out;
  for (std::size_t t = 0; t < budget; ++t) {
    Rng rng(derive_seed(seed, 0x7A1, t));
    ordered_json p = ordered_json::object();
    for (const auto& d : space) p[d.name] = d.sample(rng);
    out.push_back(std::move(p));
  }
  return out;
}

struct Trial {
  std::size_t index = 0;
  ordered_json params;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";  // ok | diverged
  std::string message;
  double seconds = 0.0;
  bool chosen = false;
};

struct SearchResult {
  std::vector<Trial> trials;
  std::size_t best = 0;

  [[nodiscard]] const Trial& best_trial() const { return trials.at(best); }
};

/// Objective returns the validation metric for one parameter point; it may
/// throw DivergenceError to mark a failed trial.
using Objective = std::function<double(const ordered_json& params, std::size_t trial_index)>;

/// Evaluates every point (in parallel when jobs > 1) and picks the best
/// finite validation value; the first-seen trial wins ties.
inline SearchResult run_trials(std::vector<ordered_json> points, const Objective& objective, MetricKind kind,
                               int jobs = 1) {
  if (points.empty()) throw Error("search produced no trials");
  SearchResult res;
  res.trials.resize(points.size());
  forest::forest_detail::parallel_for(points.size(), jobs, [&](std::size_t i) {
    Trial& t = res.trials[i];
    t.index = i;
    t.params = points[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      t.value = objective(t.params, i);
      if (!std::isfinite(t.value)) {
        t.status = "diverged";
        t.message = "non-finite objective";
      }
    } catch (const DivergenceError& e) {
      t.status = "diverged";
      t.message = e.what();
    }
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  bool have = false;
  for (std::size_t i = 0; i < res.trials.size(); ++i) {
    const Trial& t = res.trials[i];
    if (t.status != "ok") continue;
    if (!have || improves(kind, t.value, res.trials[res.best].value)) {
      res.best = i;
      have = true;
    }
  }
  if (!have) throw DivergenceError("every trial diverged");
  res.trials[res.best].chosen = true;
  return res;
}

inline SearchResult search(const SearchSpace& space, SearchMode mode, std::size_t budget, const Objective& objective,
                           MetricKind kind, std::uint64_t seed, int jobs = 1) {
  if (budget < 1) throw Error("search budget must be >= 1");
  auto points = mode == SearchMode::kGrid ? grid_points(space) : random_points(space, budget, seed);
  return run_trials(std::move(points), objective, kind, jobs);
}

inline SearchSpace space_from_json(const ordered_json& j) {
  SearchSpace s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    if (v.is_array()) {
      std::vector<ordered_json> c;
      for (const auto& x : v) c.push_back(x);
      s.push_back(Dimension::choice(it.key(), std::move(c)));
    } else if (v.is_object()) {
      const std::string dist = v.value("dist", std::string("uniform"));
      const double lo = v.at("lo").get<double>();
      const double hi = v.at("hi").get<double>();
      if (dist == "log_uniform") s.push_back(Dimension::log_uniform(it.key(), lo, hi));
      else if (dist == "uniform") s.push_back(Dimension::uniform(it.key(), lo, hi));
      else throw Error("unknown distribution '" + dist + "' for '" + it.key() + "'");
    } else {
      s.push_back(Dimension::choice(it.key(), {v}));
    }
  }
  return s;
}

}  // namespace molgraph::eval
