// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molgraph/graph.hpp"
#include "molgraph/rng.hpp"

namespace molgraph::eval {

enum class SplitStrategy { kStratified, kGroup };

inline const char* to_string(SplitStrategy s) { return s == SplitStrategy::kStratified ? "stratified" : "group"; }
inline SplitStrategy parse_split_strategy(const std::string& s) {
  if (s == "stratified") return SplitStrategy::kStratified;
  if (s == "group") return SplitStrategy::kGroup;
  throw Error("unknown split strategy '" + s + "'");
}

struct Proportions {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;

  void validate() const {
    if (train <= 0 || valid < 0 || test < 0) throw Error("split proportions must be non-negative, train positive");
    if (std::abs(train + valid + test - 1.0) > 1e-9) throw Error("split proportions must sum to 1");
  }
};

struct SplitPlan {
  std::vector<std::size_t> train, valid, test;
  SplitStrategy strategy = SplitStrategy::kStratified;
  Proportions proportions;
  std::uint64_t seed = 0;

  /// Disjoint cover of [0, n).
  void validate(std::size_t n) const {
    std::vector<int> seen(n, 0);
    for (const auto* set : {&train, &valid, &test})
      for (auto i : *set) {
        if (i >= n) throw Error("split index out of range");
        if (seen[i]++) throw Error("split sets overlap at index " + std::to_string(i));
      }
    for (std::size_t i = 0; i < n; ++i)
      if (!seen[i]) throw Error("split misses index " + std::to_string(i));
  }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["strategy"] = to_string(strategy);
    j["proportions"] = {proportions.train, proportions.valid, proportions.test};
    j["seed"] = seed;
    j["sizes"] = {train.size(), valid.size(), test.size()};
    return j;
  }
};

namespace split_detail {

/// Per-class rounding keeps each class within one sample of its share.
inline SplitPlan stratified(const Dataset& d, const Proportions& p, std::uint64_t seed) {
  SplitPlan plan;
  std::map<double, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double key = d.task == Task::kBinaryClassification ? d.graphs[i].label().value_or(0.0) : 0.0;
    by_class[key].push_back(i);
  }
  std::uint64_t stream = 0;
  for (auto& [cls, idx] : by_class) {
    Rng rng(derive_seed(seed, 0x57A7, stream++));
    rng.shuffle(idx);
    const double n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * p.train));
    const auto n_valid = std::min(idx.size() - n_train, static_cast<std::size_t>(std::llround(n * p.valid)));
    plan.train.insert(plan.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    plan.valid.insert(plan.valid.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                      idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    plan.test.insert(plan.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), idx.end());
  }
  return plan;
}

/// Whole groups, largest first (seeded order among equal sizes), go to
/// train until it would exceed its share, then validation, then test.
inline SplitPlan grouped(const Dataset& d, const Proportions& p, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& g = d.graphs[i].group();
    if (!g) throw Error("group split needs a group tag on every graph (graph " + std::to_string(i) + ")");
    groups[*g].push_back(i);
  }
  std::vector<const std::pair<const std::string, std::vector<std::size_t>>*> order;
  for (const auto& kv : groups) order.push_back(&kv);
  Rng rng(derive_seed(seed, 0x6A0));
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->second.size() > b->second.size(); });

  const double n = static_cast<double>(d.size());
  const double train_cut = p.train * n;
  const double valid_cut = (p.train + p.valid) * n;
  SplitPlan plan;
  for (auto* grp : order) {
    const double sz = static_cast<double>(grp->second.size());
    if (sz > train_cut)
      throw Error("group '" + grp->first + "' has " + std::to_string(grp->second.size()) +
                  " graphs, more than the train share of " + std::to_string(train_cut));
    auto& dst = static_cast<double>(plan.train.size()) + sz <= train_cut ? plan.train
                : static_cast<double>(plan.train.size() + plan.valid.size()) + sz <= valid_cut ? plan.valid
                                                                                               : plan.test;
    dst.insert(dst.end(), grp->second.begin(), grp->second.end());
  }
  return plan;
}

}  // namespace split_detail

/// Deterministic per (dataset, strategy, proportions, seed). Index sets are
/// returned sorted.
inline SplitPlan make_split(const Dataset& d, SplitStrategy strategy, Proportions p, std::uint64_t seed) {
  p.validate();
  if (d.size() == 0) throw Error("cannot split an empty dataset");
  SplitPlan plan = strategy == SplitStrategy::kStratified ? split_detail::stratified(d, p, seed)
                                                          : split_detail::grouped(d, p, seed);
  plan.strategy = strategy;
  plan.proportions = p;
  plan.seed = seed;
  for (auto* s : {&plan.train, &plan.valid, &plan.test}) std::sort(s->begin(), s->end());
  plan.validate(d.size());
  return plan;
}

}  // namespace molgraph::eval
