// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "molgraph/error.hpp"

namespace molgraph {

/// Area under the ROC curve via average ranks (Mann-Whitney U); a tied
/// positive/negative pair counts one half.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("auroc: score and label counts differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j share their mean
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) {
        pos_rank_sum += avg;
        ++n_pos;
      }
    i = j;
  }
  for (int y : labels)
    if (y != 0 && y != 1) throw Error("auroc: labels must be 0 or 1");
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("auroc: needs both classes");
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

inline double rmse(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw Error("rmse: prediction and target counts differ");
  if (preds.empty()) throw Error("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += (preds[i] - targets[i]) * (preds[i] - targets[i]);
  return std::sqrt(s / static_cast<double>(preds.size()));
}

/// Confusion counts at a score threshold (score >= threshold -> positive).
struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

inline Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5) {
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1) (pred ? c.tp : c.fn)++;
    else (pred ? c.fp : c.tn)++;
  }
  return c;
}

enum class MetricKind { kAuroc, kRmse };

inline bool higher_is_better(MetricKind k) noexcept { return k == MetricKind::kAuroc; }

/// True when `candidate` strictly improves on `incumbent`.
inline bool improves(MetricKind k, double candidate, double incumbent) noexcept {
  return higher_is_better(k) ? candidate > incumbent : candidate < incumbent;
}

}  // namespace molgraph
