// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>

namespace molgraph {

/// Sums after sorting, so the result depends only on the multiset of
/// terms. Node relabeling then cannot change a single bit of any reduction
/// over neighbors or nodes. Reorders `terms`.
inline double order_free_sum(std::span<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace molgraph
