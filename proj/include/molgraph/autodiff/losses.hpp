// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "molgraph/autodiff/ops.hpp"

namespace molgraph::ad {

/// Mean over the batch of w[t_i] * -log softmax(logits_i)[t_i]. The sum is
/// divided by the batch size, so scaling every weight scales the loss.
inline Tensor weighted_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                                     const std::vector<double>& class_weights) {
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  if (targets.size() != n) throw ShapeError("cross entropy: target count differs from batch size");
  if (class_weights.size() != k) throw ShapeError("cross entropy: class weight count differs from class count");
  if (n == 0) throw ShapeError("cross entropy: empty batch");
  for (int t : targets)
    if (t < 0 || static_cast<std::size_t>(t) >= k) throw ShapeError("cross entropy: target index out of range");

  auto probs = std::make_shared<Matrix>(n, k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mx = *std::max_element(logits.value().data.begin() + static_cast<std::ptrdiff_t>(i * k),
                                        logits.value().data.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += ((*probs)(i, c) = std::exp(logits.value()(i, c) - mx));
    for (std::size_t c = 0; c < k; ++c) (*probs)(i, c) /= z;
    const auto t = static_cast<std::size_t>(targets[i]);
    total += class_weights[t] * -(logits.value()(i, t) - mx - std::log(z));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return make_op(Matrix(1, 1, total * inv_n), {logits}, [probs, targets, class_weights, inv_n](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    const double up = self.grad.data[0];
    for (std::size_t i = 0; i < g.rows; ++i) {
      const auto t = static_cast<std::size_t>(targets[i]);
      const double w = class_weights[t] * inv_n * up;
      for (std::size_t c = 0; c < g.cols; ++c) g(i, c) += w * ((*probs)(i, c) - (c == t ? 1.0 : 0.0));
    }
  });
}

/// Mean squared residual over all entries of an n x 1 prediction.
inline Tensor mse(const Tensor& preds, const std::vector<double>& targets) {
  if (preds.cols() != 1 || preds.rows() != targets.size()) throw ShapeError("mse: prediction shape " + preds.value().shape_str());
  if (targets.empty()) throw ShapeError("mse: empty batch");
  const double inv_n = 1.0 / static_cast<double>(targets.size());
  double s = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double r = preds.value().data[i] - targets[i];
    s += r * r;
  }
  return make_op(Matrix(1, 1, s * inv_n), {preds}, [targets, inv_n](Node& self) {
    Node& p = ops_detail::parent(self, 0);
    Matrix& g = p.grad_ref();
    for (std::size_t i = 0; i < targets.size(); ++i)
      g.data[i] += 2.0 * inv_n * self.grad.data[0] * (p.value.data[i] - targets[i]);
  });
}

/// Softmax probability of class 1 per row of a 2-column logit matrix.
inline std::vector<double> positive_probability(const Matrix& logits) {
  std::vector<double> out(logits.rows);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double d = logits(i, 1) - logits(i, 0);
    out[i] = 1.0 / (1.0 + std::exp(-d));
  }
  return out;
}

}  // namespace molgraph::ad
