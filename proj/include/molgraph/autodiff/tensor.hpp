// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "molgraph/error.hpp"
#include "molgraph/rng.hpp"

namespace molgraph::ad {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != r * c) throw ShapeError("matrix data does not match its shape");
  }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
  [[nodiscard]] bool same_shape(const Matrix& o) const noexcept { return rows == o.rows && cols == o.cols; }
  [[nodiscard]] std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// One recorded value in the tape: forward value, gradient accumulator and
/// the rule that pushes its gradient into its parents.
struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Matrix& grad_ref() {
    if (!grad.same_shape(value)) grad = Matrix(value.rows, value.cols);
    return grad;
  }
};

/// Handle to a tape node. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  [[nodiscard]] const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  /// Gradient; zero-filled when nothing has flowed into it yet.
  [[nodiscard]] const Matrix& grad() const { return node_->grad_ref(); }
  Matrix& mutable_grad() { return node_->grad_ref(); }
  [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
  [[nodiscard]] std::size_t rows() const { return node_->value.rows; }
  [[nodiscard]] std::size_t cols() const { return node_->value.cols; }
  [[nodiscard]] double item() const {
    if (node_->value.size() != 1) throw ShapeError("item() needs a 1x1 tensor, got " + node_->value.shape_str());
    return node_->value.data[0];
  }
  [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(node_); }
  [[nodiscard]] const std::shared_ptr<Node>& node() const noexcept { return node_; }

  void zero_grad() {
    if (node_) node_->grad = Matrix(node_->value.rows, node_->value.cols);
  }

 private:
  std::shared_ptr<Node> node_;
};

/// Trainable leaf.
inline Tensor parameter(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

/// Non-trainable leaf.
inline Tensor constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Tensor(std::move(n));
}

/// Builds an interior tape node. `rule` receives the node whose `grad` is
/// final and must add into the parents' gradients.
inline Tensor make_op(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> rule) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (auto& t : inputs) {
    n->requires_grad = n->requires_grad || t.requires_grad();
    n->parents.push_back(t.node());
  }
  if (n->requires_grad) n->backward = std::move(rule);
  else n->parents.clear();
  return Tensor(std::move(n));
}

/// Reverse sweep from `root`. The root gradient is seeded with ones, so for
/// a 1x1 loss this yields d(loss)/d(leaf) in every parameter's grad.
inline void backward(const Tensor& root) {
  if (!root.requires_grad()) return;
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  Matrix& g = root.node()->grad_ref();
  std::fill(g.data.begin(), g.data.end(), 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    // a node nothing flowed into still needs a zero grad for its rule
    if (n->backward) {
      n->grad_ref();
      n->backward(*n);
    }
  }
}

/// Glorot-uniform matrix with bound sqrt(6 / (fan_in + fan_out)).
inline Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Matrix m(fan_in, fan_out);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& x : m.data) x = rng.uniform(-bound, bound);
  return m;
}

}  // namespace molgraph::ad
