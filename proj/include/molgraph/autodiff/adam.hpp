// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "molgraph/autodiff/tensor.hpp"

namespace molgraph::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments per parameter plus the step counter.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;

  explicit AdamState(const std::vector<Tensor>& params = {}) {
    for (const auto& p : params) {
      m.emplace_back(p.rows(), p.cols());
      v.emplace_back(p.rows(), p.cols());
    }
  }
};

/// One bias-corrected Adam update on raw buffers. Throws DivergenceError on
/// a non-finite gradient before touching anything.
inline void adam_step(std::vector<Matrix*> params, const std::vector<const Matrix*>& grads, AdamState& state,
                      const AdamOptions& opt) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adam: parameter, gradient and state counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(state.m[i]))
      throw ShapeError("adam: shape mismatch for parameter " + std::to_string(i));
    for (double g : grads[i]->data)
      if (!std::isfinite(g)) throw DivergenceError("non-finite gradient in parameter " + std::to_string(i));
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i]->data;
    const auto& g = grads[i]->data;
    auto& m = state.m[i].data;
    auto& v = state.v[i].data;
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = opt.beta1 * m[j] + (1.0 - opt.beta1) * g[j];
      v[j] = opt.beta2 * v[j] + (1.0 - opt.beta2) * g[j] * g[j];
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      w[j] -= opt.lr * mh / (std::sqrt(vh) + opt.eps);
    }
  }
}

/// Adam over tape parameters; reads their accumulated grads.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions opt) : params_(std::move(params)), state_(params_), opt_(opt) {}

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    std::vector<Matrix*> w;
    std::vector<const Matrix*> g;
    for (auto& p : params_) {
      w.push_back(&p.mutable_value());
      g.push_back(&p.mutable_grad());
    }
    adam_step(std::move(w), g, state_, opt_);
  }

  [[nodiscard]] const AdamState& state() const noexcept { return state_; }
  AdamOptions& options() noexcept { return opt_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
  AdamOptions opt_;
};

}  // namespace molgraph::ad
