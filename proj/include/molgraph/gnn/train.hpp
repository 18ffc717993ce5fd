// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "molgraph/autodiff/adam.hpp"
#include "molgraph/autodiff/losses.hpp"
#include "molgraph/gnn/models.hpp"
#include "molgraph/hash.hpp"
#include "molgraph/metrics.hpp"
#include "molgraph/serialize.hpp"

namespace molgraph::gnn {

enum class ClassWeightMode { kNone, kBalanced };

struct TrainSpec {
  int max_epochs = 3000;
  int patience = 100;
  std::size_t batch_size = 64;  // 0 = full batch
  std::uint64_t seed = 0;
  ClassWeightMode class_weight = ClassWeightMode::kBalanced;
  bool track_train_metric = true;

  static TrainSpec for_gnn(std::uint64_t seed) { return TrainSpec{3000, 100, 64, seed}; }
  static TrainSpec for_baseline(std::uint64_t seed) { return TrainSpec{3000, 500, 4096, seed}; }

  void validate() const {
    if (max_epochs < 1) throw Error("max_epochs must be >= 1");
    if (patience < 1 || patience >= max_epochs) throw Error("patience must lie in [1, max_epochs)");
  }
};

/// n / (k * n_c) over the training labels; classes absent from training
/// get weight 0.
inline std::vector<double> balanced_class_weights(std::span<const int> labels, std::size_t n_classes = 2) {
  std::vector<double> counts(n_classes, 0.0);
  for (int y : labels) counts.at(static_cast<std::size_t>(y)) += 1.0;
  std::vector<double> w(n_classes, 0.0);
  const double n = static_cast<double>(labels.size());
  const auto present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
  for (std::size_t c = 0; c < n_classes; ++c)
    if (counts[c] > 0) w[c] = n / (present * counts[c]);
  return w;
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_metric = std::numeric_limits<double>::quiet_NaN();
  double valid_metric = 0.0;
};

enum class TrainStatus { kOk, kDiverged };

struct TrainResult {
  TrainStatus status = TrainStatus::kOk;
  std::string message;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_valid = std::numeric_limits<double>::quiet_NaN();
  std::vector<EpochRecord> curve;
  std::vector<NamedMatrix> best_params;
  std::vector<double> class_weights;
  std::uint64_t train_hash = 0;
};

inline MetricKind metric_for(Task t) { return t == Task::kRegression ? MetricKind::kRmse : MetricKind::kAuroc; }

inline std::vector<NamedMatrix> snapshot(const GraphModel& m) {
  std::vector<NamedMatrix> out;
  for (auto& p : m.parameters()) out.push_back({p.name, p.tensor.value()});
  return out;
}

inline void restore(GraphModel& m, const std::vector<NamedMatrix>& params) {
  auto cur = m.parameters();
  if (cur.size() != params.size()) throw Error("checkpoint has " + std::to_string(params.size()) +
                                               " tensors, model has " + std::to_string(cur.size()));
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (cur[i].name != params[i].name || !cur[i].tensor.value().same_shape(params[i].value))
      throw Error("checkpoint tensor '" + params[i].name + "' does not match model tensor '" + cur[i].name + "'");
    cur[i].tensor.mutable_value() = params[i].value;
  }
}

/// Fixed batches in the given order.
inline std::vector<GraphBatch> chunk_batches(const Dataset& data, std::span<const std::size_t> idx, std::size_t size) {
  std::vector<GraphBatch> out;
  if (size == 0) size = idx.size();
  for (std::size_t s = 0; s < idx.size(); s += size)
    out.push_back(make_batch(data, idx.subspan(s, std::min(size, idx.size() - s))));
  return out;
}

/// Positive-class probabilities (classification) or predictions (regression).
inline std::vector<double> predict_batches(const GraphModel& m, const std::vector<GraphBatch>& batches) {
  std::vector<double> out;
  for (const auto& b : batches) {
    const Tensor logits = m.forward(b);
    if (m.task() == Task::kRegression) {
      out.insert(out.end(), logits.value().data.begin(), logits.value().data.end());
    } else {
      const auto p = ad::positive_probability(logits.value());
      out.insert(out.end(), p.begin(), p.end());
    }
  }
  return out;
}

inline std::vector<double> predict(const GraphModel& m, const Dataset& data, std::span<const std::size_t> idx,
                                   std::size_t batch_size = 256) {
  return predict_batches(m, chunk_batches(data, idx, batch_size));
}

inline double score_metric(Task task, std::span<const double> preds, const Dataset& data,
                           std::span<const std::size_t> idx) {
  if (task == Task::kRegression) {
    std::vector<double> y;
    for (auto i : idx) y.push_back(data.graphs[i].label().value_or(0.0));
    return rmse(preds, y);
  }
  std::vector<int> y;
  for (auto i : idx) y.push_back(static_cast<int>(data.graphs[i].label().value_or(0.0)));
  return auroc(preds, y);
}

/// Mini-batch Adam with per-epoch validation and patience-based early
/// stopping. The model ends holding the best-validation parameters.
/// A non-finite loss or gradient stops the run with status kDiverged.
inline TrainResult train(GraphModel& model, const Dataset& data, std::span<const std::size_t> train_idx,
                         std::span<const std::size_t> valid_idx, const TrainSpec& spec) {
  spec.validate();
  if (train_idx.empty() || valid_idx.empty()) throw Error("training and validation sets must be non-empty");
  TrainResult res;
  res.train_hash = index_set_hash(train_idx);
  const Task task = model.task();
  const MetricKind kind = metric_for(task);

  std::vector<int> train_classes;
  for (auto i : train_idx) train_classes.push_back(static_cast<int>(data.graphs[i].label().value_or(0.0)));
  if (task == Task::kBinaryClassification)
    res.class_weights = spec.class_weight == ClassWeightMode::kBalanced ? balanced_class_weights(train_classes)
                                                                         : std::vector<double>{1.0, 1.0};

  ad::Adam opt(model.parameter_tensors(), ad::AdamOptions{model.spec().lr});
  ad::DropoutStream drop(derive_seed(spec.seed, 0xD209));
  const auto valid_batches = chunk_batches(data, valid_idx, 256);
  std::vector<GraphBatch> train_eval_batches;
  if (spec.track_train_metric) train_eval_batches = chunk_batches(data, train_idx, 256);

  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  res.best_params = snapshot(model);
  const std::size_t bs = spec.batch_size == 0 ? order.size() : spec.batch_size;
  int since_best = 0;
  bool have_best = false;

  try {
    for (int epoch = 1; epoch <= spec.max_epochs; ++epoch) {
      Rng shuffle_rng(derive_seed(spec.seed, 0x5EED, static_cast<std::uint64_t>(epoch)));
      shuffle_rng.shuffle(order);
      double loss_sum = 0.0;
      for (std::size_t s = 0; s < order.size(); s += bs) {
        const std::span<const std::size_t> chunk(order.data() + s, std::min(bs, order.size() - s));
        const GraphBatch b = make_batch(data, chunk);
        opt.zero_grad();
        const Tensor out = model.forward(b, true, drop);
        const Tensor loss = task == Task::kRegression ? ad::mse(out, b.targets)
                                                      : ad::weighted_cross_entropy(out, b.classes, res.class_weights);
        if (!std::isfinite(loss.item())) throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
        ad::backward(loss);
        opt.step();
        loss_sum += loss.item() * static_cast<double>(chunk.size());
      }
      EpochRecord rec;
      rec.epoch = epoch;
      rec.train_loss = loss_sum / static_cast<double>(order.size());
      if (spec.track_train_metric)
        rec.train_metric = score_metric(task, predict_batches(model, train_eval_batches), data, train_idx);
      const auto vp = predict_batches(model, valid_batches);
      for (double p : vp)
        if (!std::isfinite(p)) throw DivergenceError("non-finite prediction at epoch " + std::to_string(epoch));
      rec.valid_metric = score_metric(task, vp, data, valid_idx);
      res.curve.push_back(rec);
      res.epochs_run = epoch;
      if (!have_best || improves(kind, rec.valid_metric, res.best_valid)) {
        have_best = true;
        res.best_valid = rec.valid_metric;
        res.best_epoch = epoch;
        res.best_params = snapshot(model);
        since_best = 0;
      } else if (++since_best >= spec.patience) {
        break;
      }
    }
  } catch (const DivergenceError& e) {
    res.status = TrainStatus::kDiverged;
    res.message = e.what();
  }
  restore(model, res.best_params);
  return res;
}

}  // namespace molgraph::gnn
