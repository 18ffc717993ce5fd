// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "molgraph/autodiff/tensor.hpp"
#include "molgraph/numeric.hpp"

namespace molgraph::ad {

// ---------------------------------------------------------------------------
// Index helpers

/// Row -> segment assignment with rows grouped per segment. Used for graph
/// readouts (node -> graph) and for neighbor aggregation (edge -> target).
struct SegmentIndex {
  std::size_t count = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> offsets;  // count + 1
  std::vector<std::int32_t> members;  // rows ordered by segment

  SegmentIndex() = default;
  SegmentIndex(std::vector<std::int32_t> segment_ids, std::size_t segment_count)
      : count(segment_count), ids(std::move(segment_ids)) {
    offsets.assign(count + 1, 0);
    for (auto s : ids) {
      if (s < 0 || static_cast<std::size_t>(s) >= count) throw ShapeError("segment id out of range");
      ++offsets[static_cast<std::size_t>(s) + 1];
    }
    for (std::size_t s = 0; s < count; ++s) offsets[s + 1] += offsets[s];
    members.resize(ids.size());
    std::vector<std::int32_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t r = 0; r < ids.size(); ++r) members[fill[ids[r]]++] = static_cast<std::int32_t>(r);
  }

  [[nodiscard]] std::size_t size_of(std::size_t s) const {
    return static_cast<std::size_t>(offsets[s + 1] - offsets[s]);
  }
  [[nodiscard]] std::span<const std::int32_t> rows_of(std::size_t s) const {
    return {members.data() + offsets[s], size_of(s)};
  }
};

using SegmentPtr = std::shared_ptr<const SegmentIndex>;
using IndexPtr = std::shared_ptr<const std::vector<std::int32_t>>;

inline SegmentPtr make_segments(std::vector<std::int32_t> ids, std::size_t count) {
  return std::make_shared<const SegmentIndex>(std::move(ids), count);
}

/// What a segment reduction does with a segment that has no rows.
enum class EmptySegment { kError, kZero };

namespace ops_detail {

inline void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

inline void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

inline Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }

}  // namespace ops_detail

// ---------------------------------------------------------------------------
// Linear algebra

/// C += A * B, plain triple loop in i-k-j order.
inline void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* crow = c.data.data() + i * c.cols;
    const double* arow = a.data.data() + i * a.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  ops_detail::require(a.cols() == b.rows(), "matmul", a.value(), b.value());
  Matrix out(a.rows(), b.cols());
  gemm_acc(a.value(), b.value(), out);
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = ops_detail::parent(self, 0);
    Node& pb = ops_detail::parent(self, 1);
    const Matrix& g = self.grad;
    const Matrix& av = pa.value;
    const Matrix& bv = pb.value;
    if (pa.requires_grad) {
      Matrix& ga = pa.grad_ref();  // dA = G * B^T
      for (std::size_t i = 0; i < av.rows; ++i)
        for (std::size_t k = 0; k < av.cols; ++k) {
          const double* grow = g.data.data() + i * g.cols;
          const double* brow = bv.data.data() + k * bv.cols;
          double s = 0.0;
          for (std::size_t j = 0; j < g.cols; ++j) s += grow[j] * brow[j];
          ga(i, k) += s;
        }
    }
    if (pb.requires_grad) {
      Matrix& gb = pb.grad_ref();  // dB = A^T * G
      for (std::size_t i = 0; i < av.rows; ++i) {
        const double* grow = g.data.data() + i * g.cols;
        for (std::size_t k = 0; k < av.cols; ++k) {
          const double aik = av(i, k);
          if (aik == 0.0) continue;
          double* gbrow = gb.data.data() + k * gb.cols;
          for (std::size_t j = 0; j < g.cols; ++j) gbrow[j] += aik * grow[j];
        }
      }
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  ops_detail::require(a.value().same_shape(b.value()), "add", a.value(), b.value());
  Matrix out = a.value();
  ops_detail::add_into(out, b.value());
  return make_op(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      Node& p = ops_detail::parent(self, i);
      if (p.requires_grad) ops_detail::add_into(p.grad_ref(), self.grad);
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  ops_detail::require(a.value().same_shape(b.value()), "sub", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = ops_detail::parent(self, 0);
    Node& pb = ops_detail::parent(self, 1);
    if (pa.requires_grad) ops_detail::add_into(pa.grad_ref(), self.grad);
    if (pb.requires_grad) {
      Matrix& g = pb.grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] -= self.grad.data[i];
    }
  });
}

/// A + 1*b for a 1 x cols row vector b.
inline Tensor add_row_vector(const Tensor& a, const Tensor& b) {
  ops_detail::require(b.rows() == 1 && b.cols() == a.cols(), "add_row_vector", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += b.value().data[c];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = ops_detail::parent(self, 0);
    Node& pb = ops_detail::parent(self, 1);
    if (pa.requires_grad) ops_detail::add_into(pa.grad_ref(), self.grad);
    if (pb.requires_grad) {
      Matrix& gb = pb.grad_ref();
      for (std::size_t r = 0; r < self.grad.rows; ++r)
        for (std::size_t c = 0; c < self.grad.cols; ++c) gb.data[c] += self.grad(r, c);
    }
  });
}

inline Tensor scale(const Tensor& a, double s) {
  Matrix out = a.value();
  for (double& x : out.data) x *= s;
  return make_op(std::move(out), {a}, [s](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += s * self.grad.data[i];
  });
}

/// Elementwise product.
inline Tensor mul(const Tensor& a, const Tensor& b) {
  ops_detail::require(a.value().same_shape(b.value()), "mul", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = ops_detail::parent(self, 0);
    Node& pb = ops_detail::parent(self, 1);
    if (pa.requires_grad) {
      Matrix& g = pa.grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[i] * pb.value.data[i];
    }
    if (pb.requires_grad) {
      Matrix& g = pb.grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[i] * pa.value.data[i];
    }
  });
}

/// Scales row r of A by w(r, 0).
inline Tensor mul_rows(const Tensor& a, const Tensor& w) {
  ops_detail::require(w.cols() == 1 && w.rows() == a.rows(), "mul_rows", a.value(), w.value());
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) *= w.value().data[r];
  return make_op(std::move(out), {a, w}, [](Node& self) {
    Node& pa = ops_detail::parent(self, 0);
    Node& pw = ops_detail::parent(self, 1);
    const Matrix& g = self.grad;
    if (pa.requires_grad) {
      Matrix& ga = pa.grad_ref();
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) ga(r, c) += g(r, c) * pw.value.data[r];
    }
    if (pw.requires_grad) {
      Matrix& gw = pw.grad_ref();
      for (std::size_t r = 0; r < g.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < g.cols; ++c) s += g(r, c) * pa.value(r, c);
        gw.data[r] += s;
      }
    }
  });
}

/// A * s for a 1x1 tensor s.
inline Tensor mul_scalar(const Tensor& a, const Tensor& s) {
  ops_detail::require(s.rows() == 1 && s.cols() == 1, "mul_scalar", a.value(), s.value());
  const double k = s.value().data[0];
  Matrix out = a.value();
  for (double& x : out.data) x *= k;
  return make_op(std::move(out), {a, s}, [](Node& self) {
    Node& pa = ops_detail::parent(self, 0);
    Node& ps = ops_detail::parent(self, 1);
    const double k = ps.value.data[0];
    if (pa.requires_grad) {
      Matrix& ga = pa.grad_ref();
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += k * self.grad.data[i];
    }
    if (ps.requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad.data[i] * pa.value.data[i];
      ps.grad_ref().data[0] += acc;
    }
  });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols needs at least one input");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    ops_detail::require(p.rows() == rows, "concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(p.value().data.begin() + static_cast<std::ptrdiff_t>(r * p.cols()), p.cols(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(r * cols + off));
    off += p.cols();
  }
  return make_op(std::move(out), parts, [](Node& self) {
    std::size_t off = 0;
    for (auto& pp : self.parents) {
      Node& p = *pp;
      if (p.requires_grad) {
        Matrix& g = p.grad_ref();
        for (std::size_t r = 0; r < g.rows; ++r)
          for (std::size_t c = 0; c < g.cols; ++c) g(r, c) += self.grad(r, off + c);
      }
      off += p.value.cols;
    }
  });
}

/// out[i] = A[idx[i]].
inline Tensor gather_rows(const Tensor& a, IndexPtr idx) {
  const std::size_t cols = a.cols();
  Matrix out(idx->size(), cols);
  for (std::size_t i = 0; i < idx->size(); ++i) {
    const auto src = static_cast<std::size_t>((*idx)[i]);
    if (src >= a.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(a.value().data.begin() + static_cast<std::ptrdiff_t>(src * cols), cols,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  return make_op(std::move(out), {a}, [idx](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    const std::size_t cols = g.cols;
    for (std::size_t i = 0; i < idx->size(); ++i) {
      double* dst = g.data.data() + static_cast<std::size_t>((*idx)[i]) * cols;
      const double* src = self.grad.data.data() + i * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
}

inline Tensor gather_rows(const Tensor& a, std::vector<std::int32_t> idx) {
  return gather_rows(a, std::make_shared<const std::vector<std::int32_t>>(std::move(idx)));
}

// ---------------------------------------------------------------------------
// Pointwise

namespace ops_detail {

template <class F, class DF>
Tensor pointwise(const Tensor& a, F f, DF df) {
  Matrix out = a.value();
  for (double& x : out.data) x = f(x);
  return make_op(std::move(out), {a}, [df](Node& self) {
    Node& p = parent(self, 0);
    Matrix& g = p.grad_ref();
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[i] * df(p.value.data[i], self.value.data[i]);
  });
}

}  // namespace ops_detail

inline Tensor relu(const Tensor& a) {
  return ops_detail::pointwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

/// max(x, 0) + slope * min(x, 0).
inline Tensor leaky_relu(const Tensor& a, double slope) {
  return ops_detail::pointwise(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

inline Tensor sigmoid(const Tensor& a) {
  return ops_detail::pointwise(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

inline Tensor log(const Tensor& a) {
  return ops_detail::pointwise(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

/// Softmax across the columns of each row.
inline Tensor row_softmax(const Tensor& a) {
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows; ++r) {
    double* row = out.data.data() + r * out.cols;
    const double mx = *std::max_element(row, row + out.cols);
    double s = 0.0;
    for (std::size_t c = 0; c < out.cols; ++c) s += (row[c] = std::exp(row[c] - mx));
    for (std::size_t c = 0; c < out.cols; ++c) row[c] /= s;
  }
  return make_op(std::move(out), {a}, [](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    const Matrix& y = self.value;
    for (std::size_t r = 0; r < y.rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols; ++c) dot += self.grad(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols; ++c) g(r, c) += y(r, c) * (self.grad(r, c) - dot);
    }
  });
}

/// Counter-based dropout randomness: every call draws from a fresh stream
/// derived from (seed, counter), so runs replay exactly.
class DropoutStream {
 public:
  explicit DropoutStream(std::uint64_t seed = 0) : seed_(seed) {}
  Rng next() { return Rng(derive_seed(seed_, counter_++)); }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Inverted dropout; identity when !train or p == 0.
inline Tensor dropout(const Tensor& a, double p, bool train, DropoutStream& stream) {
  if (p < 0.0 || p >= 1.0) throw ShapeError("dropout probability must lie in [0, 1)");
  if (!train || p == 0.0) return a;
  Rng rng = stream.next();
  auto mask = std::make_shared<std::vector<double>>(a.value().size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : *mask) m = rng.uniform() >= p ? keep_scale : 0.0;
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= (*mask)[i];
  return make_op(std::move(out), {a}, [mask](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[i] * (*mask)[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions

/// Per-segment column sums. Each sum adds its terms in sorted order, so the
/// result does not depend on how rows are ordered inside a segment.
inline Tensor segment_sum(const Tensor& a, SegmentPtr seg, EmptySegment empty = EmptySegment::kZero) {
  if (seg->ids.size() != a.rows()) throw ShapeError("segment_sum: segment map length differs from row count");
  const std::size_t cols = a.cols();
  Matrix out(seg->count, cols);
  std::vector<double> buf;
  for (std::size_t s = 0; s < seg->count; ++s) {
    auto rows = seg->rows_of(s);
    if (rows.empty() && empty == EmptySegment::kError) throw ShapeError("segment_sum: empty segment");
    for (std::size_t c = 0; c < cols; ++c) {
      buf.clear();
      for (auto r : rows) buf.push_back(a.value()(static_cast<std::size_t>(r), c));
      out(s, c) = order_free_sum(buf);
    }
  }
  return make_op(std::move(out), {a}, [seg](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    for (std::size_t r = 0; r < g.rows; ++r) {
      const double* src = self.grad.data.data() + static_cast<std::size_t>(seg->ids[r]) * g.cols;
      double* dst = g.data.data() + r * g.cols;
      for (std::size_t c = 0; c < g.cols; ++c) dst[c] += src[c];
    }
  });
}

inline Tensor segment_mean(const Tensor& a, SegmentPtr seg, EmptySegment empty = EmptySegment::kError) {
  if (seg->ids.size() != a.rows()) throw ShapeError("segment_mean: segment map length differs from row count");
  Matrix inv(seg->count, 1);
  for (std::size_t s = 0; s < seg->count; ++s) {
    const auto n = seg->size_of(s);
    if (n == 0 && empty == EmptySegment::kError) throw ShapeError("segment_mean: empty segment");
    inv.data[s] = n ? 1.0 / static_cast<double>(n) : 0.0;
  }
  return mul_rows(segment_sum(a, seg, EmptySegment::kZero), constant(std::move(inv)));
}

/// Per-segment column maxima; the gradient goes to the first row attaining
/// the maximum.
inline Tensor segment_max(const Tensor& a, SegmentPtr seg, EmptySegment empty = EmptySegment::kError) {
  if (seg->ids.size() != a.rows()) throw ShapeError("segment_max: segment map length differs from row count");
  const std::size_t cols = a.cols();
  Matrix out(seg->count, cols);
  auto arg = std::make_shared<std::vector<std::int32_t>>(seg->count * cols, -1);
  for (std::size_t s = 0; s < seg->count; ++s) {
    auto rows = seg->rows_of(s);
    if (rows.empty()) {
      if (empty == EmptySegment::kError) throw ShapeError("segment_max: empty segment");
      continue;
    }
    for (std::size_t c = 0; c < cols; ++c) {
      std::int32_t best = rows[0];
      for (auto r : rows)
        if (a.value()(static_cast<std::size_t>(r), c) > a.value()(static_cast<std::size_t>(best), c)) best = r;
      out(s, c) = a.value()(static_cast<std::size_t>(best), c);
      (*arg)[s * cols + c] = best;
    }
  }
  return make_op(std::move(out), {a}, [arg](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    const std::size_t cols = g.cols;
    for (std::size_t i = 0; i < arg->size(); ++i)
      if ((*arg)[i] >= 0) g(static_cast<std::size_t>((*arg)[i]), i % cols) += self.grad.data[i];
  });
}

/// Softmax over the rows of each segment, independently per column.
inline Tensor segment_softmax(const Tensor& a, SegmentPtr seg) {
  if (seg->ids.size() != a.rows()) throw ShapeError("segment_softmax: segment map length differs from row count");
  const std::size_t cols = a.cols();
  Matrix out(a.rows(), cols);
  std::vector<double> buf;
  for (std::size_t s = 0; s < seg->count; ++s) {
    auto rows = seg->rows_of(s);
    if (rows.empty()) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      double mx = -std::numeric_limits<double>::infinity();
      for (auto r : rows) mx = std::max(mx, a.value()(static_cast<std::size_t>(r), c));
      buf.clear();
      for (auto r : rows) {
        const double e = std::exp(a.value()(static_cast<std::size_t>(r), c) - mx);
        out(static_cast<std::size_t>(r), c) = e;
        buf.push_back(e);
      }
      const double total = order_free_sum(buf);
      for (auto r : rows) out(static_cast<std::size_t>(r), c) /= total;
    }
  }
  return make_op(std::move(out), {a}, [seg](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    const Matrix& y = self.value;
    for (std::size_t s = 0; s < seg->count; ++s) {
      auto rows = seg->rows_of(s);
      for (std::size_t c = 0; c < y.cols; ++c) {
        double dot = 0.0;
        for (auto r : rows) dot += self.grad(static_cast<std::size_t>(r), c) * y(static_cast<std::size_t>(r), c);
        for (auto r : rows) {
          const auto rr = static_cast<std::size_t>(r);
          g(rr, c) += y(rr, c) * (self.grad(rr, c) - dot);
        }
      }
    }
  });
}

/// Column sums of each row: n x 1.
inline Tensor row_sum(const Tensor& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out.data[r] += a.value()(r, c);
  return make_op(std::move(out), {a}, [](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    for (std::size_t r = 0; r < g.rows; ++r)
      for (std::size_t c = 0; c < g.cols; ++c) g(r, c) += self.grad.data[r];
  });
}

inline Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.value().data) s += x;
  return make_op(Matrix(1, 1, s), {a}, [](Node& self) {
    Matrix& g = ops_detail::parent(self, 0).grad_ref();
    for (double& x : g.data) x += self.grad.data[0];
  });
}

/// Elementwise maximum over equally shaped inputs; ties go to the earliest.
inline Tensor elementwise_max(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("elementwise_max needs at least one input");
  for (const auto& x : xs)
    if (!x.value().same_shape(xs.front().value()))
      throw ShapeError("elementwise_max: width mismatch " + x.value().shape_str() + " vs " +
                       xs.front().value().shape_str());
  if (xs.size() == 1) return xs.front();
  Matrix out = xs.front().value();
  auto arg = std::make_shared<std::vector<std::uint16_t>>(out.size(), 0);
  for (std::size_t k = 1; k < xs.size(); ++k)
    for (std::size_t i = 0; i < out.size(); ++i)
      if (xs[k].value().data[i] > out.data[i]) {
        out.data[i] = xs[k].value().data[i];
        (*arg)[i] = static_cast<std::uint16_t>(k);
      }
  return make_op(std::move(out), xs, [arg](Node& self) {
    for (std::size_t i = 0; i < arg->size(); ++i) {
      Node& p = *self.parents[(*arg)[i]];
      if (p.requires_grad) p.grad_ref().data[i] += self.grad.data[i];
    }
  });
}

}  // namespace molgraph::ad
