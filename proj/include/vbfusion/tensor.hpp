// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vbfusion/rng.hpp"

namespace vbf {

class Tensor;

/// Tape node: the parents of an op output plus the rule that scatters the
/// output gradient back into the parents' gradient buffers.
struct Node {
  std::vector<Tensor> parents;
  std::function<void(Tensor&)> backward;
};

/// Globally (per thread) disables graph construction, e.g. during evaluation.
inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGradGuard() { grad_mode_flag() = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

/// Dense row-major double tensor with optional reverse-mode gradient.
///
/// Copies are shallow (data, grad and tape node are shared); tensors are
/// treated as immutable values once created, except for explicit in-place
/// parameter updates performed by the optimizer between graph constructions.
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<int> shape, bool requires_grad = false)
      : shape_(std::move(shape)), requires_grad_(requires_grad) {
    size_t n = checked_numel(shape_);
    data_ = std::make_shared<std::vector<double>>(n, 0.0);
    if (requires_grad_) grad_ = std::make_shared<std::vector<double>>(n, 0.0);
  }

  Tensor(std::vector<int> shape, std::vector<double> values,
         bool requires_grad = false)
      : shape_(std::move(shape)), requires_grad_(requires_grad) {
    size_t n = checked_numel(shape_);
    if (values.size() != n)
      throw std::runtime_error("tensor: data length does not match shape");
    data_ = std::make_shared<std::vector<double>>(std::move(values));
    if (requires_grad_) grad_ = std::make_shared<std::vector<double>>(n, 0.0);
  }

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    return Tensor(std::move(shape), requires_grad);
  }

  static Tensor full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_->begin(), t.data_->end(), value);
    return t;
  }

  static Tensor scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

  /// Seeded normal(mean, stddev) fill; the draw order is row-major.
  static Tensor randn(std::vector<int> shape, Pcg32& rng, double stddev = 1.0,
                      double mean = 0.0, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    for (double& x : *t.data_) x = rng.normal(mean, stddev);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  size_t size() const { return data_ ? data_->size() : 0; }
  bool defined() const { return static_cast<bool>(data_); }

  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }
  std::vector<double>& values() { return *data_; }
  const std::vector<double>& values() const { return *data_; }

  bool requires_grad() const { return requires_grad_; }
  bool has_grad() const { return static_cast<bool>(grad_); }
  double* grad() { return grad_->data(); }
  const double* grad() const { return grad_->data(); }
  std::vector<double>& grad_values() { return *grad_; }
  const std::vector<double>& grad_values() const { return *grad_; }

  void zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
  }

  double item() const {
    if (size() != 1) throw std::runtime_error("item: tensor is not a scalar");
    return (*data_)[0];
  }

  bool all_finite() const {
    for (double x : *data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  const std::shared_ptr<Node>& node() const { return node_; }
  void set_node(std::shared_ptr<Node> n) { node_ = std::move(n); }

  /// Marks an existing tensor as a gradient leaf (used by Parameter).
  void enable_grad() {
    requires_grad_ = true;
    if (!grad_) grad_ = std::make_shared<std::vector<double>>(size(), 0.0);
  }

 private:
  static size_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty()) throw std::runtime_error("tensor: empty shape");
    size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw std::runtime_error("tensor: non-positive dimension");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  std::vector<int> shape_;
  std::shared_ptr<std::vector<double>> data_;
  std::shared_ptr<std::vector<double>> grad_;
  std::shared_ptr<Node> node_;
  bool requires_grad_ = false;
};

namespace detail {

inline size_t numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

inline bool want_grad(const Tensor& t) {
  return grad_mode_flag() && t.requires_grad();
}

/// Creates the op output and attaches the tape node when gradients are on.
inline Tensor make_result(std::vector<int> shape, std::vector<Tensor> parents,
                          std::function<void(Tensor&)> backward) {
  bool rg = false;
  for (const Tensor& p : parents) rg = rg || want_grad(p);
  Tensor out(std::move(shape), rg);
  if (rg) {
    auto node = std::make_shared<Node>();
    node->parents = std::move(parents);
    node->backward = std::move(backward);
    out.set_node(std::move(node));
  }
  return out;
}

/// Splits a shape around `axis` into (outer, n, inner) extents for line walks.
struct AxisSplit {
  size_t outer, n, inner;
};

inline AxisSplit axis_split(const std::vector<int>& shape, int axis) {
  check(axis >= 0 && axis < static_cast<int>(shape.size()),
        "axis out of range");
  AxisSplit s{1, static_cast<size_t>(shape[static_cast<size_t>(axis)]), 1};
  for (int i = 0; i < axis; ++i) s.outer *= static_cast<size_t>(shape[static_cast<size_t>(i)]);
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i)
    s.inner *= static_cast<size_t>(shape[i]);
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and affine primitives
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check(a.shape() == b.shape(), "add: shape mismatch");
  Tensor out = detail::make_result(a.shape(), {a, b}, [](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    Tensor& pb = o.node()->parents[1];
    size_t n = o.size();
    const double* g = o.grad();
    if (pa.requires_grad())
      for (size_t i = 0; i < n; ++i) pa.grad()[i] += g[i];
    if (pb.requires_grad())
      for (size_t i = 0; i < n; ++i) pb.grad()[i] += g[i];
  });
  size_t n = out.size();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  return out;
}

/// X [m x n] plus a broadcast row vector v [n].
inline Tensor add_rowwise(const Tensor& x, const Tensor& v) {
  detail::check(x.rank() == 2 && v.rank() == 1 && x.dim(1) == v.dim(0),
                "add_rowwise: shape mismatch");
  int m = x.dim(0), n = x.dim(1);
  Tensor out = detail::make_result(x.shape(), {x, v}, [m, n](Tensor& o) {
    Tensor& px = o.node()->parents[0];
    Tensor& pv = o.node()->parents[1];
    const double* g = o.grad();
    if (px.requires_grad()) {
      double* gx = px.grad();
      for (int i = 0; i < m * n; ++i) gx[i] += g[i];
    }
    if (pv.requires_grad()) {
      double* gv = pv.grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) gv[j] += g[i * n + j];
    }
  });
  const double* px = x.data();
  const double* pv = v.data();
  double* po = out.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) po[i * n + j] = px[i * n + j] + pv[j];
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check(a.shape() == b.shape(), "mul: shape mismatch");
  Tensor out = detail::make_result(a.shape(), {a, b}, [](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    Tensor& pb = o.node()->parents[1];
    size_t n = o.size();
    const double* g = o.grad();
    if (pa.requires_grad()) {
      const double* db = pb.data();
      for (size_t i = 0; i < n; ++i) pa.grad()[i] += g[i] * db[i];
    }
    if (pb.requires_grad()) {
      const double* da = pa.data();
      for (size_t i = 0; i < n; ++i) pb.grad()[i] += g[i] * da[i];
    }
  });
  size_t n = out.size();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  return out;
}

inline Tensor mul_scalar(const Tensor& a, double s) {
  Tensor out = detail::make_result(a.shape(), {a}, [s](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    size_t n = o.size();
    const double* g = o.grad();
    for (size_t i = 0; i < n; ++i) pa.grad()[i] += g[i] * s;
  });
  size_t n = out.size();
  const double* pa = a.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = pa[i] * s;
  return out;
}

inline Tensor add_scalar(const Tensor& a, double s) {
  Tensor out = detail::make_result(a.shape(), {a}, [](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    size_t n = o.size();
    const double* g = o.grad();
    for (size_t i = 0; i < n; ++i) pa.grad()[i] += g[i];
  });
  size_t n = out.size();
  const double* pa = a.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = pa[i] + s;
  return out;
}

inline Tensor relu(const Tensor& a) {
  Tensor out = detail::make_result(a.shape(), {a}, [](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    size_t n = o.size();
    const double* g = o.grad();
    const double* x = pa.data();
    for (size_t i = 0; i < n; ++i)
      if (x[i] > 0.0) pa.grad()[i] += g[i];
  });
  size_t n = out.size();
  const double* pa = a.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  return out;
}

namespace detail {
constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace detail

/// GELU, tanh approximation. Within 1e-3 absolute of the exact erf form.
inline Tensor gelu(const Tensor& a) {
  Tensor out = detail::make_result(a.shape(), {a}, [](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    size_t n = o.size();
    const double* g = o.grad();
    const double* x = pa.data();
    for (size_t i = 0; i < n; ++i) {
      double u = detail::kGeluK * (x[i] + detail::kGeluA * x[i] * x[i] * x[i]);
      double t = std::tanh(u);
      double du = detail::kGeluK * (1.0 + 3.0 * detail::kGeluA * x[i] * x[i]);
      double d = 0.5 * (1.0 + t) + 0.5 * x[i] * (1.0 - t * t) * du;
      pa.grad()[i] += g[i] * d;
    }
  });
  size_t n = out.size();
  const double* pa = a.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) {
    double u = detail::kGeluK * (pa[i] + detail::kGeluA * pa[i] * pa[i] * pa[i]);
    po[i] = 0.5 * pa[i] * (1.0 + std::tanh(u));
  }
  return out;
}

inline Tensor tanh(const Tensor& a) {
  Tensor out = detail::make_result(a.shape(), {a}, [](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    size_t n = o.size();
    const double* g = o.grad();
    const double* y = o.data();
    for (size_t i = 0; i < n; ++i) pa.grad()[i] += g[i] * (1.0 - y[i] * y[i]);
  });
  size_t n = out.size();
  const double* pa = a.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = std::tanh(pa[i]);
  return out;
}

/// Inverted dropout: kept entries are scaled by 1/(1-p). p == 0 is identity.
inline Tensor dropout(const Tensor& a, double p, Pcg32& rng) {
  detail::check(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  if (p == 0.0) return a;
  auto mask = std::make_shared<std::vector<double>>(a.size());
  double keep_scale = 1.0 / (1.0 - p);
  for (double& m : *mask) m = rng.uniform() >= p ? keep_scale : 0.0;
  Tensor out = detail::make_result(a.shape(), {a}, [mask](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    size_t n = o.size();
    const double* g = o.grad();
    for (size_t i = 0; i < n; ++i) pa.grad()[i] += g[i] * (*mask)[i];
  });
  size_t n = out.size();
  const double* pa = a.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = pa[i] * (*mask)[i];
  return out;
}

// ---------------------------------------------------------------------------
// Shape primitives
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& a, std::vector<int> shape) {
  detail::check(detail::numel(shape) == a.size(),
                "reshape: element count mismatch");
  Tensor out = detail::make_result(std::move(shape), {a}, [](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    size_t n = o.size();
    const double* g = o.grad();
    for (size_t i = 0; i < n; ++i) pa.grad()[i] += g[i];
  });
  std::copy(a.data(), a.data() + a.size(), out.data());
  return out;
}

inline Tensor transpose(const Tensor& a) {
  detail::check(a.rank() == 2, "transpose: rank-2 tensor required");
  int m = a.dim(0), n = a.dim(1);
  Tensor out = detail::make_result({n, m}, {a}, [m, n](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    const double* g = o.grad();
    double* gx = pa.grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) gx[i * n + j] += g[j * m + i];
  });
  const double* pa = a.data();
  double* po = out.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) po[j * m + i] = pa[i * n + j];
  return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::check(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 required");
  detail::check(a.dim(1) == b.dim(0), "matmul: inner dimension mismatch");
  int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = detail::make_result({m, n}, {a, b}, [m, k, n](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    Tensor& pb = o.node()->parents[1];
    const double* g = o.grad();
    if (pa.requires_grad()) {
      // dA = dC * B^T
      const double* db = pb.data();
      double* ga = pa.grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double gij = g[i * n + j];
          if (gij == 0.0) continue;
          const double* brow = db + static_cast<size_t>(j);
          for (int kk = 0; kk < k; ++kk) ga[i * k + kk] += gij * brow[static_cast<size_t>(kk) * n];
        }
    }
    if (pb.requires_grad()) {
      // dB = A^T * dC
      const double* da = pa.data();
      double* gb = pb.grad();
      for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
          double aik = da[i * k + kk];
          if (aik == 0.0) continue;
          const double* grow = g + static_cast<size_t>(i) * n;
          double* brow = gb + static_cast<size_t>(kk) * n;
          for (int j = 0; j < n; ++j) brow[j] += aik * grow[j];
        }
    }
  });
  const double* da = a.data();
  const double* db = b.data();
  double* dc = out.data();
  for (int i = 0; i < m; ++i) {
    double* crow = dc + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      double aik = da[static_cast<size_t>(i) * k + kk];
      const double* brow = db + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return out;
}

inline Tensor concat(const std::vector<Tensor>& parts, int axis) {
  detail::check(!parts.empty(), "concat: no inputs");
  std::vector<int> shape = parts[0].shape();
  detail::check(axis >= 0 && axis < static_cast<int>(shape.size()),
                "concat: axis out of range");
  int total = 0;
  for (const Tensor& p : parts) {
    detail::check(p.rank() == static_cast<int>(shape.size()),
                  "concat: rank mismatch");
    for (int i = 0; i < p.rank(); ++i)
      if (i != axis)
        detail::check(p.dim(i) == shape[static_cast<size_t>(i)],
                      "concat: dimension mismatch");
    total += p.dim(axis);
  }
  shape[static_cast<size_t>(axis)] = total;
  auto sp = detail::axis_split(shape, axis);

  Tensor out = detail::make_result(shape, parts, [axis, sp](Tensor& o) {
    const double* g = o.grad();
    size_t offset = 0;
    for (Tensor& p : o.node()->parents) {
      size_t pn = static_cast<size_t>(p.dim(axis));
      if (p.requires_grad()) {
        double* gp = p.grad();
        for (size_t ou = 0; ou < sp.outer; ++ou)
          for (size_t i = 0; i < pn; ++i)
            for (size_t in = 0; in < sp.inner; ++in)
              gp[(ou * pn + i) * sp.inner + in] +=
                  g[(ou * sp.n + offset + i) * sp.inner + in];
      }
      offset += pn;
    }
  });

  double* po = out.data();
  size_t offset = 0;
  for (const Tensor& p : parts) {
    size_t pn = static_cast<size_t>(p.dim(axis));
    const double* pp = p.data();
    for (size_t ou = 0; ou < sp.outer; ++ou)
      for (size_t i = 0; i < pn; ++i)
        for (size_t in = 0; in < sp.inner; ++in)
          po[(ou * sp.n + offset + i) * sp.inner + in] =
              pp[(ou * pn + i) * sp.inner + in];
    offset += pn;
  }
  return out;
}

/// Contiguous sub-range [start, start+len) along `axis`.
inline Tensor slice(const Tensor& a, int axis, int start, int len) {
  detail::check(axis >= 0 && axis < a.rank(), "slice: axis out of range");
  detail::check(start >= 0 && len >= 1 && start + len <= a.dim(axis),
                "slice: range out of bounds");
  std::vector<int> shape = a.shape();
  shape[static_cast<size_t>(axis)] = len;
  auto sp = detail::axis_split(a.shape(), axis);
  size_t ln = static_cast<size_t>(len);
  size_t st = static_cast<size_t>(start);

  Tensor out = detail::make_result(shape, {a}, [sp, st, ln](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    const double* g = o.grad();
    double* gp = pa.grad();
    for (size_t ou = 0; ou < sp.outer; ++ou)
      for (size_t i = 0; i < ln; ++i)
        for (size_t in = 0; in < sp.inner; ++in)
          gp[(ou * sp.n + st + i) * sp.inner + in] +=
              g[(ou * ln + i) * sp.inner + in];
  });
  const double* pa = a.data();
  double* po = out.data();
  for (size_t ou = 0; ou < sp.outer; ++ou)
    for (size_t i = 0; i < ln; ++i)
      for (size_t in = 0; in < sp.inner; ++in)
        po[(ou * ln + i) * sp.inner + in] =
            pa[(ou * sp.n + st + i) * sp.inner + in];
  return out;
}

/// Splits into consecutive chunks of the given sizes along `axis`.
inline std::vector<Tensor> split(const Tensor& a, int axis,
                                 const std::vector<int>& sizes) {
  int total = 0;
  for (int s : sizes) total += s;
  detail::check(total == a.dim(axis), "split: sizes do not cover axis");
  std::vector<Tensor> parts;
  int start = 0;
  for (int s : sizes) {
    parts.push_back(slice(a, axis, start, s));
    start += s;
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Reductions and lookups
// ---------------------------------------------------------------------------

inline Tensor mean(const Tensor& a, int axis) {
  auto sp = detail::axis_split(a.shape(), axis);
  std::vector<int> shape;
  for (int i = 0; i < a.rank(); ++i)
    if (i != axis) shape.push_back(a.dim(i));
  if (shape.empty()) shape.push_back(1);
  double inv = 1.0 / static_cast<double>(sp.n);

  Tensor out = detail::make_result(shape, {a}, [sp, inv](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    const double* g = o.grad();
    double* gp = pa.grad();
    for (size_t ou = 0; ou < sp.outer; ++ou)
      for (size_t i = 0; i < sp.n; ++i)
        for (size_t in = 0; in < sp.inner; ++in)
          gp[(ou * sp.n + i) * sp.inner + in] += g[ou * sp.inner + in] * inv;
  });
  const double* pa = a.data();
  double* po = out.data();
  for (size_t ou = 0; ou < sp.outer; ++ou)
    for (size_t in = 0; in < sp.inner; ++in) {
      double s = 0.0;
      for (size_t i = 0; i < sp.n; ++i)
        s += pa[(ou * sp.n + i) * sp.inner + in];
      po[ou * sp.inner + in] = s * inv;
    }
  return out;
}

inline Tensor sum_all(const Tensor& a) {
  Tensor out = detail::make_result({1}, {a}, [](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    double g = o.grad()[0];
    size_t n = pa.size();
    for (size_t i = 0; i < n; ++i) pa.grad()[i] += g;
  });
  double s = 0.0;
  const double* pa = a.data();
  for (size_t i = 0; i < a.size(); ++i) s += pa[i];
  out.data()[0] = s;
  return out;
}

inline Tensor mean_all(const Tensor& a) {
  return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

/// Row gather: out[i, :] = table[ids[i], :].
inline Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  detail::check(table.rank() == 2, "embedding: table must be rank 2");
  int v = table.dim(0), d = table.dim(1);
  for (int id : ids)
    detail::check(id >= 0 && id < v, "embedding: id out of range");
  int n = static_cast<int>(ids.size());
  auto ids_copy = std::make_shared<std::vector<int>>(ids);

  Tensor out = detail::make_result({n, d}, {table}, [ids_copy, d](Tensor& o) {
    Tensor& pt = o.node()->parents[0];
    if (!pt.requires_grad()) return;
    const double* g = o.grad();
    double* gt = pt.grad();
    for (size_t i = 0; i < ids_copy->size(); ++i) {
      double* row = gt + static_cast<size_t>((*ids_copy)[i]) * d;
      const double* grow = g + i * static_cast<size_t>(d);
      for (int j = 0; j < d; ++j) row[j] += grow[j];
    }
  });
  const double* pt = table.data();
  double* po = out.data();
  for (int i = 0; i < n; ++i)
    std::copy(pt + static_cast<size_t>(ids[static_cast<size_t>(i)]) * d,
              pt + static_cast<size_t>(ids[static_cast<size_t>(i)] + 1) * d,
              po + static_cast<size_t>(i) * d);
  return out;
}

// ---------------------------------------------------------------------------
// Normalization and loss
// ---------------------------------------------------------------------------

/// Numerically stabilized softmax along `axis`; lines sum to 1.
inline Tensor softmax(const Tensor& a, int axis) {
  if (!a.all_finite()) throw std::runtime_error("softmax: non-finite input");
  auto sp = detail::axis_split(a.shape(), axis);

  Tensor out = detail::make_result(a.shape(), {a}, [sp](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    const double* g = o.grad();
    const double* y = o.data();
    double* gp = pa.grad();
    for (size_t ou = 0; ou < sp.outer; ++ou)
      for (size_t in = 0; in < sp.inner; ++in) {
        double dot = 0.0;
        for (size_t i = 0; i < sp.n; ++i) {
          size_t idx = (ou * sp.n + i) * sp.inner + in;
          dot += g[idx] * y[idx];
        }
        for (size_t i = 0; i < sp.n; ++i) {
          size_t idx = (ou * sp.n + i) * sp.inner + in;
          gp[idx] += y[idx] * (g[idx] - dot);
        }
      }
  });
  const double* pa = a.data();
  double* po = out.data();
  for (size_t ou = 0; ou < sp.outer; ++ou)
    for (size_t in = 0; in < sp.inner; ++in) {
      double mx = -std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < sp.n; ++i)
        mx = std::max(mx, pa[(ou * sp.n + i) * sp.inner + in]);
      double z = 0.0;
      for (size_t i = 0; i < sp.n; ++i) {
        size_t idx = (ou * sp.n + i) * sp.inner + in;
        po[idx] = std::exp(pa[idx] - mx);
        z += po[idx];
      }
      double invz = 1.0 / z;
      for (size_t i = 0; i < sp.n; ++i)
        po[(ou * sp.n + i) * sp.inner + in] *= invz;
    }
  return out;
}

/// Row softmax over the key positions where mask is 1; masked keys get an
/// exactly zero weight (they are excluded from the normalization entirely,
/// the structural equivalent of a -inf pre-softmax bias).
inline Tensor softmax_masked_rows(const Tensor& a,
                                  const std::vector<int>& key_mask) {
  detail::check(a.rank() == 2, "softmax_masked_rows: rank-2 required");
  detail::check(static_cast<int>(key_mask.size()) == a.dim(1),
                "softmax_masked_rows: mask length mismatch");
  if (!a.all_finite())
    throw std::runtime_error("softmax_masked_rows: non-finite input");
  bool any = false;
  for (int m : key_mask) any = any || (m != 0);
  detail::check(any, "softmax_masked_rows: all keys masked");
  int rows = a.dim(0), n = a.dim(1);
  auto mask = std::make_shared<std::vector<int>>(key_mask);

  Tensor out = detail::make_result(a.shape(), {a}, [mask, rows, n](Tensor& o) {
    Tensor& pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    const double* g = o.grad();
    const double* y = o.data();
    double* gp = pa.grad();
    for (int r = 0; r < rows; ++r) {
      const double* yr = y + static_cast<size_t>(r) * n;
      const double* gr = g + static_cast<size_t>(r) * n;
      double* gpr = gp + static_cast<size_t>(r) * n;
      double dot = 0.0;
      for (int j = 0; j < n; ++j)
        if ((*mask)[static_cast<size_t>(j)]) dot += gr[j] * yr[j];
      for (int j = 0; j < n; ++j)
        if ((*mask)[static_cast<size_t>(j)]) gpr[j] += yr[j] * (gr[j] - dot);
    }
  });
  const double* pa = a.data();
  double* po = out.data();
  for (int r = 0; r < rows; ++r) {
    const double* ar = pa + static_cast<size_t>(r) * n;
    double* orow = po + static_cast<size_t>(r) * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (key_mask[static_cast<size_t>(j)]) mx = std::max(mx, ar[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      if (key_mask[static_cast<size_t>(j)]) {
        orow[j] = std::exp(ar[j] - mx);
        z += orow[j];
      } else {
        orow[j] = 0.0;
      }
    }
    double invz = 1.0 / z;
    for (int j = 0; j < n; ++j)
      if (key_mask[static_cast<size_t>(j)]) orow[j] *= invz;
  }
  return out;
}

/// Layer normalization over the last axis with learned gain and bias.
inline Tensor layer_norm(const Tensor& x, const Tensor& gain,
                         const Tensor& bias, double eps = 1e-12) {
  int d = x.dim(x.rank() - 1);
  detail::check(gain.rank() == 1 && gain.dim(0) == d &&
                    bias.rank() == 1 && bias.dim(0) == d,
                "layer_norm: gain/bias length mismatch");
  size_t rows = x.size() / static_cast<size_t>(d);

  Tensor out =
      detail::make_result(x.shape(), {x, gain, bias}, [rows, d, eps](Tensor& o) {
        Tensor& px = o.node()->parents[0];
        Tensor& pg = o.node()->parents[1];
        Tensor& pb = o.node()->parents[2];
        const double* g = o.grad();
        const double* xd = px.data();
        const double* gd = pg.data();
        // Recompute per-row stats; cheaper than caching for these sizes.
        for (size_t r = 0; r < rows; ++r) {
          const double* xr = xd + r * static_cast<size_t>(d);
          const double* gr = g + r * static_cast<size_t>(d);
          double mu = 0.0;
          for (int j = 0; j < d; ++j) mu += xr[j];
          mu /= d;
          double var = 0.0;
          for (int j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
          var /= d;
          double inv_s = 1.0 / std::sqrt(var + eps);
          if (pg.requires_grad() || pb.requires_grad()) {
            for (int j = 0; j < d; ++j) {
              double xhat = (xr[j] - mu) * inv_s;
              if (pg.requires_grad()) pg.grad()[j] += gr[j] * xhat;
              if (pb.requires_grad()) pb.grad()[j] += gr[j];
            }
          }
          if (px.requires_grad()) {
            double mean_h = 0.0, mean_hx = 0.0;
            for (int j = 0; j < d; ++j) {
              double h = gd[j] * gr[j];
              double xhat = (xr[j] - mu) * inv_s;
              mean_h += h;
              mean_hx += h * xhat;
            }
            mean_h /= d;
            mean_hx /= d;
            double* gx = px.grad() + r * static_cast<size_t>(d);
            for (int j = 0; j < d; ++j) {
              double h = gd[j] * gr[j];
              double xhat = (xr[j] - mu) * inv_s;
              gx[j] += (h - mean_h - xhat * mean_hx) * inv_s;
            }
          }
        }
      });

  const double* xd = x.data();
  const double* gd = gain.data();
  const double* bd = bias.data();
  double* po = out.data();
  for (size_t r = 0; r < rows; ++r) {
    const double* xr = xd + r * static_cast<size_t>(d);
    double* orow = po + r * static_cast<size_t>(d);
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xr[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= d;
    double inv_s = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < d; ++j) orow[j] = gd[j] * (xr[j] - mu) * inv_s + bd[j];
  }
  return out;
}

/// Mean negative log-likelihood over rows whose label is a real class.
/// A label equal to `classes` is the out-of-vocabulary sentinel and is
/// excluded from the mean.
inline Tensor cross_entropy_loss(const Tensor& logits,
                                 const std::vector<int>& labels) {
  detail::check(logits.rank() == 2, "cross_entropy_loss: rank-2 required");
  int rows = logits.dim(0), classes = logits.dim(1);
  detail::check(static_cast<int>(labels.size()) == rows,
                "cross_entropy_loss: label count mismatch");
  int n_eff = 0;
  for (int l : labels) {
    detail::check(l >= 0 && l <= classes,
                  "cross_entropy_loss: label out of range");
    if (l < classes) ++n_eff;
  }
  if (n_eff == 0)
    throw std::runtime_error("cross_entropy_loss: empty effective batch");
  auto labels_copy = std::make_shared<std::vector<int>>(labels);

  Tensor out = detail::make_result(
      {1}, {logits}, [labels_copy, rows, classes, n_eff](Tensor& o) {
        Tensor& pl = o.node()->parents[0];
        if (!pl.requires_grad()) return;
        double g = o.grad()[0];
        const double* z = pl.data();
        double* gz = pl.grad();
        double inv = g / static_cast<double>(n_eff);
        for (int r = 0; r < rows; ++r) {
          int label = (*labels_copy)[static_cast<size_t>(r)];
          if (label >= classes) continue;
          const double* zr = z + static_cast<size_t>(r) * classes;
          double* gr = gz + static_cast<size_t>(r) * classes;
          double mx = zr[0];
          for (int j = 1; j < classes; ++j) mx = std::max(mx, zr[j]);
          double sum = 0.0;
          for (int j = 0; j < classes; ++j) sum += std::exp(zr[j] - mx);
          for (int j = 0; j < classes; ++j) {
            double p = std::exp(zr[j] - mx) / sum;
            gr[j] += inv * (p - (j == label ? 1.0 : 0.0));
          }
        }
      });
  const double* z = logits.data();
  double loss = 0.0;
  for (int r = 0; r < rows; ++r) {
    int label = labels[static_cast<size_t>(r)];
    if (label >= classes) continue;
    const double* zr = z + static_cast<size_t>(r) * classes;
    double mx = zr[0];
    for (int j = 1; j < classes; ++j) mx = std::max(mx, zr[j]);
    double sum = 0.0;
    for (int j = 0; j < classes; ++j) sum += std::exp(zr[j] - mx);
    loss += std::log(sum) - (zr[label] - mx);
  }
  out.data()[0] = loss / static_cast<double>(n_eff);
  return out;
}

// ---------------------------------------------------------------------------
// Backward driver
// ---------------------------------------------------------------------------

/// Reverse-mode pass from a scalar root: seeds d(root)/d(root) = 1 and walks
/// the tape in reverse topological order. Gradients accumulate, so leaves
/// must be zeroed between steps.
inline void backward(Tensor& root) {
  detail::check(root.size() == 1, "backward: root must be a scalar");
  detail::check(root.requires_grad(),
                "backward: root does not require gradients");
  root.grad()[0] = 1.0;
  if (!root.node()) return;

  std::vector<Tensor> order;
  std::unordered_set<const Node*> pushed;
  std::vector<std::pair<Tensor, size_t>> stack;
  stack.emplace_back(root, 0);
  pushed.insert(root.node().get());
  while (!stack.empty()) {
    Node* node = stack.back().first.node().get();
    size_t idx = stack.back().second;
    if (idx < node->parents.size()) {
      ++stack.back().second;
      const Tensor& parent = node->parents[idx];
      if (parent.node() && !pushed.count(parent.node().get())) {
        pushed.insert(parent.node().get());
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    it->node()->backward(*it);
}

}  // namespace vbf
