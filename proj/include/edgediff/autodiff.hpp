// Copyright 2026 The edgediff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal tape-based reverse-mode differentiation over dense matrices.
//
// A Tape records every operation applied to its Vars. Calling backward() on
// a 1x1 result propagates adjoints to all recorded nodes; gradients of
// parameter leaves are then read back by slot. A tape built with
// record = false evaluates values only and keeps no closures.

#ifndef EDGEDIFF_AUTODIFF_HPP_
#define EDGEDIFF_AUTODIFF_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "edgediff/core.hpp"

namespace edgediff::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value) { return push(std::move(value), false, {}); }

  /// A constant whose storage stays owned by the caller; it must outlive the tape.
  Var borrow(const Matrix& value) {
    Node node;
    node.borrowed = &value;
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  /// A differentiable leaf bound to parameter `slot`; storage stays with the caller.
  Var parameter(const Matrix& value, std::size_t slot) {
    Node node;
    node.borrowed = &value;
    node.requires_grad = record_;
    node.slot = static_cast<std::ptrdiff_t>(slot);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  const Matrix& value(Var v) const {
    const Node& node = nodes_[v.id];
    return node.borrowed ? *node.borrowed : node.value;
  }

  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Adjoint accumulator, zero-initialized on first access.
  Matrix& grad(Var v) {
    Node& node = nodes_[v.id];
    if (!node.has_grad) {
      const Matrix& val = value(v);
      node.grad = Matrix::Zero(val.rows(), val.cols());
      node.has_grad = true;
    }
    return node.grad;
  }

  bool has_grad(Var v) const { return nodes_[v.id].has_grad; }

  /// Reverse sweep from a 1x1 output.
  void backward(Var output) {
    if (!record_) throw InputError("backward on a non-recording tape");
    const Matrix& out = value(output);
    if (out.rows() != 1 || out.cols() != 1) throw InputError("backward requires a scalar output");
    grad(output)(0, 0) += 1.0;
    for (std::size_t i = output.id + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.has_grad || !node.backward) continue;
      node.backward(*this, Var{this, i});
    }
  }

  /// Calls f(slot, grad) for every parameter leaf that received an adjoint.
  template <class F>
  void for_each_parameter_grad(F&& f) const {
    for (const Node& node : nodes_) {
      if (node.slot >= 0 && node.has_grad) f(static_cast<std::size_t>(node.slot), node.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

  using Backward = std::function<void(Tape&, Var)>;

  /// Appends an op result. `backward` receives the tape and the result Var and
  /// must add into the parents' grad(); it runs only when record is on.
  Var push(Matrix value, bool requires_grad, Backward backward) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = record_ && requires_grad;
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

 private:
  struct Node {
    Matrix value;
    const Matrix* borrowed = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::ptrdiff_t slot = -1;
    Backward backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

namespace detail {

inline void check_same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw InputError("autodiff: operands on different tapes");
}

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  detail::check_same_tape(a, b);
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.cols() != bv.rows()) {
    throw InputError("matmul: shape mismatch " + detail::shape_str(av) + " * " + detail::shape_str(bv));
  }
  Matrix out = av * bv;
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, Var self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad(a).noalias() += g * tp.value(b).transpose();
    if (tp.requires_grad(b)) tp.grad(b).noalias() += tp.value(a).transpose() * g;
  });
}

inline Var add(Var a, Var b) {
  detail::check_same_tape(a, b);
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw InputError("add: shape mismatch " + detail::shape_str(av) + " + " + detail::shape_str(bv));
  }
  Matrix out = av + bv;
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, Var self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad(a) += g;
    if (tp.requires_grad(b)) tp.grad(b) += g;
  });
}

/// a (r x c) + broadcast of row vector bias (1 x c).
inline Var add_row(Var a, Var bias) {
  detail::check_same_tape(a, bias);
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(bias);
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw InputError("add_row: bias " + detail::shape_str(bv) + " for " + detail::shape_str(av));
  }
  Matrix out = av.rowwise() + bv.row(0);
  const bool rg = t.requires_grad(a) || t.requires_grad(bias);
  return t.push(std::move(out), rg, [a, bias](Tape& tp, Var self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad(a) += g;
    if (tp.requires_grad(bias)) tp.grad(bias) += g.colwise().sum();
  });
}

inline Var scale(Var a, double s) {
  Tape& t = *a.tape;
  Matrix out = t.value(a) * s;
  return t.push(std::move(out), t.requires_grad(a), [a, s](Tape& tp, Var self) { tp.grad(a) += tp.grad(self) * s; });
}

inline Var tanh(Var a) {
  Tape& t = *a.tape;
  Matrix out = t.value(a).array().tanh().matrix();
  return t.push(std::move(out), t.requires_grad(a), [a](Tape& tp, Var self) {
    const Matrix& y = tp.value(self);
    tp.grad(a).array() += tp.grad(self).array() * (1.0 - y.array().square());
  });
}

/// Exponential linear unit: x for x > 0, exp(x) - 1 otherwise.
inline Var elu(Var a) {
  Tape& t = *a.tape;
  const Matrix& x = t.value(a);
  Matrix out = (x.array() > 0.0).select(x.array(), x.array().exp() - 1.0).matrix();
  return t.push(std::move(out), t.requires_grad(a), [a](Tape& tp, Var self) {
    const Matrix& x = tp.value(a);
    const Matrix& y = tp.value(self);
    tp.grad(a).array() += tp.grad(self).array() * (x.array() > 0.0).select(1.0, y.array() + 1.0);
  });
}

/// Column-wise concatenation of equally tall operands.
inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_cols: no operands");
  Tape& t = *parts.front().tape;
  const Eigen::Index rows = t.value(parts.front()).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var p : parts) {
    detail::check_same_tape(parts.front(), p);
    if (t.value(p).rows() != rows) throw InputError("concat_cols: row count mismatch");
    cols += t.value(p).cols();
    rg = rg || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (Var p : parts) {
    const Matrix& v = t.value(p);
    out.middleCols(offset, v.cols()) = v;
    offset += v.cols();
  }
  return t.push(std::move(out), rg, [parts](Tape& tp, Var self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index off = 0;
    for (Var p : parts) {
      const Eigen::Index c = tp.value(p).cols();
      if (tp.requires_grad(p)) tp.grad(p) += g.middleCols(off, c);
      off += c;
    }
  });
}

/// Incoming-edge aggregation gated by a fixed n x n weight matrix:
/// out[j] = sum_i w[i][j] * e[i*n + j]  for e of shape (n*n) x c.
inline Var gated_incoming_sum(Var weights, Var e) {
  detail::check_same_tape(weights, e);
  Tape& t = *e.tape;
  const Matrix& w = t.value(weights);
  const Matrix& ev = t.value(e);
  const Eigen::Index n = w.rows();
  if (w.cols() != n || ev.rows() != n * n) throw InputError("gated_incoming_sum: shape mismatch");
  Matrix out = Matrix::Zero(n, ev.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double wij = w(i, j);
      if (wij != 0.0) out.row(j) += wij * ev.row(i * n + j);
    }
  }
  return t.push(std::move(out), t.requires_grad(e), [weights, e](Tape& tp, Var self) {
    const Matrix& w = tp.value(weights);
    const Matrix& g = tp.grad(self);
    Matrix& ge = tp.grad(e);
    const Eigen::Index n = w.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double wij = w(i, j);
        if (wij != 0.0) ge.row(i * n + j) += wij * g.row(j);
      }
    }
  });
}

/// Grouped bilinear outer product. q and k are n x (groups * width); for
/// group c, out[i*n + j][c] = s * sum_{r in group c} q[i][r] * k[j][r].
inline Var grouped_outer(Var q, Var k, std::size_t groups, double s) {
  detail::check_same_tape(q, k);
  Tape& t = *q.tape;
  const Matrix& qv = t.value(q);
  const Matrix& kv = t.value(k);
  const Eigen::Index n = qv.rows();
  const auto g = static_cast<Eigen::Index>(groups);
  if (kv.rows() != n || kv.cols() != qv.cols() || g == 0 || qv.cols() % g != 0) {
    throw InputError("grouped_outer: shape mismatch " + detail::shape_str(qv) + " vs " + detail::shape_str(kv));
  }
  const Eigen::Index width = qv.cols() / g;
  Matrix out(n * n, g);
  Matrix m(n, n);
  for (Eigen::Index c = 0; c < g; ++c) {
    m.noalias() = qv.middleCols(c * width, width) * kv.middleCols(c * width, width).transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) out(i * n + j, c) = s * m(i, j);
  }
  const bool rg = t.requires_grad(q) || t.requires_grad(k);
  return t.push(std::move(out), rg, [q, k, g, width, s](Tape& tp, Var self) {
    const Matrix& grad_out = tp.grad(self);
    const Matrix& qv = tp.value(q);
    const Matrix& kv = tp.value(k);
    const Eigen::Index n = qv.rows();
    const bool gq = tp.requires_grad(q);
    const bool gk = tp.requires_grad(k);
    Matrix dm(n, n);
    for (Eigen::Index c = 0; c < g; ++c) {
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) dm(i, j) = s * grad_out(i * n + j, c);
      if (gq) tp.grad(q).middleCols(c * width, width).noalias() += dm * kv.middleCols(c * width, width);
      if (gk) tp.grad(k).middleCols(c * width, width).noalias() += dm.transpose() * qv.middleCols(c * width, width);
    }
  });
}

/// sum(weight * (a - target)^2) as a 1x1 result; target is a constant.
inline Var weighted_sq_error(Var a, const Matrix& target, double weight) {
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  if (av.rows() != target.rows() || av.cols() != target.cols()) {
    throw InputError("weighted_sq_error: shape mismatch " + detail::shape_str(av) + " vs " + detail::shape_str(target));
  }
  Matrix diff = av - target;
  Matrix out(1, 1);
  out(0, 0) = weight * diff.squaredNorm();
  return t.push(std::move(out), t.requires_grad(a), [a, diff = std::move(diff), weight](Tape& tp, Var self) {
    tp.grad(a) += (2.0 * weight * tp.grad(self)(0, 0)) * diff;
  });
}

inline Var sum(Var a) {
  Tape& t = *a.tape;
  Matrix out(1, 1);
  out(0, 0) = t.value(a).sum();
  return t.push(std::move(out), t.requires_grad(a), [a](Tape& tp, Var self) {
    tp.grad(a).array() += tp.grad(self)(0, 0);
  });
}

}  // namespace edgediff::ad

#endif  // EDGEDIFF_AUTODIFF_HPP_
