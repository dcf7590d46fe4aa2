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

#ifndef EDGEDIFF_GRAPH_HPP_
#define EDGEDIFF_GRAPH_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "edgediff/core.hpp"

namespace edgediff {

/// Dense directed graph with node attributes x (n x u) and edge attributes
/// e (n x n x v, stored as (n*n) x v). Entry (i, j, .) describes edge i->j.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n, std::size_t u, std::size_t v)
      : n_(n), x_(Matrix::Zero(n, u)), e_(Matrix::Zero(n * n, v)) {}

  Graph(Matrix x, Matrix e) : n_(static_cast<std::size_t>(x.rows())), x_(std::move(x)), e_(std::move(e)) {
    if (static_cast<std::size_t>(e_.rows()) != n_ * n_) {
      throw InputError("graph: edge tensor has " + std::to_string(e_.rows()) + " rows, expected n*n = " +
                       std::to_string(n_ * n_));
    }
    if (!x_.allFinite() || !e_.allFinite()) throw InputError("graph: non-finite attribute");
  }

  std::size_t n() const { return n_; }
  std::size_t u() const { return static_cast<std::size_t>(x_.cols()); }
  std::size_t v() const { return static_cast<std::size_t>(e_.cols()); }

  const Matrix& x() const { return x_; }
  const Matrix& e() const { return e_; }
  Matrix& x() { return x_; }
  Matrix& e() { return e_; }

  double edge(std::size_t i, std::size_t j, std::size_t k) const { return e_(i * n_ + j, k); }
  double& edge(std::size_t i, std::size_t j, std::size_t k) { return e_(i * n_ + j, k); }

  bool same_shape(const Graph& other) const {
    return n_ == other.n_ && u() == other.u() && v() == other.v();
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.same_shape(b) && a.x_ == b.x_ && a.e_ == b.e_;
  }

 private:
  std::size_t n_ = 0;
  Matrix x_;
  Matrix e_;
};

struct GraphShape {
  std::size_t n = 0;
  std::size_t u = 0;
  std::size_t v = 0;
};

inline GraphShape shape_of(const Graph& g) { return {g.n(), g.u(), g.v()}; }

/// Binary n x n connectivity pattern, entries exactly 0 or 1.
struct Adjacency {
  Matrix a;
  std::size_t n() const { return static_cast<std::size_t>(a.rows()); }
};

inline constexpr double kDefaultMaskEps = 0.01;

/// a[i][j] = 1 iff max_k |e[i][j][k]| >= eps.
inline Adjacency adjacency_mask(const Matrix& e, std::size_t n, double eps = kDefaultMaskEps) {
  if (!(eps > 0.0)) throw InputError("adjacency_mask: eps must be positive");
  if (static_cast<std::size_t>(e.rows()) != n * n) throw InputError("adjacency_mask: edge tensor is not n*n rows");
  if (!e.allFinite()) throw InputError("adjacency_mask: non-finite edge attribute");
  Adjacency out{Matrix::Zero(n, n)};
  if (e.cols() == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double m = e.row(i * n + j).cwiseAbs().maxCoeff();
      out.a(i, j) = m >= eps ? 1.0 : 0.0;
    }
  }
  return out;
}

inline Adjacency adjacency_mask(const Graph& g, double eps = kDefaultMaskEps) {
  return adjacency_mask(g.e(), g.n(), eps);
}

/// abar[i][j] = a[i][j] / sqrt(d_i d_j) with d_i = max(1, out-degree(i)).
inline Matrix degree_normalize(const Adjacency& adj) {
  const Matrix& a = adj.a;
  const Eigen::Index n = a.rows();
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) inv_sqrt(i) = 1.0 / std::sqrt(std::max(1.0, a.row(i).sum()));
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

using Permutation = std::vector<std::size_t>;

inline bool is_permutation(std::span<const std::size_t> perm) {
  std::vector<char> seen(perm.size(), 0);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) return false;
    seen[p] = 1;
  }
  return true;
}

inline Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  return p;
}

inline Permutation inverse(std::span<const std::size_t> perm) {
  Permutation inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

/// (q o p)(i) = q(p(i)).
inline Permutation compose(std::span<const std::size_t> q, std::span<const std::size_t> p) {
  Permutation out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = q[p[i]];
  return out;
}

inline Permutation random_permutation(std::size_t n, Rng& rng) {
  Permutation p = identity_permutation(n);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Node rows move i -> perm[i]; edge (i, j) moves to (perm[i], perm[j]).
inline Matrix permute_nodes(const Matrix& x, std::span<const std::size_t> perm) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(perm[i]) = x.row(i);
  return out;
}

inline Matrix permute_edges(const Matrix& e, std::span<const std::size_t> perm) {
  const std::size_t n = perm.size();
  Matrix out(e.rows(), e.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.row(perm[i] * n + perm[j]) = e.row(i * n + j);
  return out;
}

/// Conjugation P a P^T of an n x n matrix.
inline Matrix permute_square(const Matrix& a, std::span<const std::size_t> perm) {
  const std::size_t n = perm.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(perm[i], perm[j]) = a(i, j);
  return out;
}

inline Graph permute(const Graph& g, std::span<const std::size_t> perm) {
  if (perm.size() != g.n()) {
    throw InputError("permute: permutation of length " + std::to_string(perm.size()) + " for graph with " +
                     std::to_string(g.n()) + " nodes");
  }
  if (!is_permutation(perm)) throw InputError("permute: not a bijection");
  return Graph(permute_nodes(g.x(), perm), permute_edges(g.e(), perm));
}

/// Graphs zero-padded to a common node count, with a per-graph node mask.
class GraphBatch {
 public:
  GraphBatch() = default;

  explicit GraphBatch(std::span<const Graph> graphs) {
    if (graphs.empty()) return;
    u_ = graphs.front().u();
    v_ = graphs.front().v();
    for (const Graph& g : graphs) {
      if (g.u() != u_ || g.v() != v_) throw InputError("GraphBatch: inconsistent channel counts");
      n_max_ = std::max(n_max_, g.n());
    }
    for (const Graph& g : graphs) {
      Graph padded(n_max_, u_, v_);
      padded.x().topRows(g.n()) = g.x();
      for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.n(); ++j) padded.e().row(i * n_max_ + j) = g.e().row(i * g.n() + j);
      Eigen::VectorXd mask = Eigen::VectorXd::Zero(n_max_);
      mask.head(g.n()).setOnes();
      padded_.push_back(std::move(padded));
      masks_.push_back(std::move(mask));
      sizes_.push_back(g.n());
    }
  }

  std::size_t size() const { return padded_.size(); }
  bool empty() const { return padded_.empty(); }
  std::size_t n_max() const { return n_max_; }
  std::size_t u() const { return u_; }
  std::size_t v() const { return v_; }

  const Graph& padded(std::size_t i) const { return padded_[i]; }
  const Eigen::VectorXd& mask(std::size_t i) const { return masks_[i]; }
  std::size_t nodes(std::size_t i) const { return sizes_[i]; }

  /// The i-th graph with padding removed.
  Graph graph(std::size_t i) const {
    const std::size_t n = sizes_[i];
    const Graph& p = padded_[i];
    Matrix e(n * n, v_);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) e.row(a * n + b) = p.e().row(a * n_max_ + b);
    return Graph(p.x().topRows(n), std::move(e));
  }

 private:
  std::size_t n_max_ = 0;
  std::size_t u_ = 0;
  std::size_t v_ = 0;
  std::vector<Graph> padded_;
  std::vector<Eigen::VectorXd> masks_;
  std::vector<std::size_t> sizes_;
};

using Dataset = std::vector<Graph>;

}  // namespace edgediff

#endif  // EDGEDIFF_GRAPH_HPP_
