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

// Shared fixtures for the unit and acceptance tests.

#ifndef EDGEDIFF_TESTS_TEST_UTIL_HPP_
#define EDGEDIFF_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "edgediff.hpp"

namespace edgediff::testing {

/// Random graph; each directed pair (self-loops included) is an edge with
/// probability `density`, with channels ~ N(0, 1).
inline Graph random_graph(std::size_t n, std::size_t u, std::size_t v, Rng& rng, double density = 0.6) {
  Graph g(n, u, v);
  fill_normal(g.x(), rng);
  std::bernoulli_distribution keep(density);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!keep(rng)) continue;
      for (std::size_t k = 0; k < v; ++k) g.edge(i, j, k) = normal(rng);
    }
  return g;
}

/// max |a - b| / max(max |b|, floor).
inline double rel_dev(const Matrix& a, const Matrix& b, double floor = 1e-12) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), floor);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Rebuilds the grid layout from node attributes (category, col, row) and
/// checks every maze rule directly on the edge tensor:
///   1. no transition mass into a block cell,
///   2. block cells have all-zero outgoing features,
///   3. mass only flows to the cell itself or a 4-neighbour inside the grid,
///   4. every action channel of a non-block cell sums to 1.
/// Returns an empty string when the maze is legal, else the first violation.
inline std::string verify_maze_rules(const Graph& g, std::size_t side = 5, double tol = 1e-12) {
  const std::size_t n = side * side;
  if (g.n() != n || g.u() != 3 || g.v() != 4) return "wrong shape";
  std::vector<long> node_at(n, -1);
  std::vector<int> row(n), col(n);
  for (std::size_t i = 0; i < n; ++i) {
    col[i] = static_cast<int>(std::lround(g.x()(i, 1)));
    row[i] = static_cast<int>(std::lround(g.x()(i, 2)));
    if (col[i] < 0 || row[i] < 0 || col[i] >= static_cast<int>(side) || row[i] >= static_cast<int>(side)) {
      return "node " + std::to_string(i) + " outside the grid";
    }
    long& slot = node_at[static_cast<std::size_t>(row[i]) * side + static_cast<std::size_t>(col[i])];
    if (slot >= 0) return "two nodes share a cell";
    slot = static_cast<long>(i);
  }
  const auto is_block = [&](std::size_t i) { return g.x()(i, 0) < -0.5; };
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t a = 0; a < 4; ++a) {
      double sum = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        const double p = g.edge(u, v, a);
        sum += p;
        if (p == 0.0) continue;
        if (is_block(u)) return "block " + std::to_string(u) + " has outgoing mass";
        if (is_block(v)) return "mass into block " + std::to_string(v);
        const int manhattan = std::abs(row[u] - row[v]) + std::abs(col[u] - col[v]);
        if (manhattan > 1) return "non-local transition " + std::to_string(u) + "->" + std::to_string(v);
        if (p < 0.0) return "negative probability";
      }
      if (!is_block(u) && std::abs(sum - 1.0) > tol) return "channel sum " + std::to_string(sum) + " at node " + std::to_string(u);
    }
  }
  return "";
}

}  // namespace edgediff::testing

#endif  // EDGEDIFF_TESTS_TEST_UTIL_HPP_
