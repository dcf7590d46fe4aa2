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

#ifndef EDGEDIFF_DATASETS_HPP_
#define EDGEDIFF_DATASETS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgediff/graph.hpp"

namespace edgediff {

inline constexpr const char* kGeneratorVersion = "edgediff-datasets/1";

// ---------------------------------------------------------------------------
// Homogeneous two-cluster edge dataset.

struct ClusterSpec {
  std::size_t n_graphs = 1000;
  std::size_t n_nodes = 10;
  std::array<std::array<double, 2>, 2> centers{{{0.5, 0.5}, {-0.5, -0.5}}};
  double std = 0.12;
  double mask_eps = kDefaultMaskEps;

  void validate() const {
    if (n_nodes < 2) throw InputError("ClusterSpec: need at least two nodes");
    if (!(std >= 0.0)) throw InputError("ClusterSpec: std must be non-negative");
    for (const auto& c : centers) {
      if (std::max(std::abs(c[0]), std::abs(c[1])) < mask_eps) {
        throw InputError("ClusterSpec: cluster centers must have magnitude >= mask_eps");
      }
    }
  }
};

/// Complete directed graphs (no self-loops) whose edges all come from one
/// uniformly chosen Gaussian cluster. Nodes carry a single zero channel.
/// `labels`, when given, receives the chosen cluster per graph.
inline Dataset gen_clusters(const ClusterSpec& spec, Rng& rng, std::vector<int>* labels = nullptr) {
  spec.validate();
  Dataset out;
  out.reserve(spec.n_graphs);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.n_nodes;
  for (std::size_t g = 0; g < spec.n_graphs; ++g) {
    const int cluster = coin(rng) ? 1 : 0;
    if (labels) labels->push_back(cluster);
    Graph graph(n, 1, 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        for (std::size_t k = 0; k < 2; ++k) graph.edge(i, j, k) = spec.centers[cluster][k] + spec.std * normal(rng);
      }
    }
    out.push_back(std::move(graph));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid-maze MDPs.

enum class Cell { kEmpty, kBlock, kStart, kFinish };

/// Action channels in edge-feature order.
enum class Action { kLeft = 0, kRight = 1, kUp = 2, kDown = 3 };
inline constexpr std::size_t kNumActions = 4;
/// (row, col) displacement per action channel.
inline constexpr std::array<std::array<int, 2>, kNumActions> kActionDelta{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};

inline constexpr double kBlockValue = -1.0;
inline constexpr double kEmptyValue = 0.0;
inline constexpr double kStartValue = 1.0;
inline constexpr double kSlipProbability = 0.1;

struct MazeSpec {
  std::size_t side = 5;
  std::size_t n_blocks = 4;
  std::size_t n_start = 1;
  std::size_t n_finish = 1;
  bool deterministic = true;
  std::size_t max_attempts = 10000;

  void validate() const {
    if (side < 2) throw InputError("MazeSpec: side must be >= 2");
    if (n_start < 1 || n_finish < 1) throw InputError("MazeSpec: need at least one start and one finish");
    if (n_blocks + n_start + n_finish > side * side) throw NumericalError("MazeSpec: more special cells than grid cells");
  }
};

/// Cell layout in row-major order; node index = row * side + col.
struct MazeLayout {
  std::size_t side = 0;
  std::vector<Cell> cells;
  std::vector<double> category;  // node category value per cell

  Cell at(std::size_t row, std::size_t col) const { return cells[row * side + col]; }
};

/// Admissible moves of cell `index`: in-grid, non-block 4-neighbours,
/// indexed by action channel (-1 where the move is not admissible).
inline std::array<long, kNumActions> admissible_moves(std::span<const Cell> cells, std::size_t side, std::size_t index) {
  std::array<long, kNumActions> out{};
  const long row = static_cast<long>(index / side);
  const long col = static_cast<long>(index % side);
  for (std::size_t a = 0; a < kNumActions; ++a) {
    const long r = row + kActionDelta[a][0];
    const long c = col + kActionDelta[a][1];
    out[a] = -1;
    if (r < 0 || c < 0 || r >= static_cast<long>(side) || c >= static_cast<long>(side)) continue;
    const auto target = static_cast<std::size_t>(r) * side + static_cast<std::size_t>(c);
    if (cells[target] == Cell::kBlock) continue;
    out[a] = static_cast<long>(target);
  }
  return out;
}

/// True iff every start reaches some finish through non-block cells.
inline bool maze_solvable(std::span<const Cell> cells, std::size_t side) {
  for (std::size_t s = 0; s < cells.size(); ++s) {
    if (cells[s] != Cell::kStart) continue;
    std::vector<char> seen(cells.size(), 0);
    std::deque<std::size_t> queue{s};
    seen[s] = 1;
    bool reached = false;
    while (!queue.empty() && !reached) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      if (cells[cur] == Cell::kFinish) reached = true;
      for (long next : admissible_moves(cells, side, cur)) {
        if (next >= 0 && !seen[static_cast<std::size_t>(next)]) {
          seen[static_cast<std::size_t>(next)] = 1;
          queue.push_back(static_cast<std::size_t>(next));
        }
      }
    }
    if (!reached) return false;
  }
  return true;
}

/// Rejection-samples a solvable layout; finish categories ~ U[0.5, 1].
inline MazeLayout sample_maze_layout(const MazeSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t cells = spec.side * spec.side;
  std::vector<std::size_t> order(cells);
  for (std::size_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
    for (std::size_t i = 0; i < cells; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    MazeLayout layout;
    layout.side = spec.side;
    layout.cells.assign(cells, Cell::kEmpty);
    std::size_t next = 0;
    for (std::size_t i = 0; i < spec.n_start; ++i) layout.cells[order[next++]] = Cell::kStart;
    for (std::size_t i = 0; i < spec.n_finish; ++i) layout.cells[order[next++]] = Cell::kFinish;
    for (std::size_t i = 0; i < spec.n_blocks; ++i) layout.cells[order[next++]] = Cell::kBlock;
    if (!maze_solvable(layout.cells, spec.side)) continue;
    std::uniform_real_distribution<double> finish_value(0.5, 1.0);
    layout.category.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      switch (layout.cells[i]) {
        case Cell::kEmpty: layout.category[i] = kEmptyValue; break;
        case Cell::kBlock: layout.category[i] = kBlockValue; break;
        case Cell::kStart: layout.category[i] = kStartValue; break;
        case Cell::kFinish: layout.category[i] = finish_value(rng); break;
      }
    }
    return layout;
  }
  throw NumericalError("gen_maze: no solvable layout after " + std::to_string(spec.max_attempts) + " attempts");
}

/// MDP graph of a layout. Node features (category, x = col, y = row); edge
/// channel a of (u, v) is p(v | u, a). Moves off the grid or into blocks
/// fall back to the self-loop; block cells have no outgoing mass. In the
/// non-deterministic variant, a cell with z admissible moves sends 0.1 to
/// every admissible neighbour other than the intended target, and the
/// remainder to the intended target (the cell itself when the move is
/// blocked).
inline Graph maze_graph(const MazeLayout& layout, bool deterministic) {
  const std::size_t side = layout.side;
  const std::size_t n = side * side;
  Graph g(n, 3, kNumActions);
  for (std::size_t i = 0; i < n; ++i) {
    g.x()(i, 0) = layout.category[i];
    g.x()(i, 1) = static_cast<double>(i % side);
    g.x()(i, 2) = static_cast<double>(i / side);
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (layout.cells[u] == Cell::kBlock) continue;
    const auto moves = admissible_moves(layout.cells, side, u);
    std::vector<std::size_t> neighbours;
    for (long m : moves)
      if (m >= 0) neighbours.push_back(static_cast<std::size_t>(m));
    for (std::size_t a = 0; a < kNumActions; ++a) {
      const std::size_t intended = moves[a] >= 0 ? static_cast<std::size_t>(moves[a]) : u;
      if (deterministic) {
        g.edge(u, intended, a) = 1.0;
        continue;
      }
      double slipped = 0.0;
      for (std::size_t nb : neighbours) {
        if (nb == intended) continue;
        g.edge(u, nb, a) = kSlipProbability;
        slipped += kSlipProbability;
      }
      g.edge(u, intended, a) = 1.0 - slipped;
    }
  }
  return g;
}

inline Graph gen_maze(const MazeSpec& spec, Rng& rng, MazeLayout* layout_out = nullptr) {
  MazeLayout layout = sample_maze_layout(spec, rng);
  Graph g = maze_graph(layout, spec.deterministic);
  if (layout_out) *layout_out = std::move(layout);
  return g;
}

inline Dataset gen_mazes(const MazeSpec& spec, std::size_t count, Rng& rng) {
  Dataset out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(gen_maze(spec, rng));
  return out;
}

// ---------------------------------------------------------------------------
// General graphs.

/// Appends one edge channel holding (A^power)[i][j] on existing edges.
inline Graph augment_path_counts(const Graph& g, int power = 2, double eps = kDefaultMaskEps) {
  if (power < 1) throw InputError("augment_path_counts: power must be >= 1");
  const Matrix a = adjacency_mask(g, eps).a;
  Matrix p = a;
  for (int i = 1; i < power; ++i) p = p * a;
  Matrix e(g.n() * g.n(), g.v() + 1);
  e.leftCols(g.v()) = g.e();
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < g.n(); ++j) e(i * g.n() + j, g.v()) = a(i, j) != 0.0 ? p(i, j) : 0.0;
  return Graph(g.x(), std::move(e));
}

/// Undirected graph from a symmetric 0/1 adjacency: x = 1, e = A (one channel).
inline Graph graph_from_undirected(const Matrix& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  Graph g(n, 1, 1);
  g.x().setOnes();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g.edge(i, j, 0) = a(i, j);
  return g;
}

/// Stochastic block model: pairs in the same community connect with
/// p_within, pairs across communities with p_between.
inline Graph gen_sbm(std::span<const std::size_t> sizes, double p_within, double p_between, Rng& rng) {
  if (sizes.empty()) throw InputError("gen_sbm: need at least one community");
  if (!(p_within >= 0.0 && p_within <= 1.0 && p_between >= 0.0 && p_between <= 1.0)) {
    throw InputError("gen_sbm: probabilities must lie in [0, 1]");
  }
  std::vector<std::size_t> community;
  for (std::size_t c = 0; c < sizes.size(); ++c) community.insert(community.end(), sizes[c], c);
  if (community.empty()) throw InputError("gen_sbm: communities are empty");
  const std::size_t n = community.size();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = community[i] == community[j] ? p_within : p_between;
      if (uniform(rng) < p) a(i, j) = a(j, i) = 1.0;
    }
  }
  return graph_from_undirected(a);
}

inline Graph gen_grid2d(std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) throw InputError("gen_grid2d: rows and cols must be >= 1");
  const std::size_t n = rows * cols;
  Matrix a = Matrix::Zero(n, n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      if (c + 1 < cols) a(i, i + 1) = a(i + 1, i) = 1.0;
      if (r + 1 < rows) a(i, i + cols) = a(i + cols, i) = 1.0;
    }
  }
  return graph_from_undirected(a);
}

// ---------------------------------------------------------------------------

struct Split {
  Dataset train;
  Dataset test;
};

/// Seeded random split; each part keeps the original relative order.
inline Split split(std::span<const Graph> data, double train_frac, std::uint64_t seed) {
  if (!(train_frac >= 0.0 && train_frac <= 1.0)) throw InputError("split: train_frac must lie in [0, 1]");
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(data.size())));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> in_train(data.size(), 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;
  Split out;
  for (std::size_t i = 0; i < data.size(); ++i) (in_train[i] ? out.train : out.test).push_back(data[i]);
  return out;
}

}  // namespace edgediff

#endif  // EDGEDIFF_DATASETS_HPP_
