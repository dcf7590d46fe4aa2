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

#ifndef EDGEDIFF_METRICS_HPP_
#define EDGEDIFF_METRICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "edgediff/datasets.hpp"
#include "edgediff/graph.hpp"
#include "json.hpp"

namespace edgediff {

using Histogram = std::vector<double>;

// ---------------------------------------------------------------------------
// MMD

struct KernelSpec {
  double sigma = 1.0;

  void validate() const {
    if (!(sigma > 0.0)) throw InputError("KernelSpec: sigma must be positive");
  }
};

/// Total-variation distance; the shorter histogram is zero-padded.
inline double tv_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t len = std::max(a.size(), b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    sum += std::abs(x - y);
  }
  return 0.5 * sum;
}

inline double gaussian_tv_kernel(std::span<const double> a, std::span<const double> b, const KernelSpec& k) {
  const double d = tv_distance(a, b);
  return std::exp(-d * d / (2.0 * k.sigma * k.sigma));
}

namespace detail {
inline double mean_kernel(std::span<const Histogram> a, std::span<const Histogram> b, const KernelSpec& k) {
  double sum = 0.0;
  for (const Histogram& x : a)
    for (const Histogram& y : b) sum += gaussian_tv_kernel(x, y, k);
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}
}  // namespace detail

/// Biased squared-MMD estimate, clamped at zero.
inline double mmd(std::span<const Histogram> a, std::span<const Histogram> b, const KernelSpec& k = {}) {
  k.validate();
  if (a.empty() || b.empty()) throw InputError("mmd: histogram sets must be non-empty");
  const double value = detail::mean_kernel(a, a, k) + detail::mean_kernel(b, b, k) - 2.0 * detail::mean_kernel(a, b, k);
  return std::max(0.0, value);
}

// ---------------------------------------------------------------------------
// Per-graph statistics. Self-loops are ignored.

/// Normalized histogram of in-degree + out-degree, support 0..2(n-1).
inline Histogram degree_stats(const Graph& g, double eps = kDefaultMaskEps) {
  const std::size_t n = g.n();
  const Matrix a = adjacency_mask(g, eps).a;
  Histogram h(n == 0 ? 1 : 2 * (n - 1) + 1, 0.0);
  if (n == 0) {
    h[0] = 1.0;
    return h;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t d = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      d += (a(i, j) != 0.0) + (a(j, i) != 0.0);
    }
    h[d] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(n);
  return h;
}

inline constexpr std::size_t kClusteringBins = 100;

/// Local clustering coefficients of the undirected projection.
inline std::vector<double> clustering_coefficients(const Graph& g, double eps = kDefaultMaskEps) {
  const std::size_t n = g.n();
  const Matrix a = adjacency_mask(g, eps).a;
  std::vector<std::vector<std::size_t>> nbrs(n);
  Matrix u = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && (a(i, j) != 0.0 || a(j, i) != 0.0)) u(i, j) = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (u(i, j) != 0.0) nbrs[i].push_back(j);
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = nbrs[i].size();
    if (d < 2) continue;
    std::size_t closed = 0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) closed += u(nbrs[i][p], nbrs[i][q]) != 0.0;
    c[i] = static_cast<double>(closed) / (0.5 * static_cast<double>(d * (d - 1)));
  }
  return c;
}

/// 100 uniform bins on [0, 1]; a coefficient of exactly 1 falls in the last bin.
inline Histogram cluster_stats(const Graph& g, double eps = kDefaultMaskEps) {
  Histogram h(kClusteringBins, 0.0);
  const std::vector<double> c = clustering_coefficients(g, eps);
  if (c.empty()) {
    h[0] = 1.0;
    return h;
  }
  for (double v : c) {
    const auto bin = std::min<std::size_t>(kClusteringBins - 1, static_cast<std::size_t>(v * kClusteringBins));
    h[bin] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(c.size());
  return h;
}

template <class Stat>
std::vector<Histogram> collect_stats(std::span<const Graph> graphs, Stat&& stat) {
  std::vector<Histogram> out(graphs.size());
  parallel_for(graphs.size(), [&](std::size_t i) { out[i] = stat(graphs[i]); });
  return out;
}

inline double degree_mmd(std::span<const Graph> gen, std::span<const Graph> ref, double eps = kDefaultMaskEps,
                         const KernelSpec& k = {}) {
  const auto stat = [eps](const Graph& g) { return degree_stats(g, eps); };
  return mmd(collect_stats(gen, stat), collect_stats(ref, stat), k);
}

inline double cluster_mmd(std::span<const Graph> gen, std::span<const Graph> ref, double eps = kDefaultMaskEps,
                          const KernelSpec& k = {}) {
  const auto stat = [eps](const Graph& g) { return cluster_stats(g, eps); };
  return mmd(collect_stats(gen, stat), collect_stats(ref, stat), k);
}

// ---------------------------------------------------------------------------
// Fingerprints

namespace detail {
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

inline std::int64_t quantize(double v, int decimals) {
  return static_cast<std::int64_t>(std::llround(v * std::pow(10.0, decimals)));
}

inline std::uint64_t hash_row(const Matrix& m, Eigen::Index row, int decimals, std::uint64_t tag) {
  std::uint64_t h = splitmix64(tag ^ static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) h = hash_combine(h, static_cast<std::uint64_t>(quantize(m(row, k), decimals)));
  return h;
}

inline std::uint64_t hash_sorted(std::vector<std::uint64_t>& items, std::uint64_t tag) {
  std::sort(items.begin(), items.end());
  std::uint64_t h = splitmix64(tag ^ items.size());
  for (std::uint64_t v : items) h = hash_combine(h, v);
  return h;
}
}  // namespace detail

struct FingerprintOptions {
  int decimals = 3;
  double mask_eps = kDefaultMaskEps;
  int rounds = -1;  // refinement rounds; -1 means n
};

/// Permutation-invariant WL-style hash over the masked adjacency, with
/// node and edge attributes rounded to `decimals` places.
inline std::uint64_t fingerprint(const Graph& g, const FingerprintOptions& opt = {}) {
  const std::size_t n = g.n();
  const Matrix a = adjacency_mask(g, opt.mask_eps).a;
  std::vector<std::uint64_t> label(n);
  std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> out_edges(n), in_edges(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = detail::hash_row(g.x(), static_cast<Eigen::Index>(i), opt.decimals, 0x6e6f6465);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) == 0.0) continue;
      const std::uint64_t eh = detail::hash_row(g.e(), static_cast<Eigen::Index>(i * n + j), opt.decimals, 0x65646765);
      if (i == j) {
        label[i] = detail::hash_combine(label[i], eh ^ 0x736c6f6f70ULL);
      } else {
        out_edges[i].emplace_back(j, eh);
        in_edges[j].emplace_back(i, eh);
      }
    }
  }
  const int rounds = opt.rounds < 0 ? static_cast<int>(std::max<std::size_t>(n, 1)) : opt.rounds;
  std::vector<std::uint64_t> next(n), items;
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      items.clear();
      for (const auto& [j, eh] : out_edges[i]) items.push_back(detail::hash_combine(eh, label[j]));
      const std::uint64_t h_out = detail::hash_sorted(items, 0x6f7574);
      items.clear();
      for (const auto& [j, eh] : in_edges[i]) items.push_back(detail::hash_combine(eh, label[j]));
      const std::uint64_t h_in = detail::hash_sorted(items, 0x696e);
      next[i] = detail::hash_combine(detail::hash_combine(label[i], h_out), h_in);
    }
    label.swap(next);
  }
  std::vector<std::uint64_t> final_labels = label;
  std::uint64_t h = detail::hash_sorted(final_labels, 0x6772617068);
  h = detail::hash_combine(h, n);
  h = detail::hash_combine(h, g.u());
  return detail::hash_combine(h, g.v());
}

inline double uniqueness(std::span<const Graph> generated, const FingerprintOptions& opt = {}) {
  if (generated.empty()) throw InputError("uniqueness: empty generated set");
  std::vector<std::uint64_t> fp(generated.size());
  parallel_for(generated.size(), [&](std::size_t i) { fp[i] = fingerprint(generated[i], opt); });
  // First occurrences count: N identical copies score 100 / N.
  const std::unordered_set<std::uint64_t> distinct(fp.begin(), fp.end());
  return 100.0 * static_cast<double>(distinct.size()) / static_cast<double>(fp.size());
}

inline double novelty(std::span<const Graph> generated, std::span<const Graph> train, const FingerprintOptions& opt = {}) {
  if (generated.empty()) throw InputError("novelty: empty generated set");
  std::vector<std::uint64_t> ref(train.size()), fp(generated.size());
  parallel_for(train.size(), [&](std::size_t i) { ref[i] = fingerprint(train[i], opt); });
  parallel_for(generated.size(), [&](std::size_t i) { fp[i] = fingerprint(generated[i], opt); });
  const std::unordered_set<std::uint64_t> seen(ref.begin(), ref.end());
  std::size_t fresh = 0;
  for (std::uint64_t f : fp) fresh += !seen.contains(f);
  return 100.0 * static_cast<double>(fresh) / static_cast<double>(fp.size());
}

// ---------------------------------------------------------------------------
// Homogeneity

using ClusterCenters = std::array<std::array<double, 2>, 2>;

/// Nearest center of an edge 2-vector; ties go to cluster 0.
inline int nearest_center(double a, double b, const ClusterCenters& centers) {
  const auto d2 = [&](int c) {
    const double da = a - centers[c][0];
    const double db = b - centers[c][1];
    return da * da + db * db;
  };
  return d2(1) < d2(0) ? 1 : 0;
}

inline bool is_homogeneous(const Graph& g, const ClusterCenters& centers) {
  if (g.v() != 2) throw InputError("homogeneity: expected 2 edge channels, got " + std::to_string(g.v()));
  int first = -1;
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::size_t j = 0; j < g.n(); ++j) {
      if (i == j) continue;
      const int c = nearest_center(g.edge(i, j, 0), g.edge(i, j, 1), centers);
      if (first < 0) first = c;
      if (c != first) return false;
    }
  }
  return true;
}

inline double homogeneity(std::span<const Graph> generated, const ClusterCenters& centers = ClusterSpec{}.centers) {
  if (generated.empty()) throw InputError("homogeneity: empty generated set");
  std::size_t count = 0;
  for (const Graph& g : generated) count += is_homogeneous(g, centers);
  return 100.0 * static_cast<double>(count) / static_cast<double>(generated.size());
}

// ---------------------------------------------------------------------------
// Maze MDPs

struct DecodedMaze {
  std::size_t side = 0;
  std::vector<Cell> node_cell;  // per node
  std::vector<long> node_pos;   // per node: row * side + col, or -1
  bool layout_valid = false;    // coordinates form a bijection onto the grid
  std::size_t blocks = 0, empties = 0, terminals = 0;
  long start = -1;              // node index of the decoded start, or -1

  /// Cells in grid order; falls back to node order when the layout is invalid.
  std::vector<Cell> grid() const {
    std::vector<Cell> out(side * side, Cell::kEmpty);
    for (std::size_t i = 0; i < node_cell.size(); ++i) out[layout_valid ? static_cast<std::size_t>(node_pos[i]) : i] = node_cell[i];
    return out;
  }
};

inline constexpr double kStartTolerance = 0.05;

inline void check_maze_shape(const Graph& g, std::size_t side) {
  if (g.n() != side * side || g.u() != 3 || g.v() != kNumActions) {
    throw InputError("mdp metrics expect " + std::to_string(side * side) + " nodes, 3 node channels and 4 edge channels; got " +
                     std::to_string(g.n()) + " nodes, " + std::to_string(g.u()) + " node channels, " +
                     std::to_string(g.v()) + " edge channels");
  }
}

/// Category decoding: c < -0.5 block, c < 0.5 empty, otherwise terminal.
/// The terminal closest to 1 is the start when it lies within 0.05 of 1;
/// every other terminal is a finish.
inline DecodedMaze decode_maze(const Graph& g, std::size_t side = 5) {
  check_maze_shape(g, side);
  DecodedMaze d;
  d.side = side;
  const std::size_t n = g.n();
  d.node_cell.resize(n);
  d.node_pos.assign(n, -1);
  double best = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = g.x()(i, 0);
    if (c < -0.5) {
      d.node_cell[i] = Cell::kBlock;
      ++d.blocks;
    } else if (c < 0.5) {
      d.node_cell[i] = Cell::kEmpty;
      ++d.empties;
    } else {
      d.node_cell[i] = Cell::kFinish;
      ++d.terminals;
      if (std::abs(c - 1.0) < best) {
        best = std::abs(c - 1.0);
        d.start = static_cast<long>(i);
      }
    }
  }
  if (d.start >= 0 && best <= kStartTolerance) {
    d.node_cell[static_cast<std::size_t>(d.start)] = Cell::kStart;
  } else {
    d.start = -1;
  }
  std::vector<char> taken(n, 0);
  d.layout_valid = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double col = std::round(g.x()(i, 1));
    const double row = std::round(g.x()(i, 2));
    if (col < 0 || row < 0 || col >= static_cast<double>(side) || row >= static_cast<double>(side)) {
      d.layout_valid = false;
      continue;
    }
    const auto pos = static_cast<std::size_t>(row) * side + static_cast<std::size_t>(col);
    d.node_pos[i] = static_cast<long>(pos);
    if (taken[pos]) d.layout_valid = false;
    taken[pos] = 1;
  }
  return d;
}

/// Exactly one start, one finish, a valid layout and a grid path between them.
inline bool maze_valid_solution(const DecodedMaze& d) {
  if (!d.layout_valid || d.terminals != 2 || d.start < 0) return false;
  return maze_solvable(d.grid(), d.side);
}

/// One dominant value 1 - 0.1 m, m values 0.1, the rest 0, all within tol.
inline bool matches_slip_pattern(std::span<const double> column, double tol) {
  std::size_t dominant = 0;
  for (std::size_t i = 1; i < column.size(); ++i)
    if (column[i] > column[dominant]) dominant = i;
  std::size_t slips = 0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (i == dominant) continue;
    if (std::abs(column[i] - kSlipProbability) <= tol) {
      ++slips;
    } else if (std::abs(column[i]) > tol) {
      return false;
    }
  }
  return std::abs(column[dominant] - (1.0 - kSlipProbability * static_cast<double>(slips))) <= tol;
}

struct MdpOptions {
  bool deterministic = true;
  double mv_eps = 0.01;        // non-deterministic tolerance
  double mdv_eps = 0.01;
  std::size_t side = 5;
  std::size_t blocks = 4;
  std::size_t terminals = 2;
};

struct MdpMetrics {
  double mv = 0.0;
  double mdv = 0.0;
  double vs = 0.0;
  double b = 0.0;
  double sf = 0.0;
  double e = 0.0;
};

inline MdpMetrics mdp_metrics(std::span<const Graph> generated, const MdpOptions& opt = {}) {
  if (generated.empty()) throw InputError("mdp_metrics: empty generated set");
  struct PerGraph {
    std::size_t non_block = 0, mv_ok = 0, mdv_ok = 0;
    bool vs = false;
    double b = 0, sf = 0, e = 0;
  };
  const std::size_t n = opt.side * opt.side;
  const auto expected_empty = static_cast<double>(n - opt.blocks - opt.terminals);
  for (const Graph& g : generated) check_maze_shape(g, opt.side);
  std::vector<PerGraph> per(generated.size());
  parallel_for(generated.size(), [&](std::size_t gi) {
    const Graph& g = generated[gi];
    const DecodedMaze d = decode_maze(g, opt.side);
    PerGraph& r = per[gi];
    r.b = std::abs(static_cast<double>(d.blocks) - static_cast<double>(opt.blocks));
    r.sf = std::abs(static_cast<double>(d.terminals) - static_cast<double>(opt.terminals));
    r.e = std::abs(static_cast<double>(d.empties) - expected_empty);
    r.vs = maze_valid_solution(d);
    std::vector<double> column(n);
    for (std::size_t u = 0; u < n; ++u) {
      if (d.node_cell[u] == Cell::kBlock) continue;
      ++r.non_block;
      bool mv = true, mdv = true;
      for (std::size_t a = 0; a < kNumActions; ++a) {
        double sum = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
          column[v] = g.edge(u, v, a);
          sum += opt.deterministic ? std::round(column[v]) : column[v];
        }
        const double tol = opt.deterministic ? 1e-9 : opt.mv_eps;
        mv = mv && std::abs(sum - 1.0) <= tol;
        mdv = mdv && matches_slip_pattern(column, opt.mdv_eps);
      }
      r.mv_ok += mv;
      r.mdv_ok += mdv;
    }
  });
  MdpMetrics m;
  std::size_t non_block = 0, mv_ok = 0, mdv_ok = 0, vs_ok = 0;
  for (const PerGraph& r : per) {
    non_block += r.non_block;
    mv_ok += r.mv_ok;
    mdv_ok += r.mdv_ok;
    vs_ok += r.vs;
    m.b += r.b;
    m.sf += r.sf;
    m.e += r.e;
  }
  const auto count = static_cast<double>(generated.size());
  m.mv = non_block ? 100.0 * static_cast<double>(mv_ok) / static_cast<double>(non_block) : 0.0;
  m.mdv = non_block ? 100.0 * static_cast<double>(mdv_ok) / static_cast<double>(non_block) : 0.0;
  m.vs = 100.0 * static_cast<double>(vs_ok) / count;
  m.b /= count;
  m.sf /= count;
  m.e /= count;
  return m;
}

// ---------------------------------------------------------------------------
// Reports

struct MetricReport {
  double deg = 0.0;
  double cl = 0.0;
  double uniqueness = 0.0;
  double novelty = 0.0;
  std::optional<double> homogeneity;
  std::optional<MdpMetrics> mdp;

  nlohmann::json to_json() const {
    nlohmann::json j{{"deg", deg}, {"cl", cl}, {"un", uniqueness}, {"no", novelty}};
    if (homogeneity) j["homogeneity"] = *homogeneity;
    if (mdp) j["mdp"] = {{"MV", mdp->mv}, {"MDV", mdp->mdv}, {"VS", mdp->vs}, {"B", mdp->b}, {"SF", mdp->sf}, {"E", mdp->e}};
    return j;
  }

  /// Header row and one value row, columns right-aligned.
  std::string to_table() const {
    std::vector<std::pair<std::string, std::string>> cols;
    const auto fmt = [](double v, const char* spec) {
      char buf[64];
      std::snprintf(buf, sizeof buf, spec, v);
      return std::string(buf);
    };
    cols.emplace_back("deg", fmt(deg, "%.4f"));
    cols.emplace_back("cl", fmt(cl, "%.4f"));
    cols.emplace_back("un", fmt(uniqueness, "%.1f%%"));
    cols.emplace_back("no", fmt(novelty, "%.1f%%"));
    if (homogeneity) cols.emplace_back("homog", fmt(*homogeneity, "%.1f%%"));
    if (mdp) {
      cols.emplace_back("MV", fmt(mdp->mv, "%.1f%%"));
      cols.emplace_back("MDV", fmt(mdp->mdv, "%.1f%%"));
      cols.emplace_back("VS", fmt(mdp->vs, "%.1f%%"));
      cols.emplace_back("B", fmt(mdp->b, "%.3f"));
      cols.emplace_back("SF", fmt(mdp->sf, "%.3f"));
      cols.emplace_back("E", fmt(mdp->e, "%.3f"));
    }
    std::ostringstream head, body;
    for (const auto& [name, value] : cols) {
      const int w = static_cast<int>(std::max(name.size(), value.size())) + 2;
      char buf[128];
      std::snprintf(buf, sizeof buf, "%*s", w, name.c_str());
      head << buf;
      std::snprintf(buf, sizeof buf, "%*s", w, value.c_str());
      body << buf;
    }
    return head.str() + "\n" + body.str() + "\n";
  }
};

}  // namespace edgediff

#endif  // EDGEDIFF_METRICS_HPP_
