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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

namespace edgediff {
namespace {

// Pairwise double-loop squared MMD with its own TV distance and kernel.
double mmd_oracle(const std::vector<Histogram>& a, const std::vector<Histogram>& b, double sigma) {
  auto k = [sigma](const Histogram& x, const Histogram& y) {
    const std::size_t len = std::max(x.size(), y.size());
    double tv = 0.0;
    for (std::size_t i = 0; i < len; ++i) tv += std::abs((i < x.size() ? x[i] : 0.0) - (i < y.size() ? y[i] : 0.0));
    tv /= 2.0;
    return std::exp(-tv * tv / (2 * sigma * sigma));
  };
  double aa = 0, bb = 0, ab = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) aa += k(a[i], a[j]);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) bb += k(b[i], b[j]);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) ab += k(a[i], b[j]);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  return std::max(0.0, aa / (na * na) + bb / (nb * nb) - 2 * ab / (na * nb));
}

std::vector<Histogram> random_histograms(std::size_t count, Rng& rng) {
  std::uniform_int_distribution<std::size_t> len(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Histogram> out(count);
  for (Histogram& h : out) {
    h.resize(len(rng));
    double s = 0.0;
    for (double& v : h) s += v = u(rng);
    for (double& v : h) v /= s;
  }
  return out;
}

TEST(MmdTest, SingletonExamples) {
  const Histogram h{0.5, 0.5}, h2{1.0, 0.0};
  const std::vector<Histogram> a{h}, b{h}, c{h2};
  EXPECT_EQ(mmd(a, b), 0.0);
  const double k = std::exp(-0.25 / 2.0);  // TV distance 0.5
  EXPECT_NEAR(mmd(a, c), 2 * (1 - k), 1e-15);
  EXPECT_THROW(mmd(a, std::vector<Histogram>{}), InputError);
  EXPECT_THROW(mmd(a, b, KernelSpec{0.0}), InputError);
}

TEST(MmdTest, MatchesBruteForceOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 5);
    const auto a = random_histograms(size(rng), rng), b = random_histograms(size(rng), rng);
    for (double sigma : {0.3, 1.0, 2.5}) EXPECT_NEAR(mmd(a, b, KernelSpec{sigma}), mmd_oracle(a, b, sigma), 1e-12);
  }
}

TEST(MmdTest, SymmetricAndZeroOnIdenticalSets) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 10);
    const auto a = random_histograms(size(rng), rng), b = random_histograms(size(rng), rng);
    EXPECT_NEAR(mmd(a, a), 0.0, 1e-15);
    EXPECT_NEAR(mmd(a, b), mmd(b, a), 1e-13);
    EXPECT_GE(mmd(a, b), 0.0);
  }
}

Graph from_adjacency(const Matrix& a) {
  Graph g(static_cast<std::size_t>(a.rows()), 1, 1);
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < g.n(); ++j) g.edge(i, j, 0) = a(i, j);
  return g;
}

TEST(StatsTest, EmptyGraphDegreeAtZero) {
  const Histogram h = degree_stats(Graph(4, 1, 1));
  ASSERT_EQ(h.size(), 7u);
  EXPECT_EQ(h[0], 1.0);
  const Histogram c = cluster_stats(Graph(4, 1, 1));
  EXPECT_EQ(c[0], 1.0);
}

TEST(StatsTest, CompleteFourGraphClustering) {
  Matrix k4 = Matrix::Ones(4, 4);
  k4.diagonal().setZero();
  const Graph g = from_adjacency(k4);
  for (double c : clustering_coefficients(g)) EXPECT_EQ(c, 1.0);
  const Histogram h = cluster_stats(g);
  EXPECT_EQ(h.back(), 1.0);
  const Histogram d = degree_stats(g);
  EXPECT_EQ(d[6], 1.0);  // in 3 + out 3
}

TEST(StatsTest, DirectedThreeCycleProjectsToTriangle) {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 2) = a(2, 0) = 1.0;
  const Graph g = from_adjacency(a);
  for (double c : clustering_coefficients(g)) EXPECT_EQ(c, 1.0);
  const Histogram d = degree_stats(g);
  EXPECT_EQ(d[2], 1.0);
}

TEST(StatsTest, SelfLoopsIgnoredAndPathClustering) {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = 1.0;
  a(1, 1) = 1.0;
  const Graph g = from_adjacency(a);
  const Histogram d = degree_stats(g);
  EXPECT_DOUBLE_EQ(d[2], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(d[4], 1.0 / 3.0);
  for (double c : clustering_coefficients(g)) EXPECT_EQ(c, 0.0);
}

TEST(StatsTest, HistogramsSumToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = testing::random_graph(2 + trial % 9, 1, 2, rng, 0.1 + 0.015 * trial);
    double sd = 0.0, sc = 0.0;
    for (double v : degree_stats(g)) sd += v;
    for (double v : cluster_stats(g)) sc += v;
    EXPECT_NEAR(sd, 1.0, 1e-12);
    EXPECT_NEAR(sc, 1.0, 1e-12);
  }
}

TEST(FingerprintTest, InvariantUnderPermutation) {
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    const Graph g = testing::random_graph(3 + k % 8, 2, 2, rng, 0.5);
    const Permutation p = random_permutation(g.n(), rng);
    EXPECT_EQ(fingerprint(g), fingerprint(permute(g, p))) << k;
  }
}

TEST(FingerprintTest, SeparatesDifferentGraphsAndAbsorbsNoise) {
  Rng rng(5);
  const Graph g = testing::random_graph(6, 1, 2, rng);
  Graph moved = g;
  moved.x()(2, 0) += 0.5;
  EXPECT_NE(fingerprint(g), fingerprint(moved));
  Graph jitter = g;
  jitter.x()(0, 0) = std::round(jitter.x()(0, 0) * 1000) / 1000 + 1e-6;
  Graph rounded = g;
  rounded.x()(0, 0) = std::round(rounded.x()(0, 0) * 1000) / 1000;
  EXPECT_EQ(fingerprint(jitter), fingerprint(rounded));
  // Two directed 3-cycles with opposite orientation relative to a marked node.
  Matrix a = Matrix::Zero(3, 3), b = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 2) = a(2, 0) = 1.0;
  b(1, 0) = b(2, 1) = b(0, 2) = 1.0;
  Graph ga = from_adjacency(a), gb = from_adjacency(b);
  ga.x()(0, 0) = gb.x()(0, 0) = 1.0;
  ga.x()(1, 0) = gb.x()(1, 0) = 2.0;
  EXPECT_NE(fingerprint(ga), fingerprint(gb));
}

TEST(UniquenessTest, CopiesAndNovelty) {
  Rng rng(6);
  const Graph g = testing::random_graph(5, 1, 1, rng);
  const Dataset copies(10, g);
  EXPECT_DOUBLE_EQ(uniqueness(copies), 100.0 / 10.0);
  Dataset distinct;
  for (int k = 0; k < 10; ++k) distinct.push_back(testing::random_graph(5, 1, 1, rng));
  EXPECT_EQ(uniqueness(distinct), 100.0);
  Dataset pair_dup = distinct;
  pair_dup[3] = permute(pair_dup[7], random_permutation(5, rng));
  EXPECT_EQ(uniqueness(pair_dup), 90.0);
  Dataset train;
  for (int k = 0; k < 10; ++k) train.push_back(testing::random_graph(5, 1, 1, rng));
  EXPECT_EQ(novelty(distinct, train), 100.0);
  Dataset permuted_copies;
  for (int k = 0; k < 20; ++k) permuted_copies.push_back(permute(train[k % 10], random_permutation(5, rng)));
  EXPECT_EQ(novelty(permuted_copies, train), 0.0);
  EXPECT_THROW(uniqueness(Dataset{}), InputError);
}

Graph cluster_graph(std::size_t n, double a, double b) {
  Graph g(n, 1, 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) g.edge(i, j, 0) = a, g.edge(i, j, 1) = b;
  return g;
}

TEST(HomogeneityTest, Examples) {
  Graph g = cluster_graph(4, 0.5, 0.5);
  EXPECT_TRUE(is_homogeneous(g, ClusterSpec{}.centers));
  g.edge(1, 2, 0) = g.edge(1, 2, 1) = -0.5;
  EXPECT_FALSE(is_homogeneous(g, ClusterSpec{}.centers));
  const Dataset set{cluster_graph(4, 0.5, 0.5), g, cluster_graph(4, -0.5, -0.4), g};
  EXPECT_EQ(homogeneity(set), 50.0);
  EXPECT_EQ(nearest_center(0.0, 0.0, ClusterSpec{}.centers), 0);
  EXPECT_EQ(nearest_center(0.5, -0.5, ClusterSpec{}.centers), 0);
  EXPECT_EQ(nearest_center(-0.1, 0.0, ClusterSpec{}.centers), 1);
  EXPECT_THROW(homogeneity(Dataset{Graph(3, 1, 1)}), InputError);
}

TEST(MdpMetricsTest, GeneratorGuaranteesHold) {
  for (bool det : {true, false}) {
    MazeSpec spec;
    spec.deterministic = det;
    Rng rng(7);
    const Dataset d = gen_mazes(spec, 200, rng);
    MdpOptions opt;
    opt.deterministic = det;
    const MdpMetrics m = mdp_metrics(d, opt);
    EXPECT_EQ(m.mv, 100.0);
    EXPECT_EQ(m.mdv, 100.0);
    EXPECT_EQ(m.vs, 100.0);
    EXPECT_EQ(m.b, 0.0);
    EXPECT_EQ(m.sf, 0.0);
    EXPECT_EQ(m.e, 0.0);
  }
}

TEST(MdpMetricsTest, CountDeviationExamples) {
  Rng rng(8);
  MazeLayout layout;
  const Graph g = gen_maze(MazeSpec{}, rng, &layout);
  // Turn one empty cell into a fifth block.
  Graph five = g;
  for (std::size_t i = 0; i < 25; ++i)
    if (layout.cells[i] == Cell::kEmpty) {
      five.x()(i, 0) = -1.0;
      break;
    }
  MdpMetrics m = mdp_metrics(Dataset{five});
  EXPECT_EQ(m.b, 1.0);
  EXPECT_EQ(m.e, 1.0);
  // Two starts and two finishes: four terminals.
  Graph four = g;
  int added = 0;
  for (std::size_t i = 0; i < 25 && added < 2; ++i)
    if (layout.cells[i] == Cell::kEmpty) four.x()(i, 0) = added++ == 0 ? 1.0 : 0.7;
  m = mdp_metrics(Dataset{four});
  EXPECT_EQ(m.sf, 2.0);
  EXPECT_EQ(m.vs, 0.0);
}

TEST(MdpMetricsTest, DecodingRules) {
  Graph g(25, 3, 4);
  for (std::size_t i = 0; i < 25; ++i) {
    g.x()(i, 1) = static_cast<double>(i % 5);
    g.x()(i, 2) = static_cast<double>(i / 5);
  }
  g.x()(0, 0) = 0.97;  // start: closest to 1, within 0.05
  g.x()(24, 0) = 0.6;  // finish
  g.x()(3, 0) = -0.9;  // block
  DecodedMaze d = decode_maze(g);
  EXPECT_EQ(d.start, 0);
  EXPECT_EQ(d.node_cell[24], Cell::kFinish);
  EXPECT_EQ(d.node_cell[3], Cell::kBlock);
  EXPECT_EQ(d.terminals, 2u);
  EXPECT_TRUE(maze_valid_solution(d));
  g.x()(0, 0) = 0.9;  // no terminal within 0.05 of 1
  EXPECT_EQ(decode_maze(g).start, -1);
  EXPECT_FALSE(maze_valid_solution(decode_maze(g)));
  g.x()(0, 0) = 1.0;
  g.x()(7, 1) = 0.0;  // two nodes claim cell (row 1, col 0)
  EXPECT_FALSE(decode_maze(g).layout_valid);
  EXPECT_THROW(decode_maze(Graph(10, 3, 4)), InputError);
  try {
    mdp_metrics(Dataset{Graph(10, 3, 4)});
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("25 nodes"), std::string::npos);
  }
}

TEST(MdpMetricsTest, SlipPatternAndTolerances) {
  EXPECT_TRUE(matches_slip_pattern(std::vector<double>{0.8, 0.1, 0.1, 0.0}, 0.01));
  EXPECT_TRUE(matches_slip_pattern(std::vector<double>{0.0, 1.0, 0.0}, 0.01));
  EXPECT_TRUE(matches_slip_pattern(std::vector<double>{0.705, 0.1, 0.095, 0.1}, 0.01));
  EXPECT_FALSE(matches_slip_pattern(std::vector<double>{0.6, 0.2, 0.2}, 0.01));
  EXPECT_FALSE(matches_slip_pattern(std::vector<double>{0.9, 0.1, 0.1}, 0.01));

  Rng rng(9);
  MazeSpec spec;
  spec.deterministic = false;
  Graph g = gen_maze(spec, rng);
  MdpOptions opt;
  opt.deterministic = false;
  Graph off = g;
  // Shift 0.005 of mass on one channel: MV holds at eps 0.01, fails at 0.001.
  for (std::size_t v = 0; v < 25; ++v)
    if (off.edge(0, v, 0) > 0.5) off.edge(0, v, 0) += 0.005;
  EXPECT_EQ(mdp_metrics(Dataset{off}, opt).mv, 100.0);
  opt.mv_eps = 0.001;
  EXPECT_LT(mdp_metrics(Dataset{off}, opt).mv, 100.0);
}

TEST(MetricsTest, PermutationInvariance) {
  Rng rng(10);
  MazeSpec spec;
  spec.deterministic = false;
  const Dataset mazes = gen_mazes(spec, 20, rng);
  Dataset permuted, noisy;
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (const Graph& g : mazes) {
    Graph n = g;
    for (Eigen::Index k = 0; k < n.e().size(); ++k)
      if (n.e().data()[k] != 0.0) n.e().data()[k] += jitter(rng);
    noisy.push_back(n);
  }
  for (const Graph& g : noisy) permuted.push_back(permute(g, random_permutation(25, rng)));
  MdpOptions opt;
  opt.deterministic = false;
  const MdpMetrics a = mdp_metrics(noisy, opt), b = mdp_metrics(permuted, opt);
  EXPECT_EQ(a.mv, b.mv);
  EXPECT_EQ(a.mdv, b.mdv);
  EXPECT_EQ(a.vs, b.vs);
  EXPECT_EQ(a.b, b.b);
  EXPECT_EQ(a.sf, b.sf);
  EXPECT_EQ(a.e, b.e);
  EXPECT_NEAR(degree_mmd(noisy, mazes), degree_mmd(permuted, mazes), 1e-12);
  EXPECT_NEAR(cluster_mmd(noisy, mazes), cluster_mmd(permuted, mazes), 1e-12);
  EXPECT_EQ(uniqueness(noisy), uniqueness(permuted));
  EXPECT_EQ(novelty(noisy, mazes), novelty(permuted, mazes));

  Rng crng(11);
  ClusterSpec cs;
  cs.n_graphs = 30;
  cs.std = 0.4;
  const Dataset clusters = gen_clusters(cs, crng);
  Dataset cperm;
  for (const Graph& g : clusters) cperm.push_back(permute(g, random_permutation(10, crng)));
  EXPECT_EQ(homogeneity(clusters), homogeneity(cperm));
}

TEST(MetricReportTest, JsonAndTable) {
  MetricReport r;
  r.deg = 0.17;
  r.cl = 0.006;
  r.uniqueness = 100;
  r.novelty = 100;
  r.mdp = MdpMetrics{68, 50, 90, 0.1, 0.2, 0.3};
  const nlohmann::json j = r.to_json();
  EXPECT_EQ(j["deg"], 0.17);
  EXPECT_EQ(j["mdp"]["MV"], 68.0);
  EXPECT_FALSE(j.contains("homogeneity"));
  const std::string t = r.to_table();
  EXPECT_NE(t.find("deg"), std::string::npos);
  EXPECT_NE(t.find("0.1700"), std::string::npos);
  EXPECT_NE(t.find("68.0%"), std::string::npos);
  const auto nl = t.find('\n');
  EXPECT_EQ(nl, t.size() - nl - 2);  // header and value rows have equal width
}

}  // namespace
}  // namespace edgediff
