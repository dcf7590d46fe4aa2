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

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "test_util.hpp"

namespace edgediff {
namespace {

namespace fs = std::filesystem;

ScoreNetConfig tiny_config() {
  ScoreNetConfig c;
  c.node_in = 1;
  c.edge_in = 2;
  c.layers = 2;
  c.flows = 2;
  c.heads = 2;
  c.hidden_dim = 4;
  c.edge_hidden = 3;
  c.edge_final = 2;
  return c;
}

ScoreNet tiny_net(std::uint64_t seed) {
  ScoreNet net(tiny_config(), VpSdeConfig{});
  Rng rng(seed);
  net.init(rng);
  return net;
}

std::vector<Graph> toy_graphs(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Graph> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(testing::random_graph(4, 1, 2, rng));
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("edgediff_training_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ParamStore two_tensors(double a, double b) {
  ParamStore p;
  p.add("a", Matrix::Constant(2, 2, a));
  p.add("b", Matrix::Constant(1, 3, b));
  return p;
}

TEST(AdamWTest, MatchesScalarRecurrence) {
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.01;
  ParamStore p;
  p.add("w", Matrix::Constant(1, 1, 0.7));
  AdamState st;
  const double grads[] = {0.3, -1.2, 0.05, 2.0};
  double w = 0.7, m = 0.0, v = 0.0;
  for (int k = 1; k <= 4; ++k) {
    const double g = grads[k - 1];
    adamw_step(p, GradStore{Matrix::Constant(1, 1, g)}, st, cfg);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1 - std::pow(0.9, k));
    const double vhat = v / (1 - std::pow(0.999, k));
    w = w * (1 - 0.05 * 0.01) - 0.05 * mhat / (std::sqrt(vhat) + 1e-8);
    EXPECT_NEAR(p.value(0)(0, 0), w, 1e-15);
  }
  EXPECT_EQ(st.step, 4);
}

TEST(AdamWTest, ZeroLearningRateLeavesParameters) {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  ParamStore p = two_tensors(0.4, -2.0);
  const ParamStore before = p;
  AdamState st;
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    GradStore g = zero_grads(p);
    for (Matrix& m : g) fill_normal(m, rng);
    adamw_step(p, g, st, cfg);
  }
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p.value(i), before.value(i));
}

TEST(AdamWTest, WeightDecayWithZeroGradientShrinksExactly) {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.2;
  ParamStore p = two_tensors(1.5, -0.25);
  AdamState st;
  Matrix a = p.value(0), b = p.value(1);
  for (int k = 0; k < 10; ++k) {
    adamw_step(p, zero_grads(p), st, cfg);
    a *= (1 - 0.1 * 0.2);
    b *= (1 - 0.1 * 0.2);
    EXPECT_EQ(p.value(0), a);
    EXPECT_EQ(p.value(1), b);
  }
}

TEST(EmaTest, OneStepFromEqualInitialization) {
  ParamStore p0 = two_tensors(0.3, 1.1);
  ParamStore ema = p0;
  ParamStore p1 = two_tensors(-0.7, 2.5);
  ema_update(ema, p1, 0.999);
  EXPECT_DOUBLE_EQ(ema.value(0)(0, 0), 0.999 * 0.3 + 0.001 * -0.7);
  EXPECT_DOUBLE_EQ(ema.value(1)(0, 2), 0.999 * 1.1 + 0.001 * 2.5);
}

TEST(EmaTest, DistanceShrinksByDecayWhenFrozen) {
  ParamStore p = two_tensors(2.0, -1.0);
  ParamStore ema = two_tensors(-3.0, 4.0);
  auto dist = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (ema.value(i) - p.value(i)).squaredNorm();
    return std::sqrt(s);
  };
  double d = dist();
  for (int k = 0; k < 50; ++k) {
    ema_update(ema, p, 0.9);
    const double next = dist();
    EXPECT_NEAR(next / d, 0.9, 1e-12);
    d = next;
  }
  ParamStore other;
  other.add("a", 1, 1);
  EXPECT_THROW(ema_update(ema, other, 0.9), InputError);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.ema_decay = 1.0;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig{};
  c.learning_rate = -0.1;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig{};
  c.grad_clip = -1.0;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(GradClipTest, RescalesOnlyAboveTheCap) {
  GradStore g{Matrix::Constant(2, 2, 3.0), Matrix::Constant(1, 3, -4.0)};
  const double norm = std::sqrt(4 * 9.0 + 3 * 16.0);
  const GradStore before = g;
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 100.0), norm);
  EXPECT_EQ(g[0], before[0]);
  EXPECT_EQ(g[1], before[1]);

  EXPECT_DOUBLE_EQ(clip_global_norm(g, 2.0), norm);
  double sq = 0.0;
  for (const Matrix& m : g) sq += m.squaredNorm();
  EXPECT_NEAR(std::sqrt(sq), 2.0, 1e-14);
  EXPECT_NEAR(g[0](0, 0) / g[1](0, 0), 3.0 / -4.0, 1e-14);  // direction kept
}

TEST(GradClipTest, ZeroCapDisablesClipping) {
  GradStore g{Matrix::Constant(2, 2, 1e6)};
  const GradStore before = g;
  clip_global_norm(g, 0.0);
  EXPECT_EQ(g[0], before[0]);
}

TEST(GradCheckTest, LinearModelAgreesToMachinePrecision) {
  Rng rng(2);
  Matrix x(6, 3), y(6, 1);
  fill_normal(x, rng);
  fill_normal(y, rng);
  ParamStore p;
  p.add("w", Matrix(3, 1));
  fill_normal(p.value(0), rng);
  auto loss = [&] { return (x * p.value(0) - y).squaredNorm(); };
  const GradStore analytic{2.0 * x.transpose() * (x * p.value(0) - y)};
  const GradCheckReport r = check_gradients(p, loss, analytic, 1e-8);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  EXPECT_EQ(r.checked, 3u);
}

TEST(GradCheckTest, OneSidedDifferencesBracketAnalyticDerivative) {
  ScoreNet net = tiny_net(3);
  const std::vector<Graph> graphs = toy_graphs(2, 4);
  Rng rng(5);
  std::vector<Perturbation> perts;
  for (const Graph& g : graphs) perts.push_back(draw_perturbation(shape_of(g), net.sde(), rng));
  const BatchGradient bg = dsm_loss_and_grad(net, graphs, perts);
  auto loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < graphs.size(); ++i) s += dsm_loss_with(net, graphs[i], perts[i], net.sde()).total();
    return s;
  };
  const double h = 1e-5;
  const double f0 = loss();
  for (std::size_t slot = 0; slot < net.params().size(); slot += 3) {
    Matrix& m = net.params().value(slot);
    const double saved = m(0, 0);
    m(0, 0) = saved + h;
    const double fwd = (loss() - f0) / h;
    m(0, 0) = saved - h;
    const double bwd = (f0 - loss()) / h;
    m(0, 0) = saved;
    const double a = bg.grad[slot](0, 0);
    const double slack = 1e-3 * std::max({std::abs(a), std::abs(fwd), 1e-4});
    EXPECT_GE(a, std::min(fwd, bwd) - slack) << net.params().name(slot);
    EXPECT_LE(a, std::max(fwd, bwd) + slack) << net.params().name(slot);
  }
}

TEST(TrainTest, BatchGradientIndependentOfWorkerCount) {
  const ScoreNet net = tiny_net(6);
  const std::vector<Graph> graphs = toy_graphs(19, 7);
  Rng rng(8);
  std::vector<Perturbation> perts;
  for (const Graph& g : graphs) perts.push_back(draw_perturbation(shape_of(g), net.sde(), rng));
  setenv("EDGEDIFF_THREADS", "1", 1);
  const BatchGradient one = dsm_loss_and_grad(net, graphs, perts);
  setenv("EDGEDIFF_THREADS", "4", 1);
  const BatchGradient four = dsm_loss_and_grad(net, graphs, perts);
  unsetenv("EDGEDIFF_THREADS");
  EXPECT_EQ(one.loss.loss_x, four.loss.loss_x);
  EXPECT_EQ(one.loss.loss_e, four.loss.loss_e);
  for (std::size_t i = 0; i < one.grad.size(); ++i) EXPECT_EQ(one.grad[i], four.grad[i]);
}

TEST(TrainTest, SingleThreadedRunsAreBitwiseIdentical) {
  setenv("EDGEDIFF_THREADS", "1", 1);
  const std::vector<Graph> train_set = toy_graphs(12, 9), test_set = toy_graphs(4, 10);
  TrainConfig cfg;
  cfg.batch_size = 5;
  cfg.epochs = 3;
  cfg.seed = 77;
  std::vector<TrainState> runs;
  for (int r = 0; r < 2; ++r) {
    ScoreNet net = tiny_net(11);
    TrainState st = initial_state(net);
    train(net, train_set, test_set, cfg, st);
    runs.push_back(st);
  }
  unsetenv("EDGEDIFF_THREADS");
  ASSERT_EQ(runs[0].log.epochs.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const EpochRecord &a = runs[0].log.epochs[k], &b = runs[1].log.epochs[k];
    EXPECT_EQ(a.epoch, b.epoch);
    EXPECT_EQ(a.loss_x_train, b.loss_x_train);
    EXPECT_EQ(a.loss_e_train, b.loss_e_train);
    EXPECT_EQ(a.loss_x_test, b.loss_x_test);
    EXPECT_EQ(a.loss_e_test, b.loss_e_test);
    for (double l : {a.loss_x_train, a.loss_e_train, a.loss_x_test, a.loss_e_test}) {
      EXPECT_TRUE(std::isfinite(l));
      EXPECT_GE(l, 0.0);
    }
  }
  for (std::size_t i = 0; i < runs[0].raw.size(); ++i) {
    EXPECT_EQ(runs[0].raw.value(i), runs[1].raw.value(i));
    EXPECT_EQ(runs[0].ema.value(i), runs[1].ema.value(i));
  }
}

TEST(TrainTest, ResumeMatchesUninterruptedRun) {
  const std::vector<Graph> train_set = toy_graphs(10, 12), test_set = toy_graphs(3, 13);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 4;
  ScoreNet net_a = tiny_net(14);
  TrainState full = initial_state(net_a);
  train(net_a, train_set, test_set, cfg, full);

  ScoreNet net_b = tiny_net(14);
  TrainState part = initial_state(net_b);
  TrainConfig half = cfg;
  half.epochs = 2;
  train(net_b, train_set, test_set, half, part);
  ScoreNet net_c(tiny_config(), VpSdeConfig{});
  train(net_c, train_set, test_set, cfg, part);

  EXPECT_EQ(part.epoch, 4);
  ASSERT_EQ(part.log.epochs.size(), 4u);
  EXPECT_EQ(part.log.epochs[3].loss_e_train, full.log.epochs[3].loss_e_train);
  EXPECT_EQ(part.adam.step, full.adam.step);
  for (std::size_t i = 0; i < full.raw.size(); ++i) {
    EXPECT_EQ(part.raw.value(i), full.raw.value(i));
    EXPECT_EQ(part.ema.value(i), full.ema.value(i));
  }
}

TEST(TrainTest, DivergenceReportsEpochAndLearningRate) {
  ScoreNet net = tiny_net(15);
  const std::vector<Graph> data = toy_graphs(6, 16);
  TrainConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.epochs = 5;
  TrainState st = initial_state(net);
  try {
    train(net, data, {}, cfg, st);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("learning_rate"), std::string::npos) << msg;
  }
}

TEST(TrainTest, RejectsEmptySetAndForeignState) {
  ScoreNet net = tiny_net(17);
  TrainState st = initial_state(net);
  EXPECT_THROW(train(net, {}, {}, TrainConfig{}, st), InputError);
  ScoreNetConfig other = tiny_config();
  other.hidden_dim = 8;
  ScoreNet wide(other, VpSdeConfig{});
  const std::vector<Graph> data = toy_graphs(2, 18);
  EXPECT_THROW(train(wide, data, {}, TrainConfig{}, st), InputError);
}

TEST(TrainTest, LogCsvLayout) {
  TrainLog log;
  log.epochs.push_back({1, 0.5, 0.25, 0.75, 0.125, 2.0});
  std::ostringstream out;
  log.write_csv(out);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,loss_x_train,loss_e_train,loss_x_test,loss_e_test,seconds");
  EXPECT_NE(text.find("\n1,0.5,0.25,0.75,0.125,"), std::string::npos) << text;
}

// Scalar toy set: one-node graphs whose single edge value is N(1, 0.1^2).
// Full-batch steps at a small learning rate; the held-out edge loss uses the
// same perturbations every epoch.
TEST(TrainTest, ToyEdgeLossDecreasesMonotonically) {
  int monotone = 0;
  const int runs = 10;
  for (int seed = 0; seed < runs; ++seed) {
    Rng rng(seed);
    std::normal_distribution<double> value(1.0, 0.1);
    auto make = [&](std::size_t count) {
      std::vector<Graph> out;
      for (std::size_t i = 0; i < count; ++i) {
        Graph g(1, 1, 1);
        g.e()(0, 0) = value(rng);
        out.push_back(g);
      }
      return out;
    };
    const std::vector<Graph> train_set = make(1000), test_set = make(500);
    ScoreNetConfig c;
    c.node_in = c.edge_in = 1;
    c.layers = 2;
    c.flows = 2;
    c.heads = 2;
    c.hidden_dim = 4;
    c.edge_hidden = 4;
    c.edge_final = 2;
    ScoreNet net(c, VpSdeConfig{});
    Rng init(seed + 100);
    net.init(init);
    TrainConfig cfg;
    cfg.learning_rate = 0.003;
    cfg.batch_size = 1000;
    cfg.epochs = 50;
    cfg.seed = static_cast<std::uint64_t>(seed);
    TrainState st = initial_state(net);
    train(net, train_set, test_set, cfg, st);
    bool ok = true;
    for (std::size_t k = 1; k < st.log.epochs.size(); ++k)
      ok = ok && st.log.epochs[k].loss_e_test < st.log.epochs[k - 1].loss_e_test;
    monotone += ok;
  }
  EXPECT_GE(monotone, 9) << monotone << " of " << runs << " runs monotone";
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  const fs::path dir = scratch_dir("roundtrip");
  ScoreNet net = tiny_net(19);
  Checkpoint ckpt;
  ParamStore odd = net.params();
  odd.value(0)(0, 0) = -0.0;
  odd.value(1)(0, 0) = 4.9e-324;
  ckpt.groups.emplace_back("raw", odd);
  ckpt.groups.emplace_back("ema", net.params());
  ckpt.meta = {{"epoch", 7}};
  save_checkpoint(ckpt, dir / "c.json");
  const Checkpoint back = load_checkpoint(dir / "c.json", nullptr);
  ASSERT_EQ(back.groups.size(), 2u);
  EXPECT_EQ(back.meta, ckpt.meta);
  for (std::size_t gi = 0; gi < 2; ++gi) {
    const ParamStore &a = ckpt.groups[gi].second, &b = back.groups[gi].second;
    EXPECT_EQ(back.groups[gi].first, ckpt.groups[gi].first);
    ASSERT_TRUE(a.same_layout(b));
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_EQ(std::memcmp(a.value(i).data(), b.value(i).data(), sizeof(double) * a.value(i).size()), 0) << a.name(i);
  }
  EXPECT_TRUE(std::signbit(back.group("raw")->value(0)(0, 0)));
}

TEST(CheckpointTest, TruncatedBinaryNamesFirstUnreadableTensor) {
  const fs::path dir = scratch_dir("truncated");
  ParamStore p;
  p.add("first", Matrix::Ones(2, 2));    // bytes 0..32
  p.add("second", Matrix::Ones(3, 1));   // bytes 32..56
  p.add("third", Matrix::Ones(1, 1));    // bytes 56..64
  Checkpoint ckpt;
  ckpt.groups.emplace_back("raw", p);
  save_checkpoint(ckpt, dir / "c.json");
  fs::resize_file(dir / "c.bin", 40);
  try {
    load_checkpoint(dir / "c.json", nullptr);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("raw/second"), std::string::npos) << msg;
  }
}

TEST(CheckpointTest, MissingEmaLoadsRawWithWarning) {
  const fs::path dir = scratch_dir("noema");
  Checkpoint ckpt;
  ckpt.groups.emplace_back("raw", two_tensors(1.0, 2.0));
  save_checkpoint(ckpt, dir / "c.json");
  std::ostringstream warn;
  const Checkpoint back = load_checkpoint(dir / "c.json", &warn);
  EXPECT_NE(back.group("raw"), nullptr);
  EXPECT_EQ(back.group("ema"), nullptr);
  EXPECT_NE(warn.str().find("ema"), std::string::npos);
}

TEST(CheckpointTest, CorruptManifestErrors) {
  const fs::path dir = scratch_dir("corrupt");
  Checkpoint ckpt;
  ckpt.groups.emplace_back("raw", two_tensors(1.0, 2.0));
  save_checkpoint(ckpt, dir / "c.json");
  std::ifstream in(dir / "c.json");
  nlohmann::json m = nlohmann::json::parse(in);
  m["groups"]["raw"][1]["shape"] = "tall";
  std::ofstream(dir / "bad.json") << m.dump();
  try {
    load_checkpoint(dir / "bad.json", nullptr);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("raw/b"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "junk.json") << "{not json";
  EXPECT_THROW(load_checkpoint(dir / "junk.json", nullptr), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "absent.json", nullptr), IoError);
}

}  // namespace
}  // namespace edgediff
