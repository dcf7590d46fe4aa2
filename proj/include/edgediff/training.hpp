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

#ifndef EDGEDIFF_TRAINING_HPP_
#define EDGEDIFF_TRAINING_HPP_

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "edgediff/score_net.hpp"
#include "edgediff/sde.hpp"

namespace edgediff {

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 1e-4;
  double ema_decay = 0.999;
  std::size_t batch_size = 256;
  int epochs = 100;
  std::uint64_t seed = 0;
  // Adam moment coefficients.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Cap on the L2 norm of the per-graph mean gradient; 0 disables.
  double grad_clip = 1.0;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw InputError("TrainConfig: learning_rate must be non-negative");
    if (!(weight_decay >= 0.0)) throw InputError("TrainConfig: weight_decay must be non-negative");
    if (!(ema_decay > 0.0 && ema_decay < 1.0)) throw InputError("TrainConfig: ema_decay must lie in (0, 1)");
    if (batch_size < 1) throw InputError("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw InputError("TrainConfig: epochs must be >= 1");
    if (!(grad_clip >= 0.0)) throw InputError("TrainConfig: grad_clip must be non-negative");
  }
};

struct AdamState {
  GradStore m;
  GradStore v;
  long step = 0;
};

/// Adam with decoupled weight decay: p <- p (1 - lr wd) - lr mhat / (sqrt(vhat) + eps).
inline void adamw_step(ParamStore& params, const GradStore& grads, AdamState& state, const TrainConfig& cfg) {
  if (grads.size() != params.size()) throw InputError("adamw_step: gradient count mismatch");
  if (state.m.empty()) {
    state.m = zero_grads(params);
    state.v = zero_grads(params);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const double shrink = 1.0 - cfg.learning_rate * cfg.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = params.value(i);
    const Matrix& g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    p *= shrink;
    p.array() -= cfg.learning_rate * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + cfg.adam_eps);
  }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns
/// the norm before scaling.
inline double clip_global_norm(GradStore& grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Matrix& g : grads) g *= scale;
  }
  return norm;
}

/// ema <- decay * ema + (1 - decay) * params.
inline void ema_update(ParamStore& ema, const ParamStore& params, double decay) {
  if (!ema.same_layout(params)) throw InputError("ema_update: layout mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) ema.value(i) = decay * ema.value(i) + (1.0 - decay) * params.value(i);
}

struct BatchGradient {
  DsmLoss loss;  // sums over the batch
  GradStore grad;
};

/// Loss and parameter gradient of the summed DSM objective over `graphs`.
/// Work is split into fixed chunks of graphs and reduced in index order, so
/// the result does not depend on the worker count.
inline BatchGradient dsm_loss_and_grad(const ScoreNet& net, std::span<const Graph> graphs,
                                       std::span<const Perturbation> perturbations) {
  if (graphs.empty()) throw InputError("dsm_loss_and_grad: empty batch");
  if (graphs.size() != perturbations.size()) throw InputError("dsm_loss_and_grad: one perturbation per graph required");
  constexpr std::size_t kChunk = 8;
  const std::size_t chunks = (graphs.size() + kChunk - 1) / kChunk;
  std::vector<BatchGradient> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    BatchGradient& out = partial[c];
    out.grad = zero_grads(net.params());
    const std::size_t end = std::min(graphs.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      ad::Tape tape;
      const ScoreNet::LossVars l = net.dsm_loss(tape, graphs[i], perturbations[i]);
      tape.backward(l.total);
      tape.for_each_parameter_grad([&](std::size_t slot, const Matrix& g) { out.grad[slot] += g; });
      out.loss.loss_x += l.loss_x;
      out.loss.loss_e += l.loss_e;
    }
  });
  BatchGradient total = std::move(partial.front());
  for (std::size_t c = 1; c < chunks; ++c) {
    total.loss.loss_x += partial[c].loss.loss_x;
    total.loss.loss_e += partial[c].loss.loss_e;
    for (std::size_t i = 0; i < total.grad.size(); ++i) total.grad[i] += partial[c].grad[i];
  }
  return total;
}

/// Per-graph mean DSM loss of `data` (no gradients).
inline DsmLoss evaluate_loss(const ScoreNet& net, std::span<const Graph> data, Rng& rng) {
  if (data.empty()) return {};
  std::vector<Perturbation> perts;
  perts.reserve(data.size());
  for (const Graph& g : data) perts.push_back(draw_perturbation(shape_of(g), net.sde(), rng));
  std::vector<DsmLoss> parts(data.size());
  parallel_for(data.size(), [&](std::size_t i) { parts[i] = dsm_loss_with(net, data[i], perts[i], net.sde()); });
  DsmLoss total;
  for (const DsmLoss& l : parts) {
    total.loss_x += l.loss_x;
    total.loss_e += l.loss_e;
  }
  total.loss_x /= static_cast<double>(data.size());
  total.loss_e /= static_cast<double>(data.size());
  return total;
}

struct EpochRecord {
  int epoch = 0;
  double loss_x_train = 0.0;
  double loss_e_train = 0.0;
  double loss_x_test = 0.0;
  double loss_e_test = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// CSV: epoch,loss_x_train,loss_e_train,loss_x_test,loss_e_test,seconds
  void write_csv(std::ostream& out) const {
    out << "epoch,loss_x_train,loss_e_train,loss_x_test,loss_e_test,seconds\n";
    char buf[256];
    for (const EpochRecord& r : epochs) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.epoch, r.loss_x_train, r.loss_e_train,
                    r.loss_x_test, r.loss_e_test, r.seconds);
      out << buf;
    }
  }
};

/// Everything needed to continue a run.
struct TrainState {
  ParamStore raw;
  ParamStore ema;
  AdamState adam;
  int epoch = 0;  // completed epochs
  TrainLog log;
};

inline TrainState initial_state(const ScoreNet& net) {
  TrainState s;
  s.raw = net.params();
  s.ema = net.params();
  return s;
}

using EpochCallback = std::function<void(const TrainState&, const EpochRecord&)>;

/// Runs epochs state.epoch + 1 .. cfg.epochs. Losses in the log are per-graph
/// means; train losses are averaged over the epoch's minibatches before each
/// update, test losses are evaluated with the raw parameters after the epoch.
inline void train(ScoreNet& net, std::span<const Graph> train_set, std::span<const Graph> test_set,
                  const TrainConfig& cfg, TrainState& state, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train_set.empty()) throw InputError("train: empty training set");
  if (!state.raw.same_layout(net.params()) || !state.ema.same_layout(net.params())) {
    throw InputError("train: state does not match the network layout");
  }
  net.set_params(state.raw);
  std::vector<std::size_t> order(train_set.size());
  for (int epoch = state.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng = derived_rng(cfg.seed, static_cast<std::uint64_t>(epoch));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    DsmLoss epoch_loss;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<Graph> batch;
      std::vector<Perturbation> perts;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(train_set[order[i]]);
        perts.push_back(draw_perturbation(shape_of(batch.back()), net.sde(), rng));
      }
      BatchGradient bg = dsm_loss_and_grad(net, batch, perts);
      if (!std::isfinite(bg.loss.total())) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << " (learning_rate " << cfg.learning_rate << ")";
        throw NumericalError(msg.str());
      }
      // The batch gradient is a sum over graphs; the cap applies to its mean.
      if (cfg.grad_clip > 0.0) clip_global_norm(bg.grad, cfg.grad_clip * static_cast<double>(end - begin));
      epoch_loss.loss_x += bg.loss.loss_x;
      epoch_loss.loss_e += bg.loss.loss_e;
      adamw_step(net.params(), bg.grad, state.adam, cfg);
      ema_update(state.ema, net.params(), cfg.ema_decay);
    }
    if (!net.params().all_finite()) {
      std::ostringstream msg;
      msg << "training diverged: non-finite parameters at epoch " << epoch << " (learning_rate " << cfg.learning_rate
          << ")";
      throw NumericalError(msg.str());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_x_train = epoch_loss.loss_x / static_cast<double>(train_set.size());
    rec.loss_e_train = epoch_loss.loss_e / static_cast<double>(train_set.size());
    // Same perturbations every epoch, so the test curve reflects the parameters only.
    Rng eval_rng = derived_rng(cfg.seed ^ 0x5eedf00dULL, 0);
    DsmLoss test_loss;
    try {
      test_loss = evaluate_loss(net, test_set, eval_rng);
    } catch (const NumericalError& err) {
      std::ostringstream msg;
      msg << "training diverged: " << err.what() << " on the test split at epoch " << epoch << " (learning_rate "
          << cfg.learning_rate << ")";
      throw NumericalError(msg.str());
    }
    rec.loss_x_test = test_loss.loss_x;
    rec.loss_e_test = test_loss.loss_e;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    state.raw = net.params();
    state.epoch = epoch;
    state.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(state, rec);
  }
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Compares `analytic` against fourth-order central differences of `loss`,
///   f' ~ (8 (f(p+h) - f(p-h)) - (f(p+2h) - f(p-2h))) / 12h,
/// perturbing every entry of `params` in place (restored afterwards).
/// Relative error is |a - f| / max(|a|, |f|, 1e-6).
inline GradCheckReport check_gradients(ParamStore& params, const std::function<double()>& loss,
                                       const GradStore& analytic, double tolerance, double h = 1e-4) {
  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = params.value(i);
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double saved = p.data()[k];
      const auto at = [&](double offset) {
        p.data()[k] = saved + offset;
        return loss();
      };
      const double near = at(h) - at(-h);
      const double far = at(2.0 * h) - at(-2.0 * h);
      p.data()[k] = saved;
      const double numeric = (8.0 * near - far) / (12.0 * h);
      const double a = analytic[i].data()[k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      ++report.checked;
      if (rel > report.max_rel_error || report.worst_index < 0) {
        report.max_rel_error = rel;
        report.worst_param = params.name(i);
        report.worst_index = k;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

/// Finite-difference check of dsm_loss_and_grad for the network's parameters.
inline GradCheckReport grad_check(const ScoreNet& net, std::span<const Graph> graphs,
                                  std::span<const Perturbation> perturbations, double tolerance, double h = 1e-4) {
  const BatchGradient bg = dsm_loss_and_grad(net, graphs, perturbations);
  ScoreNet probe = net;
  auto loss = [&]() {
    double total = 0.0;
    for (std::size_t i = 0; i < graphs.size(); ++i) total += dsm_loss_with(probe, graphs[i], perturbations[i], probe.sde()).total();
    return total;
  };
  return check_gradients(probe.params(), loss, bg.grad, tolerance, h);
}

}  // namespace edgediff

#endif  // EDGEDIFF_TRAINING_HPP_
