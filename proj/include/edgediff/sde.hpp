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

// Variance-preserving diffusion over the joint state (x, e).
//
// Forward SDE:  dG = -1/2 beta(t) G dt + sqrt(beta(t)) dw, with a linear
// schedule beta(t) = beta_min + (beta_max - beta_min) t / T. Both tensors
// share one time variable and one integration step.

#ifndef EDGEDIFF_SDE_HPP_
#define EDGEDIFF_SDE_HPP_

#include <cmath>
#include <concepts>
#include <span>
#include <string>

#include "edgediff/graph.hpp"

namespace edgediff {

struct VpSdeConfig {
  double beta_min = 0.1;
  double beta_max = 3.0;
  double t_end = 1.0;
  double t_eps = 1e-3;

  void validate() const {
    if (!(beta_min > 0.0) || !(beta_max >= beta_min)) throw InputError("VpSdeConfig: need 0 < beta_min <= beta_max");
    if (!(t_eps > 0.0) || !(t_eps < t_end)) throw InputError("VpSdeConfig: need 0 < t_eps < t_end");
  }
};

struct MarginalParams {
  double alpha = 1.0;  // mean scaling of G_0
  double std = 0.0;    // marginal standard deviation
};

namespace detail {
inline void check_time(const VpSdeConfig& cfg, double t) {
  if (!(t >= 0.0 && t <= cfg.t_end)) {
    throw InputError("time " + std::to_string(t) + " outside [0, " + std::to_string(cfg.t_end) + "]");
  }
}
}  // namespace detail

inline double beta(const VpSdeConfig& cfg, double t) {
  detail::check_time(cfg, t);
  return cfg.beta_min + (cfg.beta_max - cfg.beta_min) * t / cfg.t_end;
}

/// integral_0^t beta(s) ds.
inline double integrated_beta(const VpSdeConfig& cfg, double t) {
  detail::check_time(cfg, t);
  return cfg.beta_min * t + 0.5 * (cfg.beta_max - cfg.beta_min) * t * t / cfg.t_end;
}

inline MarginalParams marginal_params(const VpSdeConfig& cfg, double t) {
  const double b = integrated_beta(cfg, t);
  return {std::exp(-0.5 * b), std::sqrt(-std::expm1(-b))};
}

/// G_t = alpha(t) G_0 + std(t) noise, on x and e together.
inline Graph perturb(const Graph& g0, double t, const Graph& noise, const VpSdeConfig& cfg) {
  if (!g0.same_shape(noise)) throw InputError("perturb: noise shape differs from graph shape");
  const MarginalParams m = marginal_params(cfg, t);
  return Graph(m.alpha * g0.x() + m.std * noise.x(), m.alpha * g0.e() + m.std * noise.e());
}

/// grad log p_0t(G_t | G_0) = -(G_t - alpha G_0) / std^2.
inline Graph kernel_score(const Graph& gt, const Graph& g0, double t, const VpSdeConfig& cfg) {
  if (!gt.same_shape(g0)) throw InputError("kernel_score: shape mismatch");
  if (t < cfg.t_eps) throw InputError("kernel_score: t below t_eps (kernel variance vanishes)");
  const MarginalParams m = marginal_params(cfg, t);
  const double inv_var = 1.0 / (m.std * m.std);
  return Graph(-(gt.x() - m.alpha * g0.x()) * inv_var, -(gt.e() - m.alpha * g0.e()) * inv_var);
}

inline Graph gaussian_graph(GraphShape shape, Rng& rng) {
  Graph g(shape.n, shape.u, shape.v);
  fill_normal(g.x(), rng);
  fill_normal(g.e(), rng);
  return g;
}

/// Anything that estimates grad log p_t at (G_t, t).
template <class M>
concept ScoreModel = requires(const M& m, const Graph& g, double t) {
  { m.score(g, t) } -> std::convertible_to<Graph>;
};

/// One draw of the perturbation used by the score-matching objective.
struct Perturbation {
  double t = 0.0;
  Graph noise;
};

/// Draws t ~ U[t_eps, T] and then the noise (x entries first, then e).
inline Perturbation draw_perturbation(GraphShape shape, const VpSdeConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> uniform(cfg.t_eps, cfg.t_end);
  Perturbation p;
  p.t = uniform(rng);
  p.noise = gaussian_graph(shape, rng);
  return p;
}

struct DsmLoss {
  double loss_x = 0.0;
  double loss_e = 0.0;
  double total() const { return loss_x + loss_e; }
};

/// Score-matching error of one graph with lambda(t) = std(t)^2 weighting.
template <ScoreModel M>
DsmLoss dsm_loss_with(const M& model, const Graph& g0, const Perturbation& p, const VpSdeConfig& cfg) {
  const MarginalParams m = marginal_params(cfg, p.t);
  const Graph gt = perturb(g0, p.t, p.noise, cfg);
  const Graph s = model.score(gt, p.t);
  if (!s.same_shape(g0)) throw InputError("dsm_loss: model returned a score of the wrong shape");
  // std * s - std * target = std * s + noise
  return {(m.std * s.x() + p.noise.x()).squaredNorm(), (m.std * s.e() + p.noise.e()).squaredNorm()};
}

/// Sum over the unmasked entries of the batch; t drawn per graph.
template <ScoreModel M>
DsmLoss dsm_loss(const M& model, const GraphBatch& batch, const VpSdeConfig& cfg, Rng& rng) {
  if (batch.empty()) throw InputError("dsm_loss: empty batch");
  DsmLoss total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Graph g = batch.graph(i);
    const Perturbation p = draw_perturbation(shape_of(g), cfg, rng);
    const DsmLoss l = dsm_loss_with(model, g, p, cfg);
    total.loss_x += l.loss_x;
    total.loss_e += l.loss_e;
  }
  return total;
}

struct SamplerConfig {
  int steps = 1000;
  double snr = 0.05;
  double scale_eps = 0.7;
  int corrector_steps = 1;

  void validate() const {
    if (steps < 1) throw InputError("SamplerConfig: steps must be >= 1");
    if (!(snr > 0.0) || !(scale_eps > 0.0)) throw InputError("SamplerConfig: snr and scale_eps must be positive");
    if (corrector_steps < 0) throw InputError("SamplerConfig: corrector_steps must be >= 0");
  }
};

namespace detail {
inline double joint_norm(const Graph& g) { return std::sqrt(g.x().squaredNorm() + g.e().squaredNorm()); }

inline void check_state(const Matrix& x, const Matrix& e, double t) {
  if (!x.allFinite() || !e.allFinite()) throw NumericalError("pc_sample: non-finite state at t = " + std::to_string(t));
}
}  // namespace detail

/// Reverse-time integration from `init` (taken to be G_T) down to t_eps.
/// Each of `steps` uniform intervals applies one Euler-Maruyama predictor
/// step and then `corrector_steps` Langevin corrector steps; `noise(shape)`
/// supplies every Gaussian draw.
template <ScoreModel M, class NoiseFn>
Graph pc_sample_from(const M& model, Graph init, const SamplerConfig& scfg, const VpSdeConfig& sde,
                     NoiseFn&& noise) {
  scfg.validate();
  sde.validate();
  const GraphShape shape = shape_of(init);
  Graph state = std::move(init);
  const double dt = (sde.t_end - sde.t_eps) / scfg.steps;
  for (int i = 0; i < scfg.steps; ++i) {
    const double t = sde.t_end - i * dt;
    // Predictor: G <- G - [f - g^2 s] dt + g sqrt(dt) z, run backwards in time.
    {
      const double b = beta(sde, t);
      const Graph s = model.score(state, t);
      const Graph z = noise(shape);
      const double diffusion = std::sqrt(b);
      Matrix x = state.x() + (0.5 * b * state.x() + b * s.x()) * dt + diffusion * std::sqrt(dt) * z.x();
      Matrix e = state.e() + (0.5 * b * state.e() + b * s.e()) * dt + diffusion * std::sqrt(dt) * z.e();
      detail::check_state(x, e, t);
      state = Graph(std::move(x), std::move(e));
    }
    const double t_next = (i + 1 == scfg.steps) ? sde.t_eps : t - dt;
    const double alpha = marginal_params(sde, t_next).alpha;
    for (int c = 0; c < scfg.corrector_steps; ++c) {
      const Graph s = model.score(state, t_next);
      const Graph z = noise(shape);
      const double s_norm = detail::joint_norm(s);
      if (!(s_norm > 0.0)) continue;
      const double ratio = scfg.snr * detail::joint_norm(z) / s_norm;
      const double step = scfg.scale_eps * 2.0 * alpha * ratio * ratio;
      const double jitter = std::sqrt(2.0 * step);
      Matrix x = state.x() + step * s.x() + jitter * z.x();
      Matrix e = state.e() + step * s.e() + jitter * z.e();
      detail::check_state(x, e, t_next);
      state = Graph(std::move(x), std::move(e));
    }
  }
  return state;
}

/// Predictor-corrector sample starting from i.i.d. standard normal x and e.
template <ScoreModel M>
Graph pc_sample(const M& model, GraphShape shape, const SamplerConfig& scfg, const VpSdeConfig& sde, Rng& rng) {
  if (shape.n == 0) throw InputError("pc_sample: empty shape");
  Graph init = gaussian_graph(shape, rng);
  return pc_sample_from(model, std::move(init), scfg, sde, [&rng](GraphShape s) { return gaussian_graph(s, rng); });
}

}  // namespace edgediff

#endif  // EDGEDIFF_SDE_HPP_
