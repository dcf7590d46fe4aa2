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

// Permutation-equivariant score network over (x, e).
//
// Building block (graph neural module):
//   GNM(X, E) = Abar X W_X + tanh(B[rep(Abar) .* E W_E])
// where Abar is the degree-normalized adjacency recovered from the noisy
// input and B sums each node's incoming edges per channel. Because B and
// the gating are linear, B[rep(Abar) .* E W_E] = B[rep(Abar) .* E] W_E;
// the edge term is evaluated in that order.
//
// Attention: Q = GNM_Q(X, E), K = GNM_K(X, E), one n x n map per head,
// Q K^T / sqrt(d), averaged over the heads of each output channel.
//
// Layer l maps (X^{l-1}, E^{l-1}) to X^l = GCN(.) and E^l = GMH(.), each
// of which concatenates J parallel activations and feeds them through a
// two-layer MLP. J activations with separate weights are computed as one
// activation with J times the output width, which is the same function.
// The score heads read the concatenation of all per-layer states plus a
// noise-level channel std(t), and the result is divided by std(t).

#ifndef EDGEDIFF_SCORE_NET_HPP_
#define EDGEDIFF_SCORE_NET_HPP_

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "edgediff/autodiff.hpp"
#include "edgediff/graph.hpp"
#include "edgediff/sde.hpp"

namespace edgediff {

/// Named dense tensors in insertion order.
class ParamStore {
 public:
  std::size_t add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    return add(name, Matrix::Zero(rows, cols));
  }

  std::size_t add(const std::string& name, Matrix value) {
    if (index_.count(name)) throw InputError("ParamStore: duplicate tensor '" + name + "'");
    index_.emplace(name, names_.size());
    names_.push_back(name);
    values_.push_back(std::move(value));
    return names_.size() - 1;
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InputError("ParamStore: no tensor named '" + name + "'");
    return it->second;
  }

  Matrix& operator[](const std::string& name) { return values_[index(name)]; }
  const Matrix& operator[](const std::string& name) const { return values_[index(name)]; }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (const Matrix& m : values_) total += static_cast<std::size_t>(m.size());
    return total;
  }

  bool same_layout(const ParamStore& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (names_[i] != other.names_[i] || values_[i].rows() != other.values_[i].rows() ||
          values_[i].cols() != other.values_[i].cols()) {
        return false;
      }
    }
    return true;
  }

  bool all_finite() const {
    for (const Matrix& m : values_)
      if (!m.allFinite()) return false;
    return true;
  }

  void set_zero() {
    for (Matrix& m : values_) m.setZero();
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Gradients laid out like a ParamStore (same index, same shapes).
using GradStore = std::vector<Matrix>;

inline GradStore zero_grads(const ParamStore& params) {
  GradStore g;
  g.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) g.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
  return g;
}

/// The four ablation variants as (joint_network, gnm_edge_term).
enum class Ablation { kFull, kJointSde, kGnm, kVanilla };

inline std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kJointSde: return "joint-sde";
    case Ablation::kGnm: return "gnm";
    case Ablation::kVanilla: return "vanilla";
  }
  return "full";
}

inline Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::kFull;
  if (s == "joint-sde") return Ablation::kJointSde;
  if (s == "gnm") return Ablation::kGnm;
  if (s == "vanilla") return Ablation::kVanilla;
  throw InputError("unknown ablation '" + s + "' (expected full, joint-sde, gnm, vanilla)");
}

struct ScoreNetConfig {
  std::size_t node_in = 1;      // u
  std::size_t edge_in = 1;      // v
  std::size_t layers = 3;       // L
  std::size_t flows = 2;        // J
  std::size_t heads = 4;
  std::size_t hidden_dim = 16;  // node state width, MLP width, heads * per-head attention dim
  std::size_t edge_hidden = 8;  // edge channels of layers 1..L-1
  std::size_t edge_final = 4;   // edge channels of layer L
  double mask_eps = kDefaultMaskEps;
  bool joint_network = true;
  bool gnm_edge_term = true;

  void set_ablation(Ablation a) {
    joint_network = a == Ablation::kFull || a == Ablation::kJointSde;
    gnm_edge_term = a == Ablation::kFull || a == Ablation::kGnm;
  }

  Ablation ablation() const {
    if (joint_network) return gnm_edge_term ? Ablation::kFull : Ablation::kJointSde;
    return gnm_edge_term ? Ablation::kGnm : Ablation::kVanilla;
  }

  std::size_t head_dim() const { return std::max<std::size_t>(1, hidden_dim / heads); }
  std::size_t edge_channels(std::size_t layer) const { return layer + 1 == layers ? edge_final : edge_hidden; }

  void validate() const {
    if (layers < 1 || flows < 1 || heads < 1) throw InputError("ScoreNetConfig: layers, flows and heads must be >= 1");
    if (hidden_dim < 1 || edge_hidden < 1 || edge_final < 1) throw InputError("ScoreNetConfig: widths must be >= 1");
    if (node_in < 1 || edge_in < 1) throw InputError("ScoreNetConfig: node_in and edge_in must be >= 1");
    if (!(mask_eps > 0.0)) throw InputError("ScoreNetConfig: mask_eps must be positive");
  }
};

// ---------------------------------------------------------------------------
// Tape-level building blocks.

/// Weights of one graph neural module; `w_e` is absent in vanilla mode.
struct GnmVars {
  ad::Var w_x;
  std::optional<ad::Var> w_e;
};

/// Two-layer MLP: w2 * elu(w1 * h + b1) + b2.
struct MlpVars {
  ad::Var w1, b1, w2, b2;
};

/// Abar X W_X [+ tanh(B[rep(Abar) .* E] W_E)].
inline ad::Var gnm(ad::Var x, ad::Var e, ad::Var abar, const GnmVars& w) {
  ad::Var node_term = ad::matmul(ad::matmul(abar, x), w.w_x);
  if (!w.w_e) return node_term;
  ad::Var incoming = ad::gated_incoming_sum(abar, e);
  return ad::add(node_term, ad::tanh(ad::matmul(incoming, *w.w_e)));
}

/// Attention with `channels` output channels of `heads` heads each; q and k
/// weights produce channels * heads * head_dim columns. Returns (n*n) x channels.
inline ad::Var attn(ad::Var x, ad::Var e, ad::Var abar, const GnmVars& q, const GnmVars& k, std::size_t channels,
                    std::size_t heads) {
  ad::Var qv = gnm(x, e, abar, q);
  ad::Var kv = gnm(x, e, abar, k);
  const auto width = static_cast<std::size_t>(x.tape->value(qv).cols());
  if (channels == 0 || width % (channels * heads) != 0) throw InputError("attn: weight width not divisible by heads");
  const double head_dim = static_cast<double>(width / (channels * heads));
  return ad::grouped_outer(qv, kv, channels, 1.0 / (static_cast<double>(heads) * std::sqrt(head_dim)));
}

inline ad::Var mlp(ad::Var h, const MlpVars& m) {
  ad::Var hidden = ad::elu(ad::add_row(ad::matmul(h, m.w1), m.b1));
  return ad::add_row(ad::matmul(hidden, m.w2), m.b2);
}

/// Channel-axis concatenation followed by the MLP.
inline ad::Var concat_mlp(const std::vector<ad::Var>& parts, const MlpVars& m) {
  return mlp(parts.size() == 1 ? parts.front() : ad::concat_cols(parts), m);
}

// ---------------------------------------------------------------------------
// Value-level wrappers over the same code path.

inline Matrix gnm(const Matrix& x, const Matrix& e, const Matrix& abar, const Matrix& w_x, const Matrix* w_e) {
  ad::Tape tape(false);
  GnmVars w{tape.borrow(w_x), std::nullopt};
  if (w_e) w.w_e = tape.borrow(*w_e);
  return tape.value(gnm(tape.borrow(x), tape.borrow(e), tape.borrow(abar), w));
}

/// Recovers Abar from e with the masking threshold, then applies the module.
inline Matrix gnm(const Matrix& x, const Matrix& e, double mask_eps, const Matrix& w_x, const Matrix* w_e) {
  const auto n = static_cast<std::size_t>(x.rows());
  return gnm(x, e, degree_normalize(adjacency_mask(e, n, mask_eps)), w_x, w_e);
}

struct GnmWeights {
  Matrix w_x;
  std::optional<Matrix> w_e;
};

inline Matrix attn(const Matrix& x, const Matrix& e, const Matrix& abar, const GnmWeights& q, const GnmWeights& k,
                   std::size_t channels, std::size_t heads) {
  ad::Tape tape(false);
  auto bind = [&](const GnmWeights& w) {
    GnmVars v{tape.borrow(w.w_x), std::nullopt};
    if (w.w_e) v.w_e = tape.borrow(*w.w_e);
    return v;
  };
  return tape.value(attn(tape.borrow(x), tape.borrow(e), tape.borrow(abar), bind(q), bind(k), channels, heads));
}

struct MlpWeights {
  Matrix w1, b1, w2, b2;
};

inline Matrix concat_mlp(std::span<const Matrix> parts, const MlpWeights& m) {
  if (parts.empty()) throw InputError("concat_mlp: no inputs");
  ad::Tape tape(false);
  std::vector<ad::Var> vars;
  Eigen::Index width = 0;
  for (const Matrix& p : parts) {
    if (p.rows() != parts.front().rows()) throw InputError("concat_mlp: inputs differ in leading shape");
    vars.push_back(tape.borrow(p));
    width += p.cols();
  }
  if (width != m.w1.rows()) {
    throw InputError("concat_mlp: concatenated width " + std::to_string(width) + " does not match MLP input " +
                     std::to_string(m.w1.rows()));
  }
  return tape.value(concat_mlp(vars, {tape.borrow(m.w1), tape.borrow(m.b1), tape.borrow(m.w2), tape.borrow(m.b2)}));
}

// ---------------------------------------------------------------------------

class ScoreNet {
 public:
  ScoreNet(ScoreNetConfig cfg, VpSdeConfig sde) : cfg_(cfg), sde_(sde) {
    cfg_.validate();
    sde_.validate();
    build_layout();
  }

  const ScoreNetConfig& config() const { return cfg_; }
  const VpSdeConfig& sde() const { return sde_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  void set_params(ParamStore params) {
    if (!params.same_layout(params_)) throw InputError("ScoreNet: parameter layout does not match the configuration");
    params_ = std::move(params);
  }

  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
  void init(Rng& rng) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Matrix& m = params_.value(i);
      if (is_bias(params_.name(i))) {
        m.setZero();
        continue;
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, m.rows())));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = dist(rng);
    }
  }

  struct Output {
    ad::Var x;
    ad::Var e;
  };

  /// Records the forward pass on `tape` with parameters bound as leaves.
  Output forward(ad::Tape& tape, const Graph& g, double t) const {
    check_input(g, t);
    const double sigma = marginal_params(sde_, t).std;
    Binder bind{tape, params_, std::vector<std::optional<ad::Var>>(params_.size())};

    // Copied: callers such as dsm_loss pass temporaries that die before backward.
    ad::Var x0 = tape.constant(g.x());
    ad::Var e0 = tape.constant(g.e());
    ad::Var abar = tape.constant(degree_normalize(adjacency_mask(g.e(), g.n(), cfg_.mask_eps)));
    ad::Var tau_nodes = tape.constant(Matrix::Constant(g.n(), 1, sigma));
    ad::Var tau_edges = tape.constant(Matrix::Constant(g.n() * g.n(), 1, sigma));

    std::optional<ad::Var> sx;
    std::optional<ad::Var> se;
    for (const Tower& tower : towers_) {
      std::vector<ad::Var> xs{x0};
      std::vector<ad::Var> es{e0};
      for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const LayerSlots& ls = tower.layers[l];
        ad::Var x_prev = xs.back();
        ad::Var e_prev = es.back();
        if (ls.gcn) xs.push_back(concat_mlp({gnm(x_prev, e_prev, abar, bind.gnm(ls.gcn->node))}, bind.mlp(ls.gcn->mlp)));
        if (ls.gmh) {
          ad::Var a = attn(x_prev, e_prev, abar, bind.gnm(ls.gmh->q), bind.gnm(ls.gmh->k),
                           cfg_.flows * cfg_.edge_channels(l), cfg_.heads);
          es.push_back(concat_mlp({a}, bind.mlp(ls.gmh->mlp)));
        }
      }
      if (tower.head_x) {
        xs.push_back(tau_nodes);
        sx = ad::scale(concat_mlp(xs, bind.mlp(*tower.head_x)), 1.0 / sigma);
      }
      if (tower.head_e) {
        es.push_back(tau_edges);
        se = ad::scale(concat_mlp(es, bind.mlp(*tower.head_e)), 1.0 / sigma);
      }
    }
    return {*sx, *se};
  }

  /// (s_x, s_e) packed as a graph-shaped score.
  Graph score(const Graph& g, double t) const {
    ad::Tape tape(false);
    const Output out = forward(tape, g, t);
    if (!tape.value(out.x).allFinite() || !tape.value(out.e).allFinite()) {
      throw NumericalError("score network produced a non-finite output");
    }
    return Graph(tape.value(out.x), tape.value(out.e));
  }

  /// Total DSM loss of one graph recorded on `tape` (lambda(t) = std^2),
  /// returned together with its node and edge parts.
  struct LossVars {
    ad::Var total;
    double loss_x;
    double loss_e;
  };

  LossVars dsm_loss(ad::Tape& tape, const Graph& g0, const Perturbation& p) const {
    const MarginalParams m = marginal_params(sde_, p.t);
    const Graph gt = perturb(g0, p.t, p.noise, sde_);
    const Output out = forward(tape, gt, p.t);
    const double inv = 1.0 / m.std;
    ad::Var lx = ad::weighted_sq_error(out.x, -p.noise.x() * inv, m.std * m.std);
    ad::Var le = ad::weighted_sq_error(out.e, -p.noise.e() * inv, m.std * m.std);
    const double vx = tape.value(lx)(0, 0);
    const double ve = tape.value(le)(0, 0);
    return {ad::add(lx, le), vx, ve};
  }

 private:
  struct GnmSlots {
    std::size_t w_x;
    std::optional<std::size_t> w_e;
  };
  struct MlpSlots {
    std::size_t w1, b1, w2, b2;
  };
  struct GcnSlots {
    GnmSlots node;
    MlpSlots mlp;
  };
  struct GmhSlots {
    GnmSlots q, k;
    MlpSlots mlp;
  };
  struct LayerSlots {
    std::optional<GcnSlots> gcn;
    std::optional<GmhSlots> gmh;
  };
  struct Tower {
    std::vector<LayerSlots> layers;
    std::optional<MlpSlots> head_x;
    std::optional<MlpSlots> head_e;
  };

  struct Binder {
    ad::Tape& tape;
    const ParamStore& store;
    std::vector<std::optional<ad::Var>> cache;

    ad::Var operator()(std::size_t slot) {
      if (!cache[slot]) cache[slot] = tape.parameter(store.value(slot), slot);
      return *cache[slot];
    }
    GnmVars gnm(const GnmSlots& s) {
      GnmVars v{(*this)(s.w_x), std::nullopt};
      if (s.w_e) v.w_e = (*this)(*s.w_e);
      return v;
    }
    MlpVars mlp(const MlpSlots& s) { return {(*this)(s.w1), (*this)(s.b1), (*this)(s.w2), (*this)(s.b2)}; }
  };

  static bool is_bias(const std::string& name) {
    return name.size() >= 3 && name[name.size() - 2] == 'b' && name[name.size() - 3] == '.';
  }

  GnmSlots add_gnm(const std::string& prefix, std::size_t in_nodes, std::size_t in_edges, std::size_t out) {
    GnmSlots s{params_.add(prefix + ".wx", in_nodes, out), std::nullopt};
    if (cfg_.gnm_edge_term) s.w_e = params_.add(prefix + ".we", in_edges, out);
    return s;
  }

  MlpSlots add_mlp(const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out) {
    MlpSlots s{};
    s.w1 = params_.add(prefix + ".w1", in, hidden);
    s.b1 = params_.add(prefix + ".b1", 1, hidden);
    s.w2 = params_.add(prefix + ".w2", hidden, out);
    s.b2 = params_.add(prefix + ".b2", 1, out);
    return s;
  }

  void build_layout() {
    struct Role {
      std::string prefix;
      bool emit_x;
      bool emit_e;
    };
    std::vector<Role> roles;
    if (cfg_.joint_network) {
      roles.push_back({"net", true, true});
    } else {
      roles.push_back({"xnet", true, false});
      roles.push_back({"enet", false, true});
    }
    const std::size_t d = cfg_.hidden_dim;
    const std::size_t j = cfg_.flows;
    const std::size_t att_width = cfg_.heads * cfg_.head_dim();
    for (const Role& role : roles) {
      Tower tower;
      std::size_t cx = cfg_.node_in;
      std::size_t ce = cfg_.edge_in;
      std::size_t node_concat = cfg_.node_in;
      std::size_t edge_concat = cfg_.edge_in;
      for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const std::string p = role.prefix + ".l" + std::to_string(l);
        const bool last = l + 1 == cfg_.layers;
        const std::size_t k = cfg_.edge_channels(l);
        LayerSlots ls;
        // The last layer only feeds the heads; skip the state no head reads.
        if (!last || role.emit_x) {
          ls.gcn = GcnSlots{add_gnm(p + ".gcn", cx, ce, j * d), add_mlp(p + ".gcn", j * d, d, d)};
        }
        if (!last || role.emit_e) {
          ls.gmh = GmhSlots{add_gnm(p + ".att.q", cx, ce, j * k * att_width), add_gnm(p + ".att.k", cx, ce, j * k * att_width),
                            add_mlp(p + ".gmh", j * k, d, k)};
        }
        tower.layers.push_back(ls);
        cx = d;
        ce = k;
        node_concat += d;
        edge_concat += k;
      }
      if (role.emit_x) tower.head_x = add_mlp(role.prefix + ".head_x", node_concat + 1, d, cfg_.node_in);
      if (role.emit_e) tower.head_e = add_mlp(role.prefix + ".head_e", edge_concat + 1, d, cfg_.edge_in);
      towers_.push_back(std::move(tower));
    }
  }

  void check_input(const Graph& g, double t) const {
    if (g.u() != cfg_.node_in || g.v() != cfg_.edge_in) {
      throw InputError("ScoreNet: graph has (u, v) = (" + std::to_string(g.u()) + ", " + std::to_string(g.v()) +
                       "), network expects (" + std::to_string(cfg_.node_in) + ", " + std::to_string(cfg_.edge_in) + ")");
    }
    if (g.n() == 0) throw InputError("ScoreNet: empty graph");
    if (t < sde_.t_eps || t > sde_.t_end) throw InputError("ScoreNet: t outside [t_eps, T]");
  }

  ScoreNetConfig cfg_;
  VpSdeConfig sde_;
  ParamStore params_;
  std::vector<Tower> towers_;
};

}  // namespace edgediff

#endif  // EDGEDIFF_SCORE_NET_HPP_
