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

// Run configuration: one strict JSON document.
//
//   {"dataset": "mdp-det", "seed": 0, "out": "", "ablation": "full",
//    "sde": {...}, "net": {...}, "train": {...}, "sampler": {...}}
//
// Missing keys take the per-dataset defaults; unknown keys are errors.

#ifndef EDGEDIFF_CONFIG_HPP_
#define EDGEDIFF_CONFIG_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "edgediff/score_net.hpp"
#include "edgediff/sde.hpp"
#include "edgediff/training.hpp"
#include "json.hpp"

namespace edgediff {

inline const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names{"clusters", "mdp-det", "mdp-nondet", "sbm", "grid2d"};
  return names;
}

inline void check_dataset_name(const std::string& name) {
  const auto& names = dataset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw InputError("unknown dataset '" + name + "' (expected one of: " + list + ")");
  }
}

struct RunConfig {
  std::string dataset = "clusters";
  std::uint64_t seed = 0;
  std::string out;
  VpSdeConfig sde;
  ScoreNetConfig net;  // node_in / edge_in are taken from the data
  TrainConfig train;
  int checkpoint_every = 50;
  SamplerConfig sampler;

  void validate() const {
    check_dataset_name(dataset);
    sde.validate();
    train.validate();
    sampler.validate();
    if (checkpoint_every < 1) throw InputError("RunConfig: checkpoint_every must be >= 1");
    ScoreNetConfig probe = net;
    probe.node_in = std::max<std::size_t>(1, probe.node_in);
    probe.edge_in = std::max<std::size_t>(1, probe.edge_in);
    probe.validate();
  }

  bool operator==(const RunConfig& o) const { return to_json() == o.to_json(); }

  nlohmann::json to_json() const {
    return {{"dataset", dataset},
            {"seed", seed},
            {"out", out},
            {"ablation", to_string(net.ablation())},
            {"sde", {{"beta_min", sde.beta_min}, {"beta_max", sde.beta_max}, {"t_end", sde.t_end}, {"t_eps", sde.t_eps}}},
            {"net",
             {{"layers", net.layers},
              {"flows", net.flows},
              {"heads", net.heads},
              {"hidden_dim", net.hidden_dim},
              {"edge_hidden", net.edge_hidden},
              {"edge_final", net.edge_final},
              {"mask_eps", net.mask_eps}}},
            {"train",
             {{"learning_rate", train.learning_rate},
              {"weight_decay", train.weight_decay},
              {"ema_decay", train.ema_decay},
              {"batch_size", train.batch_size},
              {"epochs", train.epochs},
              {"beta1", train.beta1},
              {"beta2", train.beta2},
              {"adam_eps", train.adam_eps},
              {"grad_clip", train.grad_clip},
              {"checkpoint_every", checkpoint_every}}},
            {"sampler",
             {{"steps", sampler.steps},
              {"snr", sampler.snr},
              {"scale_eps", sampler.scale_eps},
              {"corrector_steps", sampler.corrector_steps}}}};
  }
};

/// Defaults by dataset name. Sampler and optimizer settings are shared.
inline RunConfig default_config(const std::string& dataset) {
  check_dataset_name(dataset);
  RunConfig c;
  c.dataset = dataset;
  c.net.heads = 4;
  c.net.edge_hidden = 8;
  c.net.edge_final = 4;
  if (dataset == "clusters") {
    c.net.layers = 3;
    c.net.hidden_dim = 16;
    c.train.batch_size = 64;
    c.train.epochs = 1000;
    c.sde.beta_max = 3.0;
  } else if (dataset == "mdp-det" || dataset == "mdp-nondet") {
    c.net.layers = 5;
    c.net.hidden_dim = 32;
    c.train.batch_size = 256;
    c.train.epochs = 5000;
    c.sde.beta_max = 3.0;
  } else if (dataset == "sbm") {
    c.net.layers = 4;
    c.net.hidden_dim = 32;
    c.train.batch_size = 26;
    c.train.epochs = 5000;
    c.sde.beta_max = 1.0;
  } else {  // grid2d
    c.net.layers = 4;
    c.net.hidden_dim = 32;
    c.train.batch_size = 7;
    c.train.epochs = 5000;
    c.sde.beta_max = 1.0;
  }
  return c;
}

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& where, const std::vector<std::string>& accepted) {
  if (!obj.is_object()) throw InputError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(accepted.begin(), accepted.end(), key) == accepted.end()) {
      std::string list;
      for (const auto& a : accepted) list += (list.empty() ? "" : ", ") + a;
      throw InputError("config: unknown key '" + key + "' in " + where + " (accepted: " + list + ")");
    }
  }
}

template <class T>
void read_key(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("config: key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

}  // namespace detail

/// Parses a config document on top of the defaults of its "dataset".
inline RunConfig parse_config(const nlohmann::json& j) {
  detail::reject_unknown(j, "top level", {"dataset", "seed", "out", "ablation", "sde", "net", "train", "sampler"});
  std::string dataset = "clusters";
  detail::read_key(j, "dataset", dataset, "top level");
  RunConfig c = default_config(dataset);
  detail::read_key(j, "seed", c.seed, "top level");
  detail::read_key(j, "out", c.out, "top level");
  if (j.contains("ablation")) {
    std::string name;
    detail::read_key(j, "ablation", name, "top level");
    c.net.set_ablation(parse_ablation(name));
  }
  if (j.contains("sde")) {
    const auto& s = j["sde"];
    detail::reject_unknown(s, "sde", {"beta_min", "beta_max", "t_end", "t_eps"});
    detail::read_key(s, "beta_min", c.sde.beta_min, "sde");
    detail::read_key(s, "beta_max", c.sde.beta_max, "sde");
    detail::read_key(s, "t_end", c.sde.t_end, "sde");
    detail::read_key(s, "t_eps", c.sde.t_eps, "sde");
  }
  if (j.contains("net")) {
    const auto& s = j["net"];
    detail::reject_unknown(s, "net", {"layers", "flows", "heads", "hidden_dim", "edge_hidden", "edge_final", "mask_eps"});
    detail::read_key(s, "layers", c.net.layers, "net");
    detail::read_key(s, "flows", c.net.flows, "net");
    detail::read_key(s, "heads", c.net.heads, "net");
    detail::read_key(s, "hidden_dim", c.net.hidden_dim, "net");
    detail::read_key(s, "edge_hidden", c.net.edge_hidden, "net");
    detail::read_key(s, "edge_final", c.net.edge_final, "net");
    detail::read_key(s, "mask_eps", c.net.mask_eps, "net");
  }
  if (j.contains("train")) {
    const auto& s = j["train"];
    detail::reject_unknown(s, "train", {"learning_rate", "weight_decay", "ema_decay", "batch_size", "epochs", "beta1",
                                        "beta2", "adam_eps", "grad_clip", "checkpoint_every"});
    detail::read_key(s, "learning_rate", c.train.learning_rate, "train");
    detail::read_key(s, "weight_decay", c.train.weight_decay, "train");
    detail::read_key(s, "ema_decay", c.train.ema_decay, "train");
    detail::read_key(s, "batch_size", c.train.batch_size, "train");
    detail::read_key(s, "epochs", c.train.epochs, "train");
    detail::read_key(s, "beta1", c.train.beta1, "train");
    detail::read_key(s, "beta2", c.train.beta2, "train");
    detail::read_key(s, "adam_eps", c.train.adam_eps, "train");
    detail::read_key(s, "grad_clip", c.train.grad_clip, "train");
    detail::read_key(s, "checkpoint_every", c.checkpoint_every, "train");
  }
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    detail::reject_unknown(s, "sampler", {"steps", "snr", "scale_eps", "corrector_steps"});
    detail::read_key(s, "steps", c.sampler.steps, "sampler");
    detail::read_key(s, "snr", c.sampler.snr, "sampler");
    detail::read_key(s, "scale_eps", c.sampler.scale_eps, "sampler");
    detail::read_key(s, "corrector_steps", c.sampler.corrector_steps, "sampler");
  }
  c.train.seed = c.seed;
  c.validate();
  return c;
}

inline RunConfig parse_config_text(const std::string& text, const std::string& source = "config") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw InputError(source + ": malformed JSON: " + err.what());
  }
  return parse_config(j);
}

}  // namespace edgediff

#endif  // EDGEDIFF_CONFIG_HPP_
