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

// Command implementations behind the edgediff CLI. Each command validates
// its own options and reports failures through the exception hierarchy in
// core.hpp; the front end maps those to exit codes.

#ifndef EDGEDIFF_COMMANDS_HPP_
#define EDGEDIFF_COMMANDS_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "edgediff/checkpoint.hpp"
#include "edgediff/config.hpp"
#include "edgediff/datasets.hpp"
#include "edgediff/graph_io.hpp"
#include "edgediff/metrics.hpp"
#include "edgediff/score_net.hpp"
#include "edgediff/sde.hpp"
#include "edgediff/training.hpp"

namespace edgediff {

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
  std::string dataset;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  double train_frac = 0.8;
};

inline std::vector<std::size_t> sbm_sizes(Rng& rng) {
  std::uniform_int_distribution<std::size_t> communities(2, 5), size(20, 40);
  std::vector<std::size_t> sizes(communities(rng));
  for (auto& s : sizes) s = size(rng);
  return sizes;
}

inline Dataset generate_dataset(const std::string& dataset, std::size_t count, std::uint64_t seed,
                                nlohmann::json* spec_out = nullptr) {
  check_dataset_name(dataset);
  if (count == 0) throw InputError("gen-data: --count must be positive");
  Rng rng(seed);
  nlohmann::json spec;
  Dataset data;
  if (dataset == "clusters") {
    ClusterSpec s;
    s.n_graphs = count;
    data = gen_clusters(s, rng);
    spec = {{"n_graphs", s.n_graphs}, {"n_nodes", s.n_nodes}, {"centers", s.centers}, {"std", s.std}};
  } else if (dataset == "mdp-det" || dataset == "mdp-nondet") {
    MazeSpec s;
    s.deterministic = dataset == "mdp-det";
    data = gen_mazes(s, count, rng);
    spec = {{"side", s.side}, {"n_blocks", s.n_blocks}, {"n_start", s.n_start}, {"n_finish", s.n_finish},
            {"deterministic", s.deterministic}, {"max_attempts", s.max_attempts}};
  } else if (dataset == "sbm") {
    const double p_within = 0.3, p_between = 0.05;
    for (std::size_t i = 0; i < count; ++i) {
      const auto sizes = sbm_sizes(rng);
      data.push_back(augment_path_counts(gen_sbm(sizes, p_within, p_between, rng), 2));
    }
    spec = {{"communities", {2, 5}}, {"community_size", {20, 40}}, {"p_within", p_within},
            {"p_between", p_between}, {"path_power", 2}};
  } else {
    std::uniform_int_distribution<std::size_t> side(10, 20);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t rows = side(rng);
      const std::size_t cols = side(rng);
      data.push_back(augment_path_counts(gen_grid2d(rows, cols), 2));
    }
    spec = {{"rows", {10, 20}}, {"cols", {10, 20}}, {"path_power", 2}};
  }
  if (spec_out) *spec_out = spec;
  return data;
}

inline DatasetDir cmd_gen_data(const GenDataOptions& opt) {
  if (opt.out.empty()) throw InputError("gen-data: --out is required");
  nlohmann::json spec;
  Dataset data = generate_dataset(opt.dataset, opt.count, opt.seed, &spec);
  Split parts = split(data, opt.train_frac, opt.seed);
  DatasetDir dir;
  dir.train = std::move(parts.train);
  dir.test = std::move(parts.test);
  dir.meta = {{"dataset", opt.dataset},
              {"count", opt.count},
              {"seed", opt.seed},
              {"train_frac", opt.train_frac},
              {"n_train", dir.train.size()},
              {"n_test", dir.test.size()},
              {"generator_version", kGeneratorVersion},
              {"spec", spec}};
  write_dataset_dir(opt.out, dir);
  return dir;
}

// ---------------------------------------------------------------------------
// Checkpoints of training runs

inline Checkpoint make_checkpoint(const RunConfig& cfg, const TrainState& state, std::span<const std::size_t> node_counts,
                                  const ScoreNetConfig& net_cfg) {
  Checkpoint ck;
  ck.groups.emplace_back("raw", state.raw);
  ck.groups.emplace_back("ema", state.ema);
  if (!state.adam.m.empty()) {
    ParamStore m, v;
    for (std::size_t i = 0; i < state.raw.size(); ++i) {
      m.add(state.raw.name(i), state.adam.m[i]);
      v.add(state.raw.name(i), state.adam.v[i]);
    }
    ck.groups.emplace_back("adam_m", std::move(m));
    ck.groups.emplace_back("adam_v", std::move(v));
  }
  nlohmann::json log = nlohmann::json::array();
  for (const EpochRecord& r : state.log.epochs) {
    log.push_back({r.epoch, r.loss_x_train, r.loss_e_train, r.loss_x_test, r.loss_e_test, r.seconds});
  }
  ck.meta = {{"config", cfg.to_json()},
             {"node_in", net_cfg.node_in},
             {"edge_in", net_cfg.edge_in},
             {"node_counts", std::vector<std::size_t>(node_counts.begin(), node_counts.end())},
             {"epoch", state.epoch},
             {"adam_step", state.adam.step},
             {"log", log}};
  return ck;
}

struct LoadedRun {
  RunConfig cfg;
  ScoreNetConfig net_cfg;
  std::vector<std::size_t> node_counts;
  TrainState state;
  bool has_ema = false;
};

inline LoadedRun load_run(const std::filesystem::path& path, std::ostream* warnings = &std::cerr) {
  Checkpoint ck = load_checkpoint(path, warnings);
  LoadedRun run;
  try {
    run.cfg = parse_config(ck.meta.at("config"));
    run.net_cfg = run.cfg.net;
    run.net_cfg.node_in = ck.meta.at("node_in").get<std::size_t>();
    run.net_cfg.edge_in = ck.meta.at("edge_in").get<std::size_t>();
    run.node_counts = ck.meta.at("node_counts").get<std::vector<std::size_t>>();
    run.state.epoch = ck.meta.value("epoch", 0);
    run.state.adam.step = ck.meta.value("adam_step", 0L);
    for (const auto& r : ck.meta.value("log", nlohmann::json::array())) {
      run.state.log.epochs.push_back({r.at(0).get<int>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                      r.at(3).get<double>(), r.at(4).get<double>(), r.at(5).get<double>()});
    }
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(path.string() + ": checkpoint meta is incomplete: " + err.what());
  }
  if (run.node_counts.empty()) throw ParseError(path.string() + ": checkpoint records no node counts");
  run.state.raw = *ck.group("raw");
  run.has_ema = ck.group("ema") != nullptr;
  run.state.ema = run.has_ema ? *ck.group("ema") : run.state.raw;
  const ParamStore* m = ck.group("adam_m");
  const ParamStore* v = ck.group("adam_v");
  if (m && v) {
    for (std::size_t i = 0; i < m->size(); ++i) {
      run.state.adam.m.push_back(m->value(i));
      run.state.adam.v.push_back(v->value(i));
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::filesystem::path> resume;
  std::optional<int> epochs;  // overrides the config
  std::optional<std::string> ablation;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

inline RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline ScoreNetConfig net_config_for(const RunConfig& cfg, const Dataset& train) {
  ScoreNetConfig net = cfg.net;
  net.node_in = train.front().u();
  net.edge_in = train.front().v();
  for (const Graph& g : train) {
    if (g.u() != net.node_in || g.v() != net.edge_in) {
      throw InputError("train: graphs disagree on feature dimensions (u, v)");
    }
  }
  return net;
}

inline TrainState cmd_train(const TrainOptions& opt, std::ostream& log = std::cout) {
  if (opt.out.empty()) throw InputError("train: --out is required");
  if (opt.data.empty()) throw InputError("train: --data is required");
  DatasetDir data = read_dataset_dir(opt.data);
  if (data.train.empty()) throw InputError("train: training split is empty");

  std::optional<LoadedRun> resumed;
  RunConfig cfg;
  if (opt.resume) {
    resumed = load_run(*opt.resume);
    cfg = resumed->cfg;
  } else if (opt.config) {
    cfg = load_config_file(*opt.config);
  } else {
    cfg = default_config(data.meta.value("dataset", std::string("clusters")));
  }
  if (opt.ablation) cfg.net.set_ablation(parse_ablation(*opt.ablation));
  if (opt.epochs) cfg.train.epochs = *opt.epochs;
  if (opt.seed) cfg.seed = cfg.train.seed = *opt.seed;
  cfg.out = opt.out.string();
  cfg.validate();

  const ScoreNetConfig net_cfg = net_config_for(cfg, data.train);
  ScoreNet net(net_cfg, cfg.sde);
  TrainState state;
  if (resumed) {
    net.set_params(resumed->state.raw);
    state = std::move(resumed->state);
    if (!state.ema.same_layout(net.params())) throw InputError("train: checkpoint does not match the network layout");
  } else {
    Rng init_rng = derived_rng(cfg.seed, 0x696e6974ULL);
    net.init(init_rng);
    state = initial_state(net);
  }
  std::vector<std::size_t> node_counts;
  for (const Graph& g : data.train) node_counts.push_back(g.n());

  std::error_code ec;
  std::filesystem::create_directories(opt.out, ec);
  if (ec) throw IoError("cannot create " + opt.out.string() + ": " + ec.message());
  write_text_file(opt.out / "config.json", cfg.to_json().dump(2) + "\n");

  const auto write_log = [&](const TrainState& s) {
    std::ostringstream csv;
    s.log.write_csv(csv);
    write_text_file(opt.out / "train_log.csv", csv.str());
  };
  train(net, data.train, data.test, cfg.train, state, [&](const TrainState& s, const EpochRecord& rec) {
    if (!opt.quiet) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %d  loss_x %.5f  loss_e %.5f  test_x %.5f  test_e %.5f  %.2fs\n", rec.epoch,
                    rec.loss_x_train, rec.loss_e_train, rec.loss_x_test, rec.loss_e_test, rec.seconds);
      log << buf << std::flush;
    }
    if (s.epoch % cfg.checkpoint_every == 0 || s.epoch == cfg.train.epochs) {
      const Checkpoint ck = make_checkpoint(cfg, s, node_counts, net_cfg);
      char name[64];
      std::snprintf(name, sizeof name, "ckpt_epoch_%06d.json", s.epoch);
      save_checkpoint(ck, opt.out / name);
      save_checkpoint(ck, opt.out / "ckpt_latest.json");
      write_log(s);
    }
  });
  save_checkpoint(make_checkpoint(cfg, state, node_counts, net_cfg), opt.out / "ckpt_final.json");
  write_log(state);
  return state;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOptions {
  std::filesystem::path ckpt;
  std::size_t num = 0;
  SamplerConfig sampler;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  bool use_raw = false;
};

/// Node count of each sample is drawn from the training node counts.
inline Dataset sample_graphs(const ScoreNet& net, std::span<const std::size_t> node_counts, std::size_t num,
                             const SamplerConfig& scfg, std::uint64_t seed) {
  if (num == 0) throw InputError("sample: --num must be positive");
  if (node_counts.empty()) throw InputError("sample: no node counts to draw from");
  Dataset out(num);
  const GraphShape base{0, net.config().node_in, net.config().edge_in};
  parallel_for(num, [&](std::size_t i) {
    Rng rng = derived_rng(seed, i);
    std::uniform_int_distribution<std::size_t> pick(0, node_counts.size() - 1);
    GraphShape shape = base;
    shape.n = node_counts[pick(rng)];
    out[i] = pc_sample(net, shape, scfg, net.sde(), rng);
  });
  return out;
}

inline Dataset cmd_sample(const SampleOptions& opt) {
  if (opt.num == 0) throw InputError("sample: --num must be positive");
  opt.sampler.validate();
  const LoadedRun run = load_run(opt.ckpt);
  ScoreNet net(run.net_cfg, run.cfg.sde);
  net.set_params(opt.use_raw || !run.has_ema ? run.state.raw : run.state.ema);
  Dataset graphs = sample_graphs(net, run.node_counts, opt.num, opt.sampler, opt.seed);
  if (!opt.out.empty()) write_jsonl_file(opt.out, graphs);
  return graphs;
}

// ---------------------------------------------------------------------------
// eval

enum class Suite { kGeneral, kMdp, kClusters };

inline Suite parse_suite(const std::string& s) {
  if (s == "general") return Suite::kGeneral;
  if (s == "mdp") return Suite::kMdp;
  if (s == "clusters") return Suite::kClusters;
  throw InputError("unknown suite '" + s + "' (expected general, mdp or clusters)");
}

struct EvalOptions {
  std::filesystem::path ref;
  std::filesystem::path gen;
  Suite suite = Suite::kGeneral;
  std::filesystem::path out;
  std::string ref_split = "train";  // statistics reference; novelty always uses train
  double mv_eps = 0.01;
  std::optional<bool> deterministic;  // mdp suite; defaults from the ref meta
};

/// Scatter data of every off-diagonal edge 2-vector.
inline std::string edge_scatter_csv(std::span<const Graph> graphs) {
  std::string out = "graph,i,j,e0,e1\n";
  char buf[160];
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    for (std::size_t i = 0; i < g.n(); ++i)
      for (std::size_t j = 0; j < g.n(); ++j) {
        if (i == j) continue;
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.9g,%.9g\n", gi, i, j, g.edge(i, j, 0), g.edge(i, j, 1));
        out += buf;
      }
  }
  return out;
}

inline std::string edge_scatter_svg(std::span<const Graph> graphs, double extent = 1.5) {
  const double size = 400.0;
  const auto px = [&](double v) { return (v + extent) / (2.0 * extent) * size; };
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << ' ' << size << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"0\" y1=\"" << size / 2 << "\" x2=\"" << size << "\" y2=\"" << size / 2 << "\" stroke=\"#ccc\"/>\n"
      << "<line x1=\"" << size / 2 << "\" y1=\"0\" x2=\"" << size / 2 << "\" y2=\"" << size << "\" stroke=\"#ccc\"/>\n";
  for (const Graph& g : graphs)
    for (std::size_t i = 0; i < g.n(); ++i)
      for (std::size_t j = 0; j < g.n(); ++j) {
        if (i == j) continue;
        svg << "<circle cx=\"" << px(g.edge(i, j, 0)) << "\" cy=\"" << size - px(g.edge(i, j, 1))
            << "\" r=\"1.2\" fill=\"#1f77b4\" fill-opacity=\"0.4\"/>\n";
      }
  svg << "</svg>\n";
  return svg.str();
}

inline MetricReport evaluate(std::span<const Graph> gen, const DatasetDir& ref, const EvalOptions& opt) {
  if (gen.empty()) throw InputError("eval: generated set is empty");
  const Dataset& stats_ref = opt.ref_split == "test" ? ref.test : ref.train;
  if (opt.ref_split != "train" && opt.ref_split != "test") throw InputError("eval: --ref-split must be train or test");
  if (stats_ref.empty()) throw InputError("eval: reference split '" + opt.ref_split + "' is empty");
  if (opt.suite == Suite::kMdp) {
    for (const Graph& g : gen) check_maze_shape(g, 5);
  }
  if (opt.suite == Suite::kClusters) {
    for (const Graph& g : gen)
      if (g.v() != 2) throw InputError("eval: clusters suite expects 2 edge channels, got " + std::to_string(g.v()));
  }
  MetricReport r;
  r.deg = degree_mmd(gen, stats_ref);
  r.cl = cluster_mmd(gen, stats_ref);
  r.uniqueness = uniqueness(gen);
  r.novelty = novelty(gen, ref.train);
  if (opt.suite == Suite::kClusters) r.homogeneity = homogeneity(gen);
  if (opt.suite == Suite::kMdp) {
    MdpOptions mo;
    mo.mv_eps = opt.mv_eps;
    mo.deterministic = opt.deterministic.value_or(ref.meta.value("dataset", std::string("mdp-det")) != "mdp-nondet");
    r.mdp = mdp_metrics(gen, mo);
  }
  return r;
}

inline MetricReport cmd_eval(const EvalOptions& opt, std::ostream& table = std::cout) {
  if (opt.ref.empty()) throw InputError("eval: --ref is required");
  if (opt.gen.empty()) throw InputError("eval: --gen is required");
  const DatasetDir ref = read_dataset_dir(opt.ref);
  const Dataset gen = read_jsonl_file(opt.gen);
  const MetricReport r = evaluate(gen, ref, opt);
  if (!opt.out.empty()) {
    write_text_file(opt.out, r.to_json().dump(2) + "\n");
    if (opt.suite == Suite::kClusters) {
      std::filesystem::path csv = opt.out, svg = opt.out;
      csv.replace_extension(".scatter.csv");
      svg.replace_extension(".scatter.svg");
      write_text_file(csv, edge_scatter_csv(gen));
      write_text_file(svg, edge_scatter_svg(gen));
    }
  }
  table << r.to_table();
  return r;
}

// ---------------------------------------------------------------------------
// render-maze

inline char cell_glyph(Cell c) {
  switch (c) {
    case Cell::kBlock: return '#';
    case Cell::kStart: return 'S';
    case Cell::kFinish: return 'F';
    default: return '.';
  }
}

inline std::string render_maze_text(const Graph& g) {
  const DecodedMaze d = decode_maze(g);
  const std::vector<Cell> grid = d.grid();
  std::string out;
  for (std::size_t r = 0; r < d.side; ++r) {
    for (std::size_t c = 0; c < d.side; ++c) out += cell_glyph(grid[r * d.side + c]);
    out += '\n';
  }
  return out;
}

inline std::string render_maze_svg(const Graph& g, int cell = 40) {
  const DecodedMaze d = decode_maze(g);
  const std::vector<Cell> grid = d.grid();
  const int size = cell * static_cast<int>(d.side);
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  for (std::size_t r = 0; r < d.side; ++r)
    for (std::size_t c = 0; c < d.side; ++c) {
      const char* fill = "white";
      switch (grid[r * d.side + c]) {
        case Cell::kBlock: fill = "#1f4e9c"; break;
        case Cell::kStart: fill = "#f2c500"; break;
        case Cell::kFinish: fill = "#2ca02c"; break;
        default: break;
      }
      svg << "<rect x=\"" << c * cell << "\" y=\"" << r * cell << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << fill << "\" stroke=\"#333\"/>\n";
    }
  svg << "</svg>\n";
  return svg.str();
}

struct RenderOptions {
  std::filesystem::path in;
  std::size_t index = 0;
  std::string format = "text";
};

inline std::string cmd_render_maze(const RenderOptions& opt) {
  const Dataset graphs = read_jsonl_file(opt.in);
  if (opt.index >= graphs.size()) {
    throw InputError("render-maze: index " + std::to_string(opt.index) + " out of range (" +
                     std::to_string(graphs.size()) + " graphs)");
  }
  if (opt.format == "text") return render_maze_text(graphs[opt.index]);
  if (opt.format == "svg") return render_maze_svg(graphs[opt.index]);
  throw InputError("render-maze: --format must be text or svg");
}

}  // namespace edgediff

#endif  // EDGEDIFF_COMMANDS_HPP_
