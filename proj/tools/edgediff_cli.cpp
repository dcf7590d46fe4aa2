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

// edgediff command-line front end.
//
// Exit codes: 0 success, 1 usage, 2 IO, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "edgediff.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace edgediff;
  CLI::App app{"edgediff: score-based generation of graphs with node and edge attributes"};
  app.require_subcommand(1);

  // gen-data
  GenDataOptions gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a dataset directory (train/test JSONL + meta.json)");
  gen_cmd->add_option("--dataset", gen.dataset, "clusters | mdp-det | mdp-nondet | sbm | grid2d")->required();
  gen_cmd->add_option("--count", gen.count, "number of graphs")->required();
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output directory")->required();
  gen_cmd->add_option("--train-frac", gen.train_frac, "fraction of graphs in the train split");

  // train
  TrainOptions tr;
  std::string tr_config, tr_data, tr_out, tr_resume, tr_ablation, tr_dataset;
  int tr_epochs = -1;
  long long tr_seed = -1;
  bool print_config = false;
  auto* train_cmd = app.add_subcommand("train", "train a score network");
  train_cmd->add_option("--config", tr_config, "run config JSON");
  train_cmd->add_option("--data", tr_data, "dataset directory");
  train_cmd->add_option("--out", tr_out, "run directory");
  train_cmd->add_option("--resume", tr_resume, "checkpoint manifest to continue from");
  train_cmd->add_option("--epochs", tr_epochs, "override the configured epoch count");
  train_cmd->add_option("--ablation", tr_ablation, "full | joint-sde | gnm | vanilla");
  train_cmd->add_option("--seed", tr_seed, "override the configured seed");
  train_cmd->add_option("--dataset", tr_dataset, "dataset defaults to use with --print-config and no --config");
  train_cmd->add_flag("--print-config", print_config, "print the resolved config and exit");
  train_cmd->add_flag("--quiet", tr.quiet, "no per-epoch output");

  // sample
  SampleOptions sm;
  std::string sm_ckpt, sm_out;
  auto* sample_cmd = app.add_subcommand("sample", "draw graphs from a trained checkpoint");
  sample_cmd->add_option("--ckpt", sm_ckpt, "checkpoint manifest")->required();
  sample_cmd->add_option("--num", sm.num, "number of graphs")->required();
  sample_cmd->add_option("--steps", sm.sampler.steps, "reverse-time steps");
  sample_cmd->add_option("--snr", sm.sampler.snr, "corrector signal-to-noise ratio");
  sample_cmd->add_option("--scale-eps", sm.sampler.scale_eps, "corrector step scale");
  sample_cmd->add_option("--corrector-steps", sm.sampler.corrector_steps, "corrector steps per predictor step");
  sample_cmd->add_option("--seed", sm.seed, "sampling seed");
  sample_cmd->add_option("--out", sm_out, "output JSONL")->required();
  sample_cmd->add_flag("--raw", sm.use_raw, "use raw instead of EMA parameters");

  // eval
  EvalOptions ev;
  std::string ev_ref, ev_gen, ev_suite = "general", ev_out, ev_mode;
  auto* eval_cmd = app.add_subcommand("eval", "score generated graphs against a dataset directory");
  eval_cmd->add_option("--ref", ev_ref, "reference dataset directory");
  eval_cmd->add_option("--gen", ev_gen, "generated graphs JSONL");
  eval_cmd->add_option("--suite", ev_suite, "general | mdp | clusters");
  eval_cmd->add_option("--out", ev_out, "report JSON");
  eval_cmd->add_option("--ref-split", ev.ref_split, "split used for deg/cl statistics (train | test)");
  eval_cmd->add_option("--mv-eps", ev.mv_eps, "tolerance of the non-deterministic MV check");
  eval_cmd->add_option("--mdp-mode", ev_mode, "det | nondet (defaults from the reference meta)");

  // render-maze
  RenderOptions rm;
  std::string rm_in, rm_out;
  auto* render_cmd = app.add_subcommand("render-maze", "render a maze graph as text or SVG");
  render_cmd->add_option("--in", rm_in, "graphs JSONL")->required();
  render_cmd->add_option("--index", rm.index, "graph index");
  render_cmd->add_option("--format", rm.format, "text | svg");
  render_cmd->add_option("--out", rm_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) {
      gen.out = gen_out;
      const DatasetDir d = cmd_gen_data(gen);
      std::cout << "wrote " << d.train.size() << " train / " << d.test.size() << " test graphs to " << gen_out << "\n";
    } else if (*train_cmd) {
      if (!tr_config.empty()) tr.config = tr_config;
      if (!tr_resume.empty()) tr.resume = tr_resume;
      if (!tr_ablation.empty()) tr.ablation = tr_ablation;
      if (tr_epochs >= 0) tr.epochs = tr_epochs;
      if (tr_seed >= 0) tr.seed = static_cast<std::uint64_t>(tr_seed);
      if (print_config) {
        RunConfig cfg = tr.config ? load_config_file(*tr.config) : default_config(tr_dataset.empty() ? "clusters" : tr_dataset);
        if (tr.ablation) cfg.net.set_ablation(parse_ablation(*tr.ablation));
        if (tr.epochs) cfg.train.epochs = *tr.epochs;
        if (tr.seed) cfg.seed = cfg.train.seed = *tr.seed;
        if (!tr_out.empty()) cfg.out = tr_out;
        cfg.validate();
        std::cout << cfg.to_json().dump(2) << "\n";
        return kExitOk;
      }
      if (tr_data.empty()) throw InputError("train: --data is required");
      if (tr_out.empty()) throw InputError("train: --out is required");
      tr.data = tr_data;
      tr.out = tr_out;
      const TrainState s = cmd_train(tr);
      std::cout << "trained to epoch " << s.epoch << "; checkpoints in " << tr_out << "\n";
    } else if (*sample_cmd) {
      sm.ckpt = sm_ckpt;
      sm.out = sm_out;
      const Dataset g = cmd_sample(sm);
      std::cout << "wrote " << g.size() << " graphs to " << sm_out << "\n";
    } else if (*eval_cmd) {
      if (ev_ref.empty()) throw InputError("eval: --ref is required");
      if (ev_gen.empty()) throw InputError("eval: --gen is required");
      ev.ref = ev_ref;
      ev.gen = ev_gen;
      ev.out = ev_out;
      ev.suite = parse_suite(ev_suite);
      if (ev_mode == "det") ev.deterministic = true;
      else if (ev_mode == "nondet") ev.deterministic = false;
      else if (!ev_mode.empty()) throw InputError("eval: --mdp-mode must be det or nondet");
      cmd_eval(ev);
    } else if (*render_cmd) {
      rm.in = rm_in;
      const std::string text = cmd_render_maze(rm);
      if (rm_out.empty()) {
        std::cout << text;
      } else {
        write_text_file(rm_out, text);
      }
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
