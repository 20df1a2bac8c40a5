/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cagnet/cost.hpp"
#include "cagnet/dataset.hpp"
#include "cagnet/harness.hpp"

namespace {

using cagnet::ExperimentConfig;
using cagnet::Scheduler;
using cagnet::Strategy;
using cagnet::StrategyKind;

void emit(const nlohmann::json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file " + out_path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + out_path);
}

StrategyKind parse_kind(const std::string& s) {
  if (s == "1d") return StrategyKind::OneD;
  if (s == "1.5d") return StrategyKind::OneFiveD;
  if (s == "2d") return StrategyKind::TwoD;
  if (s == "3d") return StrategyKind::ThreeD;
  throw CLI::ValidationError("--strategy", "unknown strategy '" + s + "'");
}

Scheduler parse_scheduler(const std::string& s) {
  if (s == "concurrent") return Scheduler::Concurrent;
  if (s == "round_robin" || s == "roundrobin") return Scheduler::RoundRobin;
  throw CLI::ValidationError("--scheduler", "unknown scheduler '" + s + "'");
}

// Options shared by `train` and `verify`.
struct RunOpts {
  ExperimentConfig cfg;
  std::string strategy = "1d";
  std::string scheduler = "concurrent";
  std::string out_path;
};

void add_run_options(CLI::App& cmd, RunOpts& o) {
  cmd.add_option("--n", o.cfg.n, "Vertex count of the generated graph");
  cmd.add_option("--degree", o.cfg.degree, "Expected out-degree of the generated graph");
  cmd.add_option("--dims", o.cfg.layer_dims,
                 "Layer widths, input through classes (e.g. 16,16,4)")
      ->delimiter(',');
  cmd.add_option("--epochs", o.cfg.epochs, "Training epochs")->check(CLI::PositiveNumber);
  cmd.add_option("--lr", o.cfg.learning_rate, "Learning rate");
  cmd.add_option("--seed-graph", o.cfg.seed_graph, "Graph seed");
  cmd.add_option("--seed-features", o.cfg.seed_features, "Feature seed");
  cmd.add_option("--seed-labels", o.cfg.seed_labels, "Label seed");
  cmd.add_option("--seed-weights", o.cfg.seed_weights, "Weight-init seed");
  cmd.add_option("--seed-permutation", o.cfg.seed_permutation, "Permutation seed");
  cmd.add_flag("--permute", o.cfg.permute, "Relabel vertices by a seeded permutation");
  cmd.add_option("--strategy", o.strategy, "serial, 1d, 1.5d, 2d or 3d");
  cmd.add_option("--ranks", o.cfg.strategy.ranks, "Simulated rank count")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--repl", o.cfg.strategy.repl, "1.5D replication factor")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--block", o.cfg.strategy.block,
                 "2D forward panel chunk width (0 = whole panel)");
  cmd.add_option("--scheduler", o.scheduler, "concurrent or round_robin");
  cmd.add_option("--edges", o.cfg.edges_path, "Edge-list file (disk dataset)");
  cmd.add_option("--features", o.cfg.features_path, "Feature CSV file (disk dataset)");
  cmd.add_option("--labels", o.cfg.labels_path, "Label file (disk dataset)");
  cmd.add_flag("--undirected", o.cfg.undirected, "Mirror edges when loading from disk");
  cmd.add_option("--out", o.out_path, "Write the JSON report here instead of stdout");
}

void finish_run_options(RunOpts& o) {
  o.cfg.scheduler = parse_scheduler(o.scheduler);
  if (o.strategy == "serial") {
    o.cfg.serial = true;
  } else {
    o.cfg.serial = false;
    o.cfg.strategy.kind = parse_kind(o.strategy);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic multi-rank GNN training simulator with metered traffic"};
  app.require_subcommand(1);

  // --- gen -----------------------------------------------------------
  struct GenOpts {
    std::size_t n = 64;
    double degree = 8.0;
    std::size_t features = 16;
    std::size_t classes = 4;
    std::uint64_t seed_graph = 1, seed_features = 2, seed_labels = 3;
    std::string prefix = "dataset";
  } gen_opts;
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset on disk");
  gen->add_option("--n", gen_opts.n, "Vertex count")->check(CLI::PositiveNumber);
  gen->add_option("--degree", gen_opts.degree, "Expected out-degree");
  gen->add_option("--features", gen_opts.features, "Feature width");
  gen->add_option("--classes", gen_opts.classes, "Class count");
  gen->add_option("--seed-graph", gen_opts.seed_graph, "Graph seed");
  gen->add_option("--seed-features", gen_opts.seed_features, "Feature seed");
  gen->add_option("--seed-labels", gen_opts.seed_labels, "Label seed");
  gen->add_option("--prefix", gen_opts.prefix, "Output path prefix");

  // --- train / verify --------------------------------------------------
  RunOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "Train and emit the run report");
  add_run_options(*train, train_opts);

  RunOpts verify_opts;
  double tolerance = 1e-8;
  CLI::App* verify =
      app.add_subcommand("verify", "Compare a partitioned run against the serial reference");
  add_run_options(*verify, verify_opts);
  verify->add_option("--tolerance", tolerance, "Maximum relative Frobenius error");

  // --- cost ------------------------------------------------------------
  struct CostOpts {
    std::string strategy = "1d";
    std::string preset;
    cagnet::CostParams params{1000, 8000, 32, 3, 4, 1};
    std::int64_t rect_rows = 0, rect_cols = 0;
    double alpha = 0.0, beta = 0.0;
    std::string out_path;
  } cost_opts;
  CLI::App* cost = app.add_subcommand("cost", "Analytic communication and memory model");
  cost->add_option("--strategy", cost_opts.strategy, "1d, 1.5d, 2d or 3d");
  cost->add_option("--preset", cost_opts.preset, "reddit, amazon or protein");
  cost->add_option("--n", cost_opts.params.n, "Vertex count");
  cost->add_option("--nnz", cost_opts.params.nnz, "Adjacency nonzeros");
  cost->add_option("--f", cost_opts.params.f, "Uniform feature width");
  cost->add_option("--layers", cost_opts.params.layers, "Graph-convolution count");
  cost->add_option("--ranks", cost_opts.params.ranks, "Rank count");
  cost->add_option("--repl", cost_opts.params.repl, "1.5D replication factor");
  cost->add_option("--rect-rows", cost_opts.rect_rows, "Rectangular grid rows");
  cost->add_option("--rect-cols", cost_opts.rect_cols, "Rectangular grid columns");
  cost->add_option("--alpha", cost_opts.alpha, "Per-message latency");
  cost->add_option("--beta", cost_opts.beta, "Per-word transfer time");
  cost->add_option("--out", cost_opts.out_path, "Write the JSON here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const cagnet::CsrMatrix raw =
          cagnet::generate_erdos_renyi(gen_opts.n, gen_opts.degree, gen_opts.seed_graph);
      const cagnet::DenseMatrix feats =
          cagnet::random_features(gen_opts.n, gen_opts.features, gen_opts.seed_features);
      const std::vector<std::int64_t> labels =
          cagnet::random_labels(gen_opts.n, gen_opts.classes, gen_opts.seed_labels);
      const std::string edges = gen_opts.prefix + ".edges";
      const std::string features = gen_opts.prefix + ".features.csv";
      const std::string labelfile = gen_opts.prefix + ".labels.csv";
      cagnet::save_edge_list(edges, raw);
      cagnet::save_features_csv(features, feats);
      cagnet::save_labels(labelfile, labels);
      emit(nlohmann::json{{"n", gen_opts.n},
                          {"nnz", raw.nnz()},
                          {"edges", edges},
                          {"features", features},
                          {"labels", labelfile}},
           "");
      return 0;
    }
    if (train->parsed()) {
      finish_run_options(train_opts);
      emit(cagnet::run_report(train_opts.cfg), train_opts.out_path);
      return 0;
    }
    if (verify->parsed()) {
      finish_run_options(verify_opts);
      if (verify_opts.cfg.serial)
        throw CLI::ValidationError("--strategy", "verify needs a partitioned strategy");
      const cagnet::VerifyResult r =
          cagnet::verify_against_serial(verify_opts.cfg, tolerance);
      emit(r.details, verify_opts.out_path);
      return r.pass ? 0 : 1;
    }
    if (cost->parsed()) {
      cagnet::CostParams p = cost_opts.params;
      if (!cost_opts.preset.empty()) {
        const cagnet::CostPreset* preset = cagnet::find_cost_preset(cost_opts.preset);
        if (!preset)
          throw CLI::ValidationError("--preset", "unknown preset '" + cost_opts.preset + "'");
        p.n = preset->n;
        p.nnz = preset->nnz;
        p.f = preset->f;
      }
      const StrategyKind kind = parse_kind(cost_opts.strategy);
      cagnet::CostPrediction pred;
      switch (kind) {
        case StrategyKind::OneD: pred = cagnet::predict_1d(p); break;
        case StrategyKind::OneFiveD: pred = cagnet::predict_15d(p); break;
        case StrategyKind::TwoD: pred = cagnet::predict_2d(p); break;
        case StrategyKind::ThreeD: pred = cagnet::predict_3d(p); break;
      }
      nlohmann::json out{{"strategy", cost_opts.strategy},
                         {"params",
                          {{"n", p.n},
                           {"nnz", p.nnz},
                           {"f", p.f},
                           {"layers", p.layers},
                           {"ranks", p.ranks},
                           {"repl", p.repl}}},
                         {"prediction", cagnet::cost_report(pred)}};
      std::int64_t cube_side = 1;
      while (cube_side * cube_side * cube_side < p.ranks) ++cube_side;
      const bool perfect_cube = cube_side * cube_side * cube_side == p.ranks;
      const cagnet::MemoryFootprints m = cagnet::memory_footprints(
          p.n, p.nnz, p.f, p.f, p.layers + 1, p.repl, perfect_cube ? p.ranks : 1);
      out["memory"] = {{"serial", m.serial},
                       {"repl15d", m.repl15d},
                       {"repl15d_single_adj", m.repl15d_single_adj}};
      if (perfect_cube) out["memory"]["split3d_peak"] = m.split3d_peak;
      if (cost_opts.rect_rows > 0 && cost_opts.rect_cols > 0)
        out["rect_layer_time"] = cagnet::predict_2d_rect_layer(
            p, cost_opts.rect_rows, cost_opts.rect_cols, cost_opts.alpha, cost_opts.beta);
      emit(out, cost_opts.out_path);
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
