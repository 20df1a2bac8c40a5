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
#include "cagnet/harness.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace cagnet {

GraphDataset harness_dataset(const ExperimentConfig& cfg) {
  if (cfg.layer_dims.size() < 2)
    throw std::invalid_argument("experiment: need at least two layer dims");
  GraphDataset data;
  if (!cfg.edges_path.empty() || !cfg.features_path.empty() || !cfg.labels_path.empty()) {
    if (cfg.edges_path.empty() || cfg.features_path.empty() || cfg.labels_path.empty())
      throw std::invalid_argument(
          "experiment: edges, features and labels paths must be set together");
    data = load_dataset(cfg.edges_path, cfg.features_path, cfg.labels_path, cfg.undirected);
  } else {
    data = generate_dataset(cfg.n, cfg.degree, cfg.layer_dims.front(),
                            cfg.layer_dims.back(), cfg.seed_graph, cfg.seed_features,
                            cfg.seed_labels);
  }
  if (cfg.permute) data = permute_random(data, cfg.seed_permutation).dataset;
  return data;
}

GnnModel harness_model(const ExperimentConfig& cfg, const GraphDataset& data) {
  GnnModel model = init_glorot(cfg.layer_dims, cfg.seed_weights, cfg.learning_rate);
  validate_model_against(model, data);
  return model;
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j{
      {"n", cfg.n},
      {"degree", cfg.degree},
      {"layer_dims", cfg.layer_dims},
      {"epochs", cfg.epochs},
      {"learning_rate", cfg.learning_rate},
      {"seeds",
       {{"graph", cfg.seed_graph},
        {"features", cfg.seed_features},
        {"labels", cfg.seed_labels},
        {"weights", cfg.seed_weights},
        {"permutation", cfg.seed_permutation}}},
      {"permute", cfg.permute},
      {"scheduler", scheduler_name(cfg.scheduler)},
  };
  if (cfg.serial) {
    j["strategy"] = "serial";
  } else {
    j["strategy"] = {{"kind", strategy_kind_name(cfg.strategy.kind)},
                     {"ranks", cfg.strategy.ranks},
                     {"repl", cfg.strategy.repl},
                     {"block", cfg.strategy.block}};
  }
  if (!cfg.edges_path.empty())
    j["dataset_files"] = {{"edges", cfg.edges_path},
                          {"features", cfg.features_path},
                          {"labels", cfg.labels_path},
                          {"undirected", cfg.undirected}};
  return j;
}

namespace {

nlohmann::json weight_norms(const GnnModel& model) {
  nlohmann::json a = nlohmann::json::array();
  for (const DenseMatrix& w : model.weights) a.push_back(frobenius_norm(w));
  return a;
}

}  // namespace

nlohmann::json run_report(const ExperimentConfig& cfg) {
  const GraphDataset data = harness_dataset(cfg);
  GnnModel model = harness_model(cfg, data);
  nlohmann::json report{{"schema", "cagnet-sim/1"}, {"config", config_json(cfg)}};
  report["dataset"] = {{"n", data.n},
                       {"nnz", data.adj.nnz()},
                       {"train_count", data.train_count()},
                       {"num_classes", data.num_classes}};
  if (cfg.serial) {
    ForwardTape tape;  // last epoch's activations for the result fingerprint
    std::vector<double> losses = train_serial(data, model, cfg.epochs);
    tape = forward_serial(data, model);
    report["losses"] = losses;
    report["final_loss"] = losses.back();
    report["h_final_norm"] = frobenius_norm(tape.h.back());
    report["weight_norms"] = weight_norms(model);
    return report;
  }
  const DistOutcome out =
      run_distributed(data, model, cfg.strategy, cfg.epochs, cfg.scheduler);
  report["losses"] = out.losses;
  report["final_loss"] = out.losses.back();
  report["h_final_norm"] = frobenius_norm(out.h_final);
  report["weight_norms"] = weight_norms(out.model);
  report["ledger"] = ledger_report(out.ledger, make_grid(cfg.strategy));
  report["prereduction_totals"] = out.prereduction_totals;
  report["memory_peaks"] = out.memory_peaks;
  return report;
}

VerifyResult verify_against_serial(const ExperimentConfig& cfg, double tolerance) {
  if (cfg.serial)
    throw std::invalid_argument("verify: pick a partitioned strategy to compare");
  const GraphDataset data = harness_dataset(cfg);
  const GnnModel model0 = harness_model(cfg, data);

  GnnModel serial_model = model0;
  std::vector<double> serial_losses;
  ForwardTape tape;
  BackwardResult back;
  for (int e = 0; e < cfg.epochs; ++e) {
    tape = forward_serial(data, serial_model);
    back = backward_serial(data, serial_model, tape);
    sgd_step(serial_model, back.y);
    serial_losses.push_back(back.loss);
  }

  const DistOutcome out =
      run_distributed(data, model0, cfg.strategy, cfg.epochs, cfg.scheduler);

  VerifyResult r;
  auto track = [&r](const std::string& label, double err, nlohmann::json& sink) {
    sink[label] = err;
    if (err > r.max_rel_error) r.max_rel_error = err;
  };
  nlohmann::json errors;
  track("h_final", rel_frobenius(out.h_final, tape.h.back()), errors);
  for (std::size_t l = 0; l < back.y.size(); ++l) {
    track("y_" + std::to_string(l), rel_frobenius(out.y_final[l], back.y[l]), errors);
    track("g_" + std::to_string(l), rel_frobenius(out.g_final[l], back.g[l]), errors);
    track("w_" + std::to_string(l),
          rel_frobenius(out.model.weights[l], serial_model.weights[l]), errors);
  }
  double loss_err = 0.0;
  for (std::size_t e = 0; e < serial_losses.size(); ++e) {
    const double d = std::abs(out.losses[e] - serial_losses[e]);
    if (d > loss_err) loss_err = d;
  }
  track("loss_trace", loss_err, errors);

  r.pass = r.max_rel_error < tolerance;
  r.details = nlohmann::json{{"schema", "cagnet-sim/1"},
                             {"config", config_json(cfg)},
                             {"tolerance", tolerance},
                             {"max_rel_error", r.max_rel_error},
                             {"errors", errors},
                             {"pass", r.pass}};
  return r;
}

const std::vector<CostPreset>& cost_presets() {
  static const std::vector<CostPreset> presets = {
      {"reddit", 232965, 114848857, 602, 41},
      {"amazon", 14249639, 230788269, 300, 24},
      {"protein", 8745542, 2116240124, 128, 256},
  };
  return presets;
}

const CostPreset* find_cost_preset(const std::string& name) {
  for (const CostPreset& p : cost_presets())
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace cagnet
