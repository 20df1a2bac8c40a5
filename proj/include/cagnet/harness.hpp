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
#ifndef CAGNET_HARNESS_HPP
#define CAGNET_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cagnet/cost.hpp"
#include "cagnet/dataset.hpp"
#include "cagnet/dist.hpp"
#include "cagnet/gnn.hpp"

namespace cagnet {

// One fully reproducible experiment: every random choice is pinned by a
// dedicated seed, so a config maps to exactly one report.  layer_dims.front()
// sets the feature width and layer_dims.back() the class count of generated
// datasets; datasets loaded from disk must already match.
struct ExperimentConfig {
  std::size_t n = 64;
  double degree = 8.0;
  std::vector<std::size_t> layer_dims = {16, 16, 4};
  int epochs = 5;
  double learning_rate = 0.5;
  std::uint64_t seed_graph = 1;
  std::uint64_t seed_features = 2;
  std::uint64_t seed_labels = 3;
  std::uint64_t seed_weights = 4;
  std::uint64_t seed_permutation = 5;
  bool permute = false;
  bool serial = false;  // serial reference instead of a partitioned run
  Strategy strategy{};
  Scheduler scheduler = Scheduler::Concurrent;
  // Optional on-disk dataset; all three paths must be set together.
  std::string edges_path;
  std::string features_path;
  std::string labels_path;
  bool undirected = false;
};

GraphDataset harness_dataset(const ExperimentConfig& cfg);
GnnModel harness_model(const ExperimentConfig& cfg, const GraphDataset& data);

nlohmann::json config_json(const ExperimentConfig& cfg);

// Trains per the config and returns the deterministic run report (schema
// "cagnet-sim/1"): config echo, loss trace, result norms, and for
// partitioned runs the communication ledger and runtime gauges.  Two runs of
// the same config produce byte-identical dumps.
nlohmann::json run_report(const ExperimentConfig& cfg);

// Runs the partitioned configuration and the serial reference on the same
// dataset and model, then compares final embeddings, weight gradients and
// weights by relative Frobenius distance.
struct VerifyResult {
  double max_rel_error = 0.0;
  bool pass = false;
  nlohmann::json details;
};
VerifyResult verify_against_serial(const ExperimentConfig& cfg, double tolerance);

// Named large-graph presets for the analytic cost model.
struct CostPreset {
  std::string name;
  std::int64_t n = 0;
  std::int64_t nnz = 0;
  std::int64_t f = 0;
  std::int64_t classes = 0;
};
const std::vector<CostPreset>& cost_presets();
const CostPreset* find_cost_preset(const std::string& name);

}  // namespace cagnet

#endif  // CAGNET_HARNESS_HPP
