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
#ifndef CAGNET_DIST_HPP
#define CAGNET_DIST_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "cagnet/dataset.hpp"
#include "cagnet/gnn.hpp"
#include "cagnet/grid.hpp"
#include "cagnet/runtime.hpp"

namespace cagnet {

std::size_t ceil_div(std::size_t a, std::size_t b);

// Ceiling-rule block decomposition: part i covers
// [i*ceil(n/parts), min((i+1)*ceil(n/parts), n)); trailing parts may be
// short or empty.
struct BlockRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};
BlockRange block_range(std::size_t n, int parts, int idx);
std::vector<int> block_sizes(std::size_t n, int parts);

enum class StrategyKind { OneD, OneFiveD, TwoD, ThreeD };
const char* strategy_kind_name(StrategyKind k);  // "1d", "1.5d", "2d", "3d"

// A partitioning strategy instance.  `repl` is the 1.5D replication factor
// c (block rows are kept on c ranks and the propagation stages are split
// among them); `block` is the 2D panel width: forward embedding panels are
// broadcast in column chunks of at most `block` columns, 0 meaning one full
// panel per stage.
struct Strategy {
  StrategyKind kind = StrategyKind::OneD;
  int ranks = 1;
  int repl = 1;
  int block = 0;
};

ProcessGrid make_grid(const Strategy& s);

// Per-rank training state.  Weights are fully replicated and must evolve
// bitwise identically on every rank; h/z/g hold this rank's tiles only.
// a_parts/at_parts hold the local pieces of the adjacency matrix and its
// transpose: the column-block split of the local block row (1D/1.5D) or the
// single local tile (2D/3D, one entry).
struct RankSlot {
  GnnModel model;
  std::vector<DenseMatrix> h;
  std::vector<DenseMatrix> z;
  std::vector<DenseMatrix> y;
  std::vector<DenseMatrix> g;
  std::vector<double> losses;
  std::vector<CsrMatrix> a_parts;
  std::vector<CsrMatrix> at_parts;
  std::vector<std::int64_t> labels;
  std::vector<std::uint8_t> mask;
};

// One partitioning strategy driving the simulated runtime.  Lifecycle:
// construct, distribute() (unmetered setup that carves the global dataset
// into per-rank slots), then run_epochs()/run_forward_layer() any number of
// times; the assembled views read back the per-rank results and enforce
// replica consistency bit for bit.
class Trainer {
 public:
  Trainer(const GraphDataset& data, const GnnModel& model, const Strategy& strat);
  virtual ~Trainer() = default;

  const ProcessGrid& grid() const { return grid_; }
  const Strategy& strategy() const { return strat_; }
  const std::vector<RankSlot>& slots() const { return slots_; }

  virtual void distribute() = 0;
  // Forward propagation of layer l (1-based, consuming h[l-1]); callable on
  // its own so tests can meter a single layer's traffic.
  virtual void forward_layer(RankContext& ctx, std::size_t l) = 0;
  // Loss, gradients and the weight update; returns the epoch loss.
  virtual double backward_and_step(RankContext& ctx) = 0;

  // Geometry of this rank's H/G tiles: global row range, and the column
  // range when the global width is `width`.
  virtual BlockRange tile_rows(int rank) const = 0;
  virtual BlockRange tile_cols(int rank, std::size_t width) const = 0;
  // Rank holding the canonical copy of this rank's tiles (self when unique).
  virtual int tile_owner(int rank) const { return rank; }

  double epoch(RankContext& ctx);
  void run_epochs(SimRuntime& rt, int epochs);
  void run_forward_layer(SimRuntime& rt, std::size_t l);

  // Assembled global results with bitwise replica verification.
  DenseMatrix assemble_h_final() const;
  DenseMatrix assemble_g(std::size_t idx) const;
  std::vector<DenseMatrix> verified_y() const;
  GnnModel verified_model() const;
  std::vector<double> verified_losses() const;

 protected:
  // Copies the global model/labels/mask slices shared by every strategy.
  void init_slot(int rank);
  DenseMatrix assemble_tiles(
      std::size_t width,
      const std::function<const DenseMatrix&(const RankSlot&)>& pick) const;

  const GraphDataset& data_;
  GnnModel model0_;
  Strategy strat_;
  ProcessGrid grid_;
  std::size_t layers_;       // layer_dims.size(): h stack depth
  std::size_t train_total_;
  std::vector<RankSlot> slots_;
};

std::unique_ptr<Trainer> make_trainer(const GraphDataset& data, const GnnModel& model,
                                      const Strategy& strat);

// Full training product of one strategy: assembled final embeddings and
// gradients, the final model, per-epoch losses, and the runtime meters.
struct DistOutcome {
  std::vector<double> losses;
  DenseMatrix h_final;
  std::vector<DenseMatrix> y_final;
  std::vector<DenseMatrix> g_final;
  GnnModel model;
  CommLedger ledger;
  std::vector<std::uint64_t> prereduction_totals;
  std::vector<std::uint64_t> memory_peaks;
};

DistOutcome run_distributed(const GraphDataset& data, const GnnModel& model,
                            const Strategy& strat, int epochs, Scheduler sched);

}  // namespace cagnet

#endif  // CAGNET_DIST_HPP
