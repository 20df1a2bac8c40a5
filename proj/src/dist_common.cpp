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
#include "cagnet/dist.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

#include "dist_impl.hpp"

namespace cagnet {

std::size_t ceil_div(std::size_t a, std::size_t b) {
  if (b == 0) throw std::invalid_argument("ceil_div: zero divisor");
  return (a + b - 1) / b;
}

BlockRange block_range(std::size_t n, int parts, int idx) {
  if (parts <= 0 || idx < 0 || idx >= parts)
    throw std::invalid_argument("block_range: part " + std::to_string(idx) + " of " +
                                std::to_string(parts));
  const std::size_t step = n == 0 ? 0 : ceil_div(n, static_cast<std::size_t>(parts));
  const std::size_t begin = std::min(static_cast<std::size_t>(idx) * step, n);
  return BlockRange{begin, std::min(begin + step, n)};
}

std::vector<int> block_sizes(std::size_t n, int parts) {
  std::vector<int> sizes(static_cast<std::size_t>(parts));
  for (int i = 0; i < parts; ++i)
    sizes[static_cast<std::size_t>(i)] = static_cast<int>(block_range(n, parts, i).size());
  return sizes;
}

const char* strategy_kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::OneD: return "1d";
    case StrategyKind::OneFiveD: return "1.5d";
    case StrategyKind::TwoD: return "2d";
    case StrategyKind::ThreeD: return "3d";
  }
  return "?";
}

ProcessGrid make_grid(const Strategy& s) {
  if (s.block < 0)
    throw std::invalid_argument("strategy: panel block width must be non-negative");
  switch (s.kind) {
    case StrategyKind::OneD: return ProcessGrid::row1d(s.ranks);
    case StrategyKind::OneFiveD: return ProcessGrid::grid15d(s.ranks, s.repl);
    case StrategyKind::TwoD: return ProcessGrid::grid2d(s.ranks);
    case StrategyKind::ThreeD: return ProcessGrid::grid3d(s.ranks);
  }
  throw std::invalid_argument("strategy: unknown kind");
}

Trainer::Trainer(const GraphDataset& data, const GnnModel& model, const Strategy& strat)
    : data_(data),
      model0_(model),
      strat_(strat),
      grid_(make_grid(strat)),
      layers_(model.num_layers()),
      train_total_(data.train_count()) {
  validate_model_against(model, data);
  if (train_total_ == 0)
    throw std::invalid_argument("distributed training: empty training set");
  slots_.resize(static_cast<std::size_t>(grid_.ranks()));
}

void Trainer::init_slot(int rank) {
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  s = RankSlot{};
  s.model = model0_;
  s.h.assign(layers_, DenseMatrix{});
  s.z.assign(layers_ - 1, DenseMatrix{});
  s.y.assign(layers_ - 1, DenseMatrix{});
  s.g.assign(layers_ - 1, DenseMatrix{});
  const BlockRange rows = tile_rows(rank);
  const auto lb = data_.labels.begin() + static_cast<std::ptrdiff_t>(rows.begin);
  const auto le = data_.labels.begin() + static_cast<std::ptrdiff_t>(rows.end);
  s.labels.assign(lb, le);
  const auto mb = data_.train_mask.begin() + static_cast<std::ptrdiff_t>(rows.begin);
  const auto me = data_.train_mask.begin() + static_cast<std::ptrdiff_t>(rows.end);
  s.mask.assign(mb, me);
}

double Trainer::epoch(RankContext& ctx) {
  for (std::size_t l = 1; l < layers_; ++l) forward_layer(ctx, l);
  return backward_and_step(ctx);
}

void Trainer::run_epochs(SimRuntime& rt, int epochs) {
  if (epochs <= 0) throw std::invalid_argument("run_epochs: epoch count must be positive");
  rt.run([&](RankContext& ctx) {
    RankSlot& s = slots_[static_cast<std::size_t>(ctx.rank())];
    for (int e = 0; e < epochs; ++e) s.losses.push_back(epoch(ctx));
  });
}

void Trainer::run_forward_layer(SimRuntime& rt, std::size_t l) {
  if (l < 1 || l >= layers_)
    throw std::invalid_argument("run_forward_layer: layer " + std::to_string(l) +
                                " outside [1, " + std::to_string(layers_) + ")");
  rt.run([&](RankContext& ctx) { forward_layer(ctx, l); });
}

DenseMatrix Trainer::assemble_tiles(
    std::size_t width,
    const std::function<const DenseMatrix&(const RankSlot&)>& pick) const {
  DenseMatrix out(data_.n, width);
  for (int r = 0; r < grid_.ranks(); ++r) {
    const RankSlot& s = slots_[static_cast<std::size_t>(r)];
    const DenseMatrix& tile = pick(s);
    const BlockRange rows = tile_rows(r);
    const BlockRange cols = tile_cols(r, width);
    if (tile.rows() != rows.size() || tile.cols() != cols.size())
      throw std::logic_error("assemble: rank " + std::to_string(r) + " tile is " +
                             std::to_string(tile.rows()) + "x" + std::to_string(tile.cols()) +
                             ", expected " + std::to_string(rows.size()) + "x" +
                             std::to_string(cols.size()));
    const int owner = tile_owner(r);
    if (owner != r) {
      if (!bitwise_equal(tile, pick(slots_[static_cast<std::size_t>(owner)])))
        throw std::runtime_error("replica divergence: rank " + std::to_string(r) +
                                 " disagrees with rank " + std::to_string(owner));
      continue;
    }
    if (cols.size() == 0) continue;
    for (std::size_t i = 0; i < tile.rows(); ++i)
      std::memcpy(&out(rows.begin + i, cols.begin), tile.data() + i * tile.cols(),
                  tile.cols() * sizeof(double));
  }
  return out;
}

DenseMatrix Trainer::assemble_h_final() const {
  return assemble_tiles(model0_.layer_dims.back(),
                        [](const RankSlot& s) -> const DenseMatrix& { return s.h.back(); });
}

DenseMatrix Trainer::assemble_g(std::size_t idx) const {
  if (idx + 1 >= layers_) throw std::invalid_argument("assemble_g: bad layer index");
  return assemble_tiles(model0_.layer_dims[idx + 1],
                        [idx](const RankSlot& s) -> const DenseMatrix& { return s.g[idx]; });
}

std::vector<DenseMatrix> Trainer::verified_y() const {
  const RankSlot& ref = slots_[0];
  for (int r = 1; r < grid_.ranks(); ++r) {
    const RankSlot& s = slots_[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < ref.y.size(); ++i)
      if (!bitwise_equal(s.y[i], ref.y[i]))
        throw std::runtime_error("gradient replica divergence at rank " + std::to_string(r) +
                                 ", layer " + std::to_string(i + 1));
  }
  return ref.y;
}

GnnModel Trainer::verified_model() const {
  const RankSlot& ref = slots_[0];
  for (int r = 1; r < grid_.ranks(); ++r) {
    const RankSlot& s = slots_[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < ref.model.weights.size(); ++i)
      if (!bitwise_equal(s.model.weights[i], ref.model.weights[i]))
        throw std::runtime_error("weight replica divergence at rank " + std::to_string(r) +
                                 ", layer " + std::to_string(i + 1));
  }
  return ref.model;
}

std::vector<double> Trainer::verified_losses() const {
  const RankSlot& ref = slots_[0];
  for (int r = 1; r < grid_.ranks(); ++r) {
    const RankSlot& s = slots_[static_cast<std::size_t>(r)];
    if (s.losses.size() != ref.losses.size() ||
        (!ref.losses.empty() &&
         std::memcmp(s.losses.data(), ref.losses.data(),
                     ref.losses.size() * sizeof(double)) != 0))
      throw std::runtime_error("loss replica divergence at rank " + std::to_string(r));
  }
  return ref.losses;
}

std::unique_ptr<Trainer> make_trainer(const GraphDataset& data, const GnnModel& model,
                                      const Strategy& strat) {
  switch (strat.kind) {
    case StrategyKind::OneD: return std::make_unique<Trainer1D>(data, model, strat);
    case StrategyKind::OneFiveD: return std::make_unique<Trainer15D>(data, model, strat);
    case StrategyKind::TwoD: return std::make_unique<Trainer2D>(data, model, strat);
    case StrategyKind::ThreeD: return std::make_unique<Trainer3D>(data, model, strat);
  }
  throw std::invalid_argument("make_trainer: unknown strategy kind");
}

DistOutcome run_distributed(const GraphDataset& data, const GnnModel& model,
                            const Strategy& strat, int epochs, Scheduler sched) {
  std::unique_ptr<Trainer> t = make_trainer(data, model, strat);
  t->distribute();
  SimRuntime rt(t->grid(), sched);
  t->run_epochs(rt, epochs);
  DistOutcome out;
  out.losses = t->verified_losses();
  out.h_final = t->assemble_h_final();
  for (std::size_t i = 0; i + 1 < model.num_layers(); ++i)
    out.g_final.push_back(t->assemble_g(i));
  out.y_final = t->verified_y();
  out.model = t->verified_model();
  out.ledger = rt.ledger();
  out.prereduction_totals = rt.prereduction_totals();
  out.memory_peaks = rt.memory_peaks();
  return out;
}

}  // namespace cagnet
