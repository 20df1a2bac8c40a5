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
#ifndef CAGNET_DIST_IMPL_HPP
#define CAGNET_DIST_IMPL_HPP

#include "cagnet/dist.hpp"

namespace cagnet {

// Block-row partitioning: rank i owns block row i of A, A^T (pre-split into
// P column blocks) and of every embedding matrix; embeddings are broadcast
// over the world group stage by stage.
class Trainer1D final : public Trainer {
 public:
  using Trainer::Trainer;
  void distribute() override;
  void forward_layer(RankContext& ctx, std::size_t l) override;
  double backward_and_step(RankContext& ctx) override;
  BlockRange tile_rows(int rank) const override;
  BlockRange tile_cols(int rank, std::size_t width) const override;
};

// Block rows replicated on c ranks; each replica column walks its share of
// the propagation stages and the partial products meet in a row-group
// all-reduce.
class Trainer15D final : public Trainer {
 public:
  using Trainer::Trainer;
  void distribute() override;
  void forward_layer(RankContext& ctx, std::size_t l) override;
  double backward_and_step(RankContext& ctx) override;
  BlockRange tile_rows(int rank) const override;
  BlockRange tile_cols(int rank, std::size_t width) const override;
  int tile_owner(int rank) const override;

 private:
  int blocks() const { return grid_.rows(); }
  int repl() const { return grid_.cols(); }
  int chunk_begin(int j) const { return j * (blocks() / repl()); }
  int chunk_end(int j) const {
    return j + 1 == repl() ? blocks() : (j + 1) * (blocks() / repl());
  }
};

// sqrt(P) x sqrt(P) tiles over both the vertex and feature dimensions; each
// propagation is a two-phase stationary-C SUMMA (sparse panels along rows,
// dense panels along columns, then dense panels along rows against the
// replicated weights).
class Trainer2D final : public Trainer {
 public:
  using Trainer::Trainer;
  void distribute() override;
  void forward_layer(RankContext& ctx, std::size_t l) override;
  double backward_and_step(RankContext& ctx) override;
  BlockRange tile_rows(int rank) const override;
  BlockRange tile_cols(int rank, std::size_t width) const override;

 private:
  int side() const { return grid_.rows(); }
  std::vector<BlockRange> panel_chunks(std::size_t width) const;
};

// cbrt(P)^3 grid: layer k of the cube computes full-block-row partials over
// its column slice of A, a fiber reduce-scatter splits them back into
// tiles.  Dense panels travel inside one cube layer only.
class Trainer3D final : public Trainer {
 public:
  using Trainer::Trainer;
  void distribute() override;
  void forward_layer(RankContext& ctx, std::size_t l) override;
  double backward_and_step(RankContext& ctx) override;
  BlockRange tile_rows(int rank) const override;
  BlockRange tile_cols(int rank, std::size_t width) const override;

 private:
  int side() const { return grid_.rows(); }
  // Sub-block k of vertex block i: the tile rows of rank (i, *, k) and the
  // column range of A tiles in column block i handled by cube layer k.
  BlockRange subrows(int i, int k) const;
  std::vector<int> fiber_partition(int i) const;
};

}  // namespace cagnet

#endif  // CAGNET_DIST_IMPL_HPP
