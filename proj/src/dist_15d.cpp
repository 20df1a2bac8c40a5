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
#include <utility>

#include "dist_impl.hpp"

namespace cagnet {

BlockRange Trainer15D::tile_rows(int rank) const {
  return block_range(data_.n, blocks(), grid_.row_of(rank));
}

BlockRange Trainer15D::tile_cols(int /*rank*/, std::size_t width) const {
  return BlockRange{0, width};
}

int Trainer15D::tile_owner(int rank) const {
  return grid_.rank_at(grid_.row_of(rank), 0);
}

void Trainer15D::distribute() {
  for (int r = 0; r < grid_.ranks(); ++r) {
    init_slot(r);
    RankSlot& s = slots_[static_cast<std::size_t>(r)];
    const BlockRange rows = tile_rows(r);
    s.h[0] = dense_block(data_.features, rows.begin, rows.end, 0, data_.features.cols());
    s.a_parts.reserve(static_cast<std::size_t>(blocks()));
    s.at_parts.reserve(static_cast<std::size_t>(blocks()));
    for (int q = 0; q < blocks(); ++q) {
      const BlockRange cols = block_range(data_.n, blocks(), q);
      s.a_parts.push_back(extract_block(data_.adj, rows.begin, rows.end, cols.begin, cols.end));
      s.at_parts.push_back(
          extract_block(data_.adj_t, rows.begin, rows.end, cols.begin, cols.end));
    }
  }
}

void Trainer15D::forward_layer(RankContext& ctx, std::size_t l) {
  const int rank = ctx.rank();
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  const int j = grid_.col_of(rank);

  // Each replica column walks its own share of the propagation stages; the
  // per-column partials meet in a row all-reduce.
  DenseMatrix partial(tile_rows(rank).size(), model0_.layer_dims[l - 1]);
  for (int q = chunk_begin(j); q < chunk_end(j); ++q) {
    const int root = grid_.rank_at(q, j);
    DenseMatrix panel = ctx.broadcast(grid_.col_group(rank), root,
                                      root == rank ? &s.h[l - 1] : nullptr, Category::DBcast);
    spmm_add(s.at_parts[static_cast<std::size_t>(q)], panel, partial);
  }
  DenseMatrix t = ctx.all_reduce(grid_.row_group(rank), partial, Category::Reduce);
  DenseMatrix z = gemm(t, s.model.weights[l - 1]);
  s.h[l] = l + 1 == layers_ ? log_softmax_rows(z) : relu(z);
  s.z[l - 1] = std::move(z);
}

double Trainer15D::backward_and_step(RankContext& ctx) {
  const int rank = ctx.rank();
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  const int j = grid_.col_of(rank);

  // Every replica evaluates the tile loss; only column 0 contributes to the
  // global sum so replicated rows are counted once.
  NllTileResult res = nll_tile(s.h.back(), s.labels, s.mask, train_total_, 0);
  const double total = ctx.all_reduce_scalar(grid_.world(), j == 0 ? res.loss_partial : 0.0,
                                             Category::Reduce);
  const double loss = total / static_cast<double>(train_total_);

  DenseMatrix g = std::move(res.grad);
  for (std::size_t l = layers_ - 1; l >= 1; --l) {
    s.g[l - 1] = g;
    DenseMatrix partial(tile_rows(rank).size(), model0_.layer_dims[l]);
    for (int q = chunk_begin(j); q < chunk_end(j); ++q) {
      const int root = grid_.rank_at(q, j);
      DenseMatrix panel = ctx.broadcast(grid_.col_group(rank), root,
                                        root == rank ? &g : nullptr, Category::DBcast);
      spmm_add(s.a_parts[static_cast<std::size_t>(q)], panel, partial);
    }
    DenseMatrix sfull = ctx.all_reduce(grid_.row_group(rank), partial, Category::Reduce);
    // Column 0 supplies the block-row terms of Y; other replicas would
    // duplicate them, so they contribute zero.
    DenseMatrix ypart =
        j == 0 ? gemm(s.h[l - 1], sfull, /*transpose_a=*/true)
               : DenseMatrix(model0_.layer_dims[l - 1], model0_.layer_dims[l]);
    s.y[l - 1] = ctx.all_reduce(grid_.world(), ypart, Category::Reduce);
    if (l >= 2)
      g = hadamard(gemm(sfull, s.model.weights[l - 1], false, /*transpose_b=*/true),
                   relu_prime(s.z[l - 2]));
  }
  sgd_step(s.model, s.y);
  return loss;
}

}  // namespace cagnet
