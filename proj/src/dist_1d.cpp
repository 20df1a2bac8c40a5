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

BlockRange Trainer1D::tile_rows(int rank) const {
  return block_range(data_.n, grid_.ranks(), rank);
}

BlockRange Trainer1D::tile_cols(int /*rank*/, std::size_t width) const {
  return BlockRange{0, width};
}

void Trainer1D::distribute() {
  const int p = grid_.ranks();
  for (int r = 0; r < p; ++r) {
    init_slot(r);
    RankSlot& s = slots_[static_cast<std::size_t>(r)];
    const BlockRange rows = tile_rows(r);
    s.h[0] = dense_block(data_.features, rows.begin, rows.end, 0, data_.features.cols());
    s.a_parts.reserve(static_cast<std::size_t>(p));
    s.at_parts.reserve(static_cast<std::size_t>(p));
    for (int q = 0; q < p; ++q) {
      const BlockRange cols = tile_rows(q);
      s.a_parts.push_back(extract_block(data_.adj, rows.begin, rows.end, cols.begin, cols.end));
      s.at_parts.push_back(
          extract_block(data_.adj_t, rows.begin, rows.end, cols.begin, cols.end));
    }
  }
}

void Trainer1D::forward_layer(RankContext& ctx, std::size_t l) {
  const int rank = ctx.rank();
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  const Group& world = grid_.world();
  const int p = grid_.ranks();

  DenseMatrix t(tile_rows(rank).size(), model0_.layer_dims[l - 1]);
  for (int q = 0; q < p; ++q) {
    DenseMatrix panel =
        ctx.broadcast(world, q, q == rank ? &s.h[l - 1] : nullptr, Category::DBcast);
    spmm_add(s.at_parts[static_cast<std::size_t>(q)], panel, t);
  }
  DenseMatrix z = gemm(t, s.model.weights[l - 1]);
  s.h[l] = l + 1 == layers_ ? log_softmax_rows(z) : relu(z);
  s.z[l - 1] = std::move(z);
}

double Trainer1D::backward_and_step(RankContext& ctx) {
  const int rank = ctx.rank();
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  const Group& world = grid_.world();
  const int p = grid_.ranks();

  NllTileResult res = nll_tile(s.h.back(), s.labels, s.mask, train_total_, 0);
  const double total = ctx.all_reduce_scalar(world, res.loss_partial, Category::Reduce);
  const double loss = total / static_cast<double>(train_total_);

  DenseMatrix g = std::move(res.grad);
  for (std::size_t l = layers_ - 1; l >= 1; --l) {
    s.g[l - 1] = g;
    DenseMatrix sa(tile_rows(rank).size(), model0_.layer_dims[l]);
    for (int q = 0; q < p; ++q) {
      DenseMatrix panel = ctx.broadcast(world, q, q == rank ? &g : nullptr, Category::DBcast);
      spmm_add(s.a_parts[static_cast<std::size_t>(q)], panel, sa);
    }
    DenseMatrix ypart = gemm(s.h[l - 1], sa, /*transpose_a=*/true);
    s.y[l - 1] = ctx.all_reduce(world, ypart, Category::Reduce);
    if (l >= 2)
      g = hadamard(gemm(sa, s.model.weights[l - 1], false, /*transpose_b=*/true),
                   relu_prime(s.z[l - 2]));
  }
  sgd_step(s.model, s.y);
  return loss;
}

}  // namespace cagnet
