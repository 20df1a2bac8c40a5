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
#include <cstring>
#include <utility>

#include "dist_impl.hpp"

namespace cagnet {

BlockRange Trainer3D::subrows(int i, int k) const {
  const BlockRange outer = block_range(data_.n, side(), i);
  const BlockRange inner = block_range(outer.size(), side(), k);
  return BlockRange{outer.begin + inner.begin, outer.begin + inner.end};
}

std::vector<int> Trainer3D::fiber_partition(int i) const {
  return block_sizes(block_range(data_.n, side(), i).size(), side());
}

BlockRange Trainer3D::tile_rows(int rank) const {
  return subrows(grid_.row_of(rank), grid_.layer_of(rank));
}

BlockRange Trainer3D::tile_cols(int rank, std::size_t width) const {
  return block_range(width, side(), grid_.col_of(rank));
}

void Trainer3D::distribute() {
  for (int r = 0; r < grid_.ranks(); ++r) {
    init_slot(r);
    RankSlot& s = slots_[static_cast<std::size_t>(r)];
    const int j = grid_.col_of(r);
    const int k = grid_.layer_of(r);
    const BlockRange arows = block_range(data_.n, side(), grid_.row_of(r));
    const BlockRange acols = subrows(j, k);
    const BlockRange hrows = tile_rows(r);
    const BlockRange fcols = tile_cols(r, data_.features.cols());
    s.h[0] = dense_block(data_.features, hrows.begin, hrows.end, fcols.begin, fcols.end);
    s.a_parts.push_back(
        extract_block(data_.adj, arows.begin, arows.end, acols.begin, acols.end));
    s.at_parts.push_back(
        extract_block(data_.adj_t, arows.begin, arows.end, acols.begin, acols.end));
  }
}

void Trainer3D::forward_layer(RankContext& ctx, std::size_t l) {
  const int rank = ctx.rank();
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  const int i = grid_.row_of(rank);
  const int j = grid_.col_of(rank);
  const int k = grid_.layer_of(rank);
  const Group& row = grid_.row_group(rank);
  const Group& col = grid_.col_group(rank);
  const Group& fiber = grid_.fiber_group(rank);
  const std::size_t wprev = model0_.layer_dims[l - 1];
  const BlockRange blockrow = block_range(data_.n, side(), i);
  const BlockRange myrows = tile_rows(rank);
  const BlockRange mycur = tile_cols(rank, model0_.layer_dims[l]);

  // Cube layer k contracts its column slice of A^T against the matching
  // embedding sub-rows, leaving a full-block-row partial that the fiber
  // reduce-scatter splits back into tiles.
  DenseMatrix partial(blockrow.size(), tile_cols(rank, wprev).size());
  for (int q = 0; q < side(); ++q) {
    const int aroot = grid_.rank_at(i, q, k);
    CsrMatrix a_panel = ctx.broadcast_csr(
        row, aroot, aroot == rank ? &s.at_parts[0] : nullptr, Category::SBcast);
    const int hroot = grid_.rank_at(q, j, k);
    DenseMatrix panel =
        ctx.broadcast(col, hroot, hroot == rank ? &s.h[l - 1] : nullptr, Category::DBcast);
    spmm_add(a_panel, panel, partial);
  }
  ctx.note_prereduction(partial.words());
  std::uint64_t resident = s.at_parts[0].words() + partial.words();
  for (std::size_t l2 = 0; l2 < l; ++l2) resident += s.h[l2].words();
  ctx.note_memory_words(resident);
  DenseMatrix t = ctx.reduce_scatter_rows(fiber, partial, fiber_partition(i), Category::Reduce);

  DenseMatrix zt(myrows.size(), mycur.size());
  for (int q = 0; q < side(); ++q) {
    const BlockRange fq = block_range(wprev, side(), q);
    const int troot = grid_.rank_at(i, q, k);
    DenseMatrix panel =
        ctx.broadcast(row, troot, troot == rank ? &t : nullptr, Category::DBcast);
    DenseMatrix wsub =
        dense_block(s.model.weights[l - 1], fq.begin, fq.end, mycur.begin, mycur.end);
    gemm_add(panel, wsub, zt);
  }

  if (l + 1 == layers_) {
    DenseMatrix gathered = ctx.all_gather_rows(row, transpose_dense(zt), Category::AllGather);
    DenseMatrix hfull = log_softmax_rows(transpose_dense(gathered));
    s.h[l] = dense_block(hfull, 0, myrows.size(), mycur.begin, mycur.end);
  } else {
    s.h[l] = relu(zt);
  }
  s.z[l - 1] = std::move(zt);
}

double Trainer3D::backward_and_step(RankContext& ctx) {
  const int rank = ctx.rank();
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  const int i = grid_.row_of(rank);
  const int j = grid_.col_of(rank);
  const int k = grid_.layer_of(rank);
  const Group& row = grid_.row_group(rank);
  const Group& col = grid_.col_group(rank);
  const Group& fiber = grid_.fiber_group(rank);
  const BlockRange blockrow = block_range(data_.n, side(), i);
  const std::size_t rows_t = tile_rows(rank).size();

  const BlockRange myclass = tile_cols(rank, model0_.layer_dims.back());
  NllTileResult res = nll_tile(s.h.back(), s.labels, s.mask, train_total_, myclass.begin);
  const double total = ctx.all_reduce_scalar(grid_.world(), res.loss_partial, Category::Reduce);
  const double loss = total / static_cast<double>(train_total_);

  DenseMatrix g = std::move(res.grad);
  for (std::size_t l = layers_ - 1; l >= 1; --l) {
    s.g[l - 1] = g;
    const std::size_t wcur = model0_.layer_dims[l];
    const BlockRange mycur = tile_cols(rank, wcur);
    const BlockRange myprev = tile_cols(rank, model0_.layer_dims[l - 1]);

    // S = A * G with the same split: full-block-row partials per cube layer,
    // then a fiber reduce-scatter back to tiles.
    DenseMatrix partial(blockrow.size(), mycur.size());
    for (int q = 0; q < side(); ++q) {
      const int aroot = grid_.rank_at(i, q, k);
      CsrMatrix a_panel = ctx.broadcast_csr(
          row, aroot, aroot == rank ? &s.a_parts[0] : nullptr, Category::SBcast);
      const int groot = grid_.rank_at(q, j, k);
      DenseMatrix panel =
          ctx.broadcast(col, groot, groot == rank ? &g : nullptr, Category::DBcast);
      spmm_add(a_panel, panel, partial);
    }
    ctx.note_prereduction(partial.words());
    std::uint64_t resident = s.a_parts[0].words() + partial.words();
    for (const DenseMatrix& h : s.h) resident += h.words();
    ctx.note_memory_words(resident);
    DenseMatrix st =
        ctx.reduce_scatter_rows(fiber, partial, fiber_partition(i), Category::Reduce);

    // Shared S panel sweep: strips of the weight gradient (summed over the
    // column then the fiber, covering every sub-block row) plus the
    // recurrence to the previous layer.
    DenseMatrix yj(myprev.size(), wcur);
    DenseMatrix gprev;
    if (l >= 2) gprev = DenseMatrix(rows_t, myprev.size());
    for (int q = 0; q < side(); ++q) {
      const BlockRange fq = block_range(wcur, side(), q);
      const int sroot = grid_.rank_at(i, q, k);
      DenseMatrix spanel =
          ctx.broadcast(row, sroot, sroot == rank ? &st : nullptr, Category::DBcast);
      DenseMatrix strip = gemm(s.h[l - 1], spanel, /*transpose_a=*/true);
      strip = ctx.all_reduce(col, strip, Category::Reduce);
      strip = ctx.all_reduce(fiber, strip, Category::Reduce);
      if (strip.rows() != 0 && strip.cols() != 0)
        for (std::size_t r = 0; r < strip.rows(); ++r)
          std::memcpy(&yj(r, fq.begin), &strip(r, 0), strip.cols() * sizeof(double));
      if (l >= 2) {
        DenseMatrix wsub = dense_block(s.model.weights[l - 1], myprev.begin, myprev.end,
                                       fq.begin, fq.end);
        gemm_add(spanel, wsub, gprev, false, /*transpose_b=*/true);
      }
    }
    s.y[l - 1] = ctx.all_gather_rows(row, yj, Category::AllGather);
    if (l >= 2) g = hadamard(gprev, relu_prime(s.z[l - 2]));
  }
  sgd_step(s.model, s.y);
  return loss;
}

}  // namespace cagnet
