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

BlockRange Trainer2D::tile_rows(int rank) const {
  return block_range(data_.n, side(), grid_.row_of(rank));
}

BlockRange Trainer2D::tile_cols(int rank, std::size_t width) const {
  return block_range(width, side(), grid_.col_of(rank));
}

std::vector<BlockRange> Trainer2D::panel_chunks(std::size_t width) const {
  std::vector<BlockRange> chunks;
  const std::size_t b = strat_.block <= 0 ? 0 : static_cast<std::size_t>(strat_.block);
  if (b == 0 || b >= width) {
    chunks.push_back(BlockRange{0, width});
    return chunks;
  }
  for (std::size_t begin = 0; begin < width; begin += b)
    chunks.push_back(BlockRange{begin, std::min(begin + b, width)});
  return chunks;
}

void Trainer2D::distribute() {
  for (int r = 0; r < grid_.ranks(); ++r) {
    init_slot(r);
    RankSlot& s = slots_[static_cast<std::size_t>(r)];
    const BlockRange rows = tile_rows(r);
    const BlockRange vcols = block_range(data_.n, side(), grid_.col_of(r));
    const BlockRange fcols = tile_cols(r, data_.features.cols());
    s.h[0] = dense_block(data_.features, rows.begin, rows.end, fcols.begin, fcols.end);
    s.a_parts.push_back(
        extract_block(data_.adj, rows.begin, rows.end, vcols.begin, vcols.end));
    s.at_parts.push_back(
        extract_block(data_.adj_t, rows.begin, rows.end, vcols.begin, vcols.end));
  }
}

void Trainer2D::forward_layer(RankContext& ctx, std::size_t l) {
  const int rank = ctx.rank();
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  const int i = grid_.row_of(rank);
  const int j = grid_.col_of(rank);
  const Group& row = grid_.row_group(rank);
  const Group& col = grid_.col_group(rank);
  const std::size_t wprev = model0_.layer_dims[l - 1];
  const std::size_t rows_i = tile_rows(rank).size();
  const BlockRange myprev = tile_cols(rank, wprev);
  const BlockRange mycur = tile_cols(rank, model0_.layer_dims[l]);

  // Phase 1: T tile = sum_q At[i,q] * H[q,j].  Embedding panels travel down
  // the columns in chunks of at most `block` columns; chunk c of every stage
  // lands in the same strip, so the strips concatenate into the tile.
  const std::vector<BlockRange> chunks = panel_chunks(myprev.size());
  std::vector<DenseMatrix> strips;
  strips.reserve(chunks.size());
  for (const BlockRange& ch : chunks) strips.emplace_back(rows_i, ch.size());
  for (int q = 0; q < side(); ++q) {
    const int aroot = grid_.rank_at(i, q);
    CsrMatrix a_panel = ctx.broadcast_csr(
        row, aroot, aroot == rank ? &s.at_parts[0] : nullptr, Category::SBcast);
    const int hroot = grid_.rank_at(q, j);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      DenseMatrix piece;
      const DenseMatrix* src = nullptr;
      if (hroot == rank) {
        piece = dense_block(s.h[l - 1], 0, s.h[l - 1].rows(), chunks[c].begin,
                            chunks[c].end);
        src = &piece;
      }
      DenseMatrix panel = ctx.broadcast(col, hroot, src, Category::DBcast);
      spmm_add(a_panel, panel, strips[c]);
    }
  }
  DenseMatrix t(rows_i, myprev.size());
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    if (chunks[c].size() == 0) continue;
    for (std::size_t r = 0; r < rows_i; ++r)
      std::memcpy(&t(r, chunks[c].begin), &strips[c](r, 0),
                  chunks[c].size() * sizeof(double));
  }

  // Phase 2: Z tile = sum_q T[i,q] * W[rows F_q, cols F_j], T panels along
  // the rows, weights replicated so only the matching slab is touched.
  DenseMatrix zt(rows_i, mycur.size());
  for (int q = 0; q < side(); ++q) {
    const BlockRange fq = block_range(wprev, side(), q);
    const int troot = grid_.rank_at(i, q);
    for (const BlockRange& ch : panel_chunks(fq.size())) {
      DenseMatrix piece;
      const DenseMatrix* src = nullptr;
      if (troot == rank) {
        piece = dense_block(t, 0, rows_i, ch.begin, ch.end);
        src = &piece;
      }
      DenseMatrix panel = ctx.broadcast(row, troot, src, Category::DBcast);
      DenseMatrix wsub = dense_block(s.model.weights[l - 1], fq.begin + ch.begin,
                                     fq.begin + ch.end, mycur.begin, mycur.end);
      gemm_add(panel, wsub, zt);
    }
  }

  if (l + 1 == layers_) {
    // Log-softmax needs whole rows: gather the row block's tiles via a
    // transpose (rows become gatherable blocks), normalize, keep our slice.
    DenseMatrix gathered = ctx.all_gather_rows(row, transpose_dense(zt), Category::AllGather);
    DenseMatrix hfull = log_softmax_rows(transpose_dense(gathered));
    s.h[l] = dense_block(hfull, 0, rows_i, mycur.begin, mycur.end);
  } else {
    s.h[l] = relu(zt);
  }
  s.z[l - 1] = std::move(zt);
}

double Trainer2D::backward_and_step(RankContext& ctx) {
  const int rank = ctx.rank();
  RankSlot& s = slots_[static_cast<std::size_t>(rank)];
  const int i = grid_.row_of(rank);
  const int j = grid_.col_of(rank);
  const Group& row = grid_.row_group(rank);
  const Group& col = grid_.col_group(rank);
  const std::size_t rows_i = tile_rows(rank).size();

  // Each training row's label falls in exactly one column block, so the
  // world sum of tile partials counts every training vertex once.
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

    // S tile = sum_q A[i,q] * G[q,j].
    DenseMatrix sa(rows_i, mycur.size());
    for (int q = 0; q < side(); ++q) {
      const int aroot = grid_.rank_at(i, q);
      CsrMatrix a_panel = ctx.broadcast_csr(
          row, aroot, aroot == rank ? &s.a_parts[0] : nullptr, Category::SBcast);
      const int groot = grid_.rank_at(q, j);
      DenseMatrix panel =
          ctx.broadcast(col, groot, groot == rank ? &g : nullptr, Category::DBcast);
      spmm_add(a_panel, panel, sa);
    }

    // One S panel sweep feeds both the weight gradient strips and the
    // recurrence to the previous layer.
    DenseMatrix yj(myprev.size(), wcur);
    DenseMatrix gprev;
    if (l >= 2) gprev = DenseMatrix(rows_i, myprev.size());
    for (int q = 0; q < side(); ++q) {
      const BlockRange fq = block_range(wcur, side(), q);
      const int sroot = grid_.rank_at(i, q);
      DenseMatrix spanel =
          ctx.broadcast(row, sroot, sroot == rank ? &sa : nullptr, Category::DBcast);
      DenseMatrix strip = gemm(s.h[l - 1], spanel, /*transpose_a=*/true);
      strip = ctx.all_reduce(col, strip, Category::Reduce);
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
