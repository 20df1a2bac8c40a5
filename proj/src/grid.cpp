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
#include "cagnet/grid.hpp"

#include <algorithm>
#include <stdexcept>

namespace cagnet {

const char* grid_kind_name(GridKind k) {
  switch (k) {
    case GridKind::Row1D: return "1d";
    case GridKind::Grid15D: return "1.5d";
    case GridKind::Grid2D: return "2d";
    case GridKind::Grid3D: return "3d";
  }
  return "?";
}

std::size_t Group::index_of(int rank) const {
  const auto it = std::find(members.begin(), members.end(), rank);
  if (it == members.end())
    throw std::invalid_argument("Group::index_of: rank " + std::to_string(rank) +
                                " is not a member of group " + std::to_string(id));
  return static_cast<std::size_t>(it - members.begin());
}

bool Group::contains(int rank) const {
  return std::find(members.begin(), members.end(), rank) != members.end();
}

int exact_isqrt(int p, const char* who) {
  int r = 0;
  while ((r + 1) * (r + 1) <= p) ++r;
  if (r * r != p)
    throw std::invalid_argument(std::string(who) + ": " + std::to_string(p) +
                                " is not a perfect square");
  return r;
}

int exact_icbrt(int p, const char* who) {
  int r = 0;
  while ((r + 1) * (r + 1) * (r + 1) <= p) ++r;
  if (r * r * r != p)
    throw std::invalid_argument(std::string(who) + ": " + std::to_string(p) +
                                " is not a perfect cube");
  return r;
}

namespace {

void require_positive(int ranks, const char* who) {
  if (ranks <= 0)
    throw std::invalid_argument(std::string(who) + ": rank count " +
                                std::to_string(ranks) + " must be positive");
}

}  // namespace

ProcessGrid ProcessGrid::row1d(int ranks) {
  require_positive(ranks, "ProcessGrid::row1d");
  ProcessGrid g;
  g.kind_ = GridKind::Row1D;
  g.ranks_ = ranks;
  g.rows_ = ranks;
  g.cols_ = 1;
  g.build_groups();
  return g;
}

ProcessGrid ProcessGrid::grid15d(int ranks, int repl) {
  require_positive(ranks, "ProcessGrid::grid15d");
  if (repl <= 0 || ranks % repl != 0)
    throw std::invalid_argument("ProcessGrid::grid15d: replication factor " +
                                std::to_string(repl) + " must divide P=" +
                                std::to_string(ranks));
  ProcessGrid g;
  g.kind_ = GridKind::Grid15D;
  g.ranks_ = ranks;
  g.rows_ = ranks / repl;
  g.cols_ = repl;
  g.build_groups();
  return g;
}

ProcessGrid ProcessGrid::grid2d(int ranks) {
  require_positive(ranks, "ProcessGrid::grid2d");
  const int side = exact_isqrt(ranks, "ProcessGrid::grid2d");
  ProcessGrid g;
  g.kind_ = GridKind::Grid2D;
  g.ranks_ = ranks;
  g.rows_ = side;
  g.cols_ = side;
  g.build_groups();
  return g;
}

ProcessGrid ProcessGrid::grid3d(int ranks) {
  require_positive(ranks, "ProcessGrid::grid3d");
  const int side = exact_icbrt(ranks, "ProcessGrid::grid3d");
  ProcessGrid g;
  g.kind_ = GridKind::Grid3D;
  g.ranks_ = ranks;
  g.rows_ = side;
  g.cols_ = side;
  g.layers_ = side;
  g.build_groups();
  return g;
}

int ProcessGrid::row_of(int rank) const {
  if (kind_ == GridKind::Grid3D) return (rank % (rows_ * cols_)) / cols_;
  return rank / cols_;
}

int ProcessGrid::col_of(int rank) const { return rank % cols_; }

int ProcessGrid::layer_of(int rank) const {
  return kind_ == GridKind::Grid3D ? rank / (rows_ * cols_) : 0;
}

int ProcessGrid::rank_at(int row, int col, int layer) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_ || layer < 0 || layer >= layers_)
    throw std::invalid_argument("ProcessGrid::rank_at: (" + std::to_string(row) + "," +
                                std::to_string(col) + "," + std::to_string(layer) +
                                ") outside " + std::to_string(rows_) + "x" +
                                std::to_string(cols_) + "x" + std::to_string(layers_));
  return layer * rows_ * cols_ + row * cols_ + col;
}

void ProcessGrid::build_groups() {
  groups_.clear();
  row_group_of_.assign(ranks_, -1);
  col_group_of_.assign(ranks_, -1);
  fiber_group_of_.assign(ranks_, -1);
  auto add_group = [this](std::vector<int> members) {
    Group g;
    g.id = static_cast<int>(groups_.size());
    g.members = std::move(members);
    groups_.push_back(std::move(g));
    return groups_.back().id;
  };

  std::vector<int> world(ranks_);
  for (int r = 0; r < ranks_; ++r) world[r] = r;
  world_id_ = add_group(std::move(world));

  if (kind_ == GridKind::Row1D) {
    // Block rows broadcast over the whole world; no finer groups exist.
    for (int r = 0; r < ranks_; ++r) row_group_of_[r] = world_id_;
    return;
  }

  for (int layer = 0; layer < layers_; ++layer) {
    for (int i = 0; i < rows_; ++i) {
      std::vector<int> members(cols_);
      for (int j = 0; j < cols_; ++j) members[j] = rank_at(i, j, layer);
      const int id = add_group(std::move(members));
      for (int j = 0; j < cols_; ++j) row_group_of_[rank_at(i, j, layer)] = id;
    }
    for (int j = 0; j < cols_; ++j) {
      std::vector<int> members(rows_);
      for (int i = 0; i < rows_; ++i) members[i] = rank_at(i, j, layer);
      const int id = add_group(std::move(members));
      for (int i = 0; i < rows_; ++i) col_group_of_[rank_at(i, j, layer)] = id;
    }
  }
  if (kind_ == GridKind::Grid3D) {
    for (int i = 0; i < rows_; ++i) {
      for (int j = 0; j < cols_; ++j) {
        std::vector<int> members(layers_);
        for (int k = 0; k < layers_; ++k) members[k] = rank_at(i, j, k);
        const int id = add_group(std::move(members));
        for (int k = 0; k < layers_; ++k) fiber_group_of_[rank_at(i, j, k)] = id;
      }
    }
  }
}

const Group& ProcessGrid::row_group(int rank) const {
  const int id = row_group_of_.at(static_cast<std::size_t>(rank));
  if (id < 0) throw std::invalid_argument("ProcessGrid: no row group on this grid kind");
  return groups_[id];
}

const Group& ProcessGrid::col_group(int rank) const {
  const int id = col_group_of_.at(static_cast<std::size_t>(rank));
  if (id < 0) throw std::invalid_argument("ProcessGrid: no column group on this grid kind");
  return groups_[id];
}

const Group& ProcessGrid::fiber_group(int rank) const {
  const int id = fiber_group_of_.at(static_cast<std::size_t>(rank));
  if (id < 0) throw std::invalid_argument("ProcessGrid: fiber groups exist only on 3D grids");
  return groups_[id];
}

}  // namespace cagnet
