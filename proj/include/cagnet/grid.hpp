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
#ifndef CAGNET_GRID_HPP
#define CAGNET_GRID_HPP

#include <string>
#include <vector>

namespace cagnet {

enum class GridKind { Row1D, Grid15D, Grid2D, Grid3D };

const char* grid_kind_name(GridKind k);

// A communication group: an ascending list of world ranks.  The id indexes
// the runtime's rendezvous table; member order defines reduction fold order
// and gather concatenation order.
struct Group {
  int id = 0;
  std::vector<int> members;

  std::size_t size() const { return members.size(); }
  // Position of `rank` inside the group; throws if absent.
  std::size_t index_of(int rank) const;
  bool contains(int rank) const;
};

// Logical process topology.  Rank numbering is row major:
//   Row1D   : rank = i                       (i = block row)
//   Grid15D : rank = i*c + j                 (P/c block rows, c replicas)
//   Grid2D  : rank = i*cols + j
//   Grid3D  : rank = k*s*s + i*s + j         (layer k, row i, column j)
class ProcessGrid {
 public:
  static ProcessGrid row1d(int ranks);
  static ProcessGrid grid15d(int ranks, int repl);
  static ProcessGrid grid2d(int ranks);       // square: sqrt(P) x sqrt(P)
  static ProcessGrid grid3d(int ranks);       // cube: s x s x s

  GridKind kind() const { return kind_; }
  int ranks() const { return ranks_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int layers() const { return layers_; }

  int row_of(int rank) const;
  int col_of(int rank) const;
  int layer_of(int rank) const;
  int rank_at(int row, int col, int layer = 0) const;

  const Group& world() const { return groups_[world_id_]; }
  // Row group: ranks sharing (row [, layer]); column group: ranks sharing
  // (col [, layer]); fiber group (3D only): ranks sharing (row, col).
  const Group& row_group(int rank) const;
  const Group& col_group(int rank) const;
  const Group& fiber_group(int rank) const;

  const std::vector<Group>& groups() const { return groups_; }

 private:
  ProcessGrid() = default;
  void build_groups();

  GridKind kind_ = GridKind::Row1D;
  int ranks_ = 1;
  int rows_ = 1, cols_ = 1, layers_ = 1;
  std::vector<Group> groups_;
  int world_id_ = 0;
  std::vector<int> row_group_of_, col_group_of_, fiber_group_of_;
};

// Exact integer square/cube roots; throw with the offending value when the
// input is not a perfect power.
int exact_isqrt(int p, const char* who);
int exact_icbrt(int p, const char* who);

}  // namespace cagnet

#endif  // CAGNET_GRID_HPP
