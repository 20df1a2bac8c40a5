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
#ifndef CAGNET_CSR_HPP
#define CAGNET_CSR_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cagnet/dense.hpp"

namespace cagnet {

struct Edge {
  std::size_t u;
  std::size_t v;
};

// Compressed sparse row matrix in canonical form: row_ptr has n_rows+1
// nondecreasing entries, column indices are strictly increasing within each
// row, and all values are finite.  Instances are treated as immutable once
// built; every constructor-style function below returns a fresh canonical
// matrix.
struct CsrMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  // Ledger word count for a sparse payload: the value entries.
  std::size_t words() const { return values.size(); }
};

// Throws std::invalid_argument if the canonical-form invariants are broken.
void validate_csr(const CsrMatrix& a, const char* who);

bool csr_equal(const CsrMatrix& a, const CsrMatrix& b);

// Builds an n x n 0/1 adjacency matrix from an edge list.  Duplicate edges
// collapse to a single unit entry; with `undirected` every edge is mirrored.
// Vertex indices >= n are rejected.
CsrMatrix from_edge_list(const std::vector<Edge>& edges, std::size_t n, bool undirected);

// D^{-1/2} (A + I) D^{-1/2} where D holds the row degrees of (A + I).  The
// diagonal is forced to one entry even when the input already has one.  Row
// degrees of the stored orientation are used; callers wanting the transpose
// orientation should transpose the *normalized* matrix so that the pair stays
// an exact transpose of one another.
CsrMatrix add_self_loops_and_normalize(const CsrMatrix& a);

CsrMatrix transpose(const CsrMatrix& a);

// Copy of the half-open block [r0, r1) x [c0, c1) with locally re-based
// indices.
CsrMatrix extract_block(const CsrMatrix& a, std::size_t r0, std::size_t r1,
                        std::size_t c0, std::size_t c1);

// acc += a * h.  Accumulation goes row by row, nonzeros in ascending column
// order, directly into the accumulator row; splitting `a` into column blocks
// and calling this once per block in ascending order reproduces the
// monolithic product bit for bit.
void spmm_add(const CsrMatrix& a, const DenseMatrix& h, DenseMatrix& acc);

DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& h);

DenseMatrix csr_to_dense(const CsrMatrix& a);

// Directed Erdos-Renyi graph on n vertices: every ordered pair (u, v), u != v,
// is an edge independently with probability d/n.  No self-loops (those are
// introduced by normalization).
CsrMatrix generate_erdos_renyi(std::size_t n, double expected_degree, std::uint64_t seed);

}  // namespace cagnet

#endif  // CAGNET_CSR_HPP
