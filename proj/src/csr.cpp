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
#include "cagnet/csr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cagnet/rng.hpp"

namespace cagnet {

void validate_csr(const CsrMatrix& a, const char* who) {
  const std::string w(who);
  if (a.row_ptr.size() != a.n_rows + 1)
    throw std::invalid_argument(w + ": row_ptr has " + std::to_string(a.row_ptr.size()) +
                                " entries, expected " + std::to_string(a.n_rows + 1));
  if (a.row_ptr.front() != 0 || a.row_ptr.back() != a.nnz())
    throw std::invalid_argument(w + ": row_ptr endpoints do not bracket the nonzeros");
  if (a.col_idx.size() != a.values.size())
    throw std::invalid_argument(w + ": col_idx/values length mismatch");
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    if (a.row_ptr[i] > a.row_ptr[i + 1])
      throw std::invalid_argument(w + ": row_ptr decreases at row " + std::to_string(i));
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      if (a.col_idx[k] >= a.n_cols)
        throw std::invalid_argument(w + ": column index " + std::to_string(a.col_idx[k]) +
                                    " out of range in row " + std::to_string(i));
      if (k > a.row_ptr[i] && a.col_idx[k - 1] >= a.col_idx[k])
        throw std::invalid_argument(w + ": columns not strictly increasing in row " +
                                    std::to_string(i));
      if (!std::isfinite(a.values[k]))
        throw std::invalid_argument(w + ": non-finite value in row " + std::to_string(i));
    }
  }
}

bool csr_equal(const CsrMatrix& a, const CsrMatrix& b) {
  return a.n_rows == b.n_rows && a.n_cols == b.n_cols && a.row_ptr == b.row_ptr &&
         a.col_idx == b.col_idx && a.values == b.values;
}

namespace {

// Builds a canonical CSR from (row, col) pairs with unit values; duplicates
// collapse.  Pairs need not be sorted.
CsrMatrix from_pairs(std::vector<std::pair<std::size_t, std::size_t>> pairs,
                     std::size_t n_rows, std::size_t n_cols) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  CsrMatrix a;
  a.n_rows = n_rows;
  a.n_cols = n_cols;
  a.row_ptr.assign(n_rows + 1, 0);
  a.col_idx.reserve(pairs.size());
  a.values.assign(pairs.size(), 1.0);
  for (const auto& [r, c] : pairs) {
    ++a.row_ptr[r + 1];
    a.col_idx.push_back(c);
  }
  for (std::size_t i = 0; i < n_rows; ++i) a.row_ptr[i + 1] += a.row_ptr[i];
  return a;
}

}  // namespace

CsrMatrix from_edge_list(const std::vector<Edge>& edges, std::size_t n, bool undirected) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(edges.size() * (undirected ? 2 : 1));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.u >= n || e.v >= n)
      throw std::invalid_argument("from_edge_list: edge " + std::to_string(i) + " = (" +
                                  std::to_string(e.u) + ", " + std::to_string(e.v) +
                                  ") outside vertex range [0, " + std::to_string(n) + ")");
    pairs.emplace_back(e.u, e.v);
    if (undirected && e.u != e.v) pairs.emplace_back(e.v, e.u);
  }
  return from_pairs(std::move(pairs), n, n);
}

CsrMatrix add_self_loops_and_normalize(const CsrMatrix& a) {
  if (a.n_rows != a.n_cols)
    throw std::invalid_argument("add_self_loops_and_normalize: matrix is " +
                                std::to_string(a.n_rows) + "x" + std::to_string(a.n_cols) +
                                ", expected square");
  const std::size_t n = a.n_rows;
  // Structure of A + I: existing entries plus the full diagonal, all unit.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(a.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    pairs.emplace_back(i, i);
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      pairs.emplace_back(i, a.col_idx[k]);
  }
  CsrMatrix s = from_pairs(std::move(pairs), n, n);
  std::vector<double> degree(n);
  for (std::size_t i = 0; i < n; ++i)
    degree[i] = static_cast<double>(s.row_ptr[i + 1] - s.row_ptr[i]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k)
      s.values[k] = 1.0 / std::sqrt(degree[i] * degree[s.col_idx[k]]);
  return s;
}

CsrMatrix transpose(const CsrMatrix& a) {
  CsrMatrix t;
  t.n_rows = a.n_cols;
  t.n_cols = a.n_rows;
  t.row_ptr.assign(a.n_cols + 1, 0);
  t.col_idx.resize(a.nnz());
  t.values.resize(a.nnz());
  for (std::size_t k = 0; k < a.nnz(); ++k) ++t.row_ptr[a.col_idx[k] + 1];
  for (std::size_t j = 0; j < a.n_cols; ++j) t.row_ptr[j + 1] += t.row_ptr[j];
  // Scatter in source row order: output columns come out sorted because rows
  // are visited in ascending order.
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const std::size_t pos = cursor[a.col_idx[k]]++;
      t.col_idx[pos] = i;
      t.values[pos] = a.values[k];
    }
  }
  return t;
}

CsrMatrix extract_block(const CsrMatrix& a, std::size_t r0, std::size_t r1,
                        std::size_t c0, std::size_t c1) {
  if (r0 > r1 || r1 > a.n_rows || c0 > c1 || c1 > a.n_cols)
    throw std::invalid_argument("extract_block: range [" + std::to_string(r0) + "," +
                                std::to_string(r1) + ")x[" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") outside " + std::to_string(a.n_rows) +
                                "x" + std::to_string(a.n_cols));
  CsrMatrix b;
  b.n_rows = r1 - r0;
  b.n_cols = c1 - c0;
  b.row_ptr.assign(b.n_rows + 1, 0);
  for (std::size_t i = r0; i < r1; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const std::size_t c = a.col_idx[k];
      if (c < c0 || c >= c1) continue;
      b.col_idx.push_back(c - c0);
      b.values.push_back(a.values[k]);
      ++b.row_ptr[i - r0 + 1];
    }
  }
  for (std::size_t i = 0; i < b.n_rows; ++i) b.row_ptr[i + 1] += b.row_ptr[i];
  return b;
}

void spmm_add(const CsrMatrix& a, const DenseMatrix& h, DenseMatrix& acc) {
  if (a.n_cols != h.rows())
    throw std::invalid_argument("spmm: sparse is " + std::to_string(a.n_rows) + "x" +
                                std::to_string(a.n_cols) + " but dense has " +
                                std::to_string(h.rows()) + " rows");
  if (acc.rows() != a.n_rows || acc.cols() != h.cols())
    throw std::invalid_argument("spmm: accumulator shape mismatch");
  const std::size_t f = h.cols();
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const double v = a.values[k];
      const std::size_t c = a.col_idx[k];
      for (std::size_t j = 0; j < f; ++j) acc(i, j) += v * h(c, j);
    }
  }
}

DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& h) {
  DenseMatrix acc(a.n_rows, h.cols());
  spmm_add(a, h, acc);
  return acc;
}

DenseMatrix csr_to_dense(const CsrMatrix& a) {
  DenseMatrix d(a.n_rows, a.n_cols);
  for (std::size_t i = 0; i < a.n_rows; ++i)
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      d(i, a.col_idx[k]) = a.values[k];
  return d;
}

CsrMatrix generate_erdos_renyi(std::size_t n, double expected_degree, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_erdos_renyi: n must be positive");
  const double p = expected_degree / static_cast<double>(n);
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("generate_erdos_renyi: edge probability " +
                                std::to_string(p) + " outside [0, 1]");
  Rng rng(seed);
  CsrMatrix a;
  a.n_rows = n;
  a.n_cols = n;
  a.row_ptr.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v) continue;
      if (rng.next_double() < p) {
        a.col_idx.push_back(v);
        a.values.push_back(1.0);
        ++a.row_ptr[u + 1];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) a.row_ptr[i + 1] += a.row_ptr[i];
  return a;
}

}  // namespace cagnet
