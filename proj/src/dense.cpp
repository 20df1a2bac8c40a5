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
#include "cagnet/dense.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace cagnet {

namespace {

std::string shape_str(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(who) + ": shape mismatch " + shape_str(a) +
                                " vs " + shape_str(b));
}

}  // namespace

void gemm_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& acc,
              bool transpose_a, bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb)
    throw std::invalid_argument("gemm: inner dimensions disagree, " + shape_str(a) +
                                (transpose_a ? "^T" : "") + " * " + shape_str(b) +
                                (transpose_b ? "^T" : ""));
  if (acc.rows() != m || acc.cols() != n)
    throw std::invalid_argument("gemm: accumulator is " + shape_str(acc) + ", expected " +
                                std::to_string(m) + "x" + std::to_string(n));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = transpose_a ? a(p, i) : a(i, p);
        const double bv = transpose_b ? b(j, p) : b(p, j);
        s += av * bv;
      }
      acc(i, j) += s;
    }
  }
}

DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b,
                 bool transpose_a, bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  DenseMatrix acc(m, n);
  gemm_add(a, b, acc, transpose_a, transpose_b);
  return acc;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "hadamard");
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) * b(i, j);
  return out;
}

DenseMatrix relu(const DenseMatrix& z) {
  DenseMatrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) out(i, j) = z(i, j) > 0.0 ? z(i, j) : 0.0;
  return out;
}

DenseMatrix relu_prime(const DenseMatrix& z) {
  DenseMatrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) out(i, j) = z(i, j) > 0.0 ? 1.0 : 0.0;
  return out;
}

DenseMatrix log_softmax_rows(const DenseMatrix& z) {
  if (z.cols() == 0) throw std::invalid_argument("log_softmax_rows: zero columns");
  DenseMatrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double mx = z(i, 0);
    for (std::size_t j = 1; j < z.cols(); ++j)
      if (z(i, j) > mx) mx = z(i, j);
    double s = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) s += std::exp(z(i, j) - mx);
    const double lse = std::log(s);
    for (std::size_t j = 0; j < z.cols(); ++j) out(i, j) = z(i, j) - mx - lse;
  }
  return out;
}

NllTileResult nll_tile(const DenseMatrix& logp,
                       const std::vector<std::int64_t>& labels,
                       const std::vector<std::uint8_t>& train_mask,
                       std::size_t train_total, std::size_t col_begin) {
  if (labels.size() != logp.rows() || train_mask.size() != logp.rows())
    throw std::invalid_argument("nll_tile: labels/mask length " +
                                std::to_string(labels.size()) + "," +
                                std::to_string(train_mask.size()) + " vs " +
                                std::to_string(logp.rows()) + " rows");
  if (train_total == 0) throw std::invalid_argument("nll_tile: empty training set");
  const double inv = 1.0 / static_cast<double>(train_total);
  NllTileResult r;
  r.grad = DenseMatrix(logp.rows(), logp.cols());
  const std::size_t col_end = col_begin + logp.cols();
  for (std::size_t i = 0; i < logp.rows(); ++i) {
    if (!train_mask[i]) continue;  // gradient row stays zero
    for (std::size_t j = 0; j < logp.cols(); ++j)
      r.grad(i, j) = std::exp(logp(i, j)) * inv;
    const std::int64_t y = labels[i];
    if (y >= 0 && static_cast<std::size_t>(y) >= col_begin &&
        static_cast<std::size_t>(y) < col_end) {
      const std::size_t jl = static_cast<std::size_t>(y) - col_begin;
      r.grad(i, jl) -= inv;
      r.loss_partial += -logp(i, jl);
    }
  }
  return r;
}

LossAndGrad nll_loss_and_grad(const DenseMatrix& logp,
                              const std::vector<std::int64_t>& labels,
                              const std::vector<std::uint8_t>& train_mask) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < train_mask.size(); ++i) {
    if (!train_mask[i]) continue;
    ++count;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logp.cols())
      throw std::invalid_argument("nll_loss_and_grad: label " + std::to_string(labels[i]) +
                                  " at row " + std::to_string(i) + " outside [0, " +
                                  std::to_string(logp.cols()) + ")");
  }
  if (count == 0) throw std::invalid_argument("nll_loss_and_grad: empty training set");
  NllTileResult t = nll_tile(logp, labels, train_mask, count, 0);
  LossAndGrad out;
  out.loss = t.loss_partial / static_cast<double>(count);
  out.grad = std::move(t.grad);
  return out;
}

DenseMatrix transpose_dense(const DenseMatrix& m) {
  DenseMatrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

DenseMatrix dense_block(const DenseMatrix& m, std::size_t r0, std::size_t r1,
                        std::size_t c0, std::size_t c1) {
  if (r0 > r1 || r1 > m.rows() || c0 > c1 || c1 > m.cols())
    throw std::invalid_argument("dense_block: range [" + std::to_string(r0) + "," +
                                std::to_string(r1) + ")x[" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") outside " + shape_str(m));
  DenseMatrix out(r1 - r0, c1 - c0);
  for (std::size_t i = r0; i < r1; ++i)
    for (std::size_t j = c0; j < c1; ++j) out(i - r0, j - c0) = m(i, j);
  return out;
}

void add_inplace(DenseMatrix& acc, const DenseMatrix& x) {
  require_same_shape(acc, x, "add_inplace");
  for (std::size_t i = 0; i < acc.rows(); ++i)
    for (std::size_t j = 0; j < acc.cols(); ++j) acc(i, j) += x(i, j);
}

double frobenius_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

double rel_frobenius(const DenseMatrix& a, const DenseMatrix& ref) {
  require_same_shape(a, ref, "rel_frobenius");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double d = a(i, j) - ref(i, j);
      diff += d * d;
    }
  const double denom = frobenius_norm(ref);
  if (denom == 0.0) return std::sqrt(diff) == 0.0 ? 0.0 : std::sqrt(diff);
  return std::sqrt(diff) / denom;
}

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), a.words() * sizeof(double)) == 0;
}

}  // namespace cagnet
