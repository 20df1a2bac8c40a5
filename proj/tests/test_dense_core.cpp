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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "cagnet/dense.hpp"
#include "cagnet/rng.hpp"

using namespace cagnet;

namespace {

DenseMatrix from_rows(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> vals) {
  DenseMatrix m(rows, cols);
  std::size_t k = 0;
  for (double v : vals) m.data()[k++] = v;
  REQUIRE(k == rows * cols);
  return m;
}

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  DenseMatrix m(rows, cols);
  Rng rng(seed);
  for (std::size_t k = 0; k < rows * cols; ++k) m.data()[k] = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("dense matrix basics: shape, identity, words") {
  DenseMatrix m(3, 4, 2.5);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 4);
  CHECK(m.words() == 12);
  CHECK(m(2, 3) == 2.5);
  m(1, 2) = -7.0;
  CHECK(m.data()[1 * 4 + 2] == -7.0);

  DenseMatrix eye = DenseMatrix::identity(3);
  CHECK(eye(0, 0) == 1.0);
  CHECK(eye(0, 1) == 0.0);
  DenseMatrix a = random_matrix(3, 5, 42);
  CHECK(bitwise_equal(gemm(eye, a), a));
}

TEST_CASE("gemm: hand-computed product and transpose flags") {
  DenseMatrix a = from_rows(2, 3, {1, 2, 3, 4, 5, 6});
  DenseMatrix b = from_rows(3, 2, {7, 8, 9, 10, 11, 12});
  DenseMatrix c = gemm(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 2);
  CHECK(c(0, 0) == 58.0);
  CHECK(c(0, 1) == 64.0);
  CHECK(c(1, 0) == 139.0);
  CHECK(c(1, 1) == 154.0);

  DenseMatrix at = from_rows(3, 2, {1, 4, 2, 5, 3, 6});
  DenseMatrix bt = from_rows(2, 3, {7, 9, 11, 8, 10, 12});
  CHECK(bitwise_equal(gemm(at, b, true, false), c));
  CHECK(bitwise_equal(gemm(a, bt, false, true), c));
  CHECK(bitwise_equal(gemm(at, bt, true, true), c));
}

TEST_CASE("gemm: (AB)^T == B^T A^T bitwise (same contraction order)") {
  DenseMatrix a = random_matrix(5, 7, 1);
  DenseMatrix b = random_matrix(7, 4, 2);
  DenseMatrix lhs = transpose_dense(gemm(a, b));
  DenseMatrix rhs = gemm(b, a, true, true);
  CHECK(bitwise_equal(lhs, rhs));
}

TEST_CASE("gemm_add: accumulates into the target; shape mismatch throws") {
  DenseMatrix a = from_rows(2, 2, {1, 0, 0, 1});
  DenseMatrix b = from_rows(2, 2, {5, 6, 7, 8});
  DenseMatrix acc(2, 2, 1.0);
  gemm_add(a, b, acc);
  CHECK(acc(0, 0) == 6.0);
  CHECK(acc(1, 1) == 9.0);

  DenseMatrix bad(3, 2);
  CHECK_THROWS_AS(gemm_add(a, bad, acc), std::invalid_argument);
  DenseMatrix bad_acc(2, 3);
  CHECK_THROWS_AS(gemm_add(a, b, bad_acc), std::invalid_argument);
}

TEST_CASE("hadamard / relu / relu_prime") {
  DenseMatrix a = from_rows(2, 2, {1, -2, 3, 0});
  DenseMatrix b = from_rows(2, 2, {4, 5, -6, 7});
  DenseMatrix h = hadamard(a, b);
  CHECK(h(0, 0) == 4.0);
  CHECK(h(0, 1) == -10.0);
  CHECK(h(1, 0) == -18.0);
  CHECK(h(1, 1) == 0.0);

  DenseMatrix r = relu(a);
  CHECK(r(0, 0) == 1.0);
  CHECK(r(0, 1) == 0.0);
  CHECK(r(1, 0) == 3.0);
  CHECK(r(1, 1) == 0.0);

  // Subgradient convention at zero: derivative is 0.
  DenseMatrix rp = relu_prime(a);
  CHECK(rp(0, 0) == 1.0);
  CHECK(rp(0, 1) == 0.0);
  CHECK(rp(1, 0) == 1.0);
  CHECK(rp(1, 1) == 0.0);
}

TEST_CASE("log_softmax_rows: hand values, normalization, shift stability") {
  DenseMatrix z = from_rows(1, 2, {0, 0});
  DenseMatrix lp = log_softmax_rows(z);
  CHECK(lp(0, 0) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(lp(0, 1) == doctest::Approx(std::log(0.5)).epsilon(1e-15));

  DenseMatrix zr = random_matrix(6, 5, 3);
  DenseMatrix lpr = log_softmax_rows(zr);
  for (std::size_t i = 0; i < lpr.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < lpr.cols(); ++j) s += std::exp(lpr(i, j));
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }

  // The max-shift keeps huge logits finite.
  DenseMatrix big = from_rows(1, 2, {1000.0, 998.0});
  DenseMatrix lb = log_softmax_rows(big);
  CHECK(std::isfinite(lb(0, 0)));
  CHECK(std::isfinite(lb(0, 1)));
  CHECK(lb(0, 0) == doctest::Approx(-std::log1p(std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("nll_loss_and_grad: hand-checked loss and fused gradient") {
  DenseMatrix z = from_rows(2, 2, {1, 0, 0, 2});
  DenseMatrix lp = log_softmax_rows(z);
  std::vector<std::int64_t> labels = {0, 1};
  std::vector<std::uint8_t> mask = {1, 1};
  LossAndGrad lg = nll_loss_and_grad(lp, labels, mask);
  CHECK(lg.loss == doctest::Approx(-(lp(0, 0) + lp(1, 1)) / 2.0).epsilon(1e-15));
  // Gradient is (softmax - onehot) / train_count on training rows.
  CHECK(lg.grad(0, 0) == doctest::Approx((std::exp(lp(0, 0)) - 1.0) / 2.0).epsilon(1e-14));
  CHECK(lg.grad(0, 1) == doctest::Approx(std::exp(lp(0, 1)) / 2.0).epsilon(1e-14));
  CHECK(lg.grad(1, 0) == doctest::Approx(std::exp(lp(1, 0)) / 2.0).epsilon(1e-14));
  CHECK(lg.grad(1, 1) == doctest::Approx((std::exp(lp(1, 1)) - 1.0) / 2.0).epsilon(1e-14));

  // Masked-out rows contribute neither loss nor gradient.
  std::vector<std::uint8_t> mask0 = {1, 0};
  LossAndGrad lg0 = nll_loss_and_grad(lp, labels, mask0);
  CHECK(lg0.loss == doctest::Approx(-lp(0, 0)).epsilon(1e-15));
  CHECK(lg0.grad(1, 0) == 0.0);
  CHECK(lg0.grad(1, 1) == 0.0);
}

TEST_CASE("nll_tile: column tiles compose to the full-width result") {
  DenseMatrix z = random_matrix(6, 4, 7);
  DenseMatrix lp = log_softmax_rows(z);
  std::vector<std::int64_t> labels = {0, 3, 2, 1, 3, 0};
  std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 1};
  const std::size_t train_total = 5;

  NllTileResult full = nll_tile(lp, labels, mask, train_total, 0);

  DenseMatrix left = dense_block(lp, 0, 6, 0, 2);
  DenseMatrix right = dense_block(lp, 0, 6, 2, 4);
  NllTileResult t0 = nll_tile(left, labels, mask, train_total, 0);
  NllTileResult t1 = nll_tile(right, labels, mask, train_total, 2);

  CHECK(t0.loss_partial + t1.loss_partial ==
        doctest::Approx(full.loss_partial).epsilon(1e-15));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(t0.grad(i, j) == full.grad(i, j));
      CHECK(t1.grad(i, j) == full.grad(i, j + 2));
    }
  }

  // A zero-width tile is legal and contributes nothing.
  DenseMatrix none = dense_block(lp, 0, 6, 4, 4);
  NllTileResult te = nll_tile(none, labels, mask, train_total, 4);
  CHECK(te.loss_partial == 0.0);
  CHECK(te.grad.rows() == 6);
  CHECK(te.grad.cols() == 0);
}

TEST_CASE("nll_loss_and_grad agrees bitwise with the full-width tile") {
  DenseMatrix z = random_matrix(5, 3, 9);
  DenseMatrix lp = log_softmax_rows(z);
  std::vector<std::int64_t> labels = {2, 0, 1, 1, 2};
  std::vector<std::uint8_t> mask = {1, 0, 1, 1, 1};
  LossAndGrad lg = nll_loss_and_grad(lp, labels, mask);
  NllTileResult tile = nll_tile(lp, labels, mask, 4, 0);
  CHECK(lg.loss == tile.loss_partial / 4.0);
  CHECK(bitwise_equal(lg.grad, tile.grad));
}

TEST_CASE("transpose_dense and dense_block") {
  DenseMatrix a = random_matrix(4, 6, 11);
  DenseMatrix att = transpose_dense(transpose_dense(a));
  CHECK(bitwise_equal(att, a));
  DenseMatrix at = transpose_dense(a);
  CHECK(at.rows() == 6);
  CHECK(at.cols() == 4);
  CHECK(at(2, 3) == a(3, 2));

  DenseMatrix blk = dense_block(a, 1, 3, 2, 5);
  CHECK(blk.rows() == 2);
  CHECK(blk.cols() == 3);
  CHECK(blk(0, 0) == a(1, 2));
  CHECK(blk(1, 2) == a(2, 4));
  CHECK_THROWS_AS(dense_block(a, 3, 2, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(dense_block(a, 0, 5, 0, 1), std::invalid_argument);
}

TEST_CASE("add_inplace and norms") {
  DenseMatrix a = from_rows(1, 2, {3, 4});
  DenseMatrix b = from_rows(1, 2, {1, -1});
  add_inplace(a, b);
  CHECK(a(0, 0) == 4.0);
  CHECK(a(0, 1) == 3.0);
  CHECK(frobenius_norm(from_rows(1, 2, {3, 4})) == doctest::Approx(5.0).epsilon(1e-15));

  DenseMatrix c(2, 2);
  CHECK_THROWS_AS(add_inplace(a, c), std::invalid_argument);
}

TEST_CASE("rel_frobenius: relative distance with zero-reference guard") {
  DenseMatrix a = from_rows(1, 2, {1, 0});
  DenseMatrix ref = from_rows(1, 2, {2, 0});
  CHECK(rel_frobenius(a, ref) == doctest::Approx(0.5).epsilon(1e-15));
  DenseMatrix z(1, 2);
  CHECK(rel_frobenius(z, z) == 0.0);
  // Nonzero distance from a zero reference still reads as an error.
  CHECK(rel_frobenius(a, z) > 0.0);
}

TEST_CASE("bitwise_equal distinguishes shape, payload and signed zero") {
  DenseMatrix a = from_rows(1, 2, {0.0, 1.0});
  DenseMatrix b = from_rows(1, 2, {0.0, 1.0});
  CHECK(bitwise_equal(a, b));
  b(0, 0) = -0.0;
  CHECK_FALSE(bitwise_equal(a, b));
  DenseMatrix c = from_rows(2, 1, {0.0, 1.0});
  CHECK_FALSE(bitwise_equal(a, c));
}
