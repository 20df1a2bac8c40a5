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
#ifndef CAGNET_DENSE_HPP
#define CAGNET_DENSE_HPP

#include <cstdint>
#include <cstddef>
#include <vector>

namespace cagnet {

// Row-major dense matrix of 64-bit reals.  All kernels that touch it use a
// fixed, documented accumulation order (ascending k / ascending column), so
// a distributed run on one rank executes the exact same instruction stream
// as the serial reference and reproduces it bit for bit.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  // Word count as metered by the communication ledger: one word per entry.
  std::size_t words() const { return rows_ * cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ActivationKind { ReLU, LogSoftmaxRows };

struct LossAndGrad {
  double loss = 0.0;      // mean negative log-likelihood over the training set
  DenseMatrix grad;       // dL/dZ at the output layer, zero on non-training rows
};

// acc += op(a) * op(b); op is transpose when the corresponding flag is set.
// Contraction index ascends; each output element accumulates into a register
// first and is added to acc once.
void gemm_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& acc,
              bool transpose_a = false, bool transpose_b = false);

// Returns op(a) * op(b), implemented as gemm_add into a zero matrix.
DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b,
                 bool transpose_a = false, bool transpose_b = false);

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix relu(const DenseMatrix& z);
// Derivative convention: relu_prime(0) == 0.
DenseMatrix relu_prime(const DenseMatrix& z);

// Row-wise log-softmax with the standard max-shift rescaling; rows of the
// result exponentiate-and-sum to 1.
DenseMatrix log_softmax_rows(const DenseMatrix& z);

// Mean negative log-likelihood over training rows plus the fused gradient
// (softmax - onehot) / |T| on training rows, zero elsewhere.  `logp` holds
// log-probabilities (output of log_softmax_rows), `labels[i]` the class of
// row i, `train_mask[i]` whether row i contributes.
LossAndGrad nll_loss_and_grad(const DenseMatrix& logp,
                              const std::vector<std::int64_t>& labels,
                              const std::vector<std::uint8_t>& train_mask);

// Tile-level worker shared by the serial path and the distributed layer
// implementations.  The tile covers columns [col_begin, col_begin+cols) of
// the global log-probability matrix and `labels`/`train_mask` are aligned
// with its rows.  Returns the *undivided* loss partial sum; grad entries are
// already divided by `train_total`.
struct NllTileResult {
  double loss_partial = 0.0;
  DenseMatrix grad;
};
NllTileResult nll_tile(const DenseMatrix& logp,
                       const std::vector<std::int64_t>& labels,
                       const std::vector<std::uint8_t>& train_mask,
                       std::size_t train_total, std::size_t col_begin);

DenseMatrix transpose_dense(const DenseMatrix& m);

// Copy of the half-open block [r0, r1) x [c0, c1).
DenseMatrix dense_block(const DenseMatrix& m, std::size_t r0, std::size_t r1,
                        std::size_t c0, std::size_t c1);

// acc += x, elementwise; shapes must match.
void add_inplace(DenseMatrix& acc, const DenseMatrix& x);

double frobenius_norm(const DenseMatrix& m);

// ||a - b||_F / ||ref||_F with a zero-reference guard; used by the
// serial-vs-distributed verification gates.
double rel_frobenius(const DenseMatrix& a, const DenseMatrix& ref);

// Shape equality plus memcmp over the payload.
bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace cagnet

#endif  // CAGNET_DENSE_HPP
