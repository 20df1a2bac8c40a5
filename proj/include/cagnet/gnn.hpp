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
#ifndef CAGNET_GNN_HPP
#define CAGNET_GNN_HPP

#include <cstdint>
#include <vector>

#include "cagnet/dataset.hpp"
#include "cagnet/dense.hpp"

namespace cagnet {

// Graph convolutional network: layer l computes Z^l = A^T H^{l-1} W^l and
// H^l = sigma(Z^l), with ReLU on hidden layers and row-wise log-softmax on
// the final layer.  layer_dims holds f^0..f^{L-1}; weights[i] maps f^i wide
// embeddings to f^{i+1}.
struct GnnModel {
  std::vector<std::size_t> layer_dims;
  std::vector<DenseMatrix> weights;
  double learning_rate = 1.0;

  std::size_t num_layers() const { return layer_dims.size(); }
};

// Uniform Glorot initialization: W^l entries drawn from
// +-sqrt(6 / (f_in + f_out)), filled row major, layers in order, from a
// single seeded generator.
GnnModel init_glorot(const std::vector<std::size_t>& layer_dims, std::uint64_t seed,
                     double learning_rate = 1.0);

void validate_model_against(const GnnModel& model, const GraphDataset& data);

// Activations recorded during the forward pass: h[0] is the input features,
// h[l] the post-activation embeddings, z[l-1] the pre-activation of layer l.
struct ForwardTape {
  std::vector<DenseMatrix> h;
  std::vector<DenseMatrix> z;
};

ForwardTape forward_serial(const GraphDataset& data, const GnnModel& model);

// One full backward pass from the tape.  y[i] is the gradient for
// weights[i]; g[l-1] the loss gradient with respect to Z^l (the final-layer
// entry is the fused softmax-minus-onehot form).
struct BackwardResult {
  double loss = 0.0;
  std::vector<DenseMatrix> y;
  std::vector<DenseMatrix> g;
};

BackwardResult backward_serial(const GraphDataset& data, const GnnModel& model,
                               const ForwardTape& tape);

// W^l -= learning_rate * Y^l for every layer.
void sgd_step(GnnModel& model, const std::vector<DenseMatrix>& y);

// Full-batch gradient descent; returns the per-epoch loss trace (loss is
// measured on the forward pass of the same epoch, before the update).
std::vector<double> train_serial(const GraphDataset& data, GnnModel& model, int epochs);

// Loss of a single forward pass; used by the finite-difference checks.
double loss_serial(const GraphDataset& data, const GnnModel& model);

}  // namespace cagnet

#endif  // CAGNET_GNN_HPP
