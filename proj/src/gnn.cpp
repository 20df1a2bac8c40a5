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
#include "cagnet/gnn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cagnet/rng.hpp"

namespace cagnet {

GnnModel init_glorot(const std::vector<std::size_t>& layer_dims, std::uint64_t seed,
                     double learning_rate) {
  if (layer_dims.size() < 2)
    throw std::invalid_argument("init_glorot: need at least two layer dims, got " +
                                std::to_string(layer_dims.size()));
  for (std::size_t d : layer_dims)
    if (d == 0) throw std::invalid_argument("init_glorot: zero-width layer");
  GnnModel m;
  m.layer_dims = layer_dims;
  m.learning_rate = learning_rate;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t fin = layer_dims[l], fout = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fin + fout));
    DenseMatrix w(fin, fout);
    for (std::size_t i = 0; i < fin; ++i)
      for (std::size_t j = 0; j < fout; ++j) w(i, j) = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
  }
  return m;
}

void validate_model_against(const GnnModel& model, const GraphDataset& data) {
  if (model.layer_dims.size() < 2)
    throw std::invalid_argument("model: need at least two layers");
  if (model.weights.size() + 1 != model.layer_dims.size())
    throw std::invalid_argument("model: weight count disagrees with layer dims");
  for (std::size_t i = 0; i + 1 < model.layer_dims.size(); ++i)
    if (model.weights[i].rows() != model.layer_dims[i] ||
        model.weights[i].cols() != model.layer_dims[i + 1])
      throw std::invalid_argument("model: weight " + std::to_string(i) + " is " +
                                  std::to_string(model.weights[i].rows()) + "x" +
                                  std::to_string(model.weights[i].cols()));
  if (model.layer_dims.front() != data.features.cols())
    throw std::invalid_argument("model: input width " +
                                std::to_string(model.layer_dims.front()) +
                                " but dataset has " + std::to_string(data.features.cols()) +
                                " features");
  if (model.layer_dims.back() != data.num_classes)
    throw std::invalid_argument("model: output width " +
                                std::to_string(model.layer_dims.back()) + " but dataset has " +
                                std::to_string(data.num_classes) + " classes");
}

ForwardTape forward_serial(const GraphDataset& data, const GnnModel& model) {
  validate_model_against(model, data);
  const std::size_t layers = model.num_layers();
  ForwardTape tape;
  tape.h.reserve(layers);
  tape.z.reserve(layers - 1);
  tape.h.push_back(data.features);
  for (std::size_t l = 1; l < layers; ++l) {
    DenseMatrix t = spmm(data.adj_t, tape.h[l - 1]);
    DenseMatrix z = gemm(t, model.weights[l - 1]);
    tape.h.push_back(l + 1 == layers ? log_softmax_rows(z) : relu(z));
    tape.z.push_back(std::move(z));
  }
  return tape;
}

BackwardResult backward_serial(const GraphDataset& data, const GnnModel& model,
                               const ForwardTape& tape) {
  const std::size_t layers = model.num_layers();
  BackwardResult out;
  out.y.resize(layers - 1);
  out.g.resize(layers - 1);
  LossAndGrad lg = nll_loss_and_grad(tape.h[layers - 1], data.labels, data.train_mask);
  out.loss = lg.loss;
  DenseMatrix g = std::move(lg.grad);
  for (std::size_t l = layers - 1; l >= 1; --l) {
    out.g[l - 1] = g;
    // One S = A * G^l product feeds both the weight gradient and the
    // recurrence to the previous layer.
    DenseMatrix s = spmm(data.adj, g);
    out.y[l - 1] = gemm(tape.h[l - 1], s, /*transpose_a=*/true);
    if (l >= 2)
      g = hadamard(gemm(s, model.weights[l - 1], false, /*transpose_b=*/true),
                   relu_prime(tape.z[l - 2]));
  }
  return out;
}

void sgd_step(GnnModel& model, const std::vector<DenseMatrix>& y) {
  if (y.size() != model.weights.size())
    throw std::invalid_argument("sgd_step: " + std::to_string(y.size()) +
                                " gradients for " + std::to_string(model.weights.size()) +
                                " weight matrices");
  for (std::size_t i = 0; i < y.size(); ++i) {
    DenseMatrix& w = model.weights[i];
    if (w.rows() != y[i].rows() || w.cols() != y[i].cols())
      throw std::invalid_argument("sgd_step: gradient " + std::to_string(i) +
                                  " shape mismatch");
    for (std::size_t r = 0; r < w.rows(); ++r)
      for (std::size_t c = 0; c < w.cols(); ++c)
        w(r, c) -= model.learning_rate * y[i](r, c);
  }
}

std::vector<double> train_serial(const GraphDataset& data, GnnModel& model, int epochs) {
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(epochs));
  for (int e = 0; e < epochs; ++e) {
    ForwardTape tape = forward_serial(data, model);
    BackwardResult back = backward_serial(data, model, tape);
    sgd_step(model, back.y);
    losses.push_back(back.loss);
  }
  return losses;
}

double loss_serial(const GraphDataset& data, const GnnModel& model) {
  ForwardTape tape = forward_serial(data, model);
  return nll_loss_and_grad(tape.h.back(), data.labels, data.train_mask).loss;
}

}  // namespace cagnet
