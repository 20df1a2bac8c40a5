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
#ifndef CAGNET_DATASET_HPP
#define CAGNET_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cagnet/csr.hpp"
#include "cagnet/dense.hpp"

namespace cagnet {

// A training-ready graph: normalized adjacency in both orientations, vertex
// features, labels and the training mask.  adj_t is the exact transpose of
// adj (bitwise on values); forward propagation contracts against adj_t, the
// gradient recurrence against adj, and keeping the two an exact transpose
// pair is what makes the backward pass the true adjoint of the forward pass.
struct GraphDataset {
  std::size_t n = 0;
  CsrMatrix adj;
  CsrMatrix adj_t;
  DenseMatrix features;               // n x f0
  std::vector<std::int64_t> labels;   // one class id per vertex
  std::vector<std::uint8_t> train_mask;
  std::size_t num_classes = 0;

  std::size_t train_count() const {
    std::size_t c = 0;
    for (auto m : train_mask) c += m ? 1 : 0;
    return c;
  }
};

// Normalizes the raw adjacency (self-loops + symmetric degree scaling),
// derives adj_t by transposition and validates all cross-field invariants.
GraphDataset make_dataset(const CsrMatrix& raw_adj, DenseMatrix features,
                          std::vector<std::int64_t> labels,
                          std::vector<std::uint8_t> train_mask,
                          std::size_t num_classes);

// Everything random from four independent seeds; the mask marks every vertex
// as training (full-graph supervision).
GraphDataset generate_dataset(std::size_t n, double expected_degree,
                              std::size_t num_features, std::size_t num_classes,
                              std::uint64_t seed_graph, std::uint64_t seed_features,
                              std::uint64_t seed_labels);

DenseMatrix random_features(std::size_t n, std::size_t f, std::uint64_t seed);
std::vector<std::int64_t> random_labels(std::size_t n, std::size_t classes,
                                        std::uint64_t seed);

// Relabels vertices by a seeded permutation for load balancing: position i of
// the result holds the data of original vertex perm[i].  Adjacency values are
// moved, never recomputed, so a round trip restores the original bit for bit.
struct PermutedDataset {
  GraphDataset dataset;
  std::vector<std::size_t> perm;  // result row i <- original row perm[i]
};
PermutedDataset permute_random(const GraphDataset& d, std::uint64_t seed);

// --- text formats ------------------------------------------------------
// Edge list: one "u v" pair per line, '#' starts a comment, optional header
// line "% n <count>" pins the vertex count (otherwise max index + 1).
struct EdgeListFile {
  std::vector<Edge> edges;
  std::size_t n = 0;
};
EdgeListFile load_edge_list(const std::string& path);
void save_edge_list(const std::string& path, const CsrMatrix& raw);

// Features: one CSV row of doubles per vertex.
DenseMatrix load_features_csv(const std::string& path);
void save_features_csv(const std::string& path, const DenseMatrix& m);

// Labels: one "vertex,label" pair per line; every vertex must be covered.
std::vector<std::int64_t> load_labels(const std::string& path, std::size_t n);
void save_labels(const std::string& path, const std::vector<std::int64_t>& labels);

GraphDataset load_dataset(const std::string& edges_path, const std::string& features_path,
                          const std::string& labels_path, bool undirected);

}  // namespace cagnet

#endif  // CAGNET_DATASET_HPP
