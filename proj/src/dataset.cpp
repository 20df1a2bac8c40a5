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
#include "cagnet/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cagnet/rng.hpp"

namespace cagnet {

namespace {

void validate_dataset(const GraphDataset& d) {
  validate_csr(d.adj, "GraphDataset.adj");
  validate_csr(d.adj_t, "GraphDataset.adj_t");
  if (d.adj.n_rows != d.n || d.adj.n_cols != d.n || d.adj_t.n_rows != d.n ||
      d.adj_t.n_cols != d.n)
    throw std::invalid_argument("GraphDataset: adjacency shape disagrees with n");
  if (d.features.rows() != d.n)
    throw std::invalid_argument("GraphDataset: " + std::to_string(d.features.rows()) +
                                " feature rows for " + std::to_string(d.n) + " vertices");
  if (d.labels.size() != d.n || d.train_mask.size() != d.n)
    throw std::invalid_argument("GraphDataset: labels/mask length disagrees with n");
  for (std::size_t i = 0; i < d.n; ++i)
    if (d.train_mask[i] &&
        (d.labels[i] < 0 || static_cast<std::size_t>(d.labels[i]) >= d.num_classes))
      throw std::invalid_argument("GraphDataset: label " + std::to_string(d.labels[i]) +
                                  " of training vertex " + std::to_string(i) +
                                  " outside [0, " + std::to_string(d.num_classes) + ")");
}

// Applies `perm` to both orientations by moving entries: out[i][j] =
// in[perm[i]][perm[j]].
CsrMatrix permute_csr(const CsrMatrix& a, const std::vector<std::size_t>& perm,
                      const std::vector<std::size_t>& inv) {
  CsrMatrix out;
  out.n_rows = a.n_rows;
  out.n_cols = a.n_cols;
  out.row_ptr.assign(a.n_rows + 1, 0);
  out.col_idx.reserve(a.nnz());
  out.values.reserve(a.nnz());
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    const std::size_t r = perm[i];
    row.clear();
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k)
      row.emplace_back(inv[a.col_idx[k]], a.values[k]);
    std::sort(row.begin(), row.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [c, v] : row) {
      out.col_idx.push_back(c);
      out.values.push_back(v);
    }
    out.row_ptr[i + 1] = out.row_ptr[i] + row.size();
  }
  return out;
}

}  // namespace

GraphDataset make_dataset(const CsrMatrix& raw_adj, DenseMatrix features,
                          std::vector<std::int64_t> labels,
                          std::vector<std::uint8_t> train_mask,
                          std::size_t num_classes) {
  GraphDataset d;
  d.n = raw_adj.n_rows;
  d.adj = add_self_loops_and_normalize(raw_adj);
  d.adj_t = transpose(d.adj);
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.train_mask = std::move(train_mask);
  d.num_classes = num_classes;
  validate_dataset(d);
  return d;
}

DenseMatrix random_features(std::size_t n, std::size_t f, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix m(n, f);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) m(i, j) = rng.next_double();
  return m;
}

std::vector<std::int64_t> random_labels(std::size_t n, std::size_t classes,
                                        std::uint64_t seed) {
  if (classes == 0) throw std::invalid_argument("random_labels: need at least one class");
  Rng rng(seed);
  std::vector<std::int64_t> labels(n);
  for (std::size_t i = 0; i < n; ++i)
    labels[i] = static_cast<std::int64_t>(rng.bounded(classes));
  return labels;
}

GraphDataset generate_dataset(std::size_t n, double expected_degree,
                              std::size_t num_features, std::size_t num_classes,
                              std::uint64_t seed_graph, std::uint64_t seed_features,
                              std::uint64_t seed_labels) {
  CsrMatrix raw = generate_erdos_renyi(n, expected_degree, seed_graph);
  return make_dataset(raw, random_features(n, num_features, seed_features),
                      random_labels(n, num_classes, seed_labels),
                      std::vector<std::uint8_t>(n, 1), num_classes);
}

PermutedDataset permute_random(const GraphDataset& d, std::uint64_t seed) {
  Rng rng(seed);
  PermutedDataset out;
  out.perm = rng.permutation(d.n);
  std::vector<std::size_t> inv(d.n);
  for (std::size_t i = 0; i < d.n; ++i) inv[out.perm[i]] = i;

  GraphDataset& p = out.dataset;
  p.n = d.n;
  p.num_classes = d.num_classes;
  p.adj = permute_csr(d.adj, out.perm, inv);
  p.adj_t = permute_csr(d.adj_t, out.perm, inv);
  p.features = DenseMatrix(d.n, d.features.cols());
  p.labels.resize(d.n);
  p.train_mask.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const std::size_t r = out.perm[i];
    for (std::size_t j = 0; j < d.features.cols(); ++j)
      p.features(i, j) = d.features(r, j);
    p.labels[i] = d.labels[r];
    p.train_mask[i] = d.train_mask[r];
  }
  validate_dataset(p);
  return out;
}

// --- text formats --------------------------------------------------------

EdgeListFile load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  EdgeListFile f;
  bool have_n = false;
  std::size_t max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank or comment-only line
    if (tok == "%") {
      std::string key;
      std::size_t value = 0;
      if (!(ls >> key >> value) || key != "n")
        throw std::runtime_error("load_edge_list: bad header at line " +
                                 std::to_string(lineno) + " of " + path);
      f.n = value;
      have_n = true;
      continue;
    }
    Edge e{};
    std::size_t u = 0, v = 0;
    std::istringstream pair(line);
    if (!(pair >> u >> v))
      throw std::runtime_error("load_edge_list: expected 'u v' at line " +
                               std::to_string(lineno) + " of " + path);
    e.u = u;
    e.v = v;
    max_index = std::max(max_index, std::max(u, v));
    f.edges.push_back(e);
  }
  if (!have_n) f.n = f.edges.empty() ? 0 : max_index + 1;
  for (const Edge& e : f.edges)
    if (e.u >= f.n || e.v >= f.n)
      throw std::runtime_error("load_edge_list: vertex " +
                               std::to_string(std::max(e.u, e.v)) +
                               " outside declared n=" + std::to_string(f.n) + " in " + path);
  return f;
}

void save_edge_list(const std::string& path, const CsrMatrix& raw) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  out << "% n " << raw.n_rows << "\n";
  for (std::size_t i = 0; i < raw.n_rows; ++i)
    for (std::size_t k = raw.row_ptr[i]; k < raw.row_ptr[i + 1]; ++k)
      out << i << " " << raw.col_idx[k] << "\n";
  if (!out) throw std::runtime_error("save_edge_list: write failed for " + path);
}

DenseMatrix load_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_features_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("load_features_csv: bad number '" + cell + "' at line " +
                                 std::to_string(lineno) + " of " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("load_features_csv: ragged row at line " +
                               std::to_string(lineno) + " of " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_features_csv: empty file " + path);
  DenseMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void save_features_csv(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_features_csv: cannot open " + path);
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      // %.17g round-trips doubles exactly through the loader.
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_features_csv: write failed for " + path);
}

std::vector<std::int64_t> load_labels(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_labels: cannot open " + path);
  std::vector<std::int64_t> labels(n, -1);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string vtx, lab;
    if (!std::getline(ls, vtx, ',') || !std::getline(ls, lab))
      throw std::runtime_error("load_labels: expected 'vertex,label' at line " +
                               std::to_string(lineno) + " of " + path);
    std::size_t v = 0;
    std::int64_t y = 0;
    try {
      v = static_cast<std::size_t>(std::stoull(vtx));
      y = static_cast<std::int64_t>(std::stoll(lab));
    } catch (const std::exception&) {
      throw std::runtime_error("load_labels: bad pair at line " + std::to_string(lineno) +
                               " of " + path);
    }
    if (v >= n)
      throw std::runtime_error("load_labels: vertex " + std::to_string(v) +
                               " outside [0, " + std::to_string(n) + ") at line " +
                               std::to_string(lineno) + " of " + path);
    labels[v] = y;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] < 0)
      throw std::runtime_error("load_labels: no label for vertex " + std::to_string(i) +
                               " in " + path);
  return labels;
}

void save_labels(const std::string& path, const std::vector<std::int64_t>& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_labels: cannot open " + path);
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << "," << labels[i] << "\n";
  if (!out) throw std::runtime_error("save_labels: write failed for " + path);
}

GraphDataset load_dataset(const std::string& edges_path, const std::string& features_path,
                          const std::string& labels_path, bool undirected) {
  EdgeListFile ef = load_edge_list(edges_path);
  CsrMatrix raw = from_edge_list(ef.edges, ef.n, undirected);
  DenseMatrix features = load_features_csv(features_path);
  if (features.rows() != ef.n)
    throw std::runtime_error("load_dataset: " + std::to_string(features.rows()) +
                             " feature rows for n=" + std::to_string(ef.n));
  std::vector<std::int64_t> labels = load_labels(labels_path, ef.n);
  std::int64_t max_label = 0;
  for (auto y : labels) max_label = std::max(max_label, y);
  return make_dataset(raw, std::move(features), std::move(labels),
                      std::vector<std::uint8_t>(ef.n, 1),
                      static_cast<std::size_t>(max_label) + 1);
}

}  // namespace cagnet
