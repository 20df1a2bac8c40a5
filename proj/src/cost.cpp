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
#include "cagnet/cost.hpp"

#include <numeric>
#include <stdexcept>

#include "cagnet/grid.hpp"

namespace cagnet {

namespace {

void require_positive(const CostParams& p) {
  if (p.n <= 0 || p.f <= 0 || p.layers <= 0 || p.ranks <= 0 || p.repl <= 0 || p.nnz < 0)
    throw std::invalid_argument("cost model: all parameters must be positive");
}

CostPrediction finish(std::vector<std::pair<std::string, std::int64_t>> terms,
                      std::int64_t messages) {
  CostPrediction out;
  out.word_terms = std::move(terms);
  out.messages = messages;
  for (const auto& [label, words] : out.word_terms) out.words += words;
  return out;
}

}  // namespace

std::int64_t ceil_lg(std::int64_t p) {
  if (p <= 0) throw std::invalid_argument("ceil_lg: positive argument required");
  std::int64_t k = 0;
  while ((std::int64_t{1} << k) < p) ++k;
  return k;
}

CostPrediction predict_1d(const CostParams& p) {
  require_positive(p);
  const std::int64_t nf = p.n * p.f;
  return finish({{"embedding_broadcast", p.layers * 2 * nf},
                 {"weight_gradient_reduce", p.layers * p.f * p.f}},
                p.layers * (ceil_lg(p.ranks) + 2 * p.ranks));
}

CostPrediction predict_15d(const CostParams& p) {
  require_positive(p);
  if (p.ranks % p.repl != 0)
    throw std::invalid_argument("predict_15d: repl must divide ranks");
  const std::int64_t nf = p.n * p.f;
  const std::int64_t c = p.repl;
  return finish({{"embedding_broadcast", p.layers * 2 * nf / c},
                 {"partial_reduce", p.layers * 2 * nf * c / p.ranks}},
                p.layers * (2 * p.ranks / (c * c) + 2 * ceil_lg(c) + ceil_lg(p.ranks)));
}

CostPrediction predict_2d(const CostParams& p) {
  require_positive(p);
  const std::int64_t s = exact_isqrt(static_cast<int>(p.ranks), "predict_2d");
  const std::int64_t nf = p.n * p.f;
  return finish({{"dense_panels", p.layers * 8 * nf / s},
                 {"sparse_panels", p.layers * 2 * p.nnz / s},
                 {"weight_gradient_gather", p.layers * p.f * p.f}},
                p.layers * (4 * s + 2 * ceil_lg(p.ranks)));
}

CostPrediction predict_3d(const CostParams& p) {
  require_positive(p);
  const std::int64_t s = exact_icbrt(static_cast<int>(p.ranks), "predict_3d");
  const std::int64_t s2 = s * s;
  const std::int64_t nf = p.n * p.f;
  return finish({{"sparse_panels", p.layers * 2 * p.nnz / s2},
                 {"dense_panels", p.layers * 12 * nf / s2}},
                p.layers * 4 * s);
}

double predict_2d_rect_layer(const CostParams& p, std::int64_t p_rows,
                             std::int64_t p_cols, double alpha, double beta) {
  require_positive(p);
  if (p_rows <= 0 || p_cols <= 0)
    throw std::invalid_argument("predict_2d_rect_layer: grid sides must be positive");
  const double nf = static_cast<double>(p.n) * static_cast<double>(p.f);
  const double nnz = static_cast<double>(p.nnz);
  return alpha * static_cast<double>(std::gcd(p_rows, p_cols)) +
         beta * (nnz / static_cast<double>(p_rows) + nf / static_cast<double>(p_cols) +
                 nf / static_cast<double>(p_rows));
}

MemoryFootprints memory_footprints(std::int64_t n, std::int64_t nnz, std::int64_t f,
                                   std::int64_t fmax, std::int64_t dims,
                                   std::int64_t repl, std::int64_t ranks) {
  if (n <= 0 || f <= 0 || fmax <= 0 || dims < 2 || repl <= 0 || ranks <= 0 || nnz < 0)
    throw std::invalid_argument("memory_footprints: bad parameters");
  MemoryFootprints m;
  m.serial = nnz + n * f * dims;
  m.repl15d = dims * repl * (nnz + n * f);
  m.repl15d_single_adj = repl * nnz + dims * repl * n * f;
  m.split3d_peak =
      nnz + n * f * (dims - 1) +
      static_cast<std::int64_t>(exact_icbrt(static_cast<int>(ranks), "memory_footprints")) *
          n * fmax;
  return m;
}

CostComparison compare_cost(const Strategy& strat, const CostParams& p,
                            const CommLedger& ledger, int epochs) {
  if (epochs <= 0) throw std::invalid_argument("compare_cost: positive epochs required");
  if (ledger.ranks() != static_cast<int>(p.ranks))
    throw std::invalid_argument("compare_cost: ledger has " + std::to_string(ledger.ranks()) +
                                " ranks, parameters say " + std::to_string(p.ranks));
  CostComparison c;
  c.strategy = strategy_kind_name(strat.kind);
  switch (strat.kind) {
    case StrategyKind::OneD:
      c.predicted_words = predict_1d(p).words;
      c.extra_words = 1;  // the scalar loss all-reduce
      c.exact = true;
      break;
    case StrategyKind::OneFiveD:
      c.predicted_words = predict_15d(p).words;
      // Replicated weight-gradient all-reduce plus the scalar loss.
      c.extra_words = p.layers * p.f * p.f + 1;
      c.exact = true;
      break;
    case StrategyKind::TwoD:
      c.predicted_words = predict_2d(p).words;
      break;
    case StrategyKind::ThreeD:
      c.predicted_words = predict_3d(p).words;
      break;
  }

  std::uint64_t payload = 0;
  for (int cat = 0; cat < kNumCategories; ++cat)
    payload += ledger.category_total(static_cast<Category>(cat)).payload_words;
  c.measured_words = static_cast<double>(payload) /
                     (static_cast<double>(p.ranks) * static_cast<double>(epochs));

  if (p.ranks == 1) {
    // Nothing is metered on one rank; the comparison is vacuous.
    c.degenerate = true;
    c.within_band = true;
    c.ratio = 0.0;
    return c;
  }
  const double expected = static_cast<double>(c.predicted_words + c.extra_words);
  c.ratio = c.measured_words / expected;
  c.within_band = c.exact ? c.measured_words == expected
                          : c.ratio >= 0.5 && c.ratio <= 2.0;
  return c;
}

nlohmann::json cost_report(const CostPrediction& pred) {
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [label, words] : pred.word_terms) terms[label] = words;
  return nlohmann::json{
      {"words", pred.words}, {"messages", pred.messages}, {"terms", terms}};
}

nlohmann::json comparison_report(const CostComparison& c) {
  return nlohmann::json{{"strategy", c.strategy},
                        {"predicted_words", c.predicted_words},
                        {"extra_words", c.extra_words},
                        {"measured_words", c.measured_words},
                        {"ratio", c.ratio},
                        {"exact", c.exact},
                        {"degenerate", c.degenerate},
                        {"within_band", c.within_band}};
}

}  // namespace cagnet
