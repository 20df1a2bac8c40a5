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

#include <cstdint>
#include <numeric>
#include <string>

#include "cagnet/cost.hpp"
#include "cagnet/ledger.hpp"

using namespace cagnet;

namespace {

std::int64_t term_sum(const CostPrediction& p) {
  std::int64_t s = 0;
  for (const auto& [name, words] : p.word_terms) s += words;
  return s;
}

const CostParams kBase{1000, 8000, 32, 3, 4, 1};

}  // namespace

TEST_CASE("ceil_lg") {
  CHECK(ceil_lg(1) == 0);
  CHECK(ceil_lg(2) == 1);
  CHECK(ceil_lg(3) == 2);
  CHECK(ceil_lg(4) == 2);
  CHECK(ceil_lg(5) == 3);
  CHECK(ceil_lg(8) == 3);
  CHECK(ceil_lg(9) == 4);
  CHECK(ceil_lg(1024) == 10);
  CHECK(ceil_lg(1025) == 11);
  CHECK_THROWS_AS(ceil_lg(0), std::invalid_argument);
}

TEST_CASE("row-block model: pinned spot values and term accounting") {
  CostPrediction p = predict_1d(kBase);
  CHECK(p.words == 195072);  // 3 * (2*1000*32 + 32^2)
  CHECK(p.messages == 30);   // 3 * (ceil_lg 4 + 2*4)
  CHECK(term_sum(p) == p.words);
  REQUIRE(p.word_terms.size() == 2);
  CHECK(p.word_terms[0].second == 192000);
  CHECK(p.word_terms[1].second == 3072);
}

TEST_CASE("replicated row-block model: pinned spot values") {
  CostParams params = kBase;
  params.repl = 2;
  CostPrediction p = predict_15d(params);
  CHECK(p.words == 192000);  // 3 * (2nf/c + 2nfc/P) with c=2, P=4
  CHECK(p.messages == 18);   // 3 * (2P/c^2 + 2 ceil_lg c + ceil_lg P)
  CHECK(term_sum(p) == p.words);

  // c == 1 degenerates to the same broadcast volume as the row-block model
  // minus its weight-gradient term (weights are not replicated per stage).
  CostParams c1 = kBase;
  CostPrediction q = predict_15d(c1);
  CHECK(q.words == 3 * (2 * 1000 * 32 + 2 * 1000 * 32 / 4));
}

TEST_CASE("tile model: pinned spot values") {
  CostParams params = kBase;
  params.ranks = 16;
  CostPrediction p = predict_2d(params);
  CHECK(p.words == 207072);  // 3 * (8nf/4 + 2nnz/4 + f^2)
  CHECK(p.messages == 72);   // 3 * (4*4 + 2 ceil_lg 16)
  CHECK(term_sum(p) == p.words);
}

TEST_CASE("cube model: pinned spot values") {
  CostParams params = kBase;
  params.ranks = 8;
  CostPrediction p = predict_3d(params);
  CHECK(p.words == 300000);  // 3 * (2nnz/4 + 12nf/4)
  CHECK(p.messages == 24);   // 3 * 4 * 2
  CHECK(term_sum(p) == p.words);
}

TEST_CASE("model validation rejects impossible shapes") {
  CostParams bad = kBase;
  bad.n = 0;
  CHECK_THROWS_AS(predict_1d(bad), std::invalid_argument);
  bad = kBase;
  bad.ranks = 0;
  CHECK_THROWS_AS(predict_1d(bad), std::invalid_argument);
  bad = kBase;
  bad.ranks = 5;
  CHECK_THROWS_AS(predict_2d(bad), std::invalid_argument);
  bad = kBase;
  bad.ranks = 6;
  CHECK_THROWS_AS(predict_3d(bad), std::invalid_argument);
  bad = kBase;
  bad.repl = 3;  // does not divide 4 ranks
  CHECK_THROWS_AS(predict_15d(bad), std::invalid_argument);
  bad = kBase;
  bad.layers = 0;
  CHECK_THROWS_AS(predict_1d(bad), std::invalid_argument);
}

TEST_CASE("rectangular-grid layer time decomposes linearly in alpha and beta") {
  CostParams p = kBase;
  p.n = 100;
  p.nnz = 500;
  p.f = 8;
  const double alpha_only = predict_2d_rect_layer(p, 4, 6, 1.0, 0.0);
  const double beta_only = predict_2d_rect_layer(p, 4, 6, 0.0, 1.0);
  CHECK(alpha_only == 2.0);  // gcd(4, 6)
  CHECK(beta_only == doctest::Approx(500.0 / 4 + 800.0 / 6 + 800.0 / 4).epsilon(1e-15));
  const double mixed = predict_2d_rect_layer(p, 4, 6, 2.0, 0.5);
  CHECK(mixed == doctest::Approx(2.0 * alpha_only + 0.5 * beta_only).epsilon(1e-15));
  CHECK_THROWS_AS(predict_2d_rect_layer(p, 0, 6, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("memory footprints: pinned closed forms") {
  MemoryFootprints m = memory_footprints(100, 500, 8, 8, 3, 2, 8);
  CHECK(m.serial == 500 + 100 * 8 * 3);                 // 2900
  CHECK(m.repl15d == 3 * 2 * (500 + 800));              // 7800
  CHECK(m.repl15d_single_adj == 2 * 500 + 3 * 2 * 800); // 5800
  CHECK(m.split3d_peak == 500 + 800 * 2 + 2 * 100 * 8); // 3700
  CHECK_THROWS_AS(memory_footprints(100, 500, 8, 8, 1, 2, 8), std::invalid_argument);
  CHECK_THROWS_AS(memory_footprints(100, 500, 8, 8, 3, 2, 6), std::invalid_argument);
}

TEST_CASE("compare_cost: synthetic ledgers hit the exact row-block prediction") {
  const Strategy strat = {StrategyKind::OneD, 4, 1, 0};
  CostPrediction pred = predict_1d(kBase);

  CommLedger led(4);
  for (int r = 0; r < 4; ++r) {
    led.at(Category::DBcast, r).payload_words =
        static_cast<std::uint64_t>(pred.words) + 1;  // + the epoch loss word
  }
  CostComparison cmp = compare_cost(strat, kBase, led, 1);
  CHECK(cmp.strategy == "1d");
  CHECK(cmp.exact);
  CHECK(cmp.within_band);
  CHECK(cmp.ratio == 1.0);
  CHECK(cmp.predicted_words == pred.words);
  CHECK(cmp.extra_words == 1);

  // Any deviation from the closed form must flag the reconciliation.
  led.at(Category::DBcast, 0).payload_words += 4;
  CostComparison off = compare_cost(strat, kBase, led, 1);
  CHECK_FALSE(off.within_band);
}

TEST_CASE("compare_cost: single-rank runs are degenerate, not compared") {
  const Strategy strat = {StrategyKind::OneD, 1, 1, 0};
  CostParams params = kBase;
  params.ranks = 1;
  CommLedger led(1);
  CostComparison cmp = compare_cost(strat, params, led, 3);
  CHECK(cmp.degenerate);
  CHECK(cmp.within_band);
  CHECK(cmp.measured_words == 0.0);
}

TEST_CASE("report serialization carries totals and terms") {
  CostPrediction p = predict_1d(kBase);
  nlohmann::json j = cost_report(p);
  CHECK(j["words"].get<std::int64_t>() == p.words);
  CHECK(j["messages"].get<std::int64_t>() == p.messages);
  std::int64_t total = 0;
  for (const auto& [key, val] : j["terms"].items()) {
    total += val.get<std::int64_t>();
  }
  CHECK(total == p.words);

  const Strategy strat = {StrategyKind::OneD, 4, 1, 0};
  CommLedger led(4);
  nlohmann::json c = comparison_report(compare_cost(strat, kBase, led, 1));
  CHECK(c.contains("ratio"));
  CHECK(c.contains("within_band"));
  CHECK(c["strategy"].get<std::string>() == "1d");
}
