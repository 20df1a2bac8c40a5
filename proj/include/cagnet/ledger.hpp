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
#ifndef CAGNET_LEDGER_HPP
#define CAGNET_LEDGER_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "cagnet/grid.hpp"

namespace cagnet {

// Traffic classes, following the usual breakdown of distributed GNN layers:
// dense embedding broadcasts, sparse adjacency broadcasts, reductions
// (all-reduce / reduce-scatter) and all-gathers.
enum class Category : int { DBcast = 0, SBcast = 1, Reduce = 2, AllGather = 3 };
inline constexpr int kNumCategories = 4;
const char* category_name(Category c);

// Per-rank, per-category counters.  Two conventions are kept side by side:
//   - messages/words_sent/words_received meter the modelled transport
//     (naive tree-free broadcast from the root; exact-chunked ring for
//     all-reduce, reduce-scatter and all-gather);
//   - payload_words charges every participant the full payload size m,
//     which is the convention analytic alpha-beta formulas use.
// Counters only ever increase; a group of size one increments nothing.
struct CommCounter {
  std::uint64_t messages = 0;
  std::uint64_t words_sent = 0;
  std::uint64_t words_received = 0;
  std::uint64_t payload_words = 0;
  std::uint64_t calls = 0;
};

class CommLedger {
 public:
  CommLedger() = default;
  explicit CommLedger(int ranks);

  int ranks() const { return ranks_; }
  CommCounter& at(Category c, int rank);
  const CommCounter& at(Category c, int rank) const;

  // Sum over ranks within one category.
  CommCounter category_total(Category c) const;
  std::uint64_t world_words_sent() const;
  std::uint64_t world_messages() const;
  // Largest per-rank words_sent total across all categories.
  std::uint64_t per_rank_max_words() const;

 private:
  int ranks_ = 0;
  std::array<std::vector<CommCounter>, kNumCategories> counters_;
};

// Difference of two ledger snapshots (after - before), used to isolate the
// traffic of a single operation in tests and reports.
CommLedger ledger_delta(const CommLedger& after, const CommLedger& before);

// Summary with world totals, per-category counters and the per-rank maximum.
nlohmann::json ledger_report(const CommLedger& ledger, const ProcessGrid& grid);

}  // namespace cagnet

#endif  // CAGNET_LEDGER_HPP
