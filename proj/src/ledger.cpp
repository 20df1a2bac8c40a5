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
#include "cagnet/ledger.hpp"

#include <stdexcept>

namespace cagnet {

const char* category_name(Category c) {
  switch (c) {
    case Category::DBcast: return "dbcast";
    case Category::SBcast: return "sbcast";
    case Category::Reduce: return "reduce";
    case Category::AllGather: return "allgather";
  }
  return "?";
}

CommLedger::CommLedger(int ranks) : ranks_(ranks) {
  if (ranks <= 0)
    throw std::invalid_argument("CommLedger: rank count must be positive");
  for (auto& v : counters_) v.assign(static_cast<std::size_t>(ranks), CommCounter{});
}

CommCounter& CommLedger::at(Category c, int rank) {
  return counters_[static_cast<int>(c)].at(static_cast<std::size_t>(rank));
}

const CommCounter& CommLedger::at(Category c, int rank) const {
  return counters_[static_cast<int>(c)].at(static_cast<std::size_t>(rank));
}

CommCounter CommLedger::category_total(Category c) const {
  CommCounter t;
  for (const CommCounter& x : counters_[static_cast<int>(c)]) {
    t.messages += x.messages;
    t.words_sent += x.words_sent;
    t.words_received += x.words_received;
    t.payload_words += x.payload_words;
    t.calls += x.calls;
  }
  return t;
}

std::uint64_t CommLedger::world_words_sent() const {
  std::uint64_t w = 0;
  for (int c = 0; c < kNumCategories; ++c)
    w += category_total(static_cast<Category>(c)).words_sent;
  return w;
}

std::uint64_t CommLedger::world_messages() const {
  std::uint64_t m = 0;
  for (int c = 0; c < kNumCategories; ++c)
    m += category_total(static_cast<Category>(c)).messages;
  return m;
}

std::uint64_t CommLedger::per_rank_max_words() const {
  std::uint64_t best = 0;
  for (int r = 0; r < ranks_; ++r) {
    std::uint64_t w = 0;
    for (int c = 0; c < kNumCategories; ++c)
      w += at(static_cast<Category>(c), r).words_sent;
    if (w > best) best = w;
  }
  return best;
}

CommLedger ledger_delta(const CommLedger& after, const CommLedger& before) {
  if (after.ranks() != before.ranks())
    throw std::invalid_argument("ledger_delta: rank counts differ");
  CommLedger d(after.ranks());
  for (int c = 0; c < kNumCategories; ++c) {
    for (int r = 0; r < after.ranks(); ++r) {
      const CommCounter& a = after.at(static_cast<Category>(c), r);
      const CommCounter& b = before.at(static_cast<Category>(c), r);
      CommCounter& out = d.at(static_cast<Category>(c), r);
      out.messages = a.messages - b.messages;
      out.words_sent = a.words_sent - b.words_sent;
      out.words_received = a.words_received - b.words_received;
      out.payload_words = a.payload_words - b.payload_words;
      out.calls = a.calls - b.calls;
    }
  }
  return d;
}

nlohmann::json ledger_report(const CommLedger& ledger, const ProcessGrid& grid) {
  nlohmann::json per_category;
  for (int c = 0; c < kNumCategories; ++c) {
    const Category cat = static_cast<Category>(c);
    const CommCounter t = ledger.category_total(cat);
    per_category[category_name(cat)] = {
        {"messages", t.messages},      {"words", t.words_sent},
        {"words_received", t.words_received}, {"payload_words", t.payload_words},
        {"calls", t.calls},
    };
  }
  return nlohmann::json{
      {"grid",
       {{"kind", grid_kind_name(grid.kind())},
        {"ranks", grid.ranks()},
        {"rows", grid.rows()},
        {"cols", grid.cols()},
        {"layers", grid.layers()}}},
      {"per_category", per_category},
      {"per_rank_max_words", ledger.per_rank_max_words()},
      {"world_totals",
       {{"messages", ledger.world_messages()}, {"words", ledger.world_words_sent()}}},
  };
}

}  // namespace cagnet
