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
#include "cagnet/runtime.hpp"

#include <algorithm>
#include <cstring>
#include <thread>

namespace cagnet {

namespace {
// Internal unwind signal for ranks that must stop because the run failed
// elsewhere; never escapes SimRuntime::run.
struct RankAborted {};
}  // namespace

const char* scheduler_name(Scheduler s) {
  return s == Scheduler::RoundRobin ? "round_robin" : "concurrent";
}

SimRuntime::SimRuntime(const ProcessGrid& grid, Scheduler sched)
    : grid_(grid), sched_(sched), ledger_(grid.ranks()) {
  sites_.assign(grid_.groups().size(), Site{});
  status_.assign(static_cast<std::size_t>(grid_.ranks()), RankStatus{});
  mem_peak_.assign(static_cast<std::size_t>(grid_.ranks()), 0);
  prereduce_.assign(static_cast<std::size_t>(grid_.ranks()), {});
}

bool SimRuntime::eligible_locked(int rank) const {
  const RankStatus& rs = status_[static_cast<std::size_t>(rank)];
  switch (rs.st) {
    case RankState::Running:
    case RankState::WaitTurn:
      return true;
    case RankState::WaitIdle:
      return !sites_[static_cast<std::size_t>(rs.site)].ready;
    case RankState::WaitReady: {
      const Site& s = sites_[static_cast<std::size_t>(rs.site)];
      return s.ready && s.gen == rs.gen;
    }
    case RankState::Done:
      return false;
  }
  return false;
}

bool SimRuntime::progress_possible_locked() const {
  for (int r = 0; r < grid_.ranks(); ++r) {
    const RankState st = status_[static_cast<std::size_t>(r)].st;
    if (st == RankState::Done) continue;
    if (st == RankState::Running || st == RankState::WaitTurn) return true;
    if (eligible_locked(r)) return true;
  }
  return false;
}

void SimRuntime::fail_locked(const std::string& message) {
  if (!failed_) {
    failed_ = true;
    error_ = message;
  }
  cv_.notify_all();
}

void SimRuntime::declare_deadlock_locked() {
  std::string msg = "deadlock: no rank can make progress (";
  for (int r = 0; r < grid_.ranks(); ++r) {
    const RankStatus& rs = status_[static_cast<std::size_t>(r)];
    const char* st = "running";
    switch (rs.st) {
      case RankState::Running: st = "running"; break;
      case RankState::WaitTurn: st = "wait-turn"; break;
      case RankState::WaitIdle: st = "wait-idle"; break;
      case RankState::WaitReady: st = "wait-ready"; break;
      case RankState::Done: st = "done"; break;
    }
    if (r) msg += ", ";
    msg += "rank " + std::to_string(r) + " " + st;
    if (rs.st == RankState::WaitIdle || rs.st == RankState::WaitReady)
      msg += " at group " + std::to_string(rs.site);
  }
  msg += ")";
  fail_locked(msg);
}

void SimRuntime::advance_turn_locked(int from) {
  const int p = grid_.ranks();
  for (int step = 1; step <= p; ++step) {
    const int cand = (from + step) % p;
    const RankState st = status_[static_cast<std::size_t>(cand)].st;
    const bool schedulable =
        st == RankState::WaitTurn ||
        ((st == RankState::WaitIdle || st == RankState::WaitReady) && eligible_locked(cand));
    if (schedulable) {
      turn_ = cand;
      cv_.notify_all();
      return;
    }
  }
  for (int r = 0; r < p; ++r)
    if (status_[static_cast<std::size_t>(r)].st != RankState::Done) {
      declare_deadlock_locked();
      return;
    }
}

template <class Pred>
void SimRuntime::block_until(std::unique_lock<std::mutex>& lk, int rank, RankState st,
                             int site_id, std::uint64_t gen, Pred pred) {
  (void)lk;
  if (failed_) throw RankAborted{};
  if (pred() && rr_ok(rank)) return;
  status_[static_cast<std::size_t>(rank)] = RankStatus{st, site_id, gen};
  if (rr() && turn_ == rank) advance_turn_locked(rank);
  while (true) {
    if (failed_) {
      status_[static_cast<std::size_t>(rank)] = RankStatus{RankState::Done, -1, 0};
      throw RankAborted{};
    }
    if (pred() && rr_ok(rank)) break;
    if (!progress_possible_locked()) {
      declare_deadlock_locked();
      status_[static_cast<std::size_t>(rank)] = RankStatus{RankState::Done, -1, 0};
      throw RankAborted{};
    }
    cv_.wait(lk);
  }
  status_[static_cast<std::size_t>(rank)] = RankStatus{RankState::Running, -1, 0};
}

void SimRuntime::charge_locked(Site& s, const Group& g, int member, Category cat) {
  const std::uint64_t gsize = static_cast<std::uint64_t>(g.size());
  const std::uint64_t m = s.payload_m;
  const std::uint64_t r = static_cast<std::uint64_t>(member);
  CommCounter& c = ledger_.at(cat, g.members[static_cast<std::size_t>(member)]);
  c.calls += 1;
  c.payload_words += m;
  switch (s.desc.op) {
    case OpKind::BcastDense:
    case OpKind::BcastCsr:
      if (member == s.desc.root) {
        c.words_sent += m * (gsize - 1);
        c.messages += gsize - 1;
      } else {
        c.words_received += m;
      }
      break;
    case OpKind::AllReduce: {
      // Exact-chunked ring: reduce-scatter then all-gather, chunk j carrying
      // m/g words plus one straggler word when j < m % g.
      const auto chunk = [&](std::uint64_t j) {
        return m / gsize + (j < m % gsize ? 1 : 0);
      };
      c.words_sent += 2 * m - chunk((r + 1) % gsize) - chunk((r + 2) % gsize);
      c.words_received += 2 * m - chunk(r) - chunk((r + 1) % gsize);
      c.messages += 2 * (gsize - 1);
      break;
    }
    case OpKind::ReduceScatter: {
      const std::uint64_t slice = s.slot_words[static_cast<std::size_t>(member)];
      c.words_sent += m - slice;
      c.words_received += m - slice;
      c.messages += gsize - 1;
      break;
    }
    case OpKind::AllGather: {
      c.words_sent += m - s.slot_words[(static_cast<std::size_t>(member) + 1) % g.size()];
      c.words_received += m - s.slot_words[static_cast<std::size_t>(member)];
      c.messages += gsize - 1;
      break;
    }
  }
}

template <class Put, class Fold, class Take>
void SimRuntime::collective(int rank, const Group& g, const OpDesc& desc, Put put,
                            Fold fold, Take take) {
  const int gsize = static_cast<int>(g.size());
  const int member = static_cast<int>(g.index_of(rank));
  std::unique_lock<std::mutex> lk(mu_);
  Site& s = sites_.at(static_cast<std::size_t>(g.id));
  // Wait out the previous round's drain before joining a new one.
  block_until(lk, rank, RankState::WaitIdle, g.id, 0, [&] { return !s.ready; });
  if (!s.has_desc) {
    s.desc = desc;
    s.has_desc = true;
    s.slots.assign(g.size(), DenseMatrix{});
    s.slot_words.assign(g.size(), 0);
  } else if (!(s.desc == desc)) {
    fail_locked("collective mismatch at group " + std::to_string(g.id) + ": rank " +
                std::to_string(rank) +
                " arrived with a different operation, category, root or shape "
                "than the first arriver");
    status_[static_cast<std::size_t>(rank)] = RankStatus{RankState::Done, -1, 0};
    throw RankAborted{};
  }
  put(s, member);
  const std::uint64_t my_gen = s.gen;
  s.arrived += 1;
  if (s.arrived == gsize) {
    fold(s);
    s.ready = true;
    cv_.notify_all();
  } else {
    block_until(lk, rank, RankState::WaitReady, g.id, my_gen,
                [&] { return s.ready && s.gen == my_gen; });
  }
  charge_locked(s, g, member, desc.cat);
  take(s, member);
  s.departed += 1;
  if (s.departed == gsize) {
    const std::uint64_t next = s.gen + 1;
    s = Site{};
    s.gen = next;
    cv_.notify_all();
  }
}

void SimRuntime::reset_run_state_locked() {
  const std::size_t p = static_cast<std::size_t>(grid_.ranks());
  sites_.assign(grid_.groups().size(), Site{});
  status_.assign(p, RankStatus{rr() ? RankState::WaitTurn : RankState::Running, -1, 0});
  exc_.assign(p, nullptr);
  failed_ = false;
  error_.clear();
  turn_ = 0;
  prereduce_.assign(p, {});
  mem_peak_.assign(p, 0);
}

void SimRuntime::thread_main(int rank, const std::function<void(RankContext&)>& body) {
  RankContext ctx(*this, rank);
  try {
    if (rr()) {
      std::unique_lock<std::mutex> lk(mu_);
      block_until(lk, rank, RankState::WaitTurn, -1, 0, [] { return true; });
    }
    body(ctx);
    std::unique_lock<std::mutex> lk(mu_);
    status_[static_cast<std::size_t>(rank)] = RankStatus{RankState::Done, -1, 0};
    if (rr() && turn_ == rank) advance_turn_locked(rank);
    cv_.notify_all();
  } catch (const RankAborted&) {
    std::lock_guard<std::mutex> lk(mu_);
    status_[static_cast<std::size_t>(rank)] = RankStatus{RankState::Done, -1, 0};
    cv_.notify_all();
  } catch (...) {
    std::lock_guard<std::mutex> lk(mu_);
    exc_[static_cast<std::size_t>(rank)] = std::current_exception();
    status_[static_cast<std::size_t>(rank)] = RankStatus{RankState::Done, -1, 0};
    if (!failed_) {
      failed_ = true;
      error_ = "rank " + std::to_string(rank) + " threw an exception";
    }
    cv_.notify_all();
  }
}

void SimRuntime::run(const std::function<void(RankContext&)>& body) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    reset_run_state_locked();
  }
  const int p = grid_.ranks();
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(p));
  for (int r = 0; r < p; ++r)
    threads.emplace_back([this, r, &body] { thread_main(r, body); });
  for (std::thread& t : threads) t.join();
  for (int r = 0; r < p; ++r)
    if (exc_[static_cast<std::size_t>(r)])
      std::rethrow_exception(exc_[static_cast<std::size_t>(r)]);
  if (failed_) throw SimError(error_);
}

std::vector<std::uint64_t> SimRuntime::prereduction_totals() const {
  std::size_t n = 0;
  for (const auto& v : prereduce_) n = std::max(n, v.size());
  std::vector<std::uint64_t> totals(n, 0);
  for (const auto& v : prereduce_)
    for (std::size_t i = 0; i < v.size(); ++i) totals[i] += v[i];
  return totals;
}

const ProcessGrid& RankContext::grid() const { return rt_.grid(); }

DenseMatrix RankContext::broadcast(const Group& g, int root_rank, const DenseMatrix* mine,
                                   Category cat) {
  (void)g.index_of(rank_);
  const int root_member = static_cast<int>(g.index_of(root_rank));
  if ((rank_ == root_rank) != (mine != nullptr))
    throw SimError("broadcast: the payload must be supplied by the root and only the root");
  if (g.size() == 1) return *mine;
  SimRuntime::OpDesc desc{SimRuntime::OpKind::BcastDense, cat, root_member, 0, 0, 0};
  DenseMatrix out;
  rt_.collective(
      rank_, g, desc,
      [&](SimRuntime::Site& s, int member) {
        if (member == root_member) s.dense_result = *mine;
      },
      [&](SimRuntime::Site& s) { s.payload_m = s.dense_result.words(); },
      [&](SimRuntime::Site& s, int) { out = s.dense_result; });
  return out;
}

CsrMatrix RankContext::broadcast_csr(const Group& g, int root_rank, const CsrMatrix* mine,
                                     Category cat) {
  (void)g.index_of(rank_);
  const int root_member = static_cast<int>(g.index_of(root_rank));
  if ((rank_ == root_rank) != (mine != nullptr))
    throw SimError("broadcast_csr: the payload must be supplied by the root and only the root");
  if (g.size() == 1) return *mine;
  SimRuntime::OpDesc desc{SimRuntime::OpKind::BcastCsr, cat, root_member, 0, 0, 0};
  CsrMatrix out;
  rt_.collective(
      rank_, g, desc,
      [&](SimRuntime::Site& s, int member) {
        if (member == root_member) s.csr_result = *mine;
      },
      [&](SimRuntime::Site& s) { s.payload_m = s.csr_result.words(); },
      [&](SimRuntime::Site& s, int) { out = s.csr_result; });
  return out;
}

DenseMatrix RankContext::all_reduce(const Group& g, const DenseMatrix& mine, Category cat) {
  (void)g.index_of(rank_);
  if (g.size() == 1) return mine;
  SimRuntime::OpDesc desc{SimRuntime::OpKind::AllReduce, cat, -1,
                          static_cast<std::uint64_t>(mine.rows()),
                          static_cast<std::uint64_t>(mine.cols()), 0};
  DenseMatrix out;
  rt_.collective(
      rank_, g, desc,
      [&](SimRuntime::Site& s, int member) { s.slots[static_cast<std::size_t>(member)] = mine; },
      [&](SimRuntime::Site& s) {
        s.payload_m = s.slots[0].words();
        s.dense_result = s.slots[0];
        for (std::size_t i = 1; i < s.slots.size(); ++i) add_inplace(s.dense_result, s.slots[i]);
      },
      [&](SimRuntime::Site& s, int) { out = s.dense_result; });
  return out;
}

double RankContext::all_reduce_scalar(const Group& g, double value, Category cat) {
  if (g.size() == 1) {
    (void)g.index_of(rank_);
    return value;
  }
  DenseMatrix m(1, 1);
  m(0, 0) = value;
  return all_reduce(g, m, cat)(0, 0);
}

DenseMatrix RankContext::reduce_scatter_rows(const Group& g, const DenseMatrix& mine,
                                             const std::vector<int>& row_counts,
                                             Category cat) {
  (void)g.index_of(rank_);
  if (row_counts.size() != g.size())
    throw SimError("reduce_scatter_rows: one row count per group member is required");
  std::size_t total = 0;
  for (int rc : row_counts) {
    if (rc < 0) throw SimError("reduce_scatter_rows: negative row count");
    total += static_cast<std::size_t>(rc);
  }
  if (total != mine.rows())
    throw SimError("reduce_scatter_rows: row counts must cover the matrix rows exactly");
  if (g.size() == 1) return mine;
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the partition
  for (int rc : row_counts) {
    h ^= static_cast<std::uint64_t>(rc);
    h *= 1099511628211ull;
  }
  SimRuntime::OpDesc desc{SimRuntime::OpKind::ReduceScatter, cat, -1,
                          static_cast<std::uint64_t>(mine.rows()),
                          static_cast<std::uint64_t>(mine.cols()), h};
  DenseMatrix out;
  rt_.collective(
      rank_, g, desc,
      [&](SimRuntime::Site& s, int member) {
        if (s.partition.empty()) {
          s.partition = row_counts;
        } else if (s.partition != row_counts) {
          rt_.fail_locked("reduce_scatter_rows: partition mismatch at group " +
                          std::to_string(g.id));
          throw RankAborted{};
        }
        s.slots[static_cast<std::size_t>(member)] = mine;
      },
      [&](SimRuntime::Site& s) {
        s.payload_m = s.slots[0].words();
        s.dense_result = s.slots[0];
        for (std::size_t i = 1; i < s.slots.size(); ++i) add_inplace(s.dense_result, s.slots[i]);
        for (std::size_t i = 0; i < s.partition.size(); ++i)
          s.slot_words[i] = static_cast<std::uint64_t>(s.partition[i]) * s.dense_result.cols();
      },
      [&](SimRuntime::Site& s, int member) {
        std::size_t r0 = 0;
        for (int i = 0; i < member; ++i) r0 += static_cast<std::size_t>(s.partition[static_cast<std::size_t>(i)]);
        const std::size_t r1 = r0 + static_cast<std::size_t>(s.partition[static_cast<std::size_t>(member)]);
        out = dense_block(s.dense_result, r0, r1, 0, s.dense_result.cols());
      });
  return out;
}

DenseMatrix RankContext::all_gather_rows(const Group& g, const DenseMatrix& mine,
                                         Category cat) {
  (void)g.index_of(rank_);
  if (g.size() == 1) return mine;
  SimRuntime::OpDesc desc{SimRuntime::OpKind::AllGather, cat, -1, 0,
                          static_cast<std::uint64_t>(mine.cols()), 0};
  DenseMatrix out;
  rt_.collective(
      rank_, g, desc,
      [&](SimRuntime::Site& s, int member) {
        s.slots[static_cast<std::size_t>(member)] = mine;
        s.slot_words[static_cast<std::size_t>(member)] = mine.words();
      },
      [&](SimRuntime::Site& s) {
        std::size_t rows = 0;
        std::uint64_t total = 0;
        for (const DenseMatrix& sl : s.slots) {
          rows += sl.rows();
          total += sl.words();
        }
        const std::size_t cols = static_cast<std::size_t>(s.desc.cols);
        s.dense_result = DenseMatrix(rows, cols);
        std::size_t off = 0;
        for (const DenseMatrix& sl : s.slots) {
          std::memcpy(s.dense_result.data() + off * cols, sl.data(),
                      sl.words() * sizeof(double));
          off += sl.rows();
        }
        s.payload_m = total;
      },
      [&](SimRuntime::Site& s, int) { out = s.dense_result; });
  return out;
}

void RankContext::note_prereduction(std::uint64_t words) {
  std::lock_guard<std::mutex> lk(rt_.mu_);
  rt_.prereduce_[static_cast<std::size_t>(rank_)].push_back(words);
}

void RankContext::note_memory_words(std::uint64_t words) {
  std::lock_guard<std::mutex> lk(rt_.mu_);
  std::uint64_t& peak = rt_.mem_peak_[static_cast<std::size_t>(rank_)];
  if (words > peak) peak = words;
}

}  // namespace cagnet
