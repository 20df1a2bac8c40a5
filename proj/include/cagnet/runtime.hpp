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
#ifndef CAGNET_RUNTIME_HPP
#define CAGNET_RUNTIME_HPP

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "cagnet/csr.hpp"
#include "cagnet/dense.hpp"
#include "cagnet/grid.hpp"
#include "cagnet/ledger.hpp"

namespace cagnet {

// How rank bodies are interleaved.  Concurrent lets every rank thread run
// freely (they serialize only inside collectives); RoundRobin passes a baton
// so at most one rank executes user code at a time, switching at collective
// boundaries.  Both must produce bitwise identical results and ledgers:
// reduction folds always run in ascending member order and every counter
// increment is a per-rank closed formula.
enum class Scheduler { Concurrent, RoundRobin };

const char* scheduler_name(Scheduler s);

// Raised by SimRuntime::run when a collective is misused or cannot complete.
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

class SimRuntime;

// Per-rank handle passed to the user body.  All collectives are rendezvous
// points: every member of the group must arrive before any leaves.  A group
// of size one short-circuits to a plain copy and meters nothing, so a run on
// one rank degenerates bitwise to the serial code path.
class RankContext {
 public:
  RankContext(SimRuntime& rt, int rank) : rt_(rt), rank_(rank) {}

  int rank() const { return rank_; }
  const ProcessGrid& grid() const;

  // One-to-all broadcast inside `g`; `mine` must be non-null exactly on the
  // root.  Every member returns a copy of the root payload.
  DenseMatrix broadcast(const Group& g, int root_rank, const DenseMatrix* mine,
                        Category cat);
  CsrMatrix broadcast_csr(const Group& g, int root_rank, const CsrMatrix* mine,
                          Category cat);

  // Elementwise sum over the group, every member receiving the full result.
  // The fold copies the lowest-indexed member's contribution and adds the
  // rest in ascending member order.
  DenseMatrix all_reduce(const Group& g, const DenseMatrix& mine, Category cat);
  double all_reduce_scalar(const Group& g, double value, Category cat);

  // Elementwise sum over the group scattered by rows: member m receives the
  // row_counts[m] rows starting at the prefix sum of row_counts.  All members
  // must pass identical row_counts summing to mine.rows().
  DenseMatrix reduce_scatter_rows(const Group& g, const DenseMatrix& mine,
                                  const std::vector<int>& row_counts, Category cat);

  // Concatenates the members' row blocks in ascending member order; column
  // counts must agree.
  DenseMatrix all_gather_rows(const Group& g, const DenseMatrix& mine, Category cat);

  // Records the size of a partial-result buffer that exists just before a
  // reduction.  Calls are numbered per rank in program order; the runtime
  // sums the k-th call across ranks so tests can bound transient footprint.
  void note_prereduction(std::uint64_t words);

  // Updates this rank's resident-words high-water mark.
  void note_memory_words(std::uint64_t words);

 private:
  SimRuntime& rt_;
  int rank_;
};

// Deterministic multi-rank executor.  One OS thread per rank, one global
// mutex; collectives rendezvous at per-group sites.  Misuse (two ranks
// disagreeing on the operation at a site) and deadlock (every live rank
// blocked with no one able to wake) are detected and reported as SimError
// rather than hanging.
class SimRuntime {
 public:
  SimRuntime(const ProcessGrid& grid, Scheduler sched);

  const ProcessGrid& grid() const { return grid_; }
  Scheduler scheduler() const { return sched_; }

  // Runs `body` once on every rank and joins.  Throws the lowest-ranked user
  // exception if any body threw, or SimError for runtime-detected misuse.
  // The ledger keeps accumulating across calls; gauges reset per call.
  void run(const std::function<void(RankContext&)>& body);

  CommLedger& ledger() { return ledger_; }
  const CommLedger& ledger() const { return ledger_; }
  void reset_ledger() { ledger_ = CommLedger(grid_.ranks()); }

  // Sum of the k-th note_prereduction call across ranks, from the last run.
  std::vector<std::uint64_t> prereduction_totals() const;
  // Per-rank high-water marks from the last run.
  const std::vector<std::uint64_t>& memory_peaks() const { return mem_peak_; }

 private:
  friend class RankContext;

  enum class OpKind : int { BcastDense, BcastCsr, AllReduce, ReduceScatter, AllGather };
  enum class RankState : int { Running, WaitTurn, WaitIdle, WaitReady, Done };

  struct OpDesc {
    OpKind op{};
    Category cat{};
    int root = -1;             // group member index; -1 for rootless ops
    std::uint64_t rows = 0, cols = 0, extra = 0;
    friend bool operator==(const OpDesc&, const OpDesc&) = default;
  };

  struct RankStatus {
    RankState st = RankState::Running;
    int site = -1;
    std::uint64_t gen = 0;
  };

  // One rendezvous site per group.  Lifecycle per round: members arrive and
  // deposit (first arriver pins the descriptor; mismatches abort the run);
  // the last arriver folds the slots in ascending member order and marks the
  // site ready; members then depart with their share; the last departer
  // resets the site and bumps the generation.  A member that loops around to
  // the next round while the site is still draining waits for the reset.
  struct Site {
    std::uint64_t gen = 0;
    int arrived = 0;
    int departed = 0;
    bool ready = false;
    bool has_desc = false;
    OpDesc desc;
    std::vector<DenseMatrix> slots;
    std::vector<std::uint64_t> slot_words;
    DenseMatrix dense_result;
    CsrMatrix csr_result;
    std::vector<int> partition;     // reduce_scatter row counts
    std::uint64_t payload_m = 0;    // transport payload per the op's convention
  };

  bool rr() const { return sched_ == Scheduler::RoundRobin; }
  bool rr_ok(int rank) const { return !rr() || turn_ == rank; }

  bool eligible_locked(int rank) const;
  bool progress_possible_locked() const;
  void declare_deadlock_locked();
  void fail_locked(const std::string& message);
  // Picks the next schedulable rank after `from` (cyclically) and hands it
  // the baton; declares deadlock when nobody can move and someone is live.
  void advance_turn_locked(int from);
  // Parks `rank` until pred() holds and it may run; throws RankAborted when
  // the run has failed.
  template <class Pred>
  void block_until(std::unique_lock<std::mutex>& lk, int rank, RankState st,
                   int site_id, std::uint64_t gen, Pred pred);

  void thread_main(int rank, const std::function<void(RankContext&)>& body);
  void reset_run_state_locked();

  // Shared collective entry: drain-wait, descriptor pin/check, deposit via
  // `put`, fold via `fold` on the last arrival, rendezvous, then per-rank
  // ledger charges and result extraction via `take` on departure.
  template <class Put, class Fold, class Take>
  void collective(int rank, const Group& g, const OpDesc& desc, Put put,
                  Fold fold, Take take);

  void charge_locked(Site& s, const Group& g, int member, Category cat);

  ProcessGrid grid_;
  Scheduler sched_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Site> sites_;
  std::vector<RankStatus> status_;
  std::vector<std::exception_ptr> exc_;
  bool failed_ = false;
  std::string error_;
  int turn_ = 0;

  CommLedger ledger_;
  std::vector<std::vector<std::uint64_t>> prereduce_;
  std::vector<std::uint64_t> mem_peak_;
};

}  // namespace cagnet

#endif  // CAGNET_RUNTIME_HPP
