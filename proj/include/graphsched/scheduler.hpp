#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "graphsched/cost_model.hpp"
#include "graphsched/graph.hpp"

namespace graphsched {

// Contiguous frontier segment assigned to one worker as a unit.
struct WorkPackage {
  std::uint64_t start = 0;
  std::uint64_t length = 0;
  double cost = 0.0;
};

enum class PackagingMode { cost_based, static_partition };

struct ExecutionPlan {
  std::vector<WorkPackage> packages;  // dispatch order; heavy-first when cost based
  ThreadBounds bounds;
  PackagingMode mode = PackagingMode::static_partition;
  double work_share = 0.0;  // cost-based target share per package
};

struct SchedulerConfig {
  unsigned sequential_package_limit = 4;  // probe packages before surplus workers are released
  unsigned static_package_multiple = 8;
  unsigned cost_package_multiple = 8;
  double cost_trigger_ratio = 1.1;             // out-degree max/mean threshold
  unsigned cost_trigger_frontier_factor = 64;  // cost-based only below factor * t_max vertices
  unsigned min_static_package = 256;
};

// Splits the frontier into packages.  Cost-based packaging (greedy by the
// per-vertex cost model, heavy-first) triggers for skewed degrees on small
// frontiers; everything else gets an even static partition.
ExecutionPlan generate_packages(std::span<const VertexId> frontier, const Graph& g,
                                const GraphStats& stats, const IterationCosts& costs,
                                const ThreadBounds& bounds, const SchedulerConfig& cfg = {});

// In-place variant for per-iteration callers; reuses the plan's capacity.
void generate_packages_into(ExecutionPlan& plan, std::span<const VertexId> frontier,
                            const Graph& g, const GraphStats& stats, const IterationCosts& costs,
                            const ThreadBounds& bounds, const SchedulerConfig& cfg = {});

enum class PackageExecMode { parallel, sequential_probe, sequential_tail, sequential_only };
const char* to_string(PackageExecMode mode);

struct DispatchEvent {
  unsigned worker = 0;
  PackageExecMode mode = PackageExecMode::sequential_only;
  std::size_t package_index = 0;
  std::uint64_t elapsed_ns = 0;
  unsigned registered = 0;  // workers registered when the package was handed out
};

struct Assignment {
  enum class Kind { run, wait, released, finished };
  Kind kind = Kind::finished;
  std::size_t package_index = 0;
  PackageExecMode mode = PackageExecMode::sequential_only;
  unsigned registered = 0;
  std::uint64_t epoch = 0;  // for wait_for_change
};

// Selective sequential execution over one plan's package set.
//
// Workers register as the pool grants them.  Whenever enough workers are
// registered the remaining packages are dispatched to all of them with the
// parallel kernel.  Below the bound, a single worker probes one package
// sequentially while the rest wait, re-evaluating after every package; after
// the probe limit all but one worker are released and the survivor finishes
// sequentially.
class SelectiveScheduler {
 public:
  SelectiveScheduler(std::size_t package_count, const ThreadBounds& bounds,
                     unsigned sequential_package_limit);

  unsigned register_worker();
  Assignment acquire(unsigned worker);  // never blocks
  void complete(unsigned worker, const Assignment& assignment, std::uint64_t elapsed_ns);
  void wait_for_change(std::uint64_t seen_epoch);  // blocks real workers on Assignment::Kind::wait

  unsigned registered_count() const;
  bool finished() const;
  void abort_remaining();  // drops undispatched packages and wakes waiters
  std::vector<DispatchEvent> take_events();

 private:
  enum class Phase { deciding, parallel, probe_running, tail };

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t package_count_;
  ThreadBounds bounds_;
  unsigned probe_limit_;
  std::size_t next_package_ = 0;
  unsigned registered_ = 0;
  unsigned probes_used_ = 0;
  Phase phase_ = Phase::deciding;
  unsigned tail_worker_ = 0;
  std::uint64_t epoch_ = 0;
  std::vector<DispatchEvent> events_;
};

// Process-wide pool of grantable worker slots; sessions draw extra workers
// from it and return them as the scheduler releases threads.
class WorkerBudget {
 public:
  explicit WorkerBudget(long long slots) : available_(slots) {}
  unsigned try_acquire(unsigned want);
  void release(unsigned count) { available_.fetch_add(count, std::memory_order_relaxed); }
  long long available() const { return available_.load(std::memory_order_relaxed); }

 private:
  std::atomic<long long> available_;
};

// Persistent team of parked threads; run() wakes `count` of them (the caller
// executes slot 0) and joins before returning.
class WorkerTeam {
 public:
  explicit WorkerTeam(unsigned capacity);
  ~WorkerTeam();
  WorkerTeam(const WorkerTeam&) = delete;
  WorkerTeam& operator=(const WorkerTeam&) = delete;

  unsigned capacity() const { return capacity_; }
  void run(unsigned count, const std::function<void(unsigned slot)>& body);

 private:
  void thread_main(unsigned slot);

  unsigned capacity_;
  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  std::uint64_t generation_ = 0;
  unsigned active_ = 0;
  unsigned remaining_ = 0;
  bool shutdown_ = false;
  const std::function<void(unsigned)>* body_ = nullptr;
  std::vector<std::thread> threads_;
};

using PackageKernel = std::function<void(const WorkPackage&, unsigned worker_slot)>;

struct ScheduleResult {
  std::vector<DispatchEvent> dispatch;
  bool parallel_used = false;
  unsigned workers_engaged = 1;
};

// Executes the plan under the selective-sequential protocol.  Requests up to
// bounds.t_max workers (one is the calling thread, extras come from the
// budget); plans that are not parallel-profitable, or for which no extra
// worker could be engaged, run inline on the caller with the sequential
// kernel.
ScheduleResult schedule_and_run(const ExecutionPlan& plan, const PackageKernel& sequential_kernel,
                                const PackageKernel& parallel_kernel, WorkerTeam* team,
                                WorkerBudget* budget, const SchedulerConfig& cfg = {});

}  // namespace graphsched
