#include "graphsched/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>

namespace graphsched {

namespace {

std::uint64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void static_plan(ExecutionPlan& plan, std::uint64_t frontier_size, const ThreadBounds& bounds,
                 const IterationCosts& costs, const SchedulerConfig& cfg) {
  plan.mode = PackagingMode::static_partition;

  std::uint64_t target = 1;
  if (bounds.parallel_profitable) {
    target = static_cast<std::uint64_t>(cfg.static_package_multiple) * bounds.t_max;
    std::uint64_t floor_cap =
        std::max<std::uint64_t>(1, frontier_size / std::max(1u, cfg.min_static_package));
    target = std::clamp<std::uint64_t>(target, 1, floor_cap);
  }
  target = std::min(target, frontier_size);

  double per_vertex = costs.total_seq;
  std::uint64_t base = frontier_size / target;
  std::uint64_t rem = frontier_size % target;
  std::uint64_t start = 0;
  for (std::uint64_t i = 0; i < target; ++i) {
    std::uint64_t len = base + (i < rem ? 1 : 0);
    plan.packages.push_back({start, len, per_vertex * static_cast<double>(len)});
    start += len;
  }
}

}  // namespace

ExecutionPlan generate_packages(std::span<const VertexId> frontier, const Graph& g,
                                const GraphStats& stats, const IterationCosts& costs,
                                const ThreadBounds& bounds, const SchedulerConfig& cfg) {
  ExecutionPlan plan;
  generate_packages_into(plan, frontier, g, stats, costs, bounds, cfg);
  return plan;
}

void generate_packages_into(ExecutionPlan& plan, std::span<const VertexId> frontier,
                            const Graph& g, const GraphStats& stats, const IterationCosts& costs,
                            const ThreadBounds& bounds, const SchedulerConfig& cfg) {
  if (frontier.empty()) throw std::invalid_argument("generate_packages: empty frontier");
  plan.packages.clear();
  plan.bounds = bounds;
  plan.work_share = 0.0;

  double ratio = stats.mean_out_degree > 0.0
                     ? static_cast<double>(stats.max_out_degree) / stats.mean_out_degree
                     : 0.0;
  bool small_frontier =
      frontier.size() < static_cast<std::uint64_t>(cfg.cost_trigger_frontier_factor) *
                            std::max(1u, bounds.t_max);
  bool cost_based = bounds.parallel_profitable && ratio > cfg.cost_trigger_ratio && small_frontier;
  if (!cost_based) {
    static_plan(plan, frontier.size(), bounds, costs, cfg);
    return;
  }

  const std::uint64_t target =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(cfg.cost_package_multiple) * bounds.t_max);

  std::vector<double> vertex_cost(frontier.size());
  double total = 0.0;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    double c = costs.vertex_cost_seq +
               static_cast<double>(g.out_degree_unchecked(frontier[i])) * costs.edge_cost_seq;
    vertex_cost[i] = c;
    total += c;
  }
  if (!(total > 0.0)) {
    static_plan(plan, frontier.size(), bounds, costs, cfg);
    return;
  }

  plan.mode = PackagingMode::cost_based;
  const double share = total / static_cast<double>(target);
  plan.work_share = share;

  // Greedy accumulation against the share.  A vertex that would push the
  // package past twice the share closes the current one first, which keeps
  // every multi-vertex package under 2x the share while the package count
  // stays within the target.
  std::uint64_t start = 0;
  std::uint64_t len = 0;
  double cum = 0.0;
  auto close = [&]() {
    if (len == 0) return;
    plan.packages.push_back({start, len, cum});
    start += len;
    len = 0;
    cum = 0.0;
  };
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    double c = vertex_cost[i];
    if (len > 0 && cum + c > 2.0 * share) close();
    ++len;
    cum += c;
    if (cum >= share) close();
  }
  close();

  std::stable_sort(plan.packages.begin(), plan.packages.end(),
                   [](const WorkPackage& a, const WorkPackage& b) { return a.cost > b.cost; });
}

const char* to_string(PackageExecMode mode) {
  switch (mode) {
    case PackageExecMode::parallel: return "parallel";
    case PackageExecMode::sequential_probe: return "seq-probe";
    case PackageExecMode::sequential_tail: return "seq-tail";
    case PackageExecMode::sequential_only: return "seq-only";
  }
  return "?";
}

SelectiveScheduler::SelectiveScheduler(std::size_t package_count, const ThreadBounds& bounds,
                                       unsigned sequential_package_limit)
    : package_count_(package_count),
      bounds_(bounds),
      probe_limit_(sequential_package_limit) {}

unsigned SelectiveScheduler::register_worker() {
  std::lock_guard lock(mu_);
  unsigned id = registered_++;
  ++epoch_;
  cv_.notify_all();
  return id;
}

Assignment SelectiveScheduler::acquire(unsigned worker) {
  std::lock_guard lock(mu_);
  Assignment a;
  a.registered = registered_;
  a.epoch = epoch_;
  if (next_package_ >= package_count_) {
    a.kind = Assignment::Kind::finished;
    return a;
  }
  switch (phase_) {
    case Phase::parallel:
      a.kind = Assignment::Kind::run;
      a.mode = PackageExecMode::parallel;
      a.package_index = next_package_++;
      return a;
    case Phase::tail:
      if (worker == tail_worker_) {
        a.kind = Assignment::Kind::run;
        a.mode = PackageExecMode::sequential_tail;
        a.package_index = next_package_++;
      } else {
        a.kind = Assignment::Kind::released;
      }
      return a;
    case Phase::probe_running:
      a.kind = Assignment::Kind::wait;
      return a;
    case Phase::deciding:
      if (registered_ >= bounds_.t_min && bounds_.parallel_profitable) {
        phase_ = Phase::parallel;
        ++epoch_;
        cv_.notify_all();
        a.kind = Assignment::Kind::run;
        a.mode = PackageExecMode::parallel;
        a.package_index = next_package_++;
        return a;
      }
      if (probes_used_ < probe_limit_) {
        ++probes_used_;
        phase_ = Phase::probe_running;
        a.kind = Assignment::Kind::run;
        a.mode = PackageExecMode::sequential_probe;
        a.package_index = next_package_++;
        return a;
      }
      phase_ = Phase::tail;
      tail_worker_ = worker;
      ++epoch_;
      cv_.notify_all();
      a.kind = Assignment::Kind::run;
      a.mode = PackageExecMode::sequential_tail;
      a.package_index = next_package_++;
      return a;
  }
  a.kind = Assignment::Kind::finished;
  return a;
}

void SelectiveScheduler::complete(unsigned worker, const Assignment& assignment,
                                  std::uint64_t elapsed_ns) {
  std::lock_guard lock(mu_);
  events_.push_back(
      {worker, assignment.mode, assignment.package_index, elapsed_ns, assignment.registered});
  if (assignment.mode == PackageExecMode::sequential_probe && phase_ == Phase::probe_running) {
    phase_ = Phase::deciding;  // re-evaluate the worker situation
  }
  ++epoch_;
  cv_.notify_all();
}

void SelectiveScheduler::wait_for_change(std::uint64_t seen_epoch) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return epoch_ != seen_epoch; });
}

unsigned SelectiveScheduler::registered_count() const {
  std::lock_guard lock(mu_);
  return registered_;
}

bool SelectiveScheduler::finished() const {
  std::lock_guard lock(mu_);
  return next_package_ >= package_count_;
}

void SelectiveScheduler::abort_remaining() {
  std::lock_guard lock(mu_);
  next_package_ = package_count_;
  if (phase_ == Phase::probe_running) phase_ = Phase::deciding;
  ++epoch_;
  cv_.notify_all();
}

std::vector<DispatchEvent> SelectiveScheduler::take_events() {
  std::lock_guard lock(mu_);
  return std::move(events_);
}

unsigned WorkerBudget::try_acquire(unsigned want) {
  long long current = available_.load(std::memory_order_relaxed);
  while (true) {
    if (current <= 0 || want == 0) return 0;
    long long grant = std::min<long long>(current, want);
    if (available_.compare_exchange_weak(current, current - grant, std::memory_order_relaxed)) {
      return static_cast<unsigned>(grant);
    }
  }
}

WorkerTeam::WorkerTeam(unsigned capacity) : capacity_(std::max(1u, capacity)) {
  threads_.reserve(capacity_ - 1);
  for (unsigned slot = 1; slot < capacity_; ++slot) {
    threads_.emplace_back([this, slot] { thread_main(slot); });
  }
}

WorkerTeam::~WorkerTeam() {
  {
    std::lock_guard lock(mu_);
    shutdown_ = true;
    ++generation_;
  }
  cv_work_.notify_all();
  for (std::thread& t : threads_) t.join();
}

void WorkerTeam::thread_main(unsigned slot) {
  std::uint64_t seen = 0;
  while (true) {
    const std::function<void(unsigned)>* body = nullptr;
    {
      std::unique_lock lock(mu_);
      cv_work_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
      if (shutdown_) return;
      seen = generation_;
      if (slot >= active_) continue;  // not part of this dispatch
      body = body_;
    }
    (*body)(slot);
    {
      std::lock_guard lock(mu_);
      if (--remaining_ == 0) cv_done_.notify_all();
    }
  }
}

void WorkerTeam::run(unsigned count, const std::function<void(unsigned)>& body) {
  count = std::clamp(count, 1u, capacity_);
  if (count == 1) {
    body(0);
    return;
  }
  {
    std::lock_guard lock(mu_);
    body_ = &body;
    active_ = count;
    remaining_ = count - 1;  // slot 0 runs on the caller
    ++generation_;
  }
  cv_work_.notify_all();
  body(0);
  {
    std::unique_lock lock(mu_);
    cv_done_.wait(lock, [&] { return remaining_ == 0; });
    body_ = nullptr;
    active_ = 0;
  }
}

ScheduleResult schedule_and_run(const ExecutionPlan& plan, const PackageKernel& sequential_kernel,
                                const PackageKernel& parallel_kernel, WorkerTeam* team,
                                WorkerBudget* budget, const SchedulerConfig& cfg) {
  ScheduleResult result;
  if (plan.packages.empty()) return result;

  auto run_inline = [&]() {
    for (std::size_t i = 0; i < plan.packages.size(); ++i) {
      std::uint64_t t0 = now_ns();
      sequential_kernel(plan.packages[i], 0);
      result.dispatch.push_back({0, PackageExecMode::sequential_only, i, now_ns() - t0, 1});
    }
  };

  unsigned want = plan.bounds.parallel_profitable
                      ? std::min(plan.bounds.t_max, team ? team->capacity() : 1u)
                      : 1u;
  if (!plan.bounds.parallel_profitable || team == nullptr || want <= 1) {
    run_inline();
    return result;
  }

  unsigned extra = budget ? budget->try_acquire(want - 1) : want - 1;
  unsigned engaged = 1 + extra;
  if (engaged == 1) {
    run_inline();
    return result;
  }

  SelectiveScheduler scheduler(plan.packages.size(), plan.bounds, cfg.sequential_package_limit);
  // The budget grant is synchronous, so every engaged worker counts as
  // assigned before the team wakes; lazily granting pools drive
  // register_worker() themselves.
  for (unsigned i = 0; i < engaged; ++i) scheduler.register_worker();
  std::atomic<bool> parallel_used{false};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker_body = [&](unsigned slot) {
    try {
      while (true) {
        Assignment a = scheduler.acquire(slot);
        if (a.kind == Assignment::Kind::finished || a.kind == Assignment::Kind::released) break;
        if (a.kind == Assignment::Kind::wait) {
          scheduler.wait_for_change(a.epoch);
          continue;
        }
        const WorkPackage& pkg = plan.packages[a.package_index];
        std::uint64_t t0 = now_ns();
        if (a.mode == PackageExecMode::parallel) {
          parallel_used.store(true, std::memory_order_relaxed);
          parallel_kernel(pkg, slot);
        } else {
          sequential_kernel(pkg, slot);
        }
        scheduler.complete(slot, a, now_ns() - t0);
      }
    } catch (...) {
      {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
      scheduler.abort_remaining();
    }
    if (slot != 0 && budget) budget->release(1);  // hand surplus workers back promptly
  };

  team->run(engaged, worker_body);
  if (first_error) std::rethrow_exception(first_error);

  result.dispatch = scheduler.take_events();
  result.parallel_used = parallel_used.load(std::memory_order_relaxed);
  result.workers_engaged = engaged;
  return result;
}

}  // namespace graphsched
