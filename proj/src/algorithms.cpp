#include "graphsched/algorithms.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace graphsched {

namespace {

std::uint64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

inline void atomic_add(double& target, double value) {
  std::atomic_ref<double> ref(target);
  double cur = ref.load(std::memory_order_relaxed);
  while (!ref.compare_exchange_weak(cur, cur + value, std::memory_order_relaxed)) {
  }
}

constexpr std::uint64_t kSimpleMinPackage = 512;

}  // namespace

ExecutionMode mode_from_string(std::string_view s) {
  if (s == "sequential") return ExecutionMode::sequential;
  if (s == "simple") return ExecutionMode::simple;
  if (s == "scheduler") return ExecutionMode::scheduler;
  throw std::invalid_argument("unknown execution mode: " + std::string(s));
}

const char* to_string(ExecutionMode mode) {
  switch (mode) {
    case ExecutionMode::sequential: return "sequential";
    case ExecutionMode::simple: return "simple";
    case ExecutionMode::scheduler: return "scheduler";
  }
  return "?";
}

AlgorithmVariant variant_from_string(std::string_view s) {
  if (s == "bfs" || s == "bfs-top-down") return AlgorithmVariant::bfs_top_down;
  if (s == "pr-push") return AlgorithmVariant::pr_push;
  if (s == "pr-pull") return AlgorithmVariant::pr_pull;
  throw std::invalid_argument("unknown algorithm variant: " + std::string(s));
}

const char* to_string(AlgorithmVariant variant) {
  switch (variant) {
    case AlgorithmVariant::bfs_top_down: return "bfs";
    case AlgorithmVariant::pr_push: return "pr-push";
    case AlgorithmVariant::pr_pull: return "pr-pull";
  }
  return "?";
}

// Operation tallies of the kernel bodies below, per processed item.
//
//   bfs vertex: frontier entry + two offset reads        (mem 3, ops 2)
//   bfs edge:   target id + visited byte read            (mem 2, ops 1)
//   bfs found:  visited CAS, level store + queue append  (atomics 1, mem 2, ops 2)
//   pr-push vertex: rank read + two offset reads, d*rank/deg   (mem 3, ops 2)
//   pr-push edge:   target id read + accumulator update        (mem 1, atomics 1, ops 1)
//   pr-pull vertex: two offset reads + next store, base math   (mem 3, ops 2)
//   pr-pull edge:   source id + rank + out-degree reads, div+add (mem 3, ops 2)
//
// Footprints: bfs keeps a byte-wide visited map and an int32 level per vertex
// plus the two frontier queues; the PR variants keep two rank vectors plus
// the identity work queue.
const AlgorithmDescriptor& descriptor_for(AlgorithmVariant variant) {
  static const AlgorithmDescriptor bfs_desc{
      {2, 3, 0}, {1, 2, 0}, {2, 2, 1}, 5, 8, 64};
  static const AlgorithmDescriptor push_desc{
      {2, 3, 0}, {1, 1, 1}, {0, 0, 0}, 16, 4, 64};
  static const AlgorithmDescriptor pull_desc{
      {2, 3, 0}, {2, 3, 0}, {0, 0, 0}, 16, 4, 64};
  switch (variant) {
    case AlgorithmVariant::bfs_top_down: return bfs_desc;
    case AlgorithmVariant::pr_push: return push_desc;
    case AlgorithmVariant::pr_pull: return pull_desc;
  }
  throw std::invalid_argument("unknown algorithm variant");
}

namespace {

unsigned resolved_simple_threads(const EngineContext& ctx) {
  return ctx.simple_threads > 0 ? ctx.simple_threads : ctx.cost.resolved_max_cores();
}

unsigned worker_slot_count(const EngineContext& ctx) {
  switch (ctx.mode) {
    case ExecutionMode::sequential: return 1;
    case ExecutionMode::simple: return resolved_simple_threads(ctx);
    case ExecutionMode::scheduler: return ctx.team ? ctx.team->capacity() : 1;
  }
  return 1;
}

// Even partitioning of the naive parallel baseline: at most one package per
// thread, at least kSimpleMinPackage vertices each.
std::vector<WorkPackage> simple_packages(std::uint64_t n, unsigned threads) {
  std::uint64_t count = std::min<std::uint64_t>(
      threads, std::max<std::uint64_t>(1, n / kSimpleMinPackage));
  count = std::max<std::uint64_t>(1, std::min(count, n));
  std::vector<WorkPackage> packages;
  std::uint64_t base = n / count, rem = n % count, start = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t len = base + (i < rem ? 1 : 0);
    packages.push_back({start, len, 0.0});
    start += len;
  }
  return packages;
}

void run_simple(std::span<const WorkPackage> packages, unsigned threads,
                const PackageKernel& kernel) {
#pragma omp parallel for num_threads(static_cast<int>(threads)) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(packages.size()); ++i) {
    kernel(packages[i], static_cast<unsigned>(omp_get_thread_num()));
  }
}

// Preparation state reused across iterations so the hot path stays free of
// allocations.
struct IterationPrep {
  FrontierSample sample;
  IterationCosts costs;
  ThreadBounds bounds;
  ExecutionPlan plan;
  double est_touched = 0.0;
  double est_found = 0.0;

  void warm(unsigned max_threads) {
    sample.degrees.resize(FrontierSample::kDefaultCap);
    sample.degrees.clear();
    plan.packages.resize(16ull * max_threads + 8);
    plan.packages.clear();
    // Resolve the lazily bound math symbols before iterations are timed.
    volatile double sink =
        std::pow(1.25, 1.5) + std::exp(-0.5) + std::log1p(0.5) + std::log(2.0);
    (void)sink;
  }
};

// Scheduler-mode preparation: statistics mode, traversal estimates, footprint,
// latency-aware thread bounds and work packages.  Frontier degrees may be
// supplied by the caller when the traversal already collected them.
void prepare_iteration(IterationPrep& prep, const Graph& g, std::span<const VertexId> frontier,
                       std::span<const std::uint32_t> frontier_degrees,
                       std::uint64_t frontier_edges, std::uint64_t unvisited,
                       const AlgorithmDescriptor& desc, const EngineContext& ctx) {
  const GraphStats& stats = g.stats();
  prep.bounds = ThreadBounds{};

  const FrontierSample* sample_ptr = nullptr;
  if (select_statistics_mode(stats) == StatsMode::local_sample) {
    std::size_t count = std::min(frontier.size(), FrontierSample::kDefaultCap);
    prep.sample.frontier_size = frontier.size();
    if (frontier_degrees.size() >= count) {
      prep.sample.degrees.assign(frontier_degrees.begin(), frontier_degrees.begin() + count);
    } else {
      prep.sample.degrees.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        prep.sample.degrees[i] = static_cast<std::uint32_t>(g.out_degree_unchecked(frontier[i]));
      }
    }
    sample_ptr = &prep.sample;
  }
  std::uint64_t capped_unvisited = std::min(unvisited, stats.reachable_count);
  TraversalEstimate est = estimate_traversal(stats, frontier.size(), capped_unvisited, sample_ptr);
  prep.est_touched = est.touched;
  prep.est_found = est.found_clamped;

  IterationCosts& costs = prep.costs;
  costs.s_size = frontier.size();
  costs.e_size = frontier_edges;
  costs.f_size = static_cast<std::uint64_t>(std::llround(prep.est_found));
  costs.footprint_bytes =
      estimate_footprint(desc, g.vertex_count(), costs.s_size, costs.f_size);

  const LatencyTable& machine = *ctx.machine;
  double mem_ns = mem_latency(machine, costs.footprint_bytes, ctx.predict);
  double op_ns = ctx.cost.op_latency_ns;
  costs.vertex_cost_seq = sub_cost(desc.vertex, 1, op_ns, mem_ns, mem_ns);
  costs.edge_cost_seq = sub_cost(desc.edge, 1, op_ns, mem_ns, mem_ns);
  costs.found_cost_seq = sub_cost(desc.found_vertex, 1, op_ns, mem_ns, mem_ns);
  costs.total_seq = total_cost_per_vertex(desc, 1, op_ns, mem_ns, mem_ns, costs.s_size,
                                          costs.e_size, costs.f_size);

  if (costs.s_size >= min_vertices_for_parallel(ctx.cost, costs.total_seq)) {
    auto para_cost = [&](unsigned t) {
      double atomic_ns = predict_latency(machine, costs.footprint_bytes, t, ctx.predict);
      return total_cost_per_vertex(desc, t, op_ns, mem_ns, atomic_ns, costs.s_size, costs.e_size,
                                   costs.f_size);
    };
    prep.bounds = thread_bounds_fast(ctx.cost, costs.total_seq, para_cost,
                                     machine.thread_grid(), costs.s_size);
  }

  generate_packages_into(prep.plan, frontier, g, stats, costs, prep.bounds, ctx.sched);
}

void record_iteration(RunTrace* trace, IterationRecord&& rec) {
  if (trace) trace->iterations.push_back(std::move(rec));
}

}  // namespace

BfsResult bfs(const Graph& g, VertexId source, const EngineContext& ctx, RunTrace* trace) {
  if (source >= g.vertex_count()) throw std::out_of_range("bfs: source vertex out of range");
  if (ctx.mode == ExecutionMode::scheduler && ctx.machine == nullptr) {
    throw std::runtime_error(
        "scheduler mode needs a machine profile; run `graphsched calibrate` first");
  }

  const std::uint64_t n = g.vertex_count();
  BfsResult result;
  result.levels.assign(n, kBfsUnset);
  std::vector<std::uint8_t> visited(n, 0);
  result.levels[source] = 0;
  visited[source] = 1;

  // The frontier carries the out-degrees collected when its vertices were
  // found, so per-iteration sampling never walks the CSR index again.
  std::vector<VertexId> frontier{source};
  std::vector<std::uint32_t> frontier_degs{
      static_cast<std::uint32_t>(g.out_degree_unchecked(source))};
  std::vector<VertexId> next;
  std::vector<std::uint32_t> next_degs;
  std::uint64_t frontier_edges = frontier_degs[0];
  std::uint64_t found_total = 1;

  const unsigned slots = std::max(1u, worker_slot_count(ctx));
  std::vector<std::vector<VertexId>> buffers(slots);
  std::vector<std::vector<std::uint32_t>> buffer_degs(slots);
  std::vector<std::uint64_t> buffer_edges(slots, 0);

  const AlgorithmDescriptor& desc = descriptor_for(AlgorithmVariant::bfs_top_down);
  IterationPrep prep;
  if (ctx.mode == ExecutionMode::scheduler) {
    prep.warm(ctx.cost.resolved_max_cores());
    // One discarded preparation pass pre-faults the estimator and packaging
    // paths; it has no side effects beyond the scratch state.
    prepare_iteration(prep, g, frontier, frontier_degs, frontier_edges,
                      g.stats().reachable_count, desc, ctx);
  }

  std::int32_t depth = 0;
  const VertexId* fr = frontier.data();
  std::int32_t next_depth = 1;
  std::int32_t* levels = result.levels.data();
  std::uint8_t* vis = visited.data();

  auto sequential_kernel = [&](const WorkPackage& p, unsigned slot) {
    auto& buf = buffers[slot];
    auto& degs = buffer_degs[slot];
    std::uint64_t edge_sum = 0;
    for (std::uint64_t i = p.start; i < p.start + p.length; ++i) {
      VertexId u = fr[i];
      for (VertexId v : g.out_span(u)) {
        if (!vis[v]) {
          vis[v] = 1;
          levels[v] = next_depth;
          std::uint32_t deg = static_cast<std::uint32_t>(g.out_degree_unchecked(v));
          buf.push_back(v);
          degs.push_back(deg);
          edge_sum += deg;
        }
      }
    }
    buffer_edges[slot] += edge_sum;
  };
  auto parallel_kernel = [&](const WorkPackage& p, unsigned slot) {
    auto& buf = buffers[slot];
    auto& degs = buffer_degs[slot];
    std::uint64_t edge_sum = 0;
    for (std::uint64_t i = p.start; i < p.start + p.length; ++i) {
      VertexId u = fr[i];
      for (VertexId v : g.out_span(u)) {
        std::atomic_ref<std::uint8_t> flag(vis[v]);
        if (flag.load(std::memory_order_relaxed) == 0 &&
            flag.exchange(1, std::memory_order_relaxed) == 0) {
          levels[v] = next_depth;
          std::uint32_t deg = static_cast<std::uint32_t>(g.out_degree_unchecked(v));
          buf.push_back(v);
          degs.push_back(deg);
          edge_sum += deg;
        }
      }
    }
    buffer_edges[slot] += edge_sum;
  };
  const PackageKernel sequential_fn(sequential_kernel);
  const PackageKernel parallel_fn(parallel_kernel);

  while (!frontier.empty()) {
    fr = frontier.data();
    next_depth = depth + 1;

    IterationRecord rec;
    rec.index = static_cast<std::uint32_t>(depth);
    rec.frontier_size = frontier.size();
    rec.edges = frontier_edges;
    result.traversed_edges += frontier_edges;

    std::uint64_t prep_t0 = now_ns();
    std::uint64_t exec_t0 = prep_t0;
    switch (ctx.mode) {
      case ExecutionMode::sequential: {
        exec_t0 = now_ns();
        WorkPackage all{0, frontier.size(), 0.0};
        sequential_kernel(all, 0);
        rec.package_count = 1;
        break;
      }
      case ExecutionMode::simple: {
        std::vector<WorkPackage> packages =
            simple_packages(frontier.size(), resolved_simple_threads(ctx));
        exec_t0 = now_ns();
        run_simple(packages, resolved_simple_threads(ctx), parallel_fn);
        rec.package_count = packages.size();
        break;
      }
      case ExecutionMode::scheduler: {
        std::uint64_t unvisited = g.stats().reachable_count > found_total
                                      ? g.stats().reachable_count - found_total
                                      : 0;
        prepare_iteration(prep, g, frontier, frontier_degs, frontier_edges, unvisited, desc, ctx);
        rec.est_touched = prep.est_touched;
        rec.est_found = prep.est_found;
        rec.footprint_bytes = prep.costs.footprint_bytes;
        rec.bounds = prep.bounds;
        rec.packaging = prep.plan.mode;
        rec.package_count = prep.plan.packages.size();
        exec_t0 = now_ns();
        ScheduleResult sched = schedule_and_run(prep.plan, sequential_fn, parallel_fn, ctx.team,
                                                ctx.budget, ctx.sched);
        rec.dispatch = std::move(sched.dispatch);
        break;
      }
    }

    next.clear();
    next_degs.clear();
    frontier_edges = 0;
    for (unsigned s = 0; s < slots; ++s) {
      next.insert(next.end(), buffers[s].begin(), buffers[s].end());
      next_degs.insert(next_degs.end(), buffer_degs[s].begin(), buffer_degs[s].end());
      buffers[s].clear();
      buffer_degs[s].clear();
      frontier_edges += buffer_edges[s];
      buffer_edges[s] = 0;
    }
    found_total += next.size();

    std::uint64_t exec_t1 = now_ns();
    rec.prep_ns = exec_t0 - prep_t0;
    rec.exec_ns = exec_t1 - exec_t0;
    record_iteration(trace, std::move(rec));

    frontier.swap(next);
    frontier_degs.swap(next_degs);
    ++depth;
  }

  result.iterations = static_cast<std::uint32_t>(depth);
  return result;
}

PagerankResult pagerank(const Graph& g, AlgorithmVariant variant, const EngineContext& ctx,
                        const PagerankOptions& options, RunTrace* trace) {
  if (variant != AlgorithmVariant::pr_push && variant != AlgorithmVariant::pr_pull) {
    throw std::invalid_argument("pagerank: variant must be pr-push or pr-pull");
  }
  if (!(options.damping > 0.0 && options.damping < 1.0)) {
    throw std::invalid_argument("pagerank: damping must lie in (0, 1)");
  }
  if (g.vertex_count() == 0) throw std::invalid_argument("pagerank: empty graph");
  if (ctx.mode == ExecutionMode::scheduler && ctx.machine == nullptr) {
    throw std::runtime_error(
        "scheduler mode needs a machine profile; run `graphsched calibrate` first");
  }

  const std::uint64_t n = g.vertex_count();
  const double d = options.damping;
  const bool push = variant == AlgorithmVariant::pr_push;
  const AlgorithmDescriptor& desc = descriptor_for(variant);

  PagerankResult result;
  result.ranks.assign(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);

  std::vector<VertexId> dangling;
  for (std::uint64_t v = 0; v < n; ++v) {
    if (g.out_degree_unchecked(static_cast<VertexId>(v)) == 0) {
      dangling.push_back(static_cast<VertexId>(v));
    }
  }
  std::vector<VertexId> work_queue(n);
  for (std::uint64_t v = 0; v < n; ++v) work_queue[v] = static_cast<VertexId>(v);

  // Topology-centric preparation happens once; the same plan is reused for
  // every iteration.
  std::uint64_t prep_ns = 0;
  ExecutionPlan plan;
  std::vector<WorkPackage> simple_plan;
  IterationRecord prep_rec;
  if (ctx.mode == ExecutionMode::scheduler) {
    std::uint64_t t0 = now_ns();
    IterationPrep prep;
    prepare_iteration(prep, g, work_queue, {}, g.edge_count(), 0, desc, ctx);
    plan = std::move(prep.plan);
    prep_ns = now_ns() - t0;
    prep_rec.est_touched = prep.est_touched;
    prep_rec.est_found = prep.est_found;
    prep_rec.footprint_bytes = prep.costs.footprint_bytes;
    prep_rec.bounds = prep.bounds;
    prep_rec.packaging = plan.mode;
    prep_rec.package_count = plan.packages.size();
  } else if (ctx.mode == ExecutionMode::simple) {
    simple_plan = simple_packages(n, resolved_simple_threads(ctx));
  }

  const double* ranks_data = nullptr;
  double* next_data = nullptr;
  double base = 0.0;

  auto push_sequential = [&](const WorkPackage& p, unsigned) {
    for (std::uint64_t i = p.start; i < p.start + p.length; ++i) {
      VertexId u = work_queue[i];
      std::uint64_t deg = g.out_degree_unchecked(u);
      if (deg == 0) continue;
      double share = d * ranks_data[u] / static_cast<double>(deg);
      for (VertexId v : g.out_span(u)) next_data[v] += share;
    }
  };
  auto push_parallel = [&](const WorkPackage& p, unsigned) {
    for (std::uint64_t i = p.start; i < p.start + p.length; ++i) {
      VertexId u = work_queue[i];
      std::uint64_t deg = g.out_degree_unchecked(u);
      if (deg == 0) continue;
      double share = d * ranks_data[u] / static_cast<double>(deg);
      for (VertexId v : g.out_span(u)) atomic_add(next_data[v], share);
    }
  };
  // The gather direction owns its output slot, so the parallel variant needs
  // no atomic operations.
  auto pull_kernel = [&](const WorkPackage& p, unsigned) {
    for (std::uint64_t i = p.start; i < p.start + p.length; ++i) {
      VertexId v = work_queue[i];
      double acc = 0.0;
      for (VertexId u : g.in_span(v)) {
        acc += ranks_data[u] / static_cast<double>(g.out_degree_unchecked(u));
      }
      next_data[v] = base + d * acc;
    }
  };
  const PackageKernel sequential_kernel = push ? PackageKernel(push_sequential) : PackageKernel(pull_kernel);
  const PackageKernel parallel_kernel = push ? PackageKernel(push_parallel) : PackageKernel(pull_kernel);

  for (std::uint32_t iter = 1; iter <= options.max_iterations; ++iter) {
    std::uint64_t exec_t0 = now_ns();
    double dangling_mass = 0.0;
    for (VertexId v : dangling) dangling_mass += result.ranks[v];
    base = (1.0 - d) / static_cast<double>(n) +
           d * dangling_mass / static_cast<double>(n);

    ranks_data = result.ranks.data();
    next_data = next.data();
    if (push) std::fill(next.begin(), next.end(), base);

    IterationRecord rec;
    rec.index = iter;
    rec.frontier_size = n;
    rec.edges = g.edge_count();
    switch (ctx.mode) {
      case ExecutionMode::sequential: {
        WorkPackage all{0, n, 0.0};
        sequential_kernel(all, 0);
        rec.package_count = 1;
        break;
      }
      case ExecutionMode::simple: {
        run_simple(simple_plan, resolved_simple_threads(ctx), parallel_kernel);
        rec.package_count = simple_plan.size();
        break;
      }
      case ExecutionMode::scheduler: {
        ScheduleResult sched = schedule_and_run(plan, sequential_kernel, parallel_kernel, ctx.team,
                                                ctx.budget, ctx.sched);
        rec.dispatch = std::move(sched.dispatch);
        rec.package_count = plan.packages.size();
        rec.bounds = plan.bounds;
        rec.packaging = plan.mode;
        break;
      }
    }

    double delta = 0.0;
    for (std::uint64_t v = 0; v < n; ++v) delta += std::abs(next[v] - result.ranks[v]);
    result.ranks.swap(next);
    result.processed_edges += g.edge_count();
    result.iterations = iter;

    rec.exec_ns = now_ns() - exec_t0;
    if (iter == 1) {
      rec.prep_ns = prep_ns;
      rec.est_touched = prep_rec.est_touched;
      rec.est_found = prep_rec.est_found;
      rec.footprint_bytes = prep_rec.footprint_bytes;
      if (ctx.mode == ExecutionMode::scheduler) {
        rec.bounds = prep_rec.bounds;
        rec.packaging = prep_rec.packaging;
      }
    }
    record_iteration(trace, std::move(rec));

    if (options.iteration_hook) options.iteration_hook(iter, result.ranks);
    if (delta < options.epsilon) break;
  }
  return result;
}

}  // namespace graphsched
