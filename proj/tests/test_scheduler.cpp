#include <stdexcept>
#include <atomic>
#include <numeric>
#include <random>

#include "doctest.h"
#include "graphsched/scheduler.hpp"
#include "test_support.hpp"

using namespace graphsched;

namespace {

// Degrees [5, 1, 1, 1] on the frontier {0, 1, 2, 3}.
Graph skewed_graph() {
  std::vector<Edge> edges;
  for (VertexId t = 1; t <= 5; ++t) edges.push_back({0, t});
  edges.push_back({1, 0});
  edges.push_back({2, 0});
  edges.push_back({3, 0});
  return Graph(6, edges);
}

IterationCosts unit_edge_costs(std::uint64_t s_size) {
  IterationCosts costs;
  costs.s_size = s_size;
  costs.vertex_cost_seq = 0.0;
  costs.edge_cost_seq = 1.0;
  costs.total_seq = 1.0;
  return costs;
}

ThreadBounds profitable(unsigned t_min, unsigned t_max) {
  return ThreadBounds{t_min, t_max, true};
}

void check_partition(const ExecutionPlan& plan, std::uint64_t frontier_size) {
  std::vector<WorkPackage> sorted = plan.packages;
  std::sort(sorted.begin(), sorted.end(),
            [](const WorkPackage& a, const WorkPackage& b) { return a.start < b.start; });
  std::uint64_t expected_start = 0;
  for (const WorkPackage& p : sorted) {
    CHECK(p.start == expected_start);
    expected_start += p.length;
  }
  CHECK(expected_start == frontier_size);
}

}  // namespace

TEST_SUITE_BEGIN("scheduler");

TEST_CASE("greedy packaging isolates the dominating vertex") {
  Graph g = skewed_graph();
  std::vector<VertexId> frontier{0, 1, 2, 3};
  SchedulerConfig cfg;
  cfg.cost_package_multiple = 2;  // share = total(8) / 2 = 4
  ExecutionPlan plan =
      generate_packages(frontier, g, g.stats(), unit_edge_costs(4), profitable(2, 1), cfg);
  CHECK(plan.mode == PackagingMode::cost_based);
  REQUIRE(plan.packages.size() == 2);
  CHECK(plan.packages[0].start == 0);
  CHECK(plan.packages[0].length == 1);
  CHECK(plan.packages[0].cost == doctest::Approx(5.0));
  CHECK(plan.packages[1].start == 1);
  CHECK(plan.packages[1].length == 3);
  CHECK(plan.packages[1].cost == doctest::Approx(3.0));
  check_partition(plan, 4);
}

TEST_CASE("regular degree distributions always use static partitioning") {
  std::vector<Edge> ring;
  for (VertexId v = 0; v < 64; ++v) ring.push_back({v, static_cast<VertexId>((v + 1) % 64)});
  Graph g(64, ring);
  std::vector<VertexId> frontier(64);
  std::iota(frontier.begin(), frontier.end(), 0);
  ExecutionPlan plan =
      generate_packages(frontier, g, g.stats(), unit_edge_costs(64), profitable(2, 4));
  CHECK(plan.mode == PackagingMode::static_partition);
  check_partition(plan, 64);
}

TEST_CASE("large frontiers use static partitioning even when skewed") {
  Graph g = skewed_graph();
  SchedulerConfig cfg;
  cfg.cost_trigger_frontier_factor = 2;  // threshold: 2 * t_max = 4 vertices
  std::vector<VertexId> frontier{0, 1, 2, 3};
  ExecutionPlan plan =
      generate_packages(frontier, g, g.stats(), unit_edge_costs(4), profitable(2, 2), cfg);
  CHECK(plan.mode == PackagingMode::static_partition);
}

TEST_CASE("sequential plans collapse into one package") {
  Graph g = skewed_graph();
  std::vector<VertexId> frontier{0, 1, 2, 3};
  ExecutionPlan plan =
      generate_packages(frontier, g, g.stats(), unit_edge_costs(4), ThreadBounds{});
  CHECK(plan.packages.size() == 1);
  CHECK(plan.packages[0].length == 4);
}

TEST_CASE("empty frontiers are rejected") {
  Graph g = skewed_graph();
  CHECK_THROWS_AS(
      generate_packages({}, g, g.stats(), unit_edge_costs(0), profitable(2, 2)),
      std::invalid_argument);
}

TEST_CASE("cost-based packaging invariants over random frontiers") {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 60; ++round) {
    // Heavy-tailed degrees: a few hubs over a low-degree base.
    std::uint32_t n = 32 + rng() % 256;
    std::vector<Edge> edges;
    for (std::uint32_t v = 0; v < n; ++v) {
      std::uint64_t deg = (rng() % 17 == 0) ? 32 + rng() % 512 : rng() % 4;
      for (std::uint64_t i = 0; i < deg; ++i) {
        edges.push_back({v, static_cast<VertexId>(rng() % n)});
      }
    }
    if (edges.empty()) continue;
    Graph g(n, edges);
    std::vector<VertexId> frontier(n);
    std::iota(frontier.begin(), frontier.end(), 0);
    unsigned t_max = 1 + rng() % 8;
    SchedulerConfig cfg;
    cfg.cost_trigger_frontier_factor = 10000;  // keep the cost-based path on
    IterationCosts costs = unit_edge_costs(n);
    costs.vertex_cost_seq = 0.5;
    ExecutionPlan plan =
        generate_packages(frontier, g, g.stats(), costs, profitable(2, t_max), cfg);
    if (plan.mode != PackagingMode::cost_based) continue;

    check_partition(plan, n);
    CHECK(plan.packages.size() <= 8ull * t_max);
    for (std::size_t i = 1; i < plan.packages.size(); ++i) {
      CHECK(plan.packages[i - 1].cost >= plan.packages[i].cost);  // heavy first
    }
    for (const WorkPackage& p : plan.packages) {
      if (p.length > 1) {
        CHECK(p.cost <= 2.0 * plan.work_share + 1e-9);
      }
    }
  }
}

TEST_CASE("selective scheduler probes sequentially below the thread bound") {
  // Five packages, t_min 3, probe limit 2, but only two workers ever register.
  SelectiveScheduler sched(5, profitable(3, 4), 2);
  unsigned w0 = sched.register_worker();
  unsigned w1 = sched.register_worker();
  CHECK(sched.registered_count() == 2);

  Assignment a0 = sched.acquire(w0);
  REQUIRE(a0.kind == Assignment::Kind::run);
  CHECK(a0.mode == PackageExecMode::sequential_probe);
  CHECK(a0.package_index == 0);

  Assignment a1 = sched.acquire(w1);
  CHECK(a1.kind == Assignment::Kind::wait);  // probe in flight

  sched.complete(w0, a0, 10);
  Assignment a2 = sched.acquire(w0);
  REQUIRE(a2.kind == Assignment::Kind::run);
  CHECK(a2.mode == PackageExecMode::sequential_probe);
  CHECK(a2.package_index == 1);
  sched.complete(w0, a2, 10);

  // Probe limit reached: the next acquiring worker becomes the survivor.
  Assignment a3 = sched.acquire(w1);
  REQUIRE(a3.kind == Assignment::Kind::run);
  CHECK(a3.mode == PackageExecMode::sequential_tail);
  Assignment a4 = sched.acquire(w0);
  CHECK(a4.kind == Assignment::Kind::released);

  sched.complete(w1, a3, 10);
  while (true) {
    Assignment a = sched.acquire(w1);
    if (a.kind != Assignment::Kind::run) break;
    CHECK(a.mode == PackageExecMode::sequential_tail);
    sched.complete(w1, a, 10);
  }
  CHECK(sched.finished());

  std::vector<DispatchEvent> events = sched.take_events();
  REQUIRE(events.size() == 5);
  unsigned probes = 0;
  std::vector<bool> seen(5, false);
  for (const DispatchEvent& e : events) {
    CHECK(e.mode != PackageExecMode::parallel);
    if (e.mode == PackageExecMode::sequential_probe) ++probes;
    CHECK_FALSE(seen[e.package_index]);
    seen[e.package_index] = true;
  }
  CHECK(probes == 2);  // exactly the probe limit
}

TEST_CASE("selective scheduler switches to parallel once registration catches up") {
  SelectiveScheduler sched(4, profitable(3, 4), 4);
  unsigned w0 = sched.register_worker();
  unsigned w1 = sched.register_worker();
  Assignment probe = sched.acquire(w0);
  CHECK(probe.mode == PackageExecMode::sequential_probe);
  CHECK(probe.registered == 2);

  unsigned w2 = sched.register_worker();  // arrives during the probe
  sched.complete(w0, probe, 5);

  Assignment p1 = sched.acquire(w1);
  REQUIRE(p1.kind == Assignment::Kind::run);
  CHECK(p1.mode == PackageExecMode::parallel);
  CHECK(p1.registered >= 3);
  Assignment p2 = sched.acquire(w2);
  CHECK(p2.mode == PackageExecMode::parallel);
  Assignment p3 = sched.acquire(w0);
  CHECK(p3.mode == PackageExecMode::parallel);
  sched.complete(w1, p1, 1);
  sched.complete(w2, p2, 1);
  sched.complete(w0, p3, 1);
  CHECK(sched.finished());
  for (const DispatchEvent& e : sched.take_events()) {
    if (e.mode == PackageExecMode::parallel) CHECK(e.registered >= 3);
  }
}

TEST_CASE("worker budget grants at most the available slots") {
  WorkerBudget budget(3);
  CHECK(budget.try_acquire(2) == 2);
  CHECK(budget.try_acquire(5) == 1);
  CHECK(budget.try_acquire(1) == 0);
  budget.release(3);
  CHECK(budget.available() == 3);
}

TEST_CASE("worker team runs the body once per engaged slot") {
  WorkerTeam team(4);
  std::atomic<unsigned> mask{0};
  team.run(3, [&](unsigned slot) { mask.fetch_or(1u << slot); });
  CHECK(mask.load() == 0b0111);
  mask = 0;
  team.run(4, [&](unsigned slot) { mask.fetch_or(1u << slot); });
  CHECK(mask.load() == 0b1111);
  mask = 0;
  team.run(1, [&](unsigned slot) { mask.fetch_or(1u << slot); });
  CHECK(mask.load() == 0b0001);
}

namespace {

ExecutionPlan toy_plan(std::size_t packages, const ThreadBounds& bounds) {
  ExecutionPlan plan;
  plan.bounds = bounds;
  for (std::size_t i = 0; i < packages; ++i) {
    plan.packages.push_back({i * 10, 10, 1.0});
  }
  return plan;
}

}  // namespace

TEST_CASE("non-profitable plans never touch the parallel kernel") {
  ExecutionPlan plan = toy_plan(3, ThreadBounds{});
  WorkerTeam team(4);
  std::atomic<int> seq{0}, par{0};
  ScheduleResult r = schedule_and_run(
      plan, [&](const WorkPackage&, unsigned) { seq++; },
      [&](const WorkPackage&, unsigned) { par++; }, &team, nullptr);
  CHECK(seq.load() == 3);
  CHECK(par.load() == 0);
  CHECK_FALSE(r.parallel_used);
  REQUIRE(r.dispatch.size() == 3);
  for (const DispatchEvent& e : r.dispatch) {
    CHECK(e.mode == PackageExecMode::sequential_only);
  }
}

TEST_CASE("under-granted pools probe then finish sequentially") {
  // Plan wants 4 workers with t_min 3, but the team holds only 2.
  ExecutionPlan plan = toy_plan(6, profitable(3, 4));
  WorkerTeam team(2);
  WorkerBudget budget(10);
  SchedulerConfig cfg;
  cfg.sequential_package_limit = 2;
  std::atomic<int> par{0};
  ScheduleResult r = schedule_and_run(
      plan, [&](const WorkPackage&, unsigned) {},
      [&](const WorkPackage&, unsigned) { par++; }, &team, &budget, cfg);
  CHECK(par.load() == 0);
  CHECK_FALSE(r.parallel_used);
  CHECK(r.workers_engaged == 2);
  REQUIRE(r.dispatch.size() == 6);
  unsigned probes = 0, tails = 0;
  std::vector<bool> seen(6, false);
  for (const DispatchEvent& e : r.dispatch) {
    CHECK(e.mode != PackageExecMode::parallel);
    if (e.mode == PackageExecMode::sequential_probe) ++probes;
    if (e.mode == PackageExecMode::sequential_tail) ++tails;
    CHECK_FALSE(seen[e.package_index]);
    seen[e.package_index] = true;
  }
  CHECK(probes == 2);
  CHECK(tails == 4);
  CHECK(budget.available() == 10);  // surplus workers returned their slots
}

TEST_CASE("fully granted pools run everything in parallel") {
  ExecutionPlan plan = toy_plan(8, profitable(2, 4));
  WorkerTeam team(6);  // capacity above t_max; the grant must still cap at 4
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  std::vector<int> hits(8, 0);
  ScheduleResult r = schedule_and_run(
      plan, [&](const WorkPackage&, unsigned) { FAIL("sequential kernel unexpected"); },
      [&](const WorkPackage& p, unsigned) {
        int now = active.fetch_add(1) + 1;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        hits[p.start / 10]++;
        active.fetch_sub(1);
      },
      &team, nullptr);
  CHECK(r.parallel_used);
  CHECK(r.workers_engaged == 4);
  CHECK(peak.load() <= 4);  // never more simultaneous workers than t_max
  for (int h : hits) CHECK(h == 1);
  for (const DispatchEvent& e : r.dispatch) {
    CHECK(e.mode == PackageExecMode::parallel);
    CHECK(e.registered >= 2);
  }
}

TEST_CASE("kernel results match the sequential reference under every protocol path") {
  std::mt19937_64 rng(7);
  std::vector<std::uint32_t> values(400);
  for (auto& v : values) v = static_cast<std::uint32_t>(rng() % 1000);

  ExecutionPlan plan;
  plan.bounds = profitable(2, 4);
  for (std::uint64_t start = 0; start < values.size(); start += 40) {
    plan.packages.push_back({start, 40, 1.0});
  }
  std::vector<std::uint64_t> reference(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) reference[i] = values[i] * 3ull;

  for (unsigned capacity : {1u, 2u, 4u}) {
    WorkerTeam team(capacity);
    std::vector<std::uint64_t> out(values.size(), 0);
    auto kernel = [&](const WorkPackage& p, unsigned) {
      for (std::uint64_t i = p.start; i < p.start + p.length; ++i) out[i] = values[i] * 3ull;
    };
    schedule_and_run(plan, kernel, kernel, &team, nullptr);
    CHECK(out == reference);
  }
}

TEST_CASE("kernel exceptions propagate without deadlocking the team") {
  ExecutionPlan plan = toy_plan(4, profitable(2, 4));
  WorkerTeam team(4);
  auto boom = [&](const WorkPackage& p, unsigned) {
    if (p.start == 0) throw std::runtime_error("kernel failure");
  };
  CHECK_THROWS_AS(schedule_and_run(plan, boom, boom, &team, nullptr), std::runtime_error);
}

TEST_SUITE_END();
