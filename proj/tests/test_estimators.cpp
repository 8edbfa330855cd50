#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "graphsched/estimators.hpp"
#include "test_support.hpp"

using namespace graphsched;

namespace {

GraphStats make_stats(std::uint64_t reach, double mean, std::uint64_t max_deg) {
  GraphStats s;
  s.reachable_count = reach;
  s.mean_out_degree = mean;
  s.max_out_degree = max_deg;
  s.vertex_count = reach;
  s.edge_count = static_cast<std::uint64_t>(mean * static_cast<double>(reach));
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("estimators");

TEST_CASE("statistics mode follows the max/mean ratio threshold") {
  CHECK(select_statistics_mode(make_stats(100, 10.0, 11)) == StatsMode::global_stats);
  CHECK(select_statistics_mode(make_stats(100, 1.0, 2)) == StatsMode::local_sample);
  CHECK(select_statistics_mode(make_stats(100, 4.0, 4)) == StatsMode::global_stats);
  CHECK(select_statistics_mode(make_stats(100, 0.0, 0)) == StatsMode::global_stats);
}

TEST_CASE("empty frontier touches nothing") {
  CHECK(estimate_touched(make_stats(1000, 2.0, 2), 0) == 0.0);
}

TEST_CASE("global-statistics closed form") {
  // (1 - (1 - 2/1000)^500) * 1000, evaluated at 40-digit precision.
  double touched = estimate_touched(make_stats(1000, 2.0, 2), 500);
  CHECK(touched == doctest::Approx(632.4887451428411).epsilon(1e-12));
}

TEST_CASE("sampled product over the full frontier") {
  FrontierSample sample;
  sample.degrees = {1, 1, 1, 1};
  sample.frontier_size = 4;
  double touched = estimate_touched(make_stats(4, 1.0, 1), 4, &sample);
  CHECK(touched == doctest::Approx(2.734375).epsilon(1e-12));
}

TEST_CASE("sample extrapolation matches the closed form on regular degrees") {
  GraphStats stats = make_stats(5000, 3.0, 3);
  FrontierSample sample;
  sample.degrees.assign(64, 3);
  sample.frontier_size = 1024;
  double sampled = estimate_touched(stats, 1024, &sample);
  double closed = estimate_touched(stats, 1024);
  CHECK(sampled == doctest::Approx(closed).epsilon(1e-9));
}

TEST_CASE("degrees above the reachable pool clamp to a certain visit") {
  FrontierSample sample;
  sample.degrees = {10};
  sample.frontier_size = 1;
  double touched = estimate_touched(make_stats(4, 2.0, 10), 1, &sample);
  CHECK(touched == doctest::Approx(4.0));
}

TEST_CASE("huge frontiers converge to the reachable count") {
  double touched = estimate_touched(make_stats(1000, 1.0, 1), 1000000000ULL);
  CHECK(std::abs(touched - 1000.0) < 1e-6);
}

TEST_CASE("touched is monotone in frontier size and mean degree") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::uint64_t reach = 10 + rng() % 100000;
    double mean = std::uniform_real_distribution<double>(0.1, 50.0)(rng);
    std::uint64_t s = rng() % 10000;
    GraphStats stats = make_stats(reach, mean, static_cast<std::uint64_t>(mean) + 1);
    CHECK(estimate_touched(stats, s) <= estimate_touched(stats, s + 1 + rng() % 100));
    GraphStats denser = stats;
    denser.mean_out_degree = mean * (1.1 + (rng() % 5));
    CHECK(estimate_touched(stats, s) <= estimate_touched(denser, s));
  }
}

TEST_CASE("found estimate reduces to touched when everything is unvisited") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 300; ++round) {
    std::uint64_t reach = 1 + rng() % 1000000;
    double mean = std::uniform_real_distribution<double>(0.0, 40.0)(rng);
    std::uint64_t s = rng() % 1000000;
    GraphStats stats = make_stats(reach, mean, static_cast<std::uint64_t>(mean) + 1);
    double touched = estimate_touched(stats, s);
    auto [raw, clamped] = estimate_found(stats, s, reach);
    CHECK(std::abs(raw - touched) <= 1e-12 * std::max(1.0, std::abs(touched)));
    CHECK(clamped <= touched);
  }
}

TEST_CASE("found with an empty frontier is raw-positive but clamped to zero") {
  auto [raw, clamped] = estimate_found(make_stats(100, 2.0, 2), 0, 70);
  CHECK(raw == doctest::Approx(30.0));
  CHECK(clamped == 0.0);
}

TEST_CASE("nothing left to find") {
  auto [raw, clamped] = estimate_found(make_stats(100, 2.0, 2), 10, 0);
  (void)raw;
  CHECK(clamped == 0.0);
}

TEST_CASE("unvisited above reachable is a caller bug") {
  CHECK_THROWS_AS(estimate_found(make_stats(100, 2.0, 2), 10, 101), std::invalid_argument);
}

TEST_CASE("clamp invariants over random parameters") {
  std::mt19937_64 rng(29);
  for (int round = 0; round < 300; ++round) {
    std::uint64_t reach = 1 + rng() % 100000;
    double mean = std::uniform_real_distribution<double>(0.0, 30.0)(rng);
    std::uint64_t unvisited = rng() % (reach + 1);
    std::uint64_t s = rng() % 100000;
    GraphStats stats = make_stats(reach, mean, static_cast<std::uint64_t>(mean) + 1);
    double touched = estimate_touched(stats, s);
    auto [raw, clamped] = estimate_found(stats, s, unvisited);
    (void)raw;
    CHECK(clamped >= 0.0);
    CHECK(clamped <= touched + 1e-9);
    CHECK(clamped <= static_cast<double>(unvisited));
    CHECK(touched <= static_cast<double>(reach));
  }
}

TEST_CASE("frontier sampling takes the queue prefix") {
  std::vector<Edge> edges{{0, 1}, {0, 2}, {1, 2}, {2, 0}, {3, 0}};
  Graph g(4, edges);
  std::vector<VertexId> frontier{0, 1, 2, 3};
  FrontierSample s = sample_frontier(g, frontier, 2);
  CHECK(s.sampled_count() == 2);
  CHECK(s.frontier_size == 4);
  CHECK(s.degrees == std::vector<std::uint32_t>{2, 1});
  FrontierSample full = sample_frontier(g, frontier);
  CHECK(full.sampled_count() == 4);
}

TEST_CASE("synthetic firing simulation reproduces the closed form") {
  // 500 frontier vertices each fire two edges at uniform targets over a pool
  // of 1000; the mean distinct-target count must sit within 5% of the
  // closed-form 632.5.
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<std::uint32_t> pick(0, 999);
  double sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint8_t> hit(1000, 0);
    std::uint64_t distinct = 0;
    for (int v = 0; v < 500; ++v) {
      for (int e = 0; e < 2; ++e) {
        std::uint32_t t = pick(rng);
        if (!hit[t]) {
          hit[t] = 1;
          ++distinct;
        }
      }
    }
    sum += static_cast<double>(distinct);
  }
  double mc = sum / 100.0;
  double est = estimate_touched(make_stats(1000, 2.0, 2), 500);
  CHECK(std::abs(mc - est) / est < 0.05);
}

TEST_CASE("monte-carlo distinct-target oracle agrees with the estimator") {
  Graph g = testsupport::uniform_random_graph(10000, 8, 123);
  for (std::size_t frontier : {100u, 1000u}) {
    double mc = testsupport::monte_carlo_touched(g, frontier, 30, 77);
    double est = estimate_touched(g.stats(), frontier);
    CHECK(std::abs(mc - est) / mc < 0.05);
  }
}

TEST_SUITE_END();
