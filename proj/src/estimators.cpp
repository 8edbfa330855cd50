#include "graphsched/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphsched {

StatsMode select_statistics_mode(const GraphStats& stats) {
  if (stats.mean_out_degree <= 0.0) return StatsMode::global_stats;
  double ratio = static_cast<double>(stats.max_out_degree) / stats.mean_out_degree;
  return ratio > kStatsModeRatio ? StatsMode::local_sample : StatsMode::global_stats;
}

FrontierSample sample_frontier(const Graph& g, std::span<const VertexId> frontier,
                               std::size_t cap) {
  FrontierSample s;
  s.frontier_size = frontier.size();
  std::size_t count = std::min(frontier.size(), cap);
  s.degrees.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    s.degrees[i] = static_cast<std::uint32_t>(g.out_degree_unchecked(frontier[i]));
  }
  return s;
}

namespace {

// Survival probability Π (1 - deg(v)/reach) of one non-frontier vertex.  The
// sampled path multiplies the factors directly (underflow to zero is the
// converged value); the closed form stays in log space for huge frontiers.
// A per-vertex factor clamps to zero once the degree reaches the pool size.
double survival_product(const GraphStats& stats, std::uint64_t frontier_size,
                        const FrontierSample* sample) {
  const double reach = static_cast<double>(stats.reachable_count);
  if (frontier_size == 0) return 1.0;  // empty product
  if (reach <= 0.0) return 0.0;
  if (sample != nullptr && sample->sampled_count() > 0) {
    // Four independent accumulators keep the loop from serializing on the
    // multiply latency; the sample can hold up to 8192 factors.
    const std::uint32_t* deg = sample->degrees.data();
    const std::size_t count = sample->degrees.size();
    const double inv_reach = 1.0 / reach;
    // Degrees at or above the pool size clamp their factor to zero (a certain
    // visit), which zeroes the product for good.
    auto factor = [inv_reach](std::uint32_t d) {
      return std::max(0.0, 1.0 - static_cast<double>(d) * inv_reach);
    };
    double acc[4] = {1.0, 1.0, 1.0, 1.0};
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
      acc[0] *= factor(deg[i]);
      acc[1] *= factor(deg[i + 1]);
      acc[2] *= factor(deg[i + 2]);
      acc[3] *= factor(deg[i + 3]);
    }
    for (; i < count; ++i) acc[0] *= factor(deg[i]);
    double product = acc[0] * acc[1] * acc[2] * acc[3];
    if (product <= 0.0) return 0.0;
    // Geometric extrapolation of the sampled product to the full frontier.
    double ratio = static_cast<double>(frontier_size) /
                   static_cast<double>(sample->sampled_count());
    return ratio == 1.0 ? product : std::pow(product, ratio);
  }
  double p = stats.mean_out_degree / reach;
  if (p >= 1.0) return 0.0;
  return std::exp(static_cast<double>(frontier_size) * std::log1p(-p));
}

}  // namespace

TraversalEstimate estimate_traversal(const GraphStats& stats, std::uint64_t frontier_size,
                                     std::uint64_t unvisited_count,
                                     const FrontierSample* sample) {
  if (unvisited_count > stats.reachable_count) {
    throw std::invalid_argument("estimate_traversal: unvisited_count exceeds reachable_count");
  }
  TraversalEstimate est;
  est.unvisited_count = unvisited_count;
  est.mode = sample != nullptr ? StatsMode::local_sample : StatsMode::global_stats;
  const double reach = static_cast<double>(stats.reachable_count);
  if (reach <= 0.0) return est;

  double product = survival_product(stats, frontier_size, sample);
  est.touched = std::clamp((1.0 - product) * reach, 0.0, reach);
  double unvisited_ratio = static_cast<double>(unvisited_count) / reach;
  est.found_raw = (1.0 - unvisited_ratio * product) * reach;
  est.found_clamped = std::max(
      0.0, std::min({est.found_raw, est.touched, static_cast<double>(unvisited_count)}));
  return est;
}

double estimate_touched(const GraphStats& stats, std::uint64_t frontier_size,
                        const FrontierSample* sample) {
  const double reach = static_cast<double>(stats.reachable_count);
  if (reach <= 0.0) return 0.0;
  double product = survival_product(stats, frontier_size, sample);
  return std::clamp((1.0 - product) * reach, 0.0, reach);
}

std::pair<double, double> estimate_found(const GraphStats& stats, std::uint64_t frontier_size,
                                         std::uint64_t unvisited_count,
                                         const FrontierSample* sample) {
  TraversalEstimate est = estimate_traversal(stats, frontier_size, unvisited_count, sample);
  return {est.found_raw, est.found_clamped};
}

}  // namespace graphsched
