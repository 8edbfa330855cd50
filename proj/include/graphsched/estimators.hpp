#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "graphsched/graph.hpp"

namespace graphsched {

// Global statistics are good enough for near-regular degree distributions;
// skewed graphs fall back to a frontier sample.  The switch is driven by the
// max/mean out-degree ratio.
enum class StatsMode { global_stats, local_sample };

inline constexpr double kStatsModeRatio = 1.1;

// True out-degrees of the first sampled_count() frontier entries, in queue
// order.  Per-vertex visit probabilities are derived from these transiently.
struct FrontierSample {
  static constexpr std::size_t kDefaultCap = 8192;
  std::vector<std::uint32_t> degrees;
  std::uint64_t frontier_size = 0;

  std::size_t sampled_count() const { return degrees.size(); }
};

struct TraversalEstimate {
  double touched = 0.0;
  double found_raw = 0.0;
  double found_clamped = 0.0;
  std::uint64_t unvisited_count = 0;
  StatsMode mode = StatsMode::global_stats;
};

StatsMode select_statistics_mode(const GraphStats& stats);

FrontierSample sample_frontier(const Graph& g, std::span<const VertexId> frontier,
                               std::size_t cap = FrontierSample::kDefaultCap);

// Expected number of vertices touched by edges from a frontier of the given
// size.  With a sample the per-vertex survival product is evaluated over the
// sampled vertices and extrapolated to the full frontier; without one the
// mean-degree closed form is used.  Result is clamped to [0, reachable].
double estimate_touched(const GraphStats& stats, std::uint64_t frontier_size,
                        const FrontierSample* sample = nullptr);

// Expected first-time-visited vertices: (raw, clamped).  The raw value is the
// printed formula, which can exceed the touched estimate; the clamped value
// is bounded by both the touched estimate and the unvisited pool.
std::pair<double, double> estimate_found(const GraphStats& stats, std::uint64_t frontier_size,
                                         std::uint64_t unvisited_count,
                                         const FrontierSample* sample = nullptr);

// Touched and found in one evaluation of the survival product; what the
// per-iteration preparation calls.
TraversalEstimate estimate_traversal(const GraphStats& stats, std::uint64_t frontier_size,
                                     std::uint64_t unvisited_count,
                                     const FrontierSample* sample = nullptr);

}  // namespace graphsched
