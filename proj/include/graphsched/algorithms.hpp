#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "graphsched/contention.hpp"
#include "graphsched/cost_model.hpp"
#include "graphsched/estimators.hpp"
#include "graphsched/graph.hpp"
#include "graphsched/scheduler.hpp"

namespace graphsched {

// sequential: plain serial reference.  simple: naive equal partitioning over
// the maximum thread count.  scheduler: cost-model-driven preparation plus
// selective sequential execution.
enum class ExecutionMode { sequential, simple, scheduler };
ExecutionMode mode_from_string(std::string_view s);
const char* to_string(ExecutionMode mode);

enum class AlgorithmVariant { bfs_top_down, pr_push, pr_pull };
AlgorithmVariant variant_from_string(std::string_view s);  // throws on unknown names
const char* to_string(AlgorithmVariant variant);

// Hand-counted operation counts and footprint coefficients for the kernels in
// algorithms.cpp; the tallies are documented next to the kernels.
const AlgorithmDescriptor& descriptor_for(AlgorithmVariant variant);

struct EngineContext {
  ExecutionMode mode = ExecutionMode::sequential;
  const LatencyTable* machine = nullptr;  // required for scheduler mode
  CostModelConfig cost;
  SchedulerConfig sched;
  PredictOptions predict;
  WorkerTeam* team = nullptr;      // scheduler-mode worker pool (optional)
  WorkerBudget* budget = nullptr;  // shared grant limit across sessions (optional)
  unsigned simple_threads = 0;     // 0 = cost.max_cores resolution
};

struct IterationRecord {
  std::uint32_t index = 0;
  std::uint64_t frontier_size = 0;
  std::uint64_t edges = 0;
  double est_touched = 0.0;
  double est_found = 0.0;
  std::uint64_t footprint_bytes = 0;
  ThreadBounds bounds;
  PackagingMode packaging = PackagingMode::static_partition;
  std::size_t package_count = 0;
  std::uint64_t prep_ns = 0;
  std::uint64_t exec_ns = 0;
  std::vector<DispatchEvent> dispatch;
};

struct RunTrace {
  std::vector<IterationRecord> iterations;
};

inline constexpr std::int32_t kBfsUnset = -1;

struct BfsResult {
  std::vector<std::int32_t> levels;
  std::uint64_t traversed_edges = 0;
  std::uint32_t iterations = 0;
};

BfsResult bfs(const Graph& g, VertexId source, const EngineContext& ctx = {},
              RunTrace* trace = nullptr);

struct PagerankOptions {
  double damping = 0.85;
  double epsilon = 1e-7;  // L1 change threshold
  std::uint32_t max_iterations = 100;
  // Invoked after every iteration with the current rank vector.
  std::function<void(std::uint32_t, std::span<const double>)> iteration_hook;
};

struct PagerankResult {
  std::vector<double> ranks;
  std::uint32_t iterations = 0;
  std::uint64_t processed_edges = 0;
};

PagerankResult pagerank(const Graph& g, AlgorithmVariant variant, const EngineContext& ctx = {},
                        const PagerankOptions& options = {}, RunTrace* trace = nullptr);

}  // namespace graphsched
