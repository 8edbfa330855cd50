#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "graphsched/config_file.hpp"

namespace graphsched {

enum class ItemKind { vertex, edge, found_vertex };

struct ItemCounts {
  std::uint32_t ops = 0;
  std::uint32_t mem = 0;
  std::uint32_t atomics = 0;
};

// Static metadata for one algorithm kernel: operation counts per item kind
// plus linear memory-footprint coefficients.
struct AlgorithmDescriptor {
  ItemCounts vertex;
  ItemCounts edge;
  ItemCounts found_vertex;
  std::uint64_t bytes_per_vertex = 0;
  std::uint64_t bytes_per_frontier_entry = 0;
  std::uint64_t constant_bytes = 0;

  const ItemCounts& item(ItemKind kind) const;
};

struct CostModelConfig {
  double op_latency_ns = 1.0;           // L_op
  double thread_overhead_ns = 5000.0;   // start cost per thread
  double min_thread_work_ns = 50000.0;  // minimum useful work per thread
  double parallel_startup_ns = 10000.0; // start cost of a parallel section
  unsigned max_cores = 0;               // P; 0 = hardware concurrency

  unsigned resolved_max_cores() const;
  void validate() const;  // min_thread_work must exceed thread_overhead, all times > 0
};

CostModelConfig load_cost_config(const KeyValueFile& kv);
AlgorithmDescriptor load_descriptor(const KeyValueFile& kv);

// Per-iteration sizes and sequential per-item costs, computed once during
// preparation and consumed by packaging.
struct IterationCosts {
  std::uint64_t s_size = 0;
  std::uint64_t e_size = 0;
  std::uint64_t f_size = 0;
  std::uint64_t footprint_bytes = 0;
  double vertex_cost_seq = 0.0;
  double edge_cost_seq = 0.0;
  double found_cost_seq = 0.0;
  double total_seq = 0.0;  // per-vertex total at T=1
};

struct ThreadBounds {
  unsigned t_min = 1;
  unsigned t_max = 1;
  bool parallel_profitable = false;
};

// M = constant + per_vertex * |V| + per_frontier_entry * (|S| + |F|).
// Throws std::overflow_error when the sum does not fit 64 bits.
std::uint64_t estimate_footprint(const AlgorithmDescriptor& d, std::uint64_t vertex_count,
                                 std::uint64_t s_size, std::uint64_t f_size);

// Per-item cost from operation counts and latencies.  The single-thread
// atomic latency is pinned to the plain memory latency.
double sub_cost(const ItemCounts& item, unsigned threads, double op_ns, double mem_ns,
                double atomic_ns);
double sub_cost(const AlgorithmDescriptor& d, ItemKind kind, unsigned threads, double op_ns,
                double mem_ns, double atomic_ns);

// Cost of one frontier vertex including its share of edges and found
// vertices.  Throws std::invalid_argument when s_size is zero.
double total_cost_per_vertex(const AlgorithmDescriptor& d, unsigned threads, double op_ns,
                             double mem_ns, double atomic_ns, std::uint64_t s_size,
                             std::uint64_t e_size, std::uint64_t f_size);

// Smallest frontier for which parallel execution can amortize startup costs.
std::uint64_t min_vertices_for_parallel(const CostModelConfig& cfg, double total_seq_per_vertex);

// Per-vertex parallel cost evaluated at a calibrated thread count.
using GridCostFn = std::function<double(unsigned grid_threads)>;

// Smallest calibrated thread count >= t; clamps to the largest grid entry.
unsigned next_grid_thread_count(std::span<const unsigned> grid, unsigned t);

// Reference oracle: evaluates the profitability inequality and the per-thread
// work bound for every thread count in [2, P].
ThreadBounds thread_bounds_scan(const CostModelConfig& cfg, double seq_cost_per_vertex,
                                const GridCostFn& para_cost, std::span<const unsigned> thread_grid,
                                std::uint64_t work_items);

// Doubling variant: evaluates the cost function only at calibrated thread
// counts and solves each inter-level segment in closed form.  Agrees with the
// scan whenever the feasible thread range is contiguous.
ThreadBounds thread_bounds_fast(const CostModelConfig& cfg, double seq_cost_per_vertex,
                                const GridCostFn& para_cost, std::span<const unsigned> thread_grid,
                                std::uint64_t work_items);

}  // namespace graphsched
