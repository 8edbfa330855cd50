#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "graphsched/config_file.hpp"
#include "graphsched/graph.hpp"

namespace graphsched {

// Capacities in bytes, smallest level first; the last entry stands for main
// memory and bounds the sizes the predictor accepts.
struct CacheHierarchy {
  std::vector<std::uint64_t> capacities;

  std::uint64_t main_memory() const { return capacities.back(); }
  void validate() const;  // strictly increasing, at least two levels

  // Reads per-level data/unified cache sizes from sysfs and main memory from
  // /proc/meminfo.  Throws when the information is unavailable.
  static CacheHierarchy detect();
  static CacheHierarchy from_config(const KeyValueFile& kv);
};

// Counter-array layout of the calibration benchmark; the touched-memory size
// is exactly width * vertex_count.
struct CounterArraySpec {
  unsigned counter_width = 4;  // bytes, one of 1/2/4/8
  std::uint64_t vertex_count = 0;

  std::uint64_t m_counters() const { return counter_width * vertex_count; }
};

struct DegreeCountResult {
  double mean_update_ns = 0.0;  // elapsed / updates
  double latency_ns = 0.0;      // threads * elapsed / updates (per-thread update latency)
  std::uint64_t updates = 0;
  std::uint64_t elapsed_ns = 0;
};

inline constexpr std::uint64_t kDegreeCountPartitionEdges = 16384;

// Counts vertex-id occurrences (source and target) of the edge list with
// fetch-and-add updates on one shared counter array.  The edge list is
// dispatched in 16k-edge partitions; callers must provide at least as many
// partitions as threads.  Counter results are verified against the true
// degree histogram.
DegreeCountResult degree_count_benchmark(std::span<const Edge> edges, unsigned threads,
                                         const CounterArraySpec& spec, unsigned passes = 3);

// Calibrated mean atomic-update latency L(M, T) over a grid of counter-array
// sizes (one per hierarchy level plus a main-memory row) and thread counts
// (total threads successively halved).  Immutable once built.
class LatencyTable {
 public:
  LatencyTable(CacheHierarchy hierarchy, std::vector<std::uint64_t> m_grid,
               std::vector<unsigned> thread_grid, std::vector<double> cells, std::string host,
               std::int64_t created_unix);

  const CacheHierarchy& hierarchy() const { return hierarchy_; }
  const std::vector<std::uint64_t>& m_grid() const { return m_grid_; }
  const std::vector<unsigned>& thread_grid() const { return thread_grid_; }
  double cell(std::size_t m_index, std::size_t t_index) const;
  double at(std::uint64_t m_bytes, unsigned threads) const;  // exact grid lookup
  const std::string& host() const { return host_; }
  std::int64_t created_unix() const { return created_unix_; }

  void save(const std::string& path) const;
  static LatencyTable load(const std::string& path);

 private:
  CacheHierarchy hierarchy_;
  std::vector<std::uint64_t> m_grid_;
  std::vector<unsigned> thread_grid_;
  std::vector<double> cells_;  // row-major [m][t]
  std::string host_;
  std::int64_t created_unix_ = 0;
};

// Counter-array sizes measured per hierarchy: half of each cache level plus
// 1.5x the last-level cache as the main-memory row.
std::vector<std::uint64_t> calibration_m_grid(const CacheHierarchy& hierarchy);

// Thread counts measured: total threads successively divided by two.
std::vector<unsigned> calibration_thread_grid(unsigned max_threads);

struct CalibrationOptions {
  unsigned max_threads = 0;  // 0 = hardware concurrency
  unsigned counter_width = 4;
  unsigned passes = 3;
  std::uint64_t min_edges = 1u << 20;
  std::uint64_t rmat_seed = 99;
  // Test seam: when set, replaces the measured latency for a grid cell.
  std::function<double(std::uint64_t m_bytes, unsigned threads)> measure;
};

// Memoized calibration: when profile_path exists it is loaded verbatim and no
// benchmark runs; otherwise the grid is measured and persisted there.
LatencyTable calibrate(const CacheHierarchy& hierarchy, const std::string& profile_path,
                       const CalibrationOptions& options = {});

struct PredictOptions {
  double exponent = 3.0;
  bool verbatim_sign = false;  // printed-formula sign: L_l - dL * S^e
};

// Log-space interpolation between the two neighbouring grid rows, corrected
// by the cubed interpolation factor.  Exact at grid rows; flat below the
// first row and above the last one (up to main memory, beyond which it is an
// error).  Thread counts round up to the next calibrated value.
double predict_latency(const LatencyTable& table, std::uint64_t m_bytes, unsigned threads,
                       const PredictOptions& options = {});

// Plain memory-access latency: the single-thread atomic latency.
double mem_latency(const LatencyTable& table, std::uint64_t m_bytes,
                   const PredictOptions& options = {});

}  // namespace graphsched
