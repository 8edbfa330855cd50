#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "graphsched/algorithms.hpp"
#include "graphsched/graph.hpp"

namespace graphsched {

// One measured configuration.  runs_per_session = 0 selects the standard
// repetition policy: 24 full runs per session for PageRank, 50 measured
// traversals per session for BFS.
struct BenchmarkSpec {
  AlgorithmVariant algo = AlgorithmVariant::bfs_top_down;
  ExecutionMode mode = ExecutionMode::sequential;
  unsigned sessions = 1;
  std::uint64_t seed = 1;
  unsigned runs_per_session = 0;
  PagerankOptions pagerank;
  std::string dataset_label = "unknown";
};

std::uint64_t default_runs_per_session(AlgorithmVariant algo);

struct SessionReport {
  std::string algo;     // bfs | pr
  std::string variant;  // top-down | push | pull
  std::string mode;
  std::string dataset;
  unsigned sessions = 0;
  std::uint64_t runs = 0;
  std::vector<std::uint64_t> run_elapsed_ns;  // all runs, session-major
  std::vector<std::uint64_t> run_edges;
  std::uint64_t total_edges = 0;
  std::uint64_t wall_ns = 0;  // measurement phase wall clock
  double mean_ms = 0.0;
  double throughput_eps = 0.0;  // total edges / wall seconds (TEPS or PEPS)
};

// Runs `sessions` concurrent workers over the shared graph, each executing
// its share of full algorithm runs.  The measurement window covers supporting
// data structure setup through result availability; graph construction stays
// outside.  BFS sources are drawn uniformly from the reachable vertices.
SessionReport run_sessions(const Graph& g, const BenchmarkSpec& spec, const EngineContext& base,
                           std::vector<RunTrace>* traces = nullptr);

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const SessionReport& report);
void write_csv_error_row(std::ostream& out, const BenchmarkSpec& spec, const std::string& reason);

// Sweep description parsed from a key-value matrix file: datasets x algos x
// modes x session counts, one CSV row per cell.
struct BenchMatrix {
  std::vector<std::string> graph_files;
  std::vector<unsigned> rmat_scales;
  double rmat_edge_factor = 16.0;
  std::uint64_t rmat_seed = 1;
  std::vector<AlgorithmVariant> algos;
  std::vector<ExecutionMode> modes;
  std::vector<unsigned> sessions;
  std::uint64_t seed = 42;
  unsigned pr_runs_per_session = 0;   // 0 = policy default
  unsigned bfs_runs_per_session = 0;  // 0 = policy default
  std::string csv_path = "bench.csv";
  std::string profile_path;
  std::string cost_config_path;

  static BenchMatrix load(const std::string& path);
};

// Executes the sweep; failed cells emit an error-marker row instead of being
// dropped.  Returns the number of failed cells.
int run_bench_matrix(const BenchMatrix& matrix, std::ostream& csv, std::ostream& log);

}  // namespace graphsched
