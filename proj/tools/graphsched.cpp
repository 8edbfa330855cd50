// Command-line front end: machine calibration, RMAT generation, single
// benchmark runs and matrix sweeps.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "graphsched/bench.hpp"

namespace gs = graphsched;

namespace {

std::string default_profile_path() {
  if (const char* env = std::getenv("GRAPHSCHED_PROFILE"); env && *env) return env;
  return "graphsched-machine.profile";
}

int cmd_calibrate(const std::string& profile, const std::string& hierarchy_file,
                  unsigned threads_max, bool force) {
  gs::CacheHierarchy hierarchy;
  if (!hierarchy_file.empty()) {
    hierarchy = gs::CacheHierarchy::from_config(gs::KeyValueFile::parse_file(hierarchy_file));
  } else {
    hierarchy = gs::CacheHierarchy::detect();
  }
  if (force) std::filesystem::remove(profile);
  bool existed = std::filesystem::exists(profile);
  gs::CalibrationOptions options;
  options.max_threads = threads_max;
  gs::LatencyTable table = gs::calibrate(hierarchy, profile, options);
  std::cout << (existed ? "loaded existing profile " : "calibrated and wrote ") << profile
            << " (host " << table.host() << ")\n";
  std::cout << "levels:";
  for (std::uint64_t cap : table.hierarchy().capacities) std::cout << ' ' << cap;
  std::cout << "\nupdate latency ns per (M bytes x threads):\n";
  for (std::size_t m = 0; m < table.m_grid().size(); ++m) {
    std::cout << "  M=" << table.m_grid()[m] << ":";
    for (std::size_t t = 0; t < table.thread_grid().size(); ++t) {
      std::cout << " T" << table.thread_grid()[t] << "=" << table.cell(m, t);
    }
    std::cout << '\n';
  }
  return 0;
}

int cmd_rmat(unsigned scale, double edge_factor, std::uint64_t seed, const std::string& out,
             double a, double b, double c, double d) {
  gs::RmatParams params;
  params.scale = scale;
  params.edge_factor = edge_factor;
  params.seed = seed;
  params.a = a;
  params.b = b;
  params.c = c;
  params.d = d;
  std::vector<gs::Edge> edges = gs::rmat_edges(params);
  std::ofstream file(out);
  if (!file) throw std::runtime_error("cannot open output: " + out);
  file << "# rmat scale=" << scale << " edge_factor=" << edge_factor << " seed=" << seed << '\n';
  gs::write_edge_list(edges, file);
  std::cout << "wrote " << edges.size() << " edges over " << (1ULL << scale) << " vertices to "
            << out << '\n';
  return 0;
}

void write_trace_file(const std::string& path, const std::vector<gs::RunTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file: " + path);
  out << "# graphsched trace v1\n";
  for (std::size_t run = 0; run < traces.size(); ++run) {
    for (const gs::IterationRecord& it : traces[run].iterations) {
      out << "iter run=" << run << " index=" << it.index << " frontier=" << it.frontier_size
          << " edges=" << it.edges << " est_touched=" << it.est_touched
          << " est_found=" << it.est_found << " footprint=" << it.footprint_bytes
          << " tmin=" << it.bounds.t_min << " tmax=" << it.bounds.t_max
          << " profitable=" << (it.bounds.parallel_profitable ? 1 : 0)
          << " packages=" << it.package_count << " prep_ns=" << it.prep_ns
          << " exec_ns=" << it.exec_ns << '\n';
      for (const gs::DispatchEvent& ev : it.dispatch) {
        out << "pkg run=" << run << " iter=" << it.index << " worker=" << ev.worker
            << " mode=" << gs::to_string(ev.mode) << " index=" << ev.package_index
            << " elapsed_ns=" << ev.elapsed_ns << " registered=" << ev.registered << '\n';
      }
    }
  }
}

int cmd_run(const std::string& algo, const std::string& mode, const std::string& graph_file,
            unsigned sessions, std::uint64_t seed, const std::string& csv_path,
            const std::string& trace_path, const std::string& profile, unsigned runs_override,
            const std::string& cost_config) {
  gs::BenchmarkSpec spec;
  spec.algo = gs::variant_from_string(algo);
  spec.mode = gs::mode_from_string(mode);
  spec.sessions = sessions;
  spec.seed = seed;
  spec.runs_per_session = runs_override;
  spec.dataset_label = std::filesystem::path(graph_file).filename().string();

  gs::EngineContext ctx;
  ctx.mode = spec.mode;
  if (!cost_config.empty()) {
    ctx.cost = gs::load_cost_config(gs::KeyValueFile::parse_file(cost_config));
  }
  std::unique_ptr<gs::LatencyTable> machine;
  if (spec.mode == gs::ExecutionMode::scheduler) {
    if (!std::filesystem::exists(profile)) {
      std::cerr << "error: machine profile '" << profile
                << "' not found; run `graphsched calibrate` first\n";
      return 2;
    }
    machine = std::make_unique<gs::LatencyTable>(gs::LatencyTable::load(profile));
    ctx.machine = machine.get();
  }

  gs::Graph graph = gs::ingest_edge_list_file(graph_file);
  std::vector<gs::RunTrace> traces;
  gs::SessionReport report =
      gs::run_sessions(graph, spec, ctx, trace_path.empty() ? nullptr : &traces);

  gs::write_csv_header(std::cout);
  gs::write_csv_row(std::cout, report);
  if (!csv_path.empty()) {
    bool fresh = !std::filesystem::exists(csv_path);
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw std::runtime_error("cannot open csv file: " + csv_path);
    if (fresh) gs::write_csv_header(csv);
    gs::write_csv_row(csv, report);
  }
  if (!trace_path.empty()) write_trace_file(trace_path, traces);
  return 0;
}

int cmd_bench(const std::string& matrix_file) {
  gs::BenchMatrix matrix = gs::BenchMatrix::load(matrix_file);
  std::ofstream csv(matrix.csv_path);
  if (!csv) throw std::runtime_error("cannot open csv file: " + matrix.csv_path);
  gs::write_csv_header(csv);
  int failures = gs::run_bench_matrix(matrix, csv, std::cout);
  std::cout << "wrote " << matrix.csv_path;
  if (failures > 0) std::cout << " (" << failures << " cells failed)";
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphsched: adaptive parallelism control for graph queries"};
  app.require_subcommand(1);

  auto* calibrate = app.add_subcommand("calibrate", "measure the machine latency profile");
  std::string profile = default_profile_path();
  std::string hierarchy_file;
  unsigned threads_max = 0;
  bool force = false;
  calibrate->add_option("--profile", profile, "machine profile path");
  calibrate->add_option("--threads-max", threads_max, "cap the calibrated thread count");
  calibrate->add_option("--hierarchy", hierarchy_file,
                        "cache hierarchy config (default: auto-detect)");
  calibrate->add_flag("--force", force, "re-measure even if the profile exists");

  auto* rmat = app.add_subcommand("rmat", "generate a synthetic scale-free edge list");
  unsigned scale = 12;
  double edge_factor = 16.0;
  std::uint64_t rmat_seed = 1;
  std::string out_file;
  double qa = 0.57, qb = 0.19, qc = 0.19, qd = 0.05;
  rmat->add_option("--scale", scale, "vertex count = 2^scale")->required();
  rmat->add_option("--edge-factor", edge_factor, "edges per vertex");
  rmat->add_option("--seed", rmat_seed, "generator seed");
  rmat->add_option("--out", out_file, "output edge list")->required();
  rmat->add_option("--a", qa, "quadrant probability a");
  rmat->add_option("--b", qb, "quadrant probability b");
  rmat->add_option("--c", qc, "quadrant probability c");
  rmat->add_option("--d", qd, "quadrant probability d");

  auto* run = app.add_subcommand("run", "measure one algorithm/mode/dataset configuration");
  std::string algo = "bfs";
  std::string mode = "sequential";
  std::string graph_file;
  unsigned sessions = 1;
  std::uint64_t seed = 1;
  std::string csv_path;
  std::string trace_path;
  std::string run_profile = default_profile_path();
  unsigned runs_override = 0;
  std::string cost_config;
  run->add_option("--algo", algo, "bfs | pr-push | pr-pull")->required();
  run->add_option("--mode", mode, "sequential | simple | scheduler")->required();
  run->add_option("--graph", graph_file, "edge list file")->required();
  run->add_option("--sessions", sessions, "concurrent sessions");
  run->add_option("--seed", seed, "source selection seed");
  run->add_option("--csv", csv_path, "append the result row to this CSV file");
  run->add_option("--trace", trace_path, "write per-iteration and per-package trace");
  run->add_option("--profile", run_profile, "machine profile path");
  run->add_option("--runs", runs_override, "override measured runs per session");
  run->add_option("--cost-config", cost_config, "cost model constants (key = value file)");

  auto* bench = app.add_subcommand("bench", "sweep a benchmark matrix into a CSV");
  std::string matrix_file;
  bench->add_option("--matrix", matrix_file, "matrix config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return cmd_calibrate(profile, hierarchy_file, threads_max, force);
    if (rmat->parsed()) return cmd_rmat(scale, edge_factor, rmat_seed, out_file, qa, qb, qc, qd);
    if (run->parsed()) {
      return cmd_run(algo, mode, graph_file, sessions, seed, csv_path, trace_path, run_profile,
                     runs_override, cost_config);
    }
    if (bench->parsed()) return cmd_bench(matrix_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
