#include "graphsched/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <latch>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace graphsched {

namespace {

std::uint64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// splitmix64; deterministic source selection independent of libstdc++.
struct SeedStream {
  std::uint64_t state;
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

std::pair<std::string, std::string> algo_variant_names(AlgorithmVariant algo) {
  switch (algo) {
    case AlgorithmVariant::bfs_top_down: return {"bfs", "top-down"};
    case AlgorithmVariant::pr_push: return {"pr", "push"};
    case AlgorithmVariant::pr_pull: return {"pr", "pull"};
  }
  return {"?", "?"};
}

}  // namespace

std::uint64_t default_runs_per_session(AlgorithmVariant algo) {
  return algo == AlgorithmVariant::bfs_top_down ? 50 : 24;
}

SessionReport run_sessions(const Graph& g, const BenchmarkSpec& spec, const EngineContext& base,
                           std::vector<RunTrace>* traces) {
  if (spec.sessions == 0) throw std::invalid_argument("run_sessions: need at least one session");
  if (base.mode == ExecutionMode::scheduler && base.machine == nullptr) {
    throw std::runtime_error(
        "scheduler mode needs a machine profile; run `graphsched calibrate` first");
  }
  const bool is_bfs = spec.algo == AlgorithmVariant::bfs_top_down;
  const std::uint64_t runs_per_session =
      spec.runs_per_session > 0 ? spec.runs_per_session : default_runs_per_session(spec.algo);

  std::vector<VertexId> reachable;
  if (is_bfs) {
    reachable = g.reachable_vertices();
    if (reachable.empty()) {
      throw std::runtime_error("run_sessions: graph has no reachable vertices for BFS sources");
    }
  }

  const unsigned sessions = spec.sessions;
  std::vector<std::vector<std::uint64_t>> elapsed(sessions);
  std::vector<std::vector<std::uint64_t>> edges(sessions);
  std::vector<std::vector<RunTrace>> session_traces(sessions);
  std::vector<std::exception_ptr> errors(sessions);

  // Shared worker budget so concurrent sessions cannot oversubscribe the
  // machine; every session's own thread occupies one core, the remainder is
  // grantable.  Each session keeps its own parked team.
  unsigned team_capacity = std::max(1u, base.cost.resolved_max_cores());
  std::unique_ptr<WorkerBudget> owned_budget;
  WorkerBudget* budget = base.budget;
  if (budget == nullptr && base.mode == ExecutionMode::scheduler) {
    long long grantable = static_cast<long long>(team_capacity) - sessions;
    owned_budget = std::make_unique<WorkerBudget>(std::max<long long>(0, grantable));
    budget = owned_budget.get();
  }

  std::latch start_gate(1);
  std::vector<std::thread> workers;
  workers.reserve(sessions);
  for (unsigned s = 0; s < sessions; ++s) {
    workers.emplace_back([&, s] {
      try {
        EngineContext ctx = base;
        std::unique_ptr<WorkerTeam> team;
        if (ctx.mode == ExecutionMode::scheduler && team_capacity > 1) {
          team = std::make_unique<WorkerTeam>(team_capacity);
          ctx.team = team.get();
          ctx.budget = budget;
        }
        SeedStream rng{spec.seed * 0x9e3779b97f4a7c15ULL + s + 1};
        start_gate.wait();
        for (std::uint64_t r = 0; r < runs_per_session; ++r) {
          RunTrace trace;
          RunTrace* trace_ptr = traces ? &trace : nullptr;
          std::uint64_t t0 = now_ns();
          std::uint64_t work = 0;
          if (is_bfs) {
            VertexId source = reachable[rng.next() % reachable.size()];
            BfsResult res = bfs(g, source, ctx, trace_ptr);
            work = res.traversed_edges;
          } else {
            PagerankResult res = pagerank(g, spec.algo, ctx, spec.pagerank, trace_ptr);
            work = res.processed_edges;
          }
          std::uint64_t t1 = now_ns();
          elapsed[s].push_back(t1 - t0);
          edges[s].push_back(work);
          if (traces) session_traces[s].push_back(std::move(trace));
        }
      } catch (...) {
        errors[s] = std::current_exception();
      }
    });
  }

  std::uint64_t wall_t0 = now_ns();
  start_gate.count_down();
  for (std::thread& t : workers) t.join();
  std::uint64_t wall_t1 = now_ns();

  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SessionReport report;
  auto [algo_name, variant_name] = algo_variant_names(spec.algo);
  report.algo = algo_name;
  report.variant = variant_name;
  report.mode = to_string(base.mode);
  report.dataset = spec.dataset_label;
  report.sessions = sessions;
  report.wall_ns = wall_t1 - wall_t0;
  for (unsigned s = 0; s < sessions; ++s) {
    report.run_elapsed_ns.insert(report.run_elapsed_ns.end(), elapsed[s].begin(), elapsed[s].end());
    report.run_edges.insert(report.run_edges.end(), edges[s].begin(), edges[s].end());
    if (traces) {
      for (RunTrace& t : session_traces[s]) traces->push_back(std::move(t));
    }
  }
  report.runs = report.run_elapsed_ns.size();
  for (std::uint64_t e : report.run_edges) report.total_edges += e;
  std::uint64_t elapsed_sum = 0;
  for (std::uint64_t ns : report.run_elapsed_ns) elapsed_sum += ns;
  report.mean_ms = report.runs == 0
                       ? 0.0
                       : static_cast<double>(elapsed_sum) / static_cast<double>(report.runs) / 1e6;
  report.throughput_eps = report.wall_ns == 0
                              ? 0.0
                              : static_cast<double>(report.total_edges) * 1e9 /
                                    static_cast<double>(report.wall_ns);
  return report;
}

void write_csv_header(std::ostream& out) {
  out << "algo,variant,mode,dataset,sessions,runs,mean_ms,throughput_eps\n";
}

void write_csv_row(std::ostream& out, const SessionReport& r) {
  out << r.algo << ',' << r.variant << ',' << r.mode << ',' << r.dataset << ',' << r.sessions
      << ',' << r.runs << ',' << r.mean_ms << ',' << r.throughput_eps << '\n';
}

void write_csv_error_row(std::ostream& out, const BenchmarkSpec& spec, const std::string& reason) {
  auto [algo_name, variant_name] = algo_variant_names(spec.algo);
  std::string note = reason;
  for (char& c : note) {
    if (c == ',' || c == '\n') c = ';';
  }
  out << algo_name << ',' << variant_name << ',' << to_string(spec.mode) << ','
      << spec.dataset_label << ',' << spec.sessions << ",0,error,error # " << note << '\n';
}

BenchMatrix BenchMatrix::load(const std::string& path) {
  KeyValueFile kv = KeyValueFile::parse_file(path);
  BenchMatrix m;
  for (const std::string& f : kv.get_all("graph")) m.graph_files.push_back(f);
  if (kv.has("rmat_scales")) {
    for (const std::string& s : kv.get_list("rmat_scales")) {
      m.rmat_scales.push_back(static_cast<unsigned>(std::stoul(s)));
    }
  }
  m.rmat_edge_factor = kv.get_double("edge_factor", m.rmat_edge_factor);
  m.rmat_seed = kv.get_uint("rmat_seed", m.rmat_seed);
  std::vector<std::string> algos =
      kv.has("algos") ? kv.get_list("algos")
                      : std::vector<std::string>{"bfs", "pr-push", "pr-pull"};
  for (const std::string& a : algos) m.algos.push_back(variant_from_string(a));
  std::vector<std::string> modes =
      kv.has("modes") ? kv.get_list("modes")
                      : std::vector<std::string>{"sequential", "simple", "scheduler"};
  for (const std::string& s : modes) m.modes.push_back(mode_from_string(s));
  if (kv.has("sessions")) {
    for (const std::string& s : kv.get_list("sessions")) {
      m.sessions.push_back(static_cast<unsigned>(std::stoul(s)));
    }
  } else {
    m.sessions = {1};
  }
  m.seed = kv.get_uint("seed", m.seed);
  m.pr_runs_per_session = static_cast<unsigned>(kv.get_uint("pr_runs_per_session", 0));
  m.bfs_runs_per_session = static_cast<unsigned>(kv.get_uint("bfs_runs_per_session", 0));
  m.csv_path = kv.get_string("csv", m.csv_path);
  m.profile_path = kv.get_string("profile", "");
  m.cost_config_path = kv.get_string("cost_config", "");
  if (m.graph_files.empty() && m.rmat_scales.empty()) {
    throw std::runtime_error(path + ": matrix needs 'graph' files or 'rmat_scales'");
  }
  return m;
}

int run_bench_matrix(const BenchMatrix& matrix, std::ostream& csv, std::ostream& log) {
  struct Dataset {
    std::string label;
    std::unique_ptr<Graph> graph;
  };
  std::vector<Dataset> datasets;
  for (const std::string& file : matrix.graph_files) {
    Dataset d;
    d.label = std::filesystem::path(file).filename().string();
    d.graph = std::make_unique<Graph>(ingest_edge_list_file(file));
    datasets.push_back(std::move(d));
  }
  for (unsigned scale : matrix.rmat_scales) {
    RmatParams p;
    p.scale = scale;
    p.edge_factor = matrix.rmat_edge_factor;
    p.seed = matrix.rmat_seed;
    Dataset d;
    d.label = "rmat-sf" + std::to_string(scale);
    log << "generating " << d.label << "...\n" << std::flush;
    d.graph = std::make_unique<Graph>(generate_rmat(p));
    datasets.push_back(std::move(d));
  }

  std::unique_ptr<LatencyTable> machine;
  bool needs_machine =
      std::find(matrix.modes.begin(), matrix.modes.end(), ExecutionMode::scheduler) !=
      matrix.modes.end();
  std::string machine_error;
  if (needs_machine) {
    if (matrix.profile_path.empty()) {
      machine_error = "no machine profile configured; run `graphsched calibrate`";
    } else {
      try {
        machine = std::make_unique<LatencyTable>(LatencyTable::load(matrix.profile_path));
      } catch (const std::exception& e) {
        machine_error = e.what();
      }
    }
  }

  int failures = 0;
  for (const Dataset& dataset : datasets) {
    for (AlgorithmVariant algo : matrix.algos) {
      for (ExecutionMode mode : matrix.modes) {
        for (unsigned sessions : matrix.sessions) {
          BenchmarkSpec spec;
          spec.algo = algo;
          spec.mode = mode;
          spec.sessions = sessions;
          spec.seed = matrix.seed;
          spec.dataset_label = dataset.label;
          spec.runs_per_session = algo == AlgorithmVariant::bfs_top_down
                                      ? matrix.bfs_runs_per_session
                                      : matrix.pr_runs_per_session;
          try {
            if (mode == ExecutionMode::scheduler && machine == nullptr) {
              throw std::runtime_error(machine_error);
            }
            EngineContext ctx;
            ctx.mode = mode;
            ctx.machine = machine.get();
            if (!matrix.cost_config_path.empty()) {
              ctx.cost = load_cost_config(KeyValueFile::parse_file(matrix.cost_config_path));
            }
            SessionReport report = run_sessions(*dataset.graph, spec, ctx);
            write_csv_row(csv, report);
            log << dataset.label << ' ' << to_string(algo) << ' ' << to_string(mode) << " x"
                << sessions << ": " << report.throughput_eps / 1e6 << " Meps (mean "
                << report.mean_ms << " ms)\n"
                << std::flush;
          } catch (const std::exception& e) {
            write_csv_error_row(csv, spec, e.what());
            log << dataset.label << ' ' << to_string(algo) << ' ' << to_string(mode) << " x"
                << sessions << ": error: " << e.what() << '\n'
                << std::flush;
            ++failures;
          }
        }
      }
    }
  }
  return failures;
}

}  // namespace graphsched
