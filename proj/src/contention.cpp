#include "graphsched/contention.hpp"

#include <omp.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace graphsched {

void CacheHierarchy::validate() const {
  if (capacities.size() < 2) {
    throw std::invalid_argument("cache hierarchy needs at least one cache level and main memory");
  }
  for (std::size_t i = 1; i < capacities.size(); ++i) {
    if (capacities[i] <= capacities[i - 1]) {
      throw std::invalid_argument("cache hierarchy capacities must be strictly increasing");
    }
  }
}

namespace {

std::uint64_t parse_size_with_suffix(std::string text) {
  text = trim(text);
  if (text.empty()) throw std::runtime_error("empty cache size");
  std::uint64_t mult = 1;
  char last = text.back();
  if (last == 'K' || last == 'k') mult = 1024ULL;
  if (last == 'M' || last == 'm') mult = 1024ULL * 1024;
  if (last == 'G' || last == 'g') mult = 1024ULL * 1024 * 1024;
  if (mult != 1) text.pop_back();
  return std::stoull(text) * mult;
}

std::string read_first_line(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return {};
  return line;
}

}  // namespace

CacheHierarchy CacheHierarchy::detect() {
  namespace fs = std::filesystem;
  const std::string base = "/sys/devices/system/cpu/cpu0/cache";
  std::map<int, std::uint64_t> by_level;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(base, ec)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("index", 0) != 0) continue;
    std::string type = trim(read_first_line(entry.path() / "type"));
    if (type != "Data" && type != "Unified") continue;
    std::string level_s = read_first_line(entry.path() / "level");
    std::string size_s = read_first_line(entry.path() / "size");
    if (level_s.empty() || size_s.empty()) continue;
    int level = std::stoi(level_s);
    by_level[level] = std::max(by_level[level], parse_size_with_suffix(size_s));
  }
  if (ec || by_level.empty()) {
    throw std::runtime_error("cache hierarchy auto-detection failed; provide a hierarchy config");
  }
  CacheHierarchy h;
  for (const auto& [level, size] : by_level) h.capacities.push_back(size);

  std::ifstream mem("/proc/meminfo");
  std::string line;
  std::uint64_t mem_total = 0;
  while (std::getline(mem, line)) {
    if (line.rfind("MemTotal:", 0) == 0) {
      std::istringstream is(line.substr(9));
      std::uint64_t kb = 0;
      is >> kb;
      mem_total = kb * 1024;
      break;
    }
  }
  if (mem_total == 0) {
    throw std::runtime_error("could not read MemTotal; provide a hierarchy config");
  }
  h.capacities.push_back(mem_total);
  h.validate();
  return h;
}

CacheHierarchy CacheHierarchy::from_config(const KeyValueFile& kv) {
  CacheHierarchy h;
  for (const std::string& v : kv.get_all("level")) {
    h.capacities.push_back(parse_size_with_suffix(v));
  }
  if (h.capacities.empty()) {
    throw std::runtime_error(kv.origin() + ": hierarchy config needs 'level = <bytes>' lines");
  }
  h.validate();
  return h;
}

namespace {

template <typename Counter>
void count_degrees(std::span<const Edge> edges, unsigned threads, std::vector<Counter>& counters,
                   std::uint64_t partitions) {
  Counter* data = counters.data();
  const Edge* edge_data = edges.data();
  const std::uint64_t edge_count = edges.size();
#pragma omp parallel for num_threads(static_cast<int>(threads)) schedule(dynamic, 1)
  for (std::int64_t part = 0; part < static_cast<std::int64_t>(partitions); ++part) {
    std::uint64_t begin = static_cast<std::uint64_t>(part) * kDegreeCountPartitionEdges;
    std::uint64_t end = std::min(begin + kDegreeCountPartitionEdges, edge_count);
    for (std::uint64_t i = begin; i < end; ++i) {
      std::atomic_ref<Counter>(data[edge_data[i].first]).fetch_add(1, std::memory_order_relaxed);
      std::atomic_ref<Counter>(data[edge_data[i].second]).fetch_add(1, std::memory_order_relaxed);
    }
  }
}

template <typename Counter>
DegreeCountResult run_degree_count(std::span<const Edge> edges, unsigned threads,
                                   const CounterArraySpec& spec, unsigned passes) {
  std::vector<Counter> counters(spec.vertex_count, 0);
  const std::uint64_t partitions =
      (edges.size() + kDegreeCountPartitionEdges - 1) / kDegreeCountPartitionEdges;

  // Reference histogram for the verification below; wrapping on narrow
  // counters matches the native overflow of the atomic adds.
  std::vector<Counter> expected(spec.vertex_count, 0);
  for (const Edge& e : edges) {
    ++expected[e.first];
    ++expected[e.second];
  }

  const std::uint64_t updates_per_pass = 2 * edges.size();
  double total_ns = 0;
  for (unsigned pass = 0; pass <= passes; ++pass) {
    std::fill(counters.begin(), counters.end(), Counter{0});
    auto t0 = std::chrono::steady_clock::now();
    count_degrees(edges, threads, counters, partitions);
    auto t1 = std::chrono::steady_clock::now();
    if (std::memcmp(counters.data(), expected.data(), counters.size() * sizeof(Counter)) != 0) {
      throw std::logic_error("degree count benchmark lost updates");
    }
    if (pass == 0) continue;  // warm-up pass
    total_ns += std::chrono::duration<double, std::nano>(t1 - t0).count();
  }

  DegreeCountResult r;
  r.updates = updates_per_pass;
  r.elapsed_ns = static_cast<std::uint64_t>(total_ns / passes);
  r.mean_update_ns = total_ns / passes / static_cast<double>(updates_per_pass);
  r.latency_ns = r.mean_update_ns * static_cast<double>(threads);
  return r;
}

}  // namespace

DegreeCountResult degree_count_benchmark(std::span<const Edge> edges, unsigned threads,
                                         const CounterArraySpec& spec, unsigned passes) {
  if (threads == 0) throw std::invalid_argument("degree count: thread count must be positive");
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (threads > hw) {
    throw std::invalid_argument("degree count: " + std::to_string(threads) +
                                " threads exceed the " + std::to_string(hw) +
                                " available hardware threads");
  }
  if (edges.empty()) throw std::invalid_argument("degree count: empty edge list, no partitions");
  if (spec.vertex_count == 0) throw std::invalid_argument("degree count: empty counter array");
  const std::uint64_t partitions =
      (edges.size() + kDegreeCountPartitionEdges - 1) / kDegreeCountPartitionEdges;
  if (partitions < threads) {
    throw std::invalid_argument("degree count: fewer partitions than threads; excluded setting");
  }
  if (passes == 0) throw std::invalid_argument("degree count: need at least one measured pass");

  switch (spec.counter_width) {
    case 1: return run_degree_count<std::uint8_t>(edges, threads, spec, passes);
    case 2: return run_degree_count<std::uint16_t>(edges, threads, spec, passes);
    case 4: return run_degree_count<std::uint32_t>(edges, threads, spec, passes);
    case 8: return run_degree_count<std::uint64_t>(edges, threads, spec, passes);
    default: throw std::invalid_argument("degree count: counter width must be 1, 2, 4 or 8");
  }
}

LatencyTable::LatencyTable(CacheHierarchy hierarchy, std::vector<std::uint64_t> m_grid,
                           std::vector<unsigned> thread_grid, std::vector<double> cells,
                           std::string host, std::int64_t created_unix)
    : hierarchy_(std::move(hierarchy)),
      m_grid_(std::move(m_grid)),
      thread_grid_(std::move(thread_grid)),
      cells_(std::move(cells)),
      host_(std::move(host)),
      created_unix_(created_unix) {
  hierarchy_.validate();
  if (m_grid_.size() < 2) throw std::invalid_argument("latency table needs at least two rows");
  if (!std::is_sorted(m_grid_.begin(), m_grid_.end()) ||
      std::adjacent_find(m_grid_.begin(), m_grid_.end()) != m_grid_.end()) {
    throw std::invalid_argument("latency table m grid must be strictly increasing");
  }
  if (thread_grid_.empty() || thread_grid_.front() != 1 ||
      !std::is_sorted(thread_grid_.begin(), thread_grid_.end())) {
    throw std::invalid_argument("latency table thread grid must be ascending and contain 1");
  }
  if (cells_.size() != m_grid_.size() * thread_grid_.size()) {
    throw std::invalid_argument("latency table cell count does not match the grid");
  }
  for (double v : cells_) {
    if (!(v > 0)) throw std::invalid_argument("latency table cells must be positive");
  }
  if (m_grid_.back() > hierarchy_.main_memory()) {
    throw std::invalid_argument("latency table rows exceed main memory capacity");
  }
}

double LatencyTable::cell(std::size_t m_index, std::size_t t_index) const {
  return cells_.at(m_index * thread_grid_.size() + t_index);
}

double LatencyTable::at(std::uint64_t m_bytes, unsigned threads) const {
  auto mi = std::find(m_grid_.begin(), m_grid_.end(), m_bytes);
  auto ti = std::find(thread_grid_.begin(), thread_grid_.end(), threads);
  if (mi == m_grid_.end() || ti == thread_grid_.end()) {
    throw std::out_of_range("latency table: no such grid cell");
  }
  return cell(static_cast<std::size_t>(mi - m_grid_.begin()),
              static_cast<std::size_t>(ti - thread_grid_.begin()));
}

void LatencyTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write machine profile: " + path);
  out << "graphsched-machine-profile 1\n";
  out << "host " << host_ << ' ' << created_unix_ << '\n';
  for (std::uint64_t cap : hierarchy_.capacities) out << "level " << cap << '\n';
  out.setf(std::ios::fixed);
  out.precision(4);
  for (std::size_t m = 0; m < m_grid_.size(); ++m) {
    for (std::size_t t = 0; t < thread_grid_.size(); ++t) {
      out << "measure " << m_grid_[m] << ' ' << thread_grid_[t] << ' ' << cell(m, t) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing machine profile: " + path);
}

LatencyTable LatencyTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open machine profile: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "graphsched-machine-profile 1") {
    throw std::runtime_error(path + ": not a graphsched machine profile (bad header)");
  }
  CacheHierarchy hierarchy;
  std::string host = "unknown";
  std::int64_t created = 0;
  std::map<std::uint64_t, std::map<unsigned, double>> cells;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::istringstream is(stripped);
    std::string tag;
    is >> tag;
    if (tag == "host") {
      is >> host >> created;
    } else if (tag == "level") {
      std::uint64_t cap = 0;
      is >> cap;
      hierarchy.capacities.push_back(cap);
    } else if (tag == "measure") {
      std::uint64_t m = 0;
      unsigned t = 0;
      double ns = 0;
      is >> m >> t >> ns;
      if (!is) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad measure line");
      cells[m][t] = ns;
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown record '" + tag +
                               "'");
    }
  }
  if (cells.empty()) throw std::runtime_error(path + ": profile has no measurements");
  std::vector<std::uint64_t> m_grid;
  std::vector<unsigned> t_grid;
  for (const auto& [m, row] : cells) m_grid.push_back(m);
  for (const auto& [t, v] : cells.begin()->second) t_grid.push_back(t);
  std::vector<double> flat;
  for (const auto& [m, row] : cells) {
    if (row.size() != t_grid.size()) {
      throw std::runtime_error(path + ": ragged measurement grid");
    }
    std::size_t i = 0;
    for (const auto& [t, v] : row) {
      if (t != t_grid[i++]) throw std::runtime_error(path + ": inconsistent thread grid");
      flat.push_back(v);
    }
  }
  return LatencyTable(std::move(hierarchy), std::move(m_grid), std::move(t_grid), std::move(flat),
                      std::move(host), created);
}

std::vector<std::uint64_t> calibration_m_grid(const CacheHierarchy& hierarchy) {
  hierarchy.validate();
  std::vector<std::uint64_t> grid;
  const std::size_t cache_levels = hierarchy.capacities.size() - 1;
  for (std::size_t i = 0; i < cache_levels; ++i) grid.push_back(hierarchy.capacities[i] / 2);
  std::uint64_t llc = hierarchy.capacities[cache_levels - 1];
  std::uint64_t mm_row = llc + llc / 2;
  // Keep the main-memory row allocatable: cap it at a quarter of RAM.
  mm_row = std::min(mm_row, hierarchy.main_memory() / 4);
  grid.push_back(mm_row);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) {
      throw std::runtime_error("calibration grid collapsed; hierarchy capacities too close");
    }
  }
  return grid;
}

std::vector<unsigned> calibration_thread_grid(unsigned max_threads) {
  if (max_threads == 0) max_threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<unsigned> grid;
  for (unsigned t = max_threads; t >= 1; t /= 2) grid.push_back(t);
  std::reverse(grid.begin(), grid.end());
  if (grid.front() != 1) grid.insert(grid.begin(), 1);
  return grid;
}

namespace {

std::string host_name() {
  char buf[256] = {0};
  if (gethostname(buf, sizeof(buf) - 1) != 0) return "unknown";
  return buf;
}

// RMAT-skewed edge list folded onto exactly `vertex_count` counters so that
// M_Counters = width * vertex_count hits the target row size.
std::vector<Edge> calibration_edges(std::uint64_t vertex_count, std::uint64_t edge_count,
                                    std::uint64_t seed) {
  unsigned scale = 1;
  while ((1ULL << scale) < vertex_count) ++scale;
  RmatParams p;
  p.scale = scale;
  p.edge_factor = static_cast<double>(edge_count) / static_cast<double>(1ULL << scale);
  p.seed = seed;
  std::vector<Edge> edges = rmat_edges(p);
  for (Edge& e : edges) {
    e.first = static_cast<VertexId>(e.first % vertex_count);
    e.second = static_cast<VertexId>(e.second % vertex_count);
  }
  return edges;
}

}  // namespace

LatencyTable calibrate(const CacheHierarchy& hierarchy, const std::string& profile_path,
                       const CalibrationOptions& options) {
  if (std::filesystem::exists(profile_path)) {
    return LatencyTable::load(profile_path);
  }
  hierarchy.validate();

  std::vector<std::uint64_t> m_grid = calibration_m_grid(hierarchy);
  std::vector<unsigned> t_grid = calibration_thread_grid(options.max_threads);

  std::vector<double> cells;
  cells.reserve(m_grid.size() * t_grid.size());
  for (std::uint64_t m : m_grid) {
    std::uint64_t vertex_count = std::max<std::uint64_t>(1, m / options.counter_width);
    std::vector<Edge> edges;
    if (!options.measure) {
      std::uint64_t edge_count =
          std::max<std::uint64_t>(options.min_edges, kDegreeCountPartitionEdges * t_grid.back());
      edge_count = (edge_count + kDegreeCountPartitionEdges - 1) / kDegreeCountPartitionEdges *
                   kDegreeCountPartitionEdges;
      edges = calibration_edges(vertex_count, edge_count, options.rmat_seed + m);
    }
    for (unsigned t : t_grid) {
      double latency;
      if (options.measure) {
        latency = options.measure(m, t);
      } else {
        CounterArraySpec spec{options.counter_width, vertex_count};
        latency = degree_count_benchmark(edges, t, spec, options.passes).latency_ns;
      }
      cells.push_back(latency);
    }
  }

  LatencyTable table(hierarchy, std::move(m_grid), std::move(t_grid), std::move(cells),
                     host_name(),
                     std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count());
  table.save(profile_path);
  return table;
}

double predict_latency(const LatencyTable& table, std::uint64_t m_bytes, unsigned threads,
                       const PredictOptions& options) {
  if (m_bytes > table.hierarchy().main_memory()) {
    throw std::out_of_range("predict_latency: size exceeds main memory capacity");
  }
  if (threads == 0) throw std::invalid_argument("predict_latency: thread count must be positive");

  const std::vector<unsigned>& tg = table.thread_grid();
  std::size_t t_index = 0;
  while (t_index + 1 < tg.size() && tg[t_index] < threads) ++t_index;  // round up

  const std::vector<std::uint64_t>& rows = table.m_grid();
  // Grid rows reproduce their measurement bit-exactly.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] == m_bytes) return table.cell(i, t_index);
  }
  // Level rule: the first row whose size strictly exceeds m.  Below the first
  // row the lower and upper bound coincide; at or above the last row the
  // latency plateaus at the main-memory measurement.
  std::size_t lower = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] > m_bytes) {
      lower = i;
      break;
    }
  }
  if (lower == 0) return table.cell(0, t_index);
  if (lower == rows.size()) return table.cell(rows.size() - 1, t_index);

  std::size_t upper = lower - 1;
  double log_l = std::log(static_cast<double>(rows[lower]));
  double log_u = std::log(static_cast<double>(rows[upper]));
  double s = (log_l - std::log(static_cast<double>(m_bytes))) / (log_l - log_u);
  double l_lower = table.cell(lower, t_index);
  double l_upper = table.cell(upper, t_index);
  double delta = l_upper - l_lower;
  double scaled = options.exponent == 3.0 ? s * s * s : std::pow(s, options.exponent);
  double correction = delta * scaled;
  return options.verbatim_sign ? l_lower - correction : l_lower + correction;
}

double mem_latency(const LatencyTable& table, std::uint64_t m_bytes,
                   const PredictOptions& options) {
  return predict_latency(table, m_bytes, 1, options);
}

}  // namespace graphsched
