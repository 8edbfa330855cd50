#include "graphsched/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

namespace graphsched {

const ItemCounts& AlgorithmDescriptor::item(ItemKind kind) const {
  switch (kind) {
    case ItemKind::vertex: return vertex;
    case ItemKind::edge: return edge;
    case ItemKind::found_vertex: return found_vertex;
  }
  throw std::invalid_argument("unknown item kind");
}

unsigned CostModelConfig::resolved_max_cores() const {
  if (max_cores > 0) return max_cores;
  // hardware_concurrency re-reads sysfs on every call; resolve it once.
  static const unsigned hw = [] {
    unsigned h = std::thread::hardware_concurrency();
    return h > 0 ? h : 1u;
  }();
  return hw;
}

void CostModelConfig::validate() const {
  if (!(op_latency_ns > 0) || !(thread_overhead_ns > 0) || !(min_thread_work_ns > 0) ||
      !(parallel_startup_ns > 0)) {
    throw std::invalid_argument("cost model times must be positive");
  }
  if (!(min_thread_work_ns > thread_overhead_ns)) {
    throw std::invalid_argument("min_thread_work_ns must exceed thread_overhead_ns");
  }
}

CostModelConfig load_cost_config(const KeyValueFile& kv) {
  CostModelConfig cfg;
  cfg.op_latency_ns = kv.get_double("op_latency_ns", cfg.op_latency_ns);
  cfg.thread_overhead_ns = kv.get_double("thread_overhead_ns", cfg.thread_overhead_ns);
  cfg.min_thread_work_ns = kv.get_double("min_thread_work_ns", cfg.min_thread_work_ns);
  cfg.parallel_startup_ns = kv.get_double("parallel_startup_ns", cfg.parallel_startup_ns);
  cfg.max_cores = static_cast<unsigned>(kv.get_uint("max_cores", cfg.max_cores));
  cfg.validate();
  return cfg;
}

AlgorithmDescriptor load_descriptor(const KeyValueFile& kv) {
  AlgorithmDescriptor d;
  auto counts = [&kv](const char* prefix) {
    ItemCounts c;
    std::string p(prefix);
    c.ops = static_cast<std::uint32_t>(kv.get_uint(p + "_ops", 0));
    c.mem = static_cast<std::uint32_t>(kv.get_uint(p + "_mem", 0));
    c.atomics = static_cast<std::uint32_t>(kv.get_uint(p + "_atomics", 0));
    return c;
  };
  d.vertex = counts("vertex");
  d.edge = counts("edge");
  d.found_vertex = counts("found");
  d.bytes_per_vertex = kv.get_uint("bytes_per_vertex", 0);
  d.bytes_per_frontier_entry = kv.get_uint("bytes_per_frontier_entry", 0);
  d.constant_bytes = kv.get_uint("constant_bytes", 0);
  return d;
}

std::uint64_t estimate_footprint(const AlgorithmDescriptor& d, std::uint64_t vertex_count,
                                 std::uint64_t s_size, std::uint64_t f_size) {
  auto mul = [](std::uint64_t a, std::uint64_t b) {
    std::uint64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("footprint overflow");
    return r;
  };
  auto add = [](std::uint64_t a, std::uint64_t b) {
    std::uint64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("footprint overflow");
    return r;
  };
  std::uint64_t m = d.constant_bytes;
  m = add(m, mul(d.bytes_per_vertex, vertex_count));
  m = add(m, mul(d.bytes_per_frontier_entry, add(s_size, f_size)));
  return m;
}

double sub_cost(const ItemCounts& item, unsigned threads, double op_ns, double mem_ns,
                double atomic_ns) {
  double atomic = threads <= 1 ? mem_ns : atomic_ns;
  return static_cast<double>(item.ops) * op_ns + static_cast<double>(item.atomics) * atomic +
         static_cast<double>(item.mem) * mem_ns;
}

double sub_cost(const AlgorithmDescriptor& d, ItemKind kind, unsigned threads, double op_ns,
                double mem_ns, double atomic_ns) {
  return sub_cost(d.item(kind), threads, op_ns, mem_ns, atomic_ns);
}

double total_cost_per_vertex(const AlgorithmDescriptor& d, unsigned threads, double op_ns,
                             double mem_ns, double atomic_ns, std::uint64_t s_size,
                             std::uint64_t e_size, std::uint64_t f_size) {
  if (s_size == 0) throw std::invalid_argument("total_cost_per_vertex: empty iteration");
  double s = static_cast<double>(s_size);
  return sub_cost(d.vertex, threads, op_ns, mem_ns, atomic_ns) +
         (static_cast<double>(e_size) / s) * sub_cost(d.edge, threads, op_ns, mem_ns, atomic_ns) +
         (static_cast<double>(f_size) / s) *
             sub_cost(d.found_vertex, threads, op_ns, mem_ns, atomic_ns);
}

std::uint64_t min_vertices_for_parallel(const CostModelConfig& cfg, double total_seq_per_vertex) {
  if (!(total_seq_per_vertex > 0)) {
    throw std::invalid_argument("min_vertices_for_parallel: non-positive vertex cost");
  }
  double v = std::ceil((cfg.min_thread_work_ns + cfg.parallel_startup_ns) / total_seq_per_vertex);
  if (!(v >= 1.0)) return 1;
  if (v >= 1e18) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(v);
}

unsigned next_grid_thread_count(std::span<const unsigned> grid, unsigned t) {
  if (grid.empty()) throw std::invalid_argument("empty thread grid");
  for (unsigned g : grid) {
    if (g >= t) return g;
  }
  return grid.back();
}

namespace {

// Shared predicates so the scan oracle and the doubling variant evaluate the
// exact same floating-point expressions.
struct BoundsContext {
  double seq;
  double overhead;
  double min_work_plus_startup;
  double work_items;
};

bool profitable_at(const BoundsContext& ctx, unsigned t, double para_cost) {
  double td = static_cast<double>(t);
  return ctx.seq > para_cost / td + ctx.overhead * td / ctx.work_items;
}

bool work_bound_ok(const BoundsContext& ctx, unsigned t, double para_cost) {
  return static_cast<double>(t) * ctx.min_work_plus_startup <= ctx.work_items * para_cost;
}

bool eligible(const BoundsContext& ctx, unsigned t, double para_cost) {
  return profitable_at(ctx, t, para_cost) && work_bound_ok(ctx, t, para_cost);
}

struct LevelCosts {
  std::vector<unsigned> grid;
  std::vector<double> cost;  // memoized per grid level

  double at(std::span<const unsigned> g, const GridCostFn& fn, unsigned t) {
    unsigned level = next_grid_thread_count(g, t);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] == level) return cost[i];
    }
    grid.push_back(level);
    cost.push_back(fn(level));
    return cost.back();
  }
};

}  // namespace

ThreadBounds thread_bounds_scan(const CostModelConfig& cfg, double seq_cost_per_vertex,
                                const GridCostFn& para_cost, std::span<const unsigned> thread_grid,
                                std::uint64_t work_items) {
  ThreadBounds bounds;
  unsigned p = cfg.resolved_max_cores();
  if (work_items == 0 || thread_grid.empty() || p < 2) return bounds;
  BoundsContext ctx{seq_cost_per_vertex, cfg.thread_overhead_ns,
                    cfg.min_thread_work_ns + cfg.parallel_startup_ns,
                    static_cast<double>(work_items)};
  LevelCosts memo;
  for (unsigned t = 2; t <= p; ++t) {
    double c = memo.at(thread_grid, para_cost, t);
    if (!eligible(ctx, t, c)) continue;
    if (!bounds.parallel_profitable) {
      bounds.t_min = t;
      bounds.parallel_profitable = true;
    }
    bounds.t_max = t;
  }
  return bounds;
}

namespace {

struct SegmentRange {
  unsigned lo = 0, hi = 0;
  bool empty = true;
};

// Largest t in [lo, hi] with the work bound satisfied; the bound is monotone
// decreasing in t for a fixed level cost.
unsigned work_cap_within(const BoundsContext& ctx, double c, unsigned lo, unsigned hi) {
  if (!work_bound_ok(ctx, lo, c)) return lo - 1;
  if (work_bound_ok(ctx, hi, c)) return hi;
  unsigned a = lo, b = hi;  // ok(a), !ok(b)
  while (b - a > 1) {
    unsigned mid = a + (b - a) / 2;
    (work_bound_ok(ctx, mid, c) ? a : b) = mid;
  }
  return a;
}

// Feasible sub-interval of the profitability inequality inside [lo, hi].
// The right-hand side is convex in t, so the feasible set is contiguous.
SegmentRange profit_range_within(const BoundsContext& ctx, double c, unsigned lo, unsigned hi) {
  SegmentRange r;
  double t_star = std::sqrt(c * ctx.work_items / ctx.overhead);
  unsigned pivot = lo;
  if (t_star > static_cast<double>(hi)) {
    pivot = hi;
  } else if (t_star > static_cast<double>(lo)) {
    pivot = static_cast<unsigned>(t_star);
  }
  unsigned seed = 0;
  for (unsigned cand : {pivot, pivot < hi ? pivot + 1 : pivot, lo, hi}) {
    if (cand >= lo && cand <= hi && profitable_at(ctx, cand, c)) {
      seed = cand;
      break;
    }
  }
  if (seed == 0) return r;
  unsigned left = seed;
  if (!profitable_at(ctx, lo, c)) {
    unsigned a = lo, b = seed;  // !ok(a), ok(b)
    while (b - a > 1) {
      unsigned mid = a + (b - a) / 2;
      (profitable_at(ctx, mid, c) ? b : a) = mid;
    }
    left = b;
  } else {
    left = lo;
  }
  unsigned right = seed;
  if (profitable_at(ctx, hi, c)) {
    right = hi;
  } else {
    unsigned a = seed, b = hi;  // ok(a), !ok(b)
    while (b - a > 1) {
      unsigned mid = a + (b - a) / 2;
      (profitable_at(ctx, mid, c) ? a : b) = mid;
    }
    right = a;
  }
  r.lo = left;
  r.hi = right;
  r.empty = false;
  return r;
}

}  // namespace

ThreadBounds thread_bounds_fast(const CostModelConfig& cfg, double seq_cost_per_vertex,
                                const GridCostFn& para_cost, std::span<const unsigned> thread_grid,
                                std::uint64_t work_items) {
  ThreadBounds bounds;
  unsigned p = cfg.resolved_max_cores();
  if (work_items == 0 || thread_grid.empty() || p < 2) return bounds;
  BoundsContext ctx{seq_cost_per_vertex, cfg.thread_overhead_ns,
                    cfg.min_thread_work_ns + cfg.parallel_startup_ns,
                    static_cast<double>(work_items)};

  std::vector<unsigned> levels(thread_grid.begin(), thread_grid.end());
  if (levels.back() < p) levels.push_back(p);

  LevelCosts memo;
  unsigned prev_top = 1;
  for (unsigned level : levels) {
    unsigned seg_lo = std::max(2u, prev_top + 1);
    unsigned seg_hi = std::min(level, p);
    prev_top = std::max(prev_top, level);
    if (seg_lo > seg_hi) {
      if (seg_hi >= p) break;
      continue;
    }
    double c = memo.at(thread_grid, para_cost, seg_hi);

    SegmentRange range = profit_range_within(ctx, c, seg_lo, seg_hi);
    if (!range.empty) {
      unsigned cap = work_cap_within(ctx, c, range.lo, range.hi);
      if (cap < range.lo) {
        range.empty = true;
      } else {
        range.hi = cap;
      }
    }

    if (range.empty) {
      if (bounds.parallel_profitable) break;  // feasibility cannot resume on unimodal inputs
      if (seg_hi >= p) break;
      continue;
    }
    if (bounds.parallel_profitable && range.lo != bounds.t_max + 1) break;  // gap
    if (!bounds.parallel_profitable) {
      bounds.t_min = range.lo;
      bounds.parallel_profitable = true;
    }
    bounds.t_max = range.hi;
    if (range.hi < seg_hi) break;  // interval ended inside this segment
    if (seg_hi >= p) break;
  }
  return bounds;
}

}  // namespace graphsched
