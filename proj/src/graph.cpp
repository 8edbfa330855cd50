#include "graphsched/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace graphsched {

namespace {

void fill_csr(std::uint64_t vertex_count, std::span<const Edge> edges, bool reverse,
              std::vector<std::uint64_t>& offsets, std::vector<VertexId>& targets) {
  offsets.assign(vertex_count + 1, 0);
  for (const Edge& e : edges) {
    VertexId key = reverse ? e.second : e.first;
    ++offsets[key + 1];
  }
  for (std::uint64_t v = 0; v < vertex_count; ++v) offsets[v + 1] += offsets[v];
  targets.resize(edges.size());
  std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const Edge& e : edges) {
    VertexId key = reverse ? e.second : e.first;
    VertexId val = reverse ? e.first : e.second;
    targets[cursor[key]++] = val;
  }
}

}  // namespace

Graph::Graph(std::uint64_t vertex_count, std::span<const Edge> edges)
    : vertex_count_(vertex_count) {
  for (const Edge& e : edges) {
    if (e.first >= vertex_count || e.second >= vertex_count) {
      throw std::invalid_argument("edge endpoint " +
                                  std::to_string(std::max(e.first, e.second)) +
                                  " outside vertex range " + std::to_string(vertex_count));
    }
  }
  fill_csr(vertex_count_, edges, false, fwd_offsets_, fwd_targets_);
  fill_csr(vertex_count_, edges, true, rev_offsets_, rev_targets_);

  stats_.vertex_count = vertex_count_;
  stats_.edge_count = edges.size();
  stats_.mean_out_degree =
      vertex_count_ == 0 ? 0.0 : static_cast<double>(edges.size()) / static_cast<double>(vertex_count_);
  for (std::uint64_t v = 0; v < vertex_count_; ++v) {
    std::uint64_t deg = fwd_offsets_[v + 1] - fwd_offsets_[v];
    stats_.max_out_degree = std::max(stats_.max_out_degree, deg);
    if (rev_offsets_[v + 1] > rev_offsets_[v]) ++stats_.reachable_count;
  }
}

std::uint64_t Graph::out_degree(VertexId v) const {
  if (v >= vertex_count_) throw std::out_of_range("out_degree: vertex id out of range");
  return out_degree_unchecked(v);
}

std::uint64_t Graph::in_degree(VertexId v) const {
  if (v >= vertex_count_) throw std::out_of_range("in_degree: vertex id out of range");
  return rev_offsets_[v + 1] - rev_offsets_[v];
}

std::span<const VertexId> Graph::neighbors(VertexId v) const {
  if (v >= vertex_count_) throw std::out_of_range("neighbors: vertex id out of range");
  return out_span(v);
}

std::span<const VertexId> Graph::in_neighbors(VertexId v) const {
  if (v >= vertex_count_) throw std::out_of_range("in_neighbors: vertex id out of range");
  return in_span(v);
}

std::vector<VertexId> Graph::reachable_vertices() const {
  std::vector<VertexId> out;
  out.reserve(stats_.reachable_count);
  for (std::uint64_t v = 0; v < vertex_count_; ++v) {
    if (rev_offsets_[v + 1] > rev_offsets_[v]) out.push_back(static_cast<VertexId>(v));
  }
  return out;
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(fwd_targets_.size());
  for (std::uint64_t v = 0; v < vertex_count_; ++v) {
    for (std::uint64_t i = fwd_offsets_[v]; i < fwd_offsets_[v + 1]; ++i) {
      out.emplace_back(static_cast<VertexId>(v), fwd_targets_[i]);
    }
  }
  return out;
}

GraphStats build_stats(const Graph& g) { return g.stats(); }

namespace {

// Portable uniform double in [0, 1) from a splitmix64 stream; keeps RMAT
// output identical across standard libraries.
struct U01Stream {
  std::uint64_t state;
  explicit U01Stream(std::uint64_t seed) : state(seed) {}
  double next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }
};

}  // namespace

std::vector<Edge> rmat_edges(const RmatParams& p) {
  if (p.scale < 1 || p.scale > 31) {
    throw std::invalid_argument("rmat scale must be in [1, 31] (vertex ids overflow otherwise)");
  }
  if (!(p.edge_factor > 0.0)) throw std::invalid_argument("rmat edge_factor must be positive");
  double qsum = p.a + p.b + p.c + p.d;
  if (std::abs(qsum - 1.0) > 1e-9) {
    throw std::invalid_argument("rmat quadrant probabilities must sum to 1");
  }
  const std::uint64_t vertices = 1ULL << p.scale;
  const double edges_real = p.edge_factor * static_cast<double>(vertices);
  if (edges_real > 1e15) throw std::invalid_argument("rmat edge count overflows");
  const std::uint64_t edges = static_cast<std::uint64_t>(std::llround(edges_real));

  U01Stream rng(p.seed * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL);
  std::vector<Edge> out;
  out.reserve(edges);
  const double ab = p.a + p.b;
  const double abc = p.a + p.b + p.c;
  for (std::uint64_t e = 0; e < edges; ++e) {
    std::uint64_t row = 0, col = 0;
    for (unsigned level = 0; level < p.scale; ++level) {
      double r = rng.next();
      row <<= 1;
      col <<= 1;
      if (r < p.a) {
        // top-left: no bits set
      } else if (r < ab) {
        col |= 1;
      } else if (r < abc) {
        row |= 1;
      } else {
        row |= 1;
        col |= 1;
      }
    }
    out.emplace_back(static_cast<VertexId>(row), static_cast<VertexId>(col));
  }
  return out;
}

Graph generate_rmat(const RmatParams& p) {
  std::vector<Edge> edges = rmat_edges(p);
  return Graph(1ULL << p.scale, edges);
}

std::vector<Edge> parse_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    size_t start = sv.find_first_not_of(" \t");
    if (start == std::string_view::npos) continue;
    if (sv[start] == '#') continue;

    auto fail = [&](const char* what) {
      throw std::runtime_error("edge list parse error at line " + std::to_string(line_no) + ": " +
                               what);
    };
    std::uint64_t ids[2];
    const char* cur = sv.data() + start;
    const char* end = sv.data() + sv.size();
    for (int k = 0; k < 2; ++k) {
      while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
      if (cur >= end) fail("expected two vertex ids");
      auto [ptr, ec] = std::from_chars(cur, end, ids[k]);
      if (ec != std::errc() || (ptr < end && *ptr != ' ' && *ptr != '\t')) fail("malformed vertex id");
      cur = ptr;
    }
    while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
    if (cur != end) fail("trailing tokens after edge");
    if (ids[0] >= 0xffffffffULL || ids[1] >= 0xffffffffULL) fail("vertex id too large");
    edges.emplace_back(static_cast<VertexId>(ids[0]), static_cast<VertexId>(ids[1]));
  }
  return edges;
}

Graph ingest_edge_list(std::istream& in) {
  std::vector<Edge> edges = parse_edge_list(in);
  if (edges.empty()) throw std::runtime_error("edge list contains no edges");
  VertexId max_id = 0;
  for (const Edge& e : edges) max_id = std::max({max_id, e.first, e.second});
  return Graph(static_cast<std::uint64_t>(max_id) + 1, edges);
}

Graph ingest_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  return ingest_edge_list(in);
}

void write_edge_list(std::span<const Edge> edges, std::ostream& out) {
  for (const Edge& e : edges) out << e.first << ' ' << e.second << '\n';
}

void write_edge_list_file(std::span<const Edge> edges, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_edge_list(edges, out);
  if (!out) throw std::runtime_error("failed writing edge list: " + path);
}

}  // namespace graphsched
