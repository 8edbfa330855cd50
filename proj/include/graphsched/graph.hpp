#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace graphsched {

using VertexId = std::uint32_t;
using Edge = std::pair<VertexId, VertexId>;

// Construction-time statistics.  reachable_count is the number of vertices
// that are neither isolated nor without an incoming edge, which reduces to
// "at least one incoming edge".
struct GraphStats {
  double mean_out_degree = 0.0;
  std::uint64_t max_out_degree = 0;
  std::uint64_t reachable_count = 0;
  std::uint64_t vertex_count = 0;
  std::uint64_t edge_count = 0;
};

// Immutable directed graph: forward CSR plus the transposed adjacency in the
// same layout.  Safe for concurrent reads; construction is single-threaded.
class Graph {
 public:
  Graph(std::uint64_t vertex_count, std::span<const Edge> edges);

  std::uint64_t vertex_count() const { return vertex_count_; }
  std::uint64_t edge_count() const { return fwd_targets_.size(); }
  const GraphStats& stats() const { return stats_; }

  // Bounds-checked accessors; throw std::out_of_range for invalid ids.
  std::uint64_t out_degree(VertexId v) const;
  std::uint64_t in_degree(VertexId v) const;
  std::span<const VertexId> neighbors(VertexId v) const;
  std::span<const VertexId> in_neighbors(VertexId v) const;

  // Unchecked hot-path accessors for kernels.
  std::uint64_t out_degree_unchecked(VertexId v) const {
    return fwd_offsets_[v + 1] - fwd_offsets_[v];
  }
  std::span<const VertexId> out_span(VertexId v) const {
    return {fwd_targets_.data() + fwd_offsets_[v],
            static_cast<std::size_t>(fwd_offsets_[v + 1] - fwd_offsets_[v])};
  }
  std::span<const VertexId> in_span(VertexId v) const {
    return {rev_targets_.data() + rev_offsets_[v],
            static_cast<std::size_t>(rev_offsets_[v + 1] - rev_offsets_[v])};
  }

  const std::vector<std::uint64_t>& forward_offsets() const { return fwd_offsets_; }
  const std::vector<VertexId>& forward_targets() const { return fwd_targets_; }
  const std::vector<std::uint64_t>& reverse_offsets() const { return rev_offsets_; }
  const std::vector<VertexId>& reverse_targets() const { return rev_targets_; }

  // Vertices with at least one incoming edge (the traversal-reachable set).
  std::vector<VertexId> reachable_vertices() const;
  std::vector<Edge> edge_list() const;

 private:
  std::uint64_t vertex_count_ = 0;
  std::vector<std::uint64_t> fwd_offsets_;
  std::vector<VertexId> fwd_targets_;
  std::vector<std::uint64_t> rev_offsets_;
  std::vector<VertexId> rev_targets_;
  GraphStats stats_;
};

// Returns the statistics gathered while the adjacency lists were built.
GraphStats build_stats(const Graph& g);

struct RmatParams {
  unsigned scale = 12;  // vertex_count = 2^scale
  double edge_factor = 16.0;
  double a = 0.57, b = 0.19, c = 0.19, d = 0.05;
  std::uint64_t seed = 1;
};

// Recursive-quadrant generator; duplicate edges and self loops are kept.
// Deterministic for a fixed parameter set.
std::vector<Edge> rmat_edges(const RmatParams& params);
Graph generate_rmat(const RmatParams& params);

// Text edge lists: '#' comment lines, otherwise two whitespace-separated
// vertex ids per line.  Malformed lines report their line number.
Graph ingest_edge_list(std::istream& in);
Graph ingest_edge_list_file(const std::string& path);
std::vector<Edge> parse_edge_list(std::istream& in);
void write_edge_list(std::span<const Edge> edges, std::ostream& out);
void write_edge_list_file(std::span<const Edge> edges, const std::string& path);

}  // namespace graphsched
