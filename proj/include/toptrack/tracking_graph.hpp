#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toptrack/morse.hpp"
#include "toptrack/series.hpp"

namespace toptrack {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = ~NodeId{0};

enum class EdgeDirection : std::uint8_t { forward = 0, backward = 1 };

/// Named per-node (or per-edge) scalar vectors, ordered by name.
using PropertyTable = std::map<std::string, std::vector<double>>;

struct GraphNode {
  Timestep timestep = 0;
  ExtremumId extremum = 0;
  VertexId vertex = 0;
  double value = 0.0;
  double persistence = 0.0;

  bool operator==(const GraphNode&) const = default;
};

/// Raw tracking graph over every extremum of every timestep. Node ids are
/// contiguous per timestep: node_id(t, e) = offsets[t] + e.
///
/// Each node of a timestep t < T-1 owns exactly one forward edge into t+1
/// and each node of t > 0 exactly one backward edge into t-1. Edges are
/// stored by source node; edge properties are indexed the same way and are
/// NaN where a node has no edge.
struct TrackingGraph {
  Polarity polarity = Polarity::minimum;
  GridTopology topology{};
  std::optional<GeoAxes> geo;
  std::vector<std::uint32_t> offsets;
  std::vector<GraphNode> nodes;
  std::vector<NodeId> forward;
  std::vector<NodeId> backward;
  PropertyTable node_props;
  PropertyTable forward_props;
  PropertyTable backward_props;

  std::uint32_t num_timesteps() const noexcept {
    return offsets.empty() ? 0 : static_cast<std::uint32_t>(offsets.size() - 1);
  }
  std::size_t node_count() const noexcept { return nodes.size(); }
  NodeId node_id(Timestep t, ExtremumId e) const { return offsets.at(t) + e; }
  std::size_t nodes_at(Timestep t) const { return offsets.at(t + 1) - offsets.at(t); }

  /// Sources of forward (backward) edges pointing at each node, CSR layout.
  /// Rebuilt by index_incoming().
  std::vector<std::uint32_t> forward_in_offsets, backward_in_offsets;
  std::vector<NodeId> forward_in, backward_in;
  void index_incoming();

  std::span<const NodeId> forward_sources(NodeId n) const;
  std::span<const NodeId> backward_sources(NodeId n) const;

  bool operator==(const TrackingGraph&) const = default;
};

/// Pairs (i, j): extremum i of timestep t lies in the manifold of extremum j
/// of timestep t+1. One pair per extremum of t, ordered by i. Throws
/// std::out_of_range when timestep t+1 is missing.
std::vector<std::pair<ExtremumId, ExtremumId>> forward_map(
    std::span<const ManifoldLabeling> labelings,
    std::span<const std::vector<CriticalPoint>> extrema, Timestep t);

/// Mirror of forward_map against timestep t-1; empty for t = 0.
std::vector<std::pair<ExtremumId, ExtremumId>> backward_map(
    std::span<const ManifoldLabeling> labelings,
    std::span<const std::vector<CriticalPoint>> extrema, Timestep t);

/// Assembles the graph from per-timestep extrema (with persistence filled
/// in) and labelings. Default properties:
///   node: value, persistence, timestep, x, y (+ lon, lat with geo axes)
///   edge: length (great-circle km with geo axes, else grid units),
///         value_delta |df|, persistence_delta (target - source),
///         manifold_overlap (shared vertices of the two manifolds)
TrackingGraph build_tracking_graph(const GridTopology& topology, const std::optional<GeoAxes>& geo,
                                   std::span<const ManifoldLabeling> labelings,
                                   std::span<const std::vector<CriticalPoint>> extrema);

/// Distance between two grid vertices: great-circle kilometres when geo is
/// set, otherwise Euclidean grid units (shortest way round with wrap_x).
double vertex_distance(const GridTopology& topo, const std::optional<GeoAxes>& geo, VertexId a,
                       VertexId b);

}  // namespace toptrack
