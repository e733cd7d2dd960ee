#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "toptrack/tracking_graph.hpp"

namespace toptrack {

enum class CompareOp { lt, le, gt, ge, eq, ne };

struct PropertyPredicate {
  std::string property;
  CompareOp op = CompareOp::le;
  double value = 0.0;

  bool operator==(const PropertyPredicate&) const = default;
};

/// Axis-aligned box in lon/lat degrees when the graph has geo axes, grid
/// coordinates otherwise. x0 > x1 denotes an interval wrapping the seam.
struct SpatialBox {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

  bool contains(double x, double y) const noexcept;
  bool operator==(const SpatialBox&) const = default;
};

/// Conjunction of node predicates, edge predicates, spatial boxes and an
/// inclusive time window. An empty spec passes everything.
struct FilterSpec {
  std::vector<PropertyPredicate> node;
  std::vector<PropertyPredicate> edge;
  std::vector<SpatialBox> boxes;
  std::optional<Timestep> t0;
  std::optional<Timestep> t1;

  bool operator==(const FilterSpec&) const = default;
};

/// JSON form:
///   {"node": [{"property": "persistence", "op": ">=", "value": 1.5}],
///    "edge": [{"property": "length", "op": "<=", "value": 800}],
///    "boxes": [{"x0": .., "x1": .., "y0": .., "y1": ..}], "t0": 0, "t1": 10}
/// Throws std::invalid_argument naming the offending field.
FilterSpec parse_filter(const nlohmann::json& j);

/// Array of boxes; `where` prefixes error messages.
std::vector<SpatialBox> parse_boxes(const nlohmann::json& j, const std::string& where);
nlohmann::json boxes_json(const std::vector<SpatialBox>& boxes);
nlohmann::json to_json(const FilterSpec& spec);

/// Read-only view of a graph through a filter. Predicates are evaluated on
/// demand; the graph is never modified. An edge survives when its own
/// predicates hold and both endpoints pass.
class FilteredView {
 public:
  /// Throws std::invalid_argument for a property the graph does not have.
  FilteredView(const TrackingGraph& graph, FilterSpec spec);

  const TrackingGraph& graph() const noexcept { return *graph_; }
  const FilterSpec& spec() const noexcept { return spec_; }

  bool node_passes(NodeId n) const;
  bool edge_passes(NodeId source, EdgeDirection dir) const;

  struct Edge {
    NodeId source = 0;
    NodeId target = 0;
    EdgeDirection direction = EdgeDirection::forward;
    bool operator==(const Edge&) const = default;
    auto operator<=>(const Edge&) const = default;
  };

  std::vector<NodeId> nodes() const;
  std::vector<Edge> edges() const;

 private:
  const TrackingGraph* graph_;
  FilterSpec spec_;
  std::vector<std::pair<const std::vector<double>*, const PropertyPredicate*>> node_preds_;
  std::vector<std::pair<const std::vector<double>*, const PropertyPredicate*>> fwd_preds_;
  std::vector<std::pair<const std::vector<double>*, const PropertyPredicate*>> bwd_preds_;
};

/// Connected sub-component of the view reachable from the seeds along
/// forward and backward edges in either orientation.
struct Subgraph {
  std::vector<NodeId> nodes;  ///< ascending, i.e. by timestep then extremum
  std::vector<FilteredView::Edge> edges;
  std::vector<NodeId> rejected_seeds;  ///< seeds the filter removed
};

Subgraph query_component(const FilteredView& view, const std::vector<NodeId>& seeds);

}  // namespace toptrack
