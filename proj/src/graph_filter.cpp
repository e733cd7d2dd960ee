#include "toptrack/graph_filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace toptrack {

using nlohmann::json;

namespace {

CompareOp parse_op(const std::string& s, const std::string& where) {
  if (s == "<") return CompareOp::lt;
  if (s == "<=") return CompareOp::le;
  if (s == ">") return CompareOp::gt;
  if (s == ">=") return CompareOp::ge;
  if (s == "==") return CompareOp::eq;
  if (s == "!=") return CompareOp::ne;
  throw std::invalid_argument(where + ".op: unknown operator '" + s + "'");
}

const char* op_string(CompareOp op) {
  switch (op) {
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
  }
  return "?";
}

bool holds(CompareOp op, double lhs, double rhs) {
  // NaN (no edge) never satisfies a predicate.
  if (std::isnan(lhs)) return false;
  switch (op) {
    case CompareOp::lt: return lhs < rhs;
    case CompareOp::le: return lhs <= rhs;
    case CompareOp::gt: return lhs > rhs;
    case CompareOp::ge: return lhs >= rhs;
    case CompareOp::eq: return lhs == rhs;
    case CompareOp::ne: return lhs != rhs;
  }
  return false;
}

std::vector<PropertyPredicate> parse_preds(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + ": expected an array");
  std::vector<PropertyPredicate> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    const auto& p = j[i];
    if (!p.is_object()) throw std::invalid_argument(at + ": expected an object");
    if (!p.contains("property") || !p["property"].is_string())
      throw std::invalid_argument(at + ".property: missing or not a string");
    if (!p.contains("op") || !p["op"].is_string())
      throw std::invalid_argument(at + ".op: missing or not a string");
    if (!p.contains("value") || !p["value"].is_number())
      throw std::invalid_argument(at + ".value: missing or not a number");
    out.push_back({p["property"].get<std::string>(), parse_op(p["op"].get<std::string>(), at),
                   p["value"].get<double>()});
  }
  return out;
}

json preds_json(const std::vector<PropertyPredicate>& preds) {
  auto arr = json::array();
  for (const auto& p : preds)
    arr.push_back({{"property", p.property}, {"op", op_string(p.op)}, {"value", p.value}});
  return arr;
}

}  // namespace

bool SpatialBox::contains(double x, double y) const noexcept {
  if (y < y0 || y > y1) return false;
  if (x0 <= x1) return x >= x0 && x <= x1;
  return x >= x0 || x <= x1;
}

std::vector<SpatialBox> parse_boxes(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + ": expected an array");
  std::vector<SpatialBox> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_object()) throw std::invalid_argument(at + ": expected an object");
    for (const char* k : {"x0", "x1", "y0", "y1"})
      if (!j[i].contains(k) || !j[i][k].is_number())
        throw std::invalid_argument(at + "." + k + ": missing or not a number");
    out.push_back({j[i]["x0"].get<double>(), j[i]["x1"].get<double>(), j[i]["y0"].get<double>(),
                   j[i]["y1"].get<double>()});
  }
  return out;
}

json boxes_json(const std::vector<SpatialBox>& boxes) {
  auto arr = json::array();
  for (const auto& b : boxes) arr.push_back({{"x0", b.x0}, {"x1", b.x1}, {"y0", b.y0}, {"y1", b.y1}});
  return arr;
}

FilterSpec parse_filter(const json& j) {
  FilterSpec spec;
  if (j.is_null()) return spec;
  if (!j.is_object()) throw std::invalid_argument("filter: expected an object");
  for (const auto& [key, _] : j.items())
    if (key != "node" && key != "edge" && key != "boxes" && key != "t0" && key != "t1")
      throw std::invalid_argument("filter." + key + ": unknown field");
  if (j.contains("node")) spec.node = parse_preds(j["node"], "filter.node");
  if (j.contains("edge")) spec.edge = parse_preds(j["edge"], "filter.edge");
  if (j.contains("boxes")) spec.boxes = parse_boxes(j["boxes"], "filter.boxes");
  for (const char* k : {"t0", "t1"}) {
    if (!j.contains(k)) continue;
    if (!j[k].is_number_unsigned())
      throw std::invalid_argument(std::string("filter.") + k + ": expected a timestep index");
    (k[1] == '0' ? spec.t0 : spec.t1) = j[k].get<Timestep>();
  }
  return spec;
}

json to_json(const FilterSpec& spec) {
  json j = json::object();
  if (!spec.node.empty()) j["node"] = preds_json(spec.node);
  if (!spec.edge.empty()) j["edge"] = preds_json(spec.edge);
  if (!spec.boxes.empty()) j["boxes"] = boxes_json(spec.boxes);
  if (spec.t0) j["t0"] = *spec.t0;
  if (spec.t1) j["t1"] = *spec.t1;
  return j;
}

FilteredView::FilteredView(const TrackingGraph& graph, FilterSpec spec)
    : graph_(&graph), spec_(std::move(spec)) {
  for (const auto& p : spec_.node) {
    const auto it = graph.node_props.find(p.property);
    if (it == graph.node_props.end())
      throw std::invalid_argument("unknown node property '" + p.property + "'");
    node_preds_.emplace_back(&it->second, &p);
  }
  for (const auto& p : spec_.edge) {
    const auto f = graph.forward_props.find(p.property);
    const auto b = graph.backward_props.find(p.property);
    if (f == graph.forward_props.end() || b == graph.backward_props.end())
      throw std::invalid_argument("unknown edge property '" + p.property + "'");
    fwd_preds_.emplace_back(&f->second, &p);
    bwd_preds_.emplace_back(&b->second, &p);
  }
}

bool FilteredView::node_passes(NodeId n) const {
  const auto& node = graph_->nodes.at(n);
  if (spec_.t0 && node.timestep < *spec_.t0) return false;
  if (spec_.t1 && node.timestep > *spec_.t1) return false;
  for (const auto& [values, pred] : node_preds_)
    if (!holds(pred->op, (*values)[n], pred->value)) return false;
  if (!spec_.boxes.empty()) {
    const auto& topo = graph_->topology;
    double x = topo.x_of(node.vertex);
    double y = topo.y_of(node.vertex);
    if (graph_->geo) {
      x = graph_->geo->lon0 + x * graph_->geo->dlon;
      y = graph_->geo->lat0 + y * graph_->geo->dlat;
    }
    for (const auto& box : spec_.boxes)
      if (!box.contains(x, y)) return false;
  }
  return true;
}

bool FilteredView::edge_passes(NodeId source, EdgeDirection dir) const {
  const auto& edges = dir == EdgeDirection::forward ? graph_->forward : graph_->backward;
  const NodeId target = edges.at(source);
  if (target == kNoNode) return false;
  const auto& preds = dir == EdgeDirection::forward ? fwd_preds_ : bwd_preds_;
  for (const auto& [values, pred] : preds)
    if (!holds(pred->op, (*values)[source], pred->value)) return false;
  return node_passes(source) && node_passes(target);
}

std::vector<NodeId> FilteredView::nodes() const {
  std::vector<NodeId> out;
  for (NodeId n = 0; n < graph_->node_count(); ++n)
    if (node_passes(n)) out.push_back(n);
  return out;
}

std::vector<FilteredView::Edge> FilteredView::edges() const {
  std::vector<Edge> out;
  for (NodeId n = 0; n < graph_->node_count(); ++n) {
    if (edge_passes(n, EdgeDirection::forward))
      out.push_back({n, graph_->forward[n], EdgeDirection::forward});
    if (edge_passes(n, EdgeDirection::backward))
      out.push_back({n, graph_->backward[n], EdgeDirection::backward});
  }
  return out;
}

Subgraph query_component(const FilteredView& view, const std::vector<NodeId>& seeds) {
  const auto& g = view.graph();
  Subgraph out;
  std::vector<std::uint8_t> seen(g.node_count(), 0);
  std::vector<NodeId> stack;
  for (const NodeId s : seeds) {
    if (s >= g.node_count() || !view.node_passes(s)) {
      out.rejected_seeds.push_back(s);
      continue;
    }
    if (!seen[s]) {
      seen[s] = 1;
      stack.push_back(s);
    }
  }
  auto visit = [&](NodeId n) {
    if (!seen[n]) {
      seen[n] = 1;
      stack.push_back(n);
    }
  };
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    out.nodes.push_back(n);
    for (const auto dir : {EdgeDirection::forward, EdgeDirection::backward}) {
      const auto& edges = dir == EdgeDirection::forward ? g.forward : g.backward;
      if (view.edge_passes(n, dir)) visit(edges[n]);
      const auto sources = dir == EdgeDirection::forward ? g.forward_sources(n)
                                                         : g.backward_sources(n);
      for (const NodeId s : sources)
        if (view.edge_passes(s, dir)) visit(s);
    }
  }
  std::sort(out.nodes.begin(), out.nodes.end());
  for (const NodeId n : out.nodes) {
    if (view.edge_passes(n, EdgeDirection::forward))
      out.edges.push_back({n, g.forward[n], EdgeDirection::forward});
    if (view.edge_passes(n, EdgeDirection::backward))
      out.edges.push_back({n, g.backward[n], EdgeDirection::backward});
  }
  return out;
}

}  // namespace toptrack
