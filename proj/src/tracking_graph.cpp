#include "toptrack/tracking_graph.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace toptrack {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_inputs(std::span<const ManifoldLabeling> labelings,
                  std::span<const std::vector<CriticalPoint>> extrema, Timestep t) {
  if (t >= labelings.size() || t >= extrema.size())
    throw std::out_of_range("no segmentation for timestep " + std::to_string(t));
}

std::vector<std::pair<ExtremumId, ExtremumId>> map_into(
    std::span<const ManifoldLabeling> labelings,
    std::span<const std::vector<CriticalPoint>> extrema, Timestep from, Timestep into) {
  check_inputs(labelings, extrema, from);
  check_inputs(labelings, extrema, into);
  const auto& label = labelings[into].label;
  std::vector<std::pair<ExtremumId, ExtremumId>> out;
  out.reserve(extrema[from].size());
  for (ExtremumId i = 0; i < extrema[from].size(); ++i)
    out.emplace_back(i, label.at(extrema[from][i].vertex));
  return out;
}

void build_csr(std::span<const NodeId> edges, std::size_t n, std::vector<std::uint32_t>& offsets,
               std::vector<NodeId>& sources) {
  offsets.assign(n + 1, 0);
  for (const NodeId target : edges)
    if (target != kNoNode) ++offsets[target + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  sources.assign(offsets.back(), 0);
  std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
  for (NodeId s = 0; s < edges.size(); ++s)
    if (edges[s] != kNoNode) sources[fill[edges[s]]++] = s;
}

}  // namespace

void TrackingGraph::index_incoming() {
  build_csr(forward, nodes.size(), forward_in_offsets, forward_in);
  build_csr(backward, nodes.size(), backward_in_offsets, backward_in);
}

std::span<const NodeId> TrackingGraph::forward_sources(NodeId n) const {
  return std::span<const NodeId>(forward_in)
      .subspan(forward_in_offsets[n], forward_in_offsets[n + 1] - forward_in_offsets[n]);
}

std::span<const NodeId> TrackingGraph::backward_sources(NodeId n) const {
  return std::span<const NodeId>(backward_in)
      .subspan(backward_in_offsets[n], backward_in_offsets[n + 1] - backward_in_offsets[n]);
}

std::vector<std::pair<ExtremumId, ExtremumId>> forward_map(
    std::span<const ManifoldLabeling> labelings,
    std::span<const std::vector<CriticalPoint>> extrema, Timestep t) {
  return map_into(labelings, extrema, t, t + 1);
}

std::vector<std::pair<ExtremumId, ExtremumId>> backward_map(
    std::span<const ManifoldLabeling> labelings,
    std::span<const std::vector<CriticalPoint>> extrema, Timestep t) {
  if (t == 0) {
    check_inputs(labelings, extrema, t);
    return {};
  }
  return map_into(labelings, extrema, t, t - 1);
}

double vertex_distance(const GridTopology& topo, const std::optional<GeoAxes>& geo, VertexId a,
                       VertexId b) {
  const double xa = topo.x_of(a), ya = topo.y_of(a);
  const double xb = topo.x_of(b), yb = topo.y_of(b);
  if (geo) {
    constexpr double rad = std::numbers::pi / 180.0;
    const double lat1 = (geo->lat0 + ya * geo->dlat) * rad;
    const double lat2 = (geo->lat0 + yb * geo->dlat) * rad;
    const double dlon = (xb - xa) * geo->dlon * rad;
    const double s1 = std::sin((lat2 - lat1) / 2);
    const double s2 = std::sin(dlon / 2);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
  }
  double dx = std::abs(xb - xa);
  if (topo.wrap_x) dx = std::min(dx, topo.width - dx);
  return std::hypot(dx, yb - ya);
}

TrackingGraph build_tracking_graph(const GridTopology& topology, const std::optional<GeoAxes>& geo,
                                   std::span<const ManifoldLabeling> labelings,
                                   std::span<const std::vector<CriticalPoint>> extrema) {
  if (labelings.size() != extrema.size() || extrema.empty())
    throw std::out_of_range("segmentation missing for some timesteps");
  const auto steps = static_cast<Timestep>(extrema.size());

  TrackingGraph g;
  g.polarity = extrema.front().empty() ? labelings.front().polarity
                                       : extrema.front().front().polarity;
  g.topology = topology;
  g.geo = geo;
  g.offsets.resize(steps + 1, 0);
  for (Timestep t = 0; t < steps; ++t)
    g.offsets[t + 1] = g.offsets[t] + static_cast<std::uint32_t>(extrema[t].size());
  const std::size_t n = g.offsets.back();

  g.nodes.reserve(n);
  for (Timestep t = 0; t < steps; ++t)
    for (ExtremumId e = 0; e < extrema[t].size(); ++e) {
      const auto& cp = extrema[t][e];
      g.nodes.push_back({t, e, cp.vertex, cp.value, cp.persistence.value_or(0.0)});
    }

  g.forward.assign(n, kNoNode);
  g.backward.assign(n, kNoNode);
  for (Timestep t = 0; t + 1 < steps; ++t)
    for (const auto& [i, j] : forward_map(labelings, extrema, t))
      g.forward[g.node_id(t, i)] = g.node_id(t + 1, j);
  for (Timestep t = 1; t < steps; ++t)
    for (const auto& [i, j] : backward_map(labelings, extrema, t))
      g.backward[g.node_id(t, i)] = g.node_id(t - 1, j);

  auto& value = g.node_props["value"];
  auto& persistence = g.node_props["persistence"];
  auto& timestep = g.node_props["timestep"];
  auto& xs = g.node_props["x"];
  auto& ys = g.node_props["y"];
  for (const auto& node : g.nodes) {
    value.push_back(node.value);
    persistence.push_back(node.persistence);
    timestep.push_back(node.timestep);
    xs.push_back(topology.x_of(node.vertex));
    ys.push_back(topology.y_of(node.vertex));
  }
  if (geo) {
    auto& lon = g.node_props["lon"];
    auto& lat = g.node_props["lat"];
    for (const auto& node : g.nodes) {
      lon.push_back(geo->lon0 + topology.x_of(node.vertex) * geo->dlon);
      lat.push_back(geo->lat0 + topology.y_of(node.vertex) * geo->dlat);
    }
  }

  auto edge_props = [&](const std::vector<NodeId>& edges, PropertyTable& table, int dt) {
    auto& length = table["length"];
    auto& dvalue = table["value_delta"];
    auto& dpers = table["persistence_delta"];
    auto& overlap = table["manifold_overlap"];
    length.assign(n, kNaN);
    dvalue.assign(n, kNaN);
    dpers.assign(n, kNaN);
    overlap.assign(n, kNaN);
    for (NodeId s = 0; s < n; ++s) {
      const NodeId d = edges[s];
      if (d == kNoNode) continue;
      length[s] = vertex_distance(topology, geo, g.nodes[s].vertex, g.nodes[d].vertex);
      dvalue[s] = std::abs(g.nodes[d].value - g.nodes[s].value);
      dpers[s] = g.nodes[d].persistence - g.nodes[s].persistence;
      overlap[s] = 0.0;
    }
    // Manifold overlap: count vertices whose label pair is (source, target).
    for (Timestep t = 0; t < steps; ++t) {
      const auto other = static_cast<std::int64_t>(t) + dt;
      if (other < 0 || other >= steps) continue;
      const auto& mine = labelings[t].label;
      const auto& theirs = labelings[static_cast<std::size_t>(other)].label;
      for (std::size_t v = 0; v < mine.size(); ++v) {
        const NodeId s = g.offsets[t] + mine[v];
        if (edges[s] == g.offsets[static_cast<std::size_t>(other)] + theirs[v]) overlap[s] += 1.0;
      }
    }
  };
  edge_props(g.forward, g.forward_props, +1);
  edge_props(g.backward, g.backward_props, -1);

  g.index_incoming();
  return g;
}

}  // namespace toptrack
