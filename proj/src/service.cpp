#include "toptrack/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "toptrack/evaluate.hpp"
#include "toptrack/graph_filter.hpp"

namespace toptrack {

using json = nlohmann::json;

namespace {

struct HttpError : std::runtime_error {
  int status;
  HttpError(int s, const std::string& msg) : std::runtime_error(msg), status(s) {}
};

ServiceResponse error(int status, const std::string& msg) {
  return {status, json{{"error", msg}}.dump(), ""};
}

std::uint32_t parse_index(const std::string& s, const char* what) {
  std::uint32_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw HttpError(400, std::string(what) + ": expected a non-negative integer");
  return v;
}

std::optional<std::uint32_t> param_index(const ServiceRequest& r, const std::string& name) {
  const auto it = r.params.find(name);
  if (it == r.params.end() || it->second.empty()) return std::nullopt;
  return parse_index(it->second, name.c_str());
}

json parse_body(const std::string& body) {
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw HttpError(400, "request: expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw HttpError(400, std::string("request: invalid JSON: ") + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items())
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      throw HttpError(400, "request." + key + ": unknown field");
}

std::optional<Timestep> body_index(const json& j, const char* name) {
  if (!j.contains(name) || j[name].is_null()) return std::nullopt;
  if (!j[name].is_number_integer() || j[name].get<std::int64_t>() < 0)
    throw HttpError(400, std::string("request.") + name + ": expected a non-negative integer");
  return j[name].get<Timestep>();
}

std::string window_key(const TimeWindow& w) {
  return (w.t0 ? std::to_string(*w.t0) : "-") + ":" + (w.t1 ? std::to_string(*w.t1) : "-");
}

const PolarityTopology& topology_for(const Artifact& a, const ServiceRequest& r) {
  Polarity p = Polarity::minimum;
  if (const auto it = r.params.find("polarity"); it != r.params.end()) {
    try {
      p = parse_polarity(it->second);
    } catch (const std::invalid_argument&) {
      throw HttpError(400, "polarity: expected 'minimum' or 'maximum'");
    }
  }
  if (!a.has(p)) throw HttpError(404, "polarity '" + std::string(to_string(p)) + "' was not precomputed");
  return a.at(p);
}

FilterSpec filter_param(const ServiceRequest& r) {
  const auto it = r.params.find("filter");
  if (it == r.params.end() || it->second.empty()) return {};
  json j;
  try {
    j = json::parse(it->second);
  } catch (const json::parse_error& e) {
    throw HttpError(400, std::string("filter: invalid JSON: ") + e.what());
  }
  return parse_filter(j);
}

json node_json(const TrackingGraph& g, NodeId n) {
  const auto& node = g.nodes[n];
  json j = {{"id", n},
            {"timestep", node.timestep},
            {"extremum", node.extremum},
            {"vertex", node.vertex},
            {"x", g.topology.x_of(node.vertex)},
            {"y", g.topology.y_of(node.vertex)},
            {"value", node.value},
            {"persistence", node.persistence}};
  if (g.geo) {
    j["lon"] = g.node_props.at("lon")[n];
    j["lat"] = g.node_props.at("lat")[n];
  }
  return j;
}

json edge_json(const TrackingGraph& g, const FilteredView::Edge& e) {
  const bool fwd = e.direction == EdgeDirection::forward;
  json j = {{"source", e.source}, {"target", e.target}, {"direction", fwd ? "forward" : "backward"}};
  for (const auto& [name, values] : fwd ? g.forward_props : g.backward_props) {
    const double v = values[e.source];
    j[name] = std::isfinite(v) ? json(v) : json(nullptr);
  }
  return j;
}

json subgraph_json(const TrackingGraph& g, const std::vector<NodeId>& nodes,
                   const std::vector<FilteredView::Edge>& edges) {
  auto jn = json::array();
  for (const auto n : nodes) jn.push_back(node_json(g, n));
  auto je = json::array();
  for (const auto& e : edges) je.push_back(edge_json(g, e));
  return {{"nodes", std::move(jn)}, {"edges", std::move(je)}};
}

json window_json(const std::vector<FeatureFrame>& frames) {
  if (frames.empty()) return nullptr;
  return {frames.front().timestep, frames.back().timestep};
}

}  // namespace

std::shared_ptr<const std::string> ResponseCache::get(const std::string& key) {
  std::lock_guard lock(mutex_);
  const auto it = index_.find(key);
  if (it == index_.end()) return nullptr;
  order_.splice(order_.begin(), order_, it->second);
  return it->second->second;
}

void ResponseCache::put(const std::string& key, std::shared_ptr<const std::string> body) {
  if (capacity_ == 0) return;
  std::lock_guard lock(mutex_);
  if (const auto it = index_.find(key); it != index_.end()) {
    it->second->second = std::move(body);
    order_.splice(order_.begin(), order_, it->second);
    return;
  }
  order_.emplace_front(key, std::move(body));
  index_[key] = order_.begin();
  if (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

Service::Service(std::shared_ptr<const Artifact> artifact, std::size_t cache_entries)
    : artifact_(std::move(artifact)), cache_(cache_entries) {
  const auto& s = artifact_->series;
  const auto& topo = s.topology();
  auto pols = json::array();
  json counts = json::object();
  for (const auto& pt : artifact_->polarities) {
    pols.push_back(std::string(to_string(pt.polarity)));
    counts[std::string(to_string(pt.polarity))] = pt.graph.node_count();
  }
  json geo = nullptr;
  if (s.geo()) geo = {{"lon0", s.geo()->lon0}, {"dlon", s.geo()->dlon}, {"lat0", s.geo()->lat0}, {"dlat", s.geo()->dlat}};
  meta_ = json{{"grid", {{"width", topo.width}, {"height", topo.height}, {"wrap_x", topo.wrap_x}}},
               {"num_timesteps", s.num_timesteps()},
               {"dt_hours", s.dt_hours()},
               {"field_range", {{"min", s.field_range().min}, {"max", s.field_range().max}}},
               {"geo", geo},
               {"polarities", pols},
               {"extrema", counts},
               {"min_persistence", artifact_->min_persistence}}
              .dump();
}

ServiceResponse Service::handle(const ServiceRequest& r) {
  static const std::regex field_re(R"(/field/([^/]+))");
  static const std::regex track_re(R"(/minimum/([^/]+)/([^/]+)/track)");
  try {
    std::smatch m;
    if (r.method == "GET") {
      if (r.path == "/meta") return meta();
      if (r.path == "/graph") return graph(r);
      if (std::regex_match(r.path, m, field_re)) return field(m[1], r);
      if (std::regex_match(r.path, m, track_re)) return minimum_track(m[1], m[2], r);
    } else if (r.method == "POST") {
      if (r.path == "/features") return features(r);
      if (r.path == "/tracks") return tracks(r);
    }
    return error(404, "no route for " + r.method + " " + r.path);
  } catch (const HttpError& e) {
    return error(e.status, e.what());
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  } catch (const json::exception& e) {
    return error(400, e.what());
  }
}

ServiceResponse Service::meta() const { return {200, meta_, ""}; }

ServiceResponse Service::field(const std::string& ts, const ServiceRequest& r) const {
  const auto& s = artifact_->series;
  const auto t = parse_index(ts, "timestep");
  if (t >= s.num_timesteps()) throw HttpError(404, "timestep " + ts + " out of range");
  const auto stride = param_index(r, "stride").value_or(1);
  if (stride == 0) throw HttpError(400, "stride: must be at least 1");
  const auto& topo = s.topology();
  const auto values = s.step(t);
  const std::uint32_t w = (topo.width + stride - 1) / stride, h = (topo.height + stride - 1) / stride;
  std::vector<double> out;
  out.reserve(std::size_t(w) * h);
  for (std::uint32_t y = 0; y < topo.height; y += stride)
    for (std::uint32_t x = 0; x < topo.width; x += stride) out.push_back(values[topo.id(x, y)]);
  return {200, json{{"timestep", t}, {"stride", stride}, {"width", w}, {"height", h}, {"values", out}}.dump(), ""};
}

ServiceResponse Service::graph(const ServiceRequest& r) const {
  const auto& pt = topology_for(*artifact_, r);
  auto spec = filter_param(r);
  if (const auto t0 = param_index(r, "t0")) spec.t0 = t0;
  if (const auto t1 = param_index(r, "t1")) spec.t1 = t1;
  const FilteredView view(pt.graph, spec);
  auto j = subgraph_json(pt.graph, view.nodes(), view.edges());
  j["filter"] = to_json(spec);
  return {200, j.dump(), ""};
}

ServiceResponse Service::features(const ServiceRequest& r) {
  const auto body = parse_body(r.body);
  reject_unknown(body, {"descriptor", "t0", "t1", "with_geometry"});
  if (!body.contains("descriptor")) throw HttpError(400, "request.descriptor: missing");
  const auto spec = parse_descriptor(body["descriptor"]);
  const TimeWindow window{body_index(body, "t0"), body_index(body, "t1")};
  bool geometry = false;
  if (body.contains("with_geometry")) {
    if (!body["with_geometry"].is_boolean()) throw HttpError(400, "request.with_geometry: expected a boolean");
    geometry = body["with_geometry"].get<bool>();
  }
  if (!artifact_->has(spec.polarity))
    throw HttpError(404, "polarity '" + std::string(to_string(spec.polarity)) + "' was not precomputed");

  const auto key = "features|" + to_json(spec).dump() + "|" + window_key(window) + "|" + (geometry ? "g" : "-");
  if (auto hit = cache_.get(key)) return {200, *hit, "hit"};

  const auto frames = evaluate_descriptor(*artifact_, spec, window, geometry);
  const auto& pt = artifact_->at(spec.polarity);
  auto counts = json::array();
  for (const auto& fr : frames) counts.push_back(fr.features.size());
  auto out = std::make_shared<const std::string>(
      json{{"descriptor", to_json(spec)},
           {"window", window_json(frames)},
           {"counts", counts},
           {"frames", features_json(frames, pt.extrema, artifact_->series.topology())}}
          .dump());
  cache_.put(key, out);
  return {200, *out, "miss"};
}

ServiceResponse Service::tracks(const ServiceRequest& r) {
  const auto body = parse_body(r.body);
  reject_unknown(body, {"descriptor", "weights", "t0", "t1"});
  if (!body.contains("descriptor")) throw HttpError(400, "request.descriptor: missing");
  const auto spec = parse_descriptor(body["descriptor"]);
  const TimeWindow window{body_index(body, "t0"), body_index(body, "t1")};
  auto weights = WeightKind::persistence;
  if (body.contains("weights")) {
    if (!body["weights"].is_string()) throw HttpError(400, "request.weights: expected a string");
    try {
      weights = parse_weight_kind(body["weights"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw HttpError(400, std::string("request.weights: ") + e.what());
    }
  }
  if (!artifact_->has(spec.polarity))
    throw HttpError(404, "polarity '" + std::string(to_string(spec.polarity)) + "' was not precomputed");

  const auto key = "tracks|" + to_json(spec).dump() + "|" + window_key(window) + "|" +
                   std::string(to_string(weights));
  if (auto hit = cache_.get(key)) return {200, *hit, "hit"};

  const auto result = track_descriptor(*artifact_, spec, weights, window);
  auto j = tracks_json(result);
  auto out = std::make_shared<const std::string>(json{{"descriptor", to_json(spec)},
                                                      {"weights", std::string(to_string(weights))},
                                                      {"window", window_json(result.frames)},
                                                      {"tracks", std::move(j["tracks"])},
                                                      {"events", std::move(j["events"])}}
                                                     .dump());
  cache_.put(key, out);
  return {200, *out, "miss"};
}

ServiceResponse Service::minimum_track(const std::string& ts, const std::string& ids,
                                       const ServiceRequest& r) const {
  const auto& pt = topology_for(*artifact_, r);
  const auto t = parse_index(ts, "timestep");
  const auto id = parse_index(ids, "extremum");
  const auto& g = pt.graph;
  if (t >= g.num_timesteps()) throw HttpError(404, "timestep " + ts + " out of range");
  if (id >= g.nodes_at(t)) throw HttpError(404, "extremum " + ids + " does not exist at timestep " + ts);
  const FilteredView view(g, filter_param(r));
  const auto seed = g.node_id(t, id);
  const auto sub = query_component(view, {seed});
  auto j = subgraph_json(g, sub.nodes, sub.edges);
  j["seed"] = seed;
  j["rejected"] = !sub.rejected_seeds.empty();
  return {200, j.dump(), ""};
}

void Service::mount(httplib::Server& server) {
  auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
    ServiceRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.params.emplace(k, v);
    const auto out = handle(r);
    res.status = out.status;
    if (!out.cache.empty()) res.set_header("X-Cache", out.cache);
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(out.body, "application/json");
  };
  server.Get(".*", adapt);
  server.Post(".*", adapt);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace toptrack
