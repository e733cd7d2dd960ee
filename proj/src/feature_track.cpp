#include "toptrack/feature_track.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <stdexcept>

namespace toptrack {

using nlohmann::json;

namespace {

const std::vector<NodeId>& edges_of(const TrackingGraph& g, EdgeDirection dir) {
  return dir == EdgeDirection::forward ? g.forward : g.backward;
}

Timestep neighbour_step(Timestep t, EdgeDirection dir) {
  return dir == EdgeDirection::forward ? t + 1 : t - 1;
}

std::string number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Features of each frame grouped by the feature they match into.
std::vector<std::vector<FeatureId>> sources_by_target(const Matching& m, std::size_t n_to) {
  std::vector<std::vector<FeatureId>> out(n_to);
  for (FeatureId i = 0; i < m.target.size(); ++i)
    if (m.target[i]) out[*m.target[i]].push_back(i);
  return out;
}

json ref_json(const FeatureRef& r) { return json::array({r.timestep, r.id}); }

}  // namespace

std::string_view to_string(WeightKind k) noexcept {
  switch (k) {
    case WeightKind::persistence: return "persistence";
    case WeightKind::manifold_overlap: return "manifold-overlap";
    case WeightKind::sublevel_overlap: return "sublevel-overlap";
    case WeightKind::uniform: return "uniform";
  }
  return "?";
}

WeightKind parse_weight_kind(std::string_view s) {
  for (auto k : {WeightKind::persistence, WeightKind::manifold_overlap,
                 WeightKind::sublevel_overlap, WeightKind::uniform})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown weight kind '" + std::string(s) + "'");
}

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::birth: return "birth";
    case EventKind::death: return "death";
    case EventKind::merge: return "merge";
    case EventKind::split: return "split";
  }
  return "?";
}

MatchingWeights::MatchingWeights(const TrackingGraph& graph, WeightKind kind)
    : graph_(&graph), kind_(kind) {
  if (kind == WeightKind::sublevel_overlap)
    throw std::invalid_argument("sublevel-overlap weights need the field and a delta");
}

MatchingWeights::MatchingWeights(const TrackingGraph& graph, const ScalarTimeSeries& series,
                                 std::function<double(VertexId)> delta)
    : graph_(&graph), kind_(WeightKind::sublevel_overlap), series_(&series),
      delta_(std::move(delta)) {}

std::vector<char> MatchingWeights::component(NodeId n) const {
  const auto& node = graph_->nodes[n];
  const auto& topo = graph_->topology;
  const auto f = series_->step(node.timestep);
  const double sign = graph_->polarity == Polarity::minimum ? 1.0 : -1.0;
  const double level = sign * node.value + delta_(node.vertex);
  std::vector<char> in(f.size(), 0);
  std::vector<VertexId> stack{node.vertex};
  in[node.vertex] = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (const auto u : neighborhood(topo, v))
      if (!in[u] && sign * f[u] <= level) {
        in[u] = 1;
        stack.push_back(u);
      }
  }
  return in;
}

double MatchingWeights::operator()(NodeId source, EdgeDirection dir) const {
  const NodeId target = edges_of(*graph_, dir)[source];
  if (target == kNoNode) return 0.0;
  switch (kind_) {
    case WeightKind::persistence: return graph_->nodes[source].persistence;
    case WeightKind::uniform: return 1.0;
    case WeightKind::manifold_overlap: {
      const auto& props = dir == EdgeDirection::forward ? graph_->forward_props : graph_->backward_props;
      return props.at("manifold_overlap")[source];
    }
    case WeightKind::sublevel_overlap: {
      const auto a = component(source), b = component(target);
      std::size_t shared = 0;
      for (std::size_t v = 0; v < a.size(); ++v) shared += a[v] && b[v];
      return static_cast<double>(shared);
    }
  }
  return 0.0;
}

double match_score(const Feature& a, const Feature& b, const MatchingWeights& w, EdgeDirection dir) {
  if (a.timestep == 0 && dir == EdgeDirection::backward)
    throw std::invalid_argument("no timestep before 0");
  if (b.timestep != neighbour_step(a.timestep, dir))
    throw std::invalid_argument("features are not in adjacent timesteps");
  const auto& g = w.graph();
  const auto& edges = edges_of(g, dir);
  double score = 0.0;
  for (const auto m : a.members) {
    const NodeId n = g.node_id(a.timestep, m);
    const NodeId t = edges[n];
    if (t != kNoNode && std::binary_search(b.members.begin(), b.members.end(), g.nodes[t].extremum))
      score += w(n, dir);
  }
  return score;
}

Matching match_frames(const FeatureFrame& from, const FeatureFrame& to, const MatchingWeights& w,
                      EdgeDirection dir) {
  if (to.timestep != neighbour_step(from.timestep, dir) ||
      (from.timestep == 0 && dir == EdgeDirection::backward))
    throw std::invalid_argument("frames are not in adjacent timesteps");
  const auto& g = w.graph();
  const auto& edges = edges_of(g, dir);

  std::vector<std::int64_t> owner(g.nodes_at(to.timestep), -1);
  for (const auto& f : to.features)
    for (const auto m : f.members) owner[m] = f.id;

  Matching out;
  out.from = from.timestep;
  out.to = to.timestep;
  out.target.resize(from.features.size());
  out.score.assign(from.features.size(), 0.0);
  out.unmatched.assign(from.features.size(), 0.0);

  std::map<FeatureId, double> scores;
  for (const auto& f : from.features) {
    scores.clear();
    double unmatched = 0.0;
    for (const auto m : f.members) {
      const NodeId n = g.node_id(from.timestep, m);
      const NodeId t = edges[n];
      if (t == kNoNode) continue;
      const double wt = w(n, dir);
      const auto o = owner[g.nodes[t].extremum];
      if (o >= 0) scores[static_cast<FeatureId>(o)] += wt;
      else unmatched += wt;
    }
    std::optional<FeatureId> best;
    double best_score = 0.0;
    for (const auto& [id, s] : scores) {
      if (!best || s > best_score ||
          (s == best_score &&
           to.features[id].master_persistence > to.features[*best].master_persistence)) {
        best = id;
        best_score = s;
      }
    }
    out.score[f.id] = best_score;
    out.unmatched[f.id] = unmatched;
    if (best && best_score > 0.0 && unmatched <= best_score) out.target[f.id] = best;
  }
  return out;
}

std::vector<TrackingEvent> detect_events(std::span<const FeatureFrame> frames,
                                         std::span<const Matching> forward,
                                         std::span<const Matching> backward) {
  std::vector<TrackingEvent> events;
  if (frames.empty()) return events;
  for (const auto& f : frames.front().features)
    events.push_back({EventKind::birth, f.timestep, {}, {{f.timestep, f.id}}});

  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const auto& a = frames[k];
    const auto& b = frames[k + 1];
    const auto& fwd = forward[k];
    const auto& bwd = backward[k];

    for (const auto& f : a.features)
      if (!fwd.target[f.id]) events.push_back({EventKind::death, a.timestep, {{a.timestep, f.id}}, {}});

    const auto sources = sources_by_target(fwd, b.features.size());
    for (FeatureId j = 0; j < sources.size(); ++j) {
      if (sources[j].size() < 2) continue;
      TrackingEvent e{EventKind::merge, b.timestep, {}, {{b.timestep, j}}};
      for (const auto i : sources[j]) e.before.push_back({a.timestep, i});
      events.push_back(std::move(e));
    }

    const auto parts = sources_by_target(bwd, a.features.size());
    std::vector<char> split_part(b.features.size(), 0);
    for (FeatureId i = 0; i < parts.size(); ++i) {
      if (parts[i].size() < 2) continue;
      TrackingEvent e{EventKind::split, b.timestep, {{a.timestep, i}}, {}};
      for (const auto j : parts[i]) {
        e.after.push_back({b.timestep, j});
        split_part[j] = 1;
      }
      events.push_back(std::move(e));
    }

    for (FeatureId j = 0; j < b.features.size(); ++j)
      if (sources[j].empty() && !split_part[j])
        events.push_back({EventKind::birth, b.timestep, {}, {{b.timestep, j}}});
  }

  std::stable_sort(events.begin(), events.end(), [](const TrackingEvent& x, const TrackingEvent& y) {
    return x.timestep < y.timestep;
  });
  return events;
}

std::vector<FeatureTrack> assemble_tracks(std::span<const FeatureFrame> frames,
                                          std::span<const Matching> forward,
                                          std::span<const Matching> backward) {
  std::vector<FeatureTrack> tracks;
  if (frames.empty()) return tracks;
  auto start = [&](const FeatureFrame& fr, const Feature& f, TrackStart how) {
    FeatureTrack t;
    t.id = static_cast<std::uint32_t>(tracks.size());
    t.nodes.push_back({fr.timestep, f.id});
    t.start = how;
    t.max_persistence = f.master_persistence;
    tracks.push_back(std::move(t));
    return tracks.back().id;
  };

  std::vector<std::uint32_t> current;
  for (const auto& f : frames.front().features) current.push_back(start(frames.front(), f, TrackStart::birth));

  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const auto& a = frames[k];
    const auto& b = frames[k + 1];
    const auto sources = sources_by_target(forward[k], b.features.size());
    const auto parts = sources_by_target(backward[k], a.features.size());
    std::vector<char> split_part(b.features.size(), 0);
    for (const auto& p : parts)
      if (p.size() >= 2)
        for (const auto j : p) split_part[j] = 1;

    for (const auto& f : a.features)
      if (!forward[k].target[f.id]) tracks[current[f.id]].end = TrackEnd::death;

    std::vector<std::uint32_t> next(b.features.size());
    for (const auto& f : b.features) {
      const auto& src = sources[f.id];
      if (src.empty()) {
        next[f.id] = start(b, f, split_part[f.id] ? TrackStart::split : TrackStart::birth);
        continue;
      }
      FeatureId keep = src.front();
      for (const auto i : src)
        if (a.features[i].master_persistence > a.features[keep].master_persistence) keep = i;
      for (const auto i : src)
        if (i != keep) tracks[current[i]].end = TrackEnd::merge;
      auto& t = tracks[current[keep]];
      t.nodes.push_back({b.timestep, f.id});
      t.max_persistence = std::max(t.max_persistence, f.master_persistence);
      next[f.id] = t.id;
    }
    current = std::move(next);
  }
  return tracks;
}

TrackingResult track_features(std::vector<FeatureFrame> frames, const MatchingWeights& w) {
  TrackingResult r;
  r.frames = std::move(frames);
  const auto pairs = r.frames.empty() ? 0 : r.frames.size() - 1;
  r.forward.resize(pairs);
  r.backward.resize(pairs);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(pairs); ++k) {
    r.forward[k] = match_forward(r.frames[k], r.frames[k + 1], w);
    r.backward[k] = match_backward(r.frames[k + 1], r.frames[k], w);
  }
  r.events = detect_events(r.frames, r.forward, r.backward);
  r.tracks = assemble_tracks(r.frames, r.forward, r.backward);
  return r;
}

json features_json(std::span<const FeatureFrame> frames,
                   std::span<const std::vector<CriticalPoint>> extrema, const GridTopology& topo) {
  auto point = [&](Timestep t, ExtremumId e) {
    const auto& cp = extrema[t][e];
    return json{{"extremum", e},
                {"vertex", cp.vertex},
                {"x", topo.x_of(cp.vertex)},
                {"y", topo.y_of(cp.vertex)},
                {"value", cp.value}};
  };
  auto out = json::array();
  for (const auto& fr : frames) {
    auto list = json::array();
    for (const auto& f : fr.features) {
      auto members = json::array();
      for (const auto m : f.members) members.push_back(point(fr.timestep, m));
      json jf = {{"id", f.id},
                 {"carrier", point(fr.timestep, f.carrier)},
                 {"members", members},
                 {"master_branch", f.master_branch},
                 {"master_persistence", f.master_persistence},
                 {"representative", f.representative},
                 {"representative_value", f.representative_value},
                 {"level", f.level},
                 {"detached_members", f.detached_members}};
      if (!f.geometry.empty()) {
        auto geo = json::array();
        for (const auto& line : f.geometry) {
          auto pts = json::array();
          for (const auto& p : line) pts.push_back({p[0], p[1]});
          geo.push_back(std::move(pts));
        }
        jf["geometry"] = std::move(geo);
      }
      list.push_back(std::move(jf));
    }
    out.push_back({{"timestep", fr.timestep}, {"features", std::move(list)}});
  }
  return out;
}

json tracks_json(const TrackingResult& r) {
  static constexpr const char* starts[] = {"birth", "split"};
  static constexpr const char* ends[] = {"open", "death", "merge"};
  auto tracks = json::array();
  for (const auto& t : r.tracks) {
    auto nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back(ref_json(n));
    tracks.push_back({{"id", t.id},
                      {"start", starts[static_cast<int>(t.start)]},
                      {"end", ends[static_cast<int>(t.end)]},
                      {"max_persistence", t.max_persistence},
                      {"nodes", std::move(nodes)}});
  }
  auto events = json::array();
  for (const auto& e : r.events) {
    auto before = json::array(), after = json::array();
    for (const auto& x : e.before) before.push_back(ref_json(x));
    for (const auto& x : e.after) after.push_back(ref_json(x));
    events.push_back({{"kind", std::string(to_string(e.kind))},
                      {"timestep", e.timestep},
                      {"before", std::move(before)},
                      {"after", std::move(after)}});
  }
  return {{"tracks", std::move(tracks)}, {"events", std::move(events)}};
}

std::string tracks_csv(const TrackingResult& r) {
  static constexpr const char* starts[] = {"birth", "split"};
  static constexpr const char* ends[] = {"open", "death", "merge"};
  std::string out = "track,start,end,length,max_persistence,events\n";
  for (const auto& t : r.tracks) {
    out += std::to_string(t.id) + "," + std::to_string(t.nodes.front().timestep) + "," +
           std::to_string(t.nodes.back().timestep) + "," + std::to_string(t.nodes.size()) + "," +
           number(t.max_persistence) + "," + starts[static_cast<int>(t.start)] + ";" +
           ends[static_cast<int>(t.end)] + "\n";
  }
  return out;
}

}  // namespace toptrack
