#pragma once

// Feature matching across timesteps over the raw tracking graph, event
// detection and track assembly.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "toptrack/descriptor.hpp"
#include "toptrack/tracking_graph.hpp"

namespace toptrack {

enum class WeightKind { persistence, manifold_overlap, sublevel_overlap, uniform };

std::string_view to_string(WeightKind k) noexcept;
/// "persistence", "manifold-overlap", "sublevel-overlap", "uniform".
WeightKind parse_weight_kind(std::string_view s);

/// Weight w(m_i, m_j) of an extremum pair joined by an FM (or BM) edge.
class MatchingWeights {
 public:
  /// persistence, manifold-overlap and uniform weights need only the graph.
  MatchingWeights(const TrackingGraph& graph, WeightKind kind);

  /// Sublevel overlap: size of the intersection of the components of
  /// {f <= f(m) + delta(m)} around m_i and m_j (superlevel for maxima).
  MatchingWeights(const TrackingGraph& graph, const ScalarTimeSeries& series,
                  std::function<double(VertexId)> delta);

  WeightKind kind() const noexcept { return kind_; }
  const TrackingGraph& graph() const noexcept { return *graph_; }

  /// w for the edge leaving `source` in direction dir. The target is
  /// implied by the graph; sources without an edge weigh 0.
  double operator()(NodeId source, EdgeDirection dir) const;

 private:
  std::vector<char> component(NodeId n) const;

  const TrackingGraph* graph_;
  WeightKind kind_;
  const ScalarTimeSeries* series_ = nullptr;
  std::function<double(VertexId)> delta_;
};

/// Features of one timestep.
struct FeatureFrame {
  Timestep timestep = 0;
  std::vector<Feature> features;

  bool operator==(const FeatureFrame&) const = default;
};

/// Sum of w over members of a whose edge in direction dir lands on a
/// member of b. Throws std::invalid_argument unless b lies one step from a
/// in that direction.
double match_score(const Feature& a, const Feature& b, const MatchingWeights& w,
                   EdgeDirection dir = EdgeDirection::forward);

/// Per-feature outcome of matching one frame into an adjacent frame.
struct Matching {
  Timestep from = 0;
  Timestep to = 0;
  std::vector<std::optional<FeatureId>> target;  ///< none when the feature dies
  std::vector<double> score;                     ///< best score
  std::vector<double> unmatched;                 ///< weight landing on no feature

  bool operator==(const Matching&) const = default;
};

/// Each feature maps to its highest-scoring neighbour feature; ties go to
/// the larger master persistence, then the smaller id. It dies instead when
/// the unmatched weight exceeds the best score or no score is positive.
Matching match_frames(const FeatureFrame& from, const FeatureFrame& to, const MatchingWeights& w,
                      EdgeDirection dir);

inline Matching match_forward(const FeatureFrame& t, const FeatureFrame& t1,
                              const MatchingWeights& w) {
  return match_frames(t, t1, w, EdgeDirection::forward);
}
inline Matching match_backward(const FeatureFrame& t, const FeatureFrame& t_prev,
                               const MatchingWeights& w) {
  return match_frames(t, t_prev, w, EdgeDirection::backward);
}

struct FeatureRef {
  Timestep timestep = 0;
  FeatureId id = 0;

  bool operator==(const FeatureRef&) const = default;
  auto operator<=>(const FeatureRef&) const = default;
};

enum class EventKind { birth, death, merge, split };
std::string_view to_string(EventKind k) noexcept;

struct TrackingEvent {
  EventKind kind = EventKind::birth;
  /// Birth and death: the feature's own timestep; merge and split: the
  /// later timestep of the transition.
  Timestep timestep = 0;
  std::vector<FeatureRef> before;  ///< merge sources, split origin, dying feature
  std::vector<FeatureRef> after;   ///< merge result, split parts, born feature

  bool operator==(const TrackingEvent&) const = default;
};

/// forward[k] matches frame k into k+1, backward[k] matches frame k+1 into
/// frame k. A feature is born when nothing forward-matches it and it is
/// not part of a split; every feature of the first frame is born.
std::vector<TrackingEvent> detect_events(std::span<const FeatureFrame> frames,
                                         std::span<const Matching> forward,
                                         std::span<const Matching> backward);

enum class TrackStart { birth, split };
enum class TrackEnd { open, death, merge };

struct FeatureTrack {
  std::uint32_t id = 0;
  std::vector<FeatureRef> nodes;
  TrackStart start = TrackStart::birth;
  TrackEnd end = TrackEnd::open;
  double max_persistence = 0.0;

  bool operator==(const FeatureTrack&) const = default;
};

/// Maximal chains through forward matches. At a merge the source with the
/// higher master persistence continues and the others end; the part of a
/// split that the origin forward-matches continues and the others start
/// new tracks.
std::vector<FeatureTrack> assemble_tracks(std::span<const FeatureFrame> frames,
                                          std::span<const Matching> forward,
                                          std::span<const Matching> backward);

/// Frames, matchings, events and tracks of one descriptor evaluation.
struct TrackingResult {
  std::vector<FeatureFrame> frames;
  std::vector<Matching> forward;
  std::vector<Matching> backward;
  std::vector<TrackingEvent> events;
  std::vector<FeatureTrack> tracks;
};

TrackingResult track_features(std::vector<FeatureFrame> frames, const MatchingWeights& w);

nlohmann::json features_json(std::span<const FeatureFrame> frames,
                             std::span<const std::vector<CriticalPoint>> extrema,
                             const GridTopology& topo);
nlohmann::json tracks_json(const TrackingResult& r);
/// One line per track: id,start,end,length,max_persistence,events.
std::string tracks_csv(const TrackingResult& r);

}  // namespace toptrack
