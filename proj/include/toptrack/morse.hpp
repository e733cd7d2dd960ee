#pragma once

#include <optional>
#include <span>
#include <vector>

#include "toptrack/series.hpp"

namespace toptrack {

/// Index of an extremum within its timestep's extremum list.
using ExtremumId = std::uint32_t;

struct CriticalPoint {
  VertexId vertex = 0;
  Timestep timestep = 0;
  double value = 0.0;
  Polarity polarity = Polarity::minimum;
  /// Branch persistence; unset until a branch decomposition fills it in.
  std::optional<double> persistence;

  bool operator==(const CriticalPoint&) const = default;
};

/// Complete partition of the vertices into descending manifolds of minima
/// (ascending manifolds of maxima). label[v] indexes the extremum list of
/// the same timestep and polarity.
struct ManifoldLabeling {
  Timestep timestep = 0;
  Polarity polarity = Polarity::minimum;
  std::vector<ExtremumId> label;

  bool operator==(const ManifoldLabeling&) const = default;
};

enum class Execution { serial, parallel };

/// Vertices lower than all their neighbours (minima) or higher than all of
/// them (maxima), sorted by vertex id.
std::vector<CriticalPoint> extract_extrema(const ScalarTimeSeries& series, Timestep t,
                                           Polarity polarity);

/// Labels each vertex with the extremum its steepest-descent walk ends in
/// (steepest ascent for maxima).
ManifoldLabeling segment_manifolds(const ScalarTimeSeries& series, Timestep t, Polarity polarity,
                                   Execution exec = Execution::parallel);

/// Extrema and labeling of one timestep computed together.
struct Segmentation {
  std::vector<CriticalPoint> extrema;
  ManifoldLabeling labeling;
};

Segmentation segment_timestep(const ScalarTimeSeries& series, Timestep t, Polarity polarity,
                              Execution exec = Execution::parallel);

/// Position of vertex v in a vertex-sorted extremum list, if it is one.
std::optional<ExtremumId> find_extremum(std::span<const CriticalPoint> extrema, VertexId v);

}  // namespace toptrack
