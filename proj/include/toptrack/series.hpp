#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "toptrack/grid.hpp"

namespace toptrack {

using Timestep = std::uint32_t;

/// Which extrema are analysed: minima with sublevel sets (join tree,
/// descending manifolds) or maxima with superlevel sets.
enum class Polarity : std::uint8_t { minimum = 0, maximum = 1 };

std::string_view to_string(Polarity p) noexcept;
/// Accepts "minimum"/"min" and "maximum"/"max"; throws std::invalid_argument.
Polarity parse_polarity(std::string_view s);

/// Optional geographic placement of the grid, in degrees. Longitude of
/// column x is lon0 + x*dlon, latitude of row y is lat0 + y*dlat.
struct GeoAxes {
  double lon0 = 0.0;
  double dlon = 1.0;
  double lat0 = 0.0;
  double dlat = 1.0;

  bool operator==(const GeoAxes&) const = default;
};

struct FieldRange {
  double min = 0.0;
  double max = 0.0;
  double span() const noexcept { return max - min; }
  bool operator==(const FieldRange&) const = default;
};

/// All timesteps of a scalar field on one grid, fully resident.
/// Immutable after construction; every sample is finite.
class ScalarTimeSeries {
 public:
  ScalarTimeSeries() = default;
  /// values holds num_timesteps * vertex_count samples, timestep-major.
  /// Throws std::invalid_argument on size mismatch or a non-finite sample.
  ScalarTimeSeries(GridTopology topo, std::uint32_t num_timesteps, double dt_hours,
                   std::vector<double> values, std::optional<GeoAxes> geo = std::nullopt);

  const GridTopology& topology() const noexcept { return topo_; }
  std::uint32_t num_timesteps() const noexcept { return steps_; }
  std::size_t vertex_count() const noexcept { return topo_.vertex_count(); }
  double dt_hours() const noexcept { return dt_hours_; }
  const std::optional<GeoAxes>& geo() const noexcept { return geo_; }
  FieldRange field_range() const noexcept { return range_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> step(Timestep t) const;
  double value(Timestep t, VertexId v) const { return step(t)[v]; }

  /// Copy of timesteps [first, first+count).
  ScalarTimeSeries slice(Timestep first, std::uint32_t count) const;
  /// Same grid with the timestep order reversed.
  ScalarTimeSeries reversed() const;
  /// Pointwise negation, which swaps the roles of minima and maxima.
  ScalarTimeSeries negated() const;

 private:
  GridTopology topo_{};
  std::uint32_t steps_ = 0;
  double dt_hours_ = 0.0;
  std::vector<double> values_;
  std::optional<GeoAxes> geo_;
  FieldRange range_{};
};

/// Simulation of simplicity: (f(u), u) < (f(v), v) lexicographically.
inline bool precedes_value(double fu, VertexId u, double fv, VertexId v) noexcept {
  return fu < fv || (fu == fv && u < v);
}

/// True iff u strictly precedes v in the total vertex order of timestep t.
/// Throws std::out_of_range for a bad timestep or vertex.
bool precedes(const ScalarTimeSeries& series, Timestep t, VertexId u, VertexId v);

/// The total order of one timestep, materialised as ranks and oriented by
/// polarity: the sweep starts at the global minimum for Polarity::minimum
/// and at the global maximum for Polarity::maximum.
class VertexOrder {
 public:
  VertexOrder(std::span<const double> values, Polarity polarity);

  /// Vertices in sweep order.
  std::span<const VertexId> sweep() const noexcept { return sweep_; }
  std::uint32_t rank(VertexId v) const noexcept { return rank_[v]; }
  /// True iff u comes before v in the sweep.
  bool lower(VertexId u, VertexId v) const noexcept { return rank_[u] < rank_[v]; }
  Polarity polarity() const noexcept { return polarity_; }
  std::span<const std::uint32_t> ranks() const noexcept { return rank_; }

 private:
  Polarity polarity_;
  std::vector<VertexId> sweep_;
  std::vector<std::uint32_t> rank_;
};

}  // namespace toptrack
