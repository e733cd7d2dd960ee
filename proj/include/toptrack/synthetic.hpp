#pragma once

// Deterministic synthetic fields: the reference scenarios used by the test
// and acceptance suites, and a pressure-like series for benchmarking.

#include <cstdint>
#include <functional>
#include <vector>

#include "toptrack/series.hpp"

namespace toptrack::synthetic {

using FieldFn = std::function<double(Timestep t, double x, double y)>;

ScalarTimeSeries from_function(const GridTopology& topo, std::uint32_t steps, double dt_hours,
                               const FieldFn& fn,
                               std::optional<GeoAxes> geo = std::nullopt);

/// Repeats the first timestep of base `steps` times.
ScalarTimeSeries repeat(const ScalarTimeSeries& base, std::uint32_t steps);

struct GaussianWell {
  double x = 0.0;
  double y = 0.0;
  double depth = 1.0;
  double sigma = 1.0;
};

/// 1000 + bowl*|p - centre|^2 minus the wells. The bowl keeps the far field
/// strictly increasing so no plateau minima appear.
double wells_value(const std::vector<GaussianWell>& wells, double cx, double cy, double bowl,
                   double x, double y);

/// Three cone-shaped wells on an 84x48 grid with field range exactly 100:
/// A = 0 at (20,30), B = 4 at (60,30), C = 6 at (60,14); B and C join at 9,
/// BC joins A at 12. Branch persistences are 100, 8 and 3.
ScalarTimeSeries three_well_fixture();

/// 5x3 hand-built field: minima 1.0 and 3.0 joined by a saddle at 8.0,
/// maximum 10.0.
ScalarTimeSeries two_well_hand_field();

/// Two Gaussian wells in a bowl that approach each other; the shallower
/// well stops carrying its own feature at merge_step under offset delta.
struct MergingFixture {
  ScalarTimeSeries series;
  Timestep merge_step = 0;
  double delta = 0.0;
  VertexId deep_start = 0;     ///< deeper well's minimum at t = 0
  VertexId shallow_start = 0;  ///< shallower well's minimum at t = 0
};
MergingFixture merging_wells();

/// Two nearby minima whose depth ranking swaps every timestep while both
/// stay within delta of each other.
struct JumpFixture {
  ScalarTimeSeries series;
  double delta = 0.0;
  VertexId left = 0;
  VertexId right = 0;
};
JumpFixture dominant_jump();

/// Single broad Gaussian well moving `shift` cells in +x per step.
ScalarTimeSeries translating_well(std::uint32_t width, std::uint32_t height,
                                  std::uint32_t steps, double shift);

/// Two paraboloid wells far apart, each drifting one cell in y per step;
/// they never interact.
ScalarTimeSeries independent_wells(std::uint32_t steps);

/// Pressure-like series in Pa on a global wrap_x grid with geo axes:
/// meridional gradient, smooth travelling noise and drifting lows.
ScalarTimeSeries pressure_like(std::uint32_t width, std::uint32_t height, std::uint32_t steps,
                               std::uint32_t seed);

}  // namespace toptrack::synthetic
