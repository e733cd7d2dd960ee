#include "toptrack/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace toptrack::synthetic {

ScalarTimeSeries from_function(const GridTopology& topo, std::uint32_t steps, double dt_hours,
                               const FieldFn& fn, std::optional<GeoAxes> geo) {
  std::vector<double> v;
  v.reserve(topo.vertex_count() * steps);
  for (Timestep t = 0; t < steps; ++t)
    for (std::uint32_t y = 0; y < topo.height; ++y)
      for (std::uint32_t x = 0; x < topo.width; ++x) v.push_back(fn(t, x, y));
  return ScalarTimeSeries(topo, steps, dt_hours, std::move(v), geo);
}

ScalarTimeSeries repeat(const ScalarTimeSeries& base, std::uint32_t steps) {
  const auto first = base.step(0);
  std::vector<double> v;
  v.reserve(first.size() * steps);
  for (std::uint32_t t = 0; t < steps; ++t) v.insert(v.end(), first.begin(), first.end());
  return ScalarTimeSeries(base.topology(), steps, base.dt_hours(), std::move(v), base.geo());
}

double wells_value(const std::vector<GaussianWell>& wells, double cx, double cy, double bowl,
                   double x, double y) {
  double v = 1000.0 + bowl * ((x - cx) * (x - cx) + (y - cy) * (y - cy));
  for (const auto& w : wells) {
    const double r2 = (x - w.x) * (x - w.x) + (y - w.y) * (y - w.y);
    v -= w.depth * std::exp(-r2 / (2 * w.sigma * w.sigma));
  }
  return v;
}

ScalarTimeSeries three_well_fixture() {
  struct Cone {
    double x, y, depth;
  };
  constexpr Cone cones[] = {{20, 30, 0.0}, {60, 30, 4.0}, {60, 14, 6.0}};
  constexpr double slope = 0.5;
  const GridTopology topo(84, 48);
  auto raw = [&](double x, double y) {
    double v = 1e300;
    for (const auto& c : cones) v = std::min(v, c.depth + slope * std::hypot(x - c.x, y - c.y));
    return v;
  };
  double top = 0.0;
  for (std::uint32_t y = 0; y < topo.height; ++y)
    for (std::uint32_t x = 0; x < topo.width; ++x) top = std::max(top, raw(x, y));
  // Monotone remap above 16 so the range becomes exactly 100 while the
  // wells and saddles keep their values.
  constexpr double knee = 16.0;
  return from_function(topo, 1, 6.0, [&](Timestep, double x, double y) {
    const double g = raw(x, y);
    return g <= knee ? g : knee + (g - knee) * (100.0 - knee) / (top - knee);
  });
}

ScalarTimeSeries two_well_hand_field() {
  return ScalarTimeSeries(GridTopology(5, 3), 1, 6.0,
                          {4, 6, 9, 6, 5,     //
                           2, 1, 8, 3, 4,     //
                           5, 7, 9.5, 7, 10});
}

MergingFixture merging_wells() {
  // Half-separation per step; the shallow well's persistence drops from
  // ~10.4 at 8 to ~5.4 at 7 and it vanishes below 6.
  static constexpr double half_sep[] = {16, 14, 12, 10, 8, 7, 6, 5, 4, 4};
  constexpr std::uint32_t steps = std::size(half_sep);
  const GridTopology topo(96, 49);
  MergingFixture fx;
  fx.series = from_function(topo, steps, 6.0, [&](Timestep t, double x, double y) {
    const double d = half_sep[t];
    return wells_value({{48 - d, 24, 30, 5}, {48 + d, 24, 26, 5}}, 48, 24, 0.004, x, y);
  });
  fx.merge_step = 5;
  fx.delta = 7.0;
  fx.deep_start = topo.id(32, 24);
  fx.shallow_start = topo.id(64, 24);
  return fx;
}

JumpFixture dominant_jump() {
  static constexpr double depth[][2] = {{30, 28}, {28, 30}, {30, 28}};
  const GridTopology topo(96, 49);
  JumpFixture fx;
  fx.series = from_function(topo, 3, 6.0, [&](Timestep t, double x, double y) {
    return wells_value({{43, 24, depth[t][0], 4}, {53, 24, depth[t][1], 4}}, 48, 24, 0.004, x, y);
  });
  fx.delta = 6.0;
  fx.left = topo.id(44, 24);
  fx.right = topo.id(52, 24);
  return fx;
}

ScalarTimeSeries translating_well(std::uint32_t width, std::uint32_t height,
                                  std::uint32_t steps, double shift) {
  const GridTopology topo(width, height);
  const double cy = (height - 1) / 2.0;
  return from_function(topo, steps, 6.0, [&](Timestep t, double x, double y) {
    const double cx = width / 4.0 + shift * t;
    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    // Pure paraboloid: one basin covering the whole grid.
    return 1000.0 + 0.05 * r2;
  });
}

ScalarTimeSeries independent_wells(std::uint32_t steps) {
  const GridTopology topo(64, 40);
  return from_function(topo, steps, 6.0, [&](Timestep t, double x, double y) {
    const double a = (x - 12) * (x - 12) + (y - 10.0 - t) * (y - 10.0 - t);
    const double b = (x - 52) * (x - 52) + (y - 28.0 + t) * (y - 28.0 + t);
    return 1000.0 + 0.05 * std::min(a, b + 4.0);
  });
}

ScalarTimeSeries pressure_like(std::uint32_t width, std::uint32_t height, std::uint32_t steps,
                               std::uint32_t seed) {
  const GridTopology topo(width, height, true);
  const GeoAxes geo{0.0, 360.0 / width, -90.0 + 90.0 / height, 180.0 / height};
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Mode {
    int kx, ky;
    double amp, phase, speed;
  };
  std::vector<Mode> modes;
  for (int i = 0; i < 24; ++i)
    modes.push_back({1 + static_cast<int>(unit(rng) * 12), 1 + static_cast<int>(unit(rng) * 8),
                     60.0 + 180.0 * unit(rng), 2 * std::numbers::pi * unit(rng),
                     0.05 + 0.2 * unit(rng)});

  struct Low {
    double x, y, depth, sigma, vx, vy;
  };
  std::vector<Low> lows;
  for (int i = 0; i < 14; ++i) {
    const double lat_band = unit(rng) < 0.5 ? 0.2 : 0.8;
    lows.push_back({unit(rng) * width, height * (lat_band + 0.1 * (unit(rng) - 0.5)),
                    1200.0 + 2800.0 * unit(rng), 4.0 + 6.0 * unit(rng), 0.8 + 1.2 * unit(rng),
                    0.3 * (unit(rng) - 0.5)});
  }

  const double two_pi = 2 * std::numbers::pi;
  return from_function(
      topo, steps, 6.0,
      [&](Timestep t, double x, double y) {
        const double lat = geo.lat0 + y * geo.dlat;
        double v = 101325.0 - 900.0 * std::cos(2 * lat * std::numbers::pi / 180.0);
        for (const auto& m : modes)
          v += m.amp * std::sin(two_pi * m.kx * x / width + m.phase + m.speed * t) *
               std::cos(std::numbers::pi * m.ky * y / height + 0.5 * m.phase);
        for (const auto& l : lows) {
          double dx = std::fmod(x - (l.x + l.vx * t), static_cast<double>(width));
          if (dx < -0.5 * width) dx += width;
          if (dx > 0.5 * width) dx -= width;
          const double dy = y - (l.y + l.vy * t);
          v -= l.depth * std::exp(-(dx * dx + dy * dy) / (2 * l.sigma * l.sigma));
        }
        return v;
      },
      geo);
}

}  // namespace toptrack::synthetic
