#include "toptrack/series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace toptrack {

std::string_view to_string(Polarity p) noexcept {
  return p == Polarity::minimum ? "minimum" : "maximum";
}

Polarity parse_polarity(std::string_view s) {
  if (s == "minimum" || s == "min") return Polarity::minimum;
  if (s == "maximum" || s == "max") return Polarity::maximum;
  throw std::invalid_argument("unknown polarity '" + std::string(s) + "'");
}

ScalarTimeSeries::ScalarTimeSeries(GridTopology topo, std::uint32_t num_timesteps, double dt_hours,
                                   std::vector<double> values, std::optional<GeoAxes> geo)
    : topo_(topo), steps_(num_timesteps), dt_hours_(dt_hours), values_(std::move(values)),
      geo_(geo) {
  topo_.validate();
  if (steps_ == 0) throw std::invalid_argument("series needs at least one timestep");
  const std::size_t n = topo_.vertex_count();
  if (values_.size() != n * steps_)
    throw std::invalid_argument("expected " + std::to_string(n * steps_) + " samples, got " +
                                std::to_string(values_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw std::invalid_argument("non-finite sample at timestep " + std::to_string(i / n) +
                                  ", vertex " + std::to_string(i % n));
  }
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  range_ = {*lo, *hi};
}

std::span<const double> ScalarTimeSeries::step(Timestep t) const {
  if (t >= steps_)
    throw std::out_of_range("timestep " + std::to_string(t) + " outside series of " +
                            std::to_string(steps_));
  const std::size_t n = topo_.vertex_count();
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(t) * n, n);
}

ScalarTimeSeries ScalarTimeSeries::slice(Timestep first, std::uint32_t count) const {
  if (count == 0 || first + count > steps_) throw std::out_of_range("bad timestep slice");
  const std::size_t n = topo_.vertex_count();
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(first * n),
                        values_.begin() + static_cast<std::ptrdiff_t>((first + count) * n));
  return ScalarTimeSeries(topo_, count, dt_hours_, std::move(v), geo_);
}

ScalarTimeSeries ScalarTimeSeries::reversed() const {
  std::vector<double> v;
  v.reserve(values_.size());
  for (std::uint32_t t = steps_; t-- > 0;) {
    const auto s = step(t);
    v.insert(v.end(), s.begin(), s.end());
  }
  return ScalarTimeSeries(topo_, steps_, dt_hours_, std::move(v), geo_);
}

ScalarTimeSeries ScalarTimeSeries::negated() const {
  std::vector<double> v(values_.size());
  std::transform(values_.begin(), values_.end(), v.begin(), [](double x) { return -x; });
  return ScalarTimeSeries(topo_, steps_, dt_hours_, std::move(v), geo_);
}

bool precedes(const ScalarTimeSeries& series, Timestep t, VertexId u, VertexId v) {
  const auto f = series.step(t);
  if (u >= f.size() || v >= f.size()) throw std::out_of_range("vertex outside grid");
  return precedes_value(f[u], u, f[v], v);
}

VertexOrder::VertexOrder(std::span<const double> values, Polarity polarity)
    : polarity_(polarity), sweep_(values.size()), rank_(values.size()) {
  std::iota(sweep_.begin(), sweep_.end(), VertexId{0});
  std::sort(sweep_.begin(), sweep_.end(), [&](VertexId a, VertexId b) {
    return precedes_value(values[a], a, values[b], b);
  });
  if (polarity == Polarity::maximum) std::reverse(sweep_.begin(), sweep_.end());
  for (std::uint32_t i = 0; i < sweep_.size(); ++i) rank_[sweep_[i]] = i;
}

}  // namespace toptrack
