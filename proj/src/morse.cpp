#include "toptrack/morse.hpp"

#include <algorithm>
#include <stdexcept>

#include "toptrack/kernels.hpp"

namespace toptrack {

Segmentation segment_timestep(const ScalarTimeSeries& series, Timestep t, Polarity polarity,
                              Execution exec) {
  const auto& topo = series.topology();
  const kernels::OrientedField field{series.step(t), polarity};
  const std::size_t n = topo.vertex_count();

  std::vector<VertexId> next(n);
  std::vector<VertexId> root(n);
  if (exec == Execution::parallel) {
    kernels::omp::descent_targets(topo, field, next);
    kernels::omp::basin_roots(next, root);
  } else {
    kernels::serial::descent_targets(topo, field, next);
    kernels::serial::basin_roots(next, root);
  }

  Segmentation out;
  std::vector<ExtremumId> index_of(n, 0);
  for (VertexId v = 0; v < n; ++v) {
    if (next[v] != v) continue;
    index_of[v] = static_cast<ExtremumId>(out.extrema.size());
    out.extrema.push_back({v, t, field.values[v], polarity, std::nullopt});
  }
  out.labeling.timestep = t;
  out.labeling.polarity = polarity;
  out.labeling.label.resize(n);
  for (VertexId v = 0; v < n; ++v) out.labeling.label[v] = index_of[root[v]];
  return out;
}

std::vector<CriticalPoint> extract_extrema(const ScalarTimeSeries& series, Timestep t,
                                           Polarity polarity) {
  const auto& topo = series.topology();
  const kernels::OrientedField field{series.step(t), polarity};
  std::vector<CriticalPoint> out;
  const auto n = static_cast<VertexId>(topo.vertex_count());
  for (VertexId v = 0; v < n; ++v) {
    bool extremal = true;
    for (const VertexId u : neighborhood(topo, v)) {
      if (field.lower(u, v)) {
        extremal = false;
        break;
      }
    }
    if (extremal) out.push_back({v, t, field.values[v], polarity, std::nullopt});
  }
  return out;
}

ManifoldLabeling segment_manifolds(const ScalarTimeSeries& series, Timestep t, Polarity polarity,
                                   Execution exec) {
  return segment_timestep(series, t, polarity, exec).labeling;
}

std::optional<ExtremumId> find_extremum(std::span<const CriticalPoint> extrema, VertexId v) {
  const auto it = std::lower_bound(extrema.begin(), extrema.end(), v,
                                   [](const CriticalPoint& c, VertexId x) { return c.vertex < x; });
  if (it == extrema.end() || it->vertex != v) return std::nullopt;
  return static_cast<ExtremumId>(it - extrema.begin());
}

}  // namespace toptrack
