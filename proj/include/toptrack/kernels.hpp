#pragma once

// Per-vertex kernels behind the Morse segmentation. Each kernel exists as a
// serial reference and an OpenMP version that must agree with it exactly;
// the serial versions are kept for testing and benchmarking.

#include <span>
#include <vector>

#include "toptrack/grid.hpp"
#include "toptrack/series.hpp"

namespace toptrack::kernels {

/// One timestep of the field seen through the polarity: lower() is the
/// simulation-of-simplicity order for minima and its reverse for maxima.
struct OrientedField {
  std::span<const double> values;
  Polarity polarity = Polarity::minimum;

  bool lower(VertexId u, VertexId v) const noexcept {
    return polarity == Polarity::minimum ? precedes_value(values[u], u, values[v], v)
                                         : precedes_value(values[v], v, values[u], u);
  }
};

/// next[v] = the lowest neighbour of v if it is lower than v, else v itself.
/// Vertices with next[v] == v are exactly the extrema of the polarity.
namespace serial {
void descent_targets(const GridTopology& topo, const OrientedField& field,
                     std::span<VertexId> next);
/// root[v] = extremum reached by following next[] from v. Memoised walks
/// with path compression.
void basin_roots(std::span<const VertexId> next, std::span<VertexId> root);
}  // namespace serial

namespace omp {
void descent_targets(const GridTopology& topo, const OrientedField& field,
                     std::span<VertexId> next);
/// Pointer jumping: root <- root[root] until fixed point.
void basin_roots(std::span<const VertexId> next, std::span<VertexId> root);
}  // namespace omp

/// Maximum number of OpenMP threads available (1 without OpenMP).
int max_threads() noexcept;
/// Sets the OpenMP thread count; n <= 0 leaves the runtime default.
void set_threads(int n) noexcept;

}  // namespace toptrack::kernels
