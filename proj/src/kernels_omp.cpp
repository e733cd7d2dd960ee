#include "toptrack/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace toptrack::kernels {

namespace omp {

void descent_targets(const GridTopology& topo, const OrientedField& field,
                     std::span<VertexId> next) {
  const auto n = static_cast<std::int64_t>(topo.vertex_count());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto v = static_cast<VertexId>(i);
    VertexId best = v;
    for (const VertexId u : neighborhood(topo, v))
      if (field.lower(u, best)) best = u;
    next[v] = best;
  }
}

void basin_roots(std::span<const VertexId> next, std::span<VertexId> root) {
  const auto n = static_cast<std::int64_t>(next.size());
  std::vector<VertexId> scratch(next.size());
  std::copy(next.begin(), next.end(), root.begin());
  bool changed = true;
  while (changed) {
    changed = false;
#pragma omp parallel for schedule(static) reduction(|| : changed)
    for (std::int64_t i = 0; i < n; ++i) {
      const VertexId r = root[root[i]];
      scratch[i] = r;
      if (r != root[i]) changed = true;
    }
    std::copy(scratch.begin(), scratch.end(), root.begin());
  }
}

}  // namespace omp

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) noexcept {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace toptrack::kernels
