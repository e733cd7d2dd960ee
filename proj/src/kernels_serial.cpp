#include "toptrack/kernels.hpp"

#include <algorithm>
#include <vector>

namespace toptrack::kernels::serial {

void descent_targets(const GridTopology& topo, const OrientedField& field,
                     std::span<VertexId> next) {
  const auto n = static_cast<VertexId>(topo.vertex_count());
  for (VertexId v = 0; v < n; ++v) {
    VertexId best = v;
    for (const VertexId u : neighborhood(topo, v))
      if (field.lower(u, best)) best = u;
    next[v] = best;
  }
}

void basin_roots(std::span<const VertexId> next, std::span<VertexId> root) {
  constexpr VertexId kUnset = ~VertexId{0};
  std::fill(root.begin(), root.end(), kUnset);
  std::vector<VertexId> path;
  for (VertexId v = 0; v < next.size(); ++v) {
    if (root[v] != kUnset) continue;
    path.clear();
    VertexId w = v;
    while (root[w] == kUnset && next[w] != w) {
      path.push_back(w);
      w = next[w];
    }
    const VertexId r = root[w] != kUnset ? root[w] : w;
    root[w] = r;
    for (const VertexId p : path) root[p] = r;
  }
}

}  // namespace toptrack::kernels::serial
