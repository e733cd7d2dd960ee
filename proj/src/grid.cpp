#include "toptrack/grid.hpp"

#include <algorithm>
#include <string>

namespace toptrack {

namespace {

// Freudenthal stencil: axis neighbours plus the (+1,+1)/(-1,-1) diagonal.
constexpr std::array<std::array<int, 2>, 6> kStencil{{
    {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}}};

}  // namespace

GridTopology::GridTopology(std::uint32_t w, std::uint32_t h, bool wrap)
    : width(w), height(h), wrap_x(wrap) {
  validate();
}

void GridTopology::validate() const {
  if (width < 2 || height < 2)
    throw std::invalid_argument("grid must be at least 2x2, got " + std::to_string(width) + "x" +
                                std::to_string(height));
  if (wrap_y) throw std::invalid_argument("wrap_y is not supported");
}

Neighborhood neighborhood(const GridTopology& topo, VertexId v) noexcept {
  Neighborhood out;
  const int w = static_cast<int>(topo.width);
  const int h = static_cast<int>(topo.height);
  const int x = static_cast<int>(v % topo.width);
  const int y = static_cast<int>(v / topo.width);
  for (const auto& d : kStencil) {
    int nx = x + d[0];
    const int ny = y + d[1];
    if (ny < 0 || ny >= h) continue;
    if (topo.wrap_x) {
      nx = (nx + w) % w;
    } else if (nx < 0 || nx >= w) {
      continue;
    }
    const auto n = static_cast<VertexId>(ny * w + nx);
    if (n == v) continue;
    if (std::find(out.begin(), out.end(), n) != out.end()) continue;
    out.ids[out.count++] = n;
  }
  return out;
}

std::vector<VertexId> vertex_neighbors(const GridTopology& topo, VertexId v) {
  if (v >= topo.vertex_count())
    throw std::out_of_range("vertex " + std::to_string(v) + " outside grid of " +
                            std::to_string(topo.vertex_count()) + " vertices");
  const auto nb = neighborhood(topo, v);
  std::vector<VertexId> out(nb.begin(), nb.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace toptrack
