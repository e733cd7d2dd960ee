#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace toptrack {

using VertexId = std::uint32_t;

/// Structured 2D grid. Vertices are numbered row-major: id = y * width + x.
///
/// Connectivity is the Freudenthal triangulation of the quad grid, every cell
/// split along its (i,j)-(i+1,j+1) diagonal. That gives each interior vertex
/// six neighbours. With wrap_x the column width-1 is adjacent to column 0.
struct GridTopology {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  bool wrap_x = false;
  bool wrap_y = false;

  GridTopology() = default;
  GridTopology(std::uint32_t w, std::uint32_t h, bool wrap = false);

  /// Throws std::invalid_argument unless width, height >= 2 and wrap_y is off.
  void validate() const;

  std::size_t vertex_count() const noexcept {
    return static_cast<std::size_t>(width) * height;
  }
  VertexId id(std::uint32_t x, std::uint32_t y) const noexcept { return y * width + x; }
  std::uint32_t x_of(VertexId v) const noexcept { return v % width; }
  std::uint32_t y_of(VertexId v) const noexcept { return v / width; }

  bool operator==(const GridTopology&) const = default;
};

/// Fixed-capacity neighbour list, filled without allocation.
struct Neighborhood {
  std::array<VertexId, 6> ids{};
  std::uint8_t count = 0;

  const VertexId* begin() const noexcept { return ids.data(); }
  const VertexId* end() const noexcept { return ids.data() + count; }
  std::size_t size() const noexcept { return count; }
};

/// Neighbours of v in unspecified order with duplicates removed.
/// Hot-path variant used by the kernels; no range check.
Neighborhood neighborhood(const GridTopology& topo, VertexId v) noexcept;

/// Neighbours of v, sorted ascending. Throws std::out_of_range for a bad id.
std::vector<VertexId> vertex_neighbors(const GridTopology& topo, VertexId v);

}  // namespace toptrack
