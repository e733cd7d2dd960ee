#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "toptrack/descriptor.hpp"

namespace toptrack {

namespace {

struct Corner {
  std::int64_t x, y;  // may lie one step outside the grid (padding)
};

struct Segment {
  std::uint64_t start_edge, end_edge;
  Point2 start, end;
};

class Tracer {
 public:
  Tracer(const GridTopology& topo, std::span<const double> oriented, double level,
         const std::vector<char>& mask)
      : topo_(topo), f_(oriented), level_(level), mask_(mask) {}

  std::vector<Polyline> trace() {
    const std::int64_t w = topo_.width, h = topo_.height;
    const std::int64_t x_begin = topo_.wrap_x ? 0 : -1;
    for (std::int64_t cy = -1; cy < h; ++cy)
      for (std::int64_t cx = x_begin; cx < w; ++cx) {
        const Corner c00{cx, cy}, c10{cx + 1, cy}, c11{cx + 1, cy + 1}, c01{cx, cy + 1};
        triangle({c00, c10, c11});
        triangle({c00, c11, c01});
      }
    return stitch();
  }

 private:
  std::optional<VertexId> vertex(Corner c) const {
    if (c.y < 0 || c.y >= static_cast<std::int64_t>(topo_.height)) return std::nullopt;
    std::int64_t x = c.x;
    const std::int64_t w = topo_.width;
    if (topo_.wrap_x) x = ((x % w) + w) % w;
    else if (x < 0 || x >= w) return std::nullopt;
    return topo_.id(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(c.y));
  }

  bool inside(Corner c) const {
    const auto v = vertex(c);
    return v && mask_[*v];
  }

  std::uint64_t key(Corner c) const {
    std::int64_t x = c.x;
    const std::int64_t w = topo_.width;
    if (topo_.wrap_x) x = ((x % w) + w) % w;
    return static_cast<std::uint64_t>((c.y + 1) * (w + 2) + (x + 1));
  }

  std::uint64_t edge_key(Corner a, Corner b) const {
    auto ka = key(a), kb = key(b);
    if (ka > kb) std::swap(ka, kb);
    return (ka << 32) | kb;
  }

  /// Crossing between inside corner a and outside corner b. Padding
  /// corners put the crossing half a cell outside the grid.
  Point2 crossing(Corner a, Corner b) const {
    double t = 0.5;
    if (const auto vb = vertex(b)) {
      const double fa = f_[*vertex(a)], fb = f_[*vb];
      t = fb > fa ? std::clamp((level_ - fa) / (fb - fa), 0.0, 1.0) : 0.0;
    }
    return {static_cast<double>(a.x) + t * static_cast<double>(b.x - a.x),
            static_cast<double>(a.y) + t * static_cast<double>(b.y - a.y)};
  }

  Point2 edge_point(Corner p, Corner q) const {
    return inside(p) ? crossing(p, q) : crossing(q, p);
  }

  void triangle(std::array<Corner, 3> q) {
    const bool in[3] = {inside(q[0]), inside(q[1]), inside(q[2])};
    const int k = in[0] + in[1] + in[2];
    if (k == 0 || k == 3) return;
    // Walking q0 -> q1 -> q2, the segment runs from the edge where the walk
    // leaves the region to the edge where it re-enters.
    int i = 0;
    while (in[i] != (k == 1)) ++i;
    const Corner prev = q[(i + 2) % 3], cur = q[i], next = q[(i + 1) % 3];
    Segment s;
    if (k == 1) {
      s = {edge_key(cur, next), edge_key(prev, cur), edge_point(cur, next), edge_point(prev, cur)};
    } else {
      s = {edge_key(prev, cur), edge_key(cur, next), edge_point(prev, cur), edge_point(cur, next)};
    }
    by_start_.emplace(s.start_edge, segments_.size());
    segments_.push_back(s);
  }

  std::vector<Polyline> stitch() {
    const double w = topo_.width;
    std::vector<char> used(segments_.size(), 0);
    std::vector<Polyline> out;
    for (std::size_t first = 0; first < segments_.size(); ++first) {
      if (used[first]) continue;
      Polyline line;
      double shift = 0.0;
      std::size_t cur = first;
      while (!used[cur]) {
        used[cur] = 1;
        const auto& s = segments_[cur];
        add(line, {s.start[0] + shift, s.start[1]});
        const Point2 end{s.end[0] + shift, s.end[1]};
        const auto it = by_start_.find(s.end_edge);
        if (it == by_start_.end()) break;
        cur = it->second;
        if (topo_.wrap_x) shift += std::round((end[0] - segments_[cur].start[0] - shift) / w) * w;
      }
      if (line.size() < 3) continue;
      line.push_back(line.front());
      out.push_back(std::move(line));
    }
    return out;
  }

  static void add(Polyline& line, Point2 p) {
    if (!line.empty() && std::abs(line.back()[0] - p[0]) < 1e-12 &&
        std::abs(line.back()[1] - p[1]) < 1e-12)
      return;
    line.push_back(p);
  }

  const GridTopology& topo_;
  std::span<const double> f_;
  double level_;
  const std::vector<char>& mask_;
  std::vector<Segment> segments_;
  std::unordered_map<std::uint64_t, std::size_t> by_start_;
};

}  // namespace

bool polygon_contains(const Polyline& poly, Point2 p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a[1] > p[1]) != (b[1] > p[1]) &&
        p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0])
      in = !in;
  }
  return in;
}

std::vector<Polyline> feature_contour(const GridTopology& topo, std::span<const double> values,
                                      Polarity polarity, const Feature& feature,
                                      std::span<const CriticalPoint> extrema) {
  const double sign = polarity == Polarity::minimum ? 1.0 : -1.0;
  std::vector<double> f(values.size());
  for (std::size_t v = 0; v < values.size(); ++v) f[v] = sign * values[v];
  const double level = sign * feature.level;

  // Sublevel components holding a member.
  std::vector<char> mask(f.size(), 0);
  std::vector<VertexId> stack;
  for (const auto m : feature.members) {
    const auto v0 = extrema[m].vertex;
    if (f[v0] > level || mask[v0]) continue;
    mask[v0] = 1;
    stack.push_back(v0);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      const auto nb = neighborhood(topo, v);
      for (std::uint32_t i = 0; i < nb.count; ++i) {
        const auto u = nb.ids[i];
        if (!mask[u] && f[u] <= level) {
          mask[u] = 1;
          stack.push_back(u);
        }
      }
    }
  }

  auto loops = Tracer(topo, f, level, mask).trace();
  std::vector<Polyline> out;
  for (auto& loop : loops) {
    bool encloses = false;
    for (const auto m : feature.members) {
      const double x = topo.x_of(extrema[m].vertex), y = topo.y_of(extrema[m].vertex);
      for (const double k : {0.0, -1.0, 1.0}) {
        if (k != 0.0 && !topo.wrap_x) continue;
        if (polygon_contains(loop, {x + k * topo.width, y})) encloses = true;
      }
    }
    if (encloses) out.push_back(std::move(loop));
  }
  return out;
}

}  // namespace toptrack
