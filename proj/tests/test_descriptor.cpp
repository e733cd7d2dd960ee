#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "toptrack/descriptor.hpp"
#include "toptrack/synthetic.hpp"

using namespace toptrack;

namespace {

struct Topo {
  std::vector<CriticalPoint> extrema;
  MergeTree tree;
  BranchDecomposition bd;
};

Topo topo_of(const ScalarTimeSeries& s, Timestep t = 0, Polarity pol = Polarity::minimum) {
  Topo out;
  out.extrema = segment_timestep(s, t, pol).extrema;
  out.tree = compute_merge_tree(s, t, pol);
  out.bd = branch_decomposition(out.tree, out.extrema);
  return out;
}

DescriptorSpec offset_spec(double delta, ValueUnit unit = ValueUnit::raw) {
  DescriptorSpec spec;
  spec.kind = DescriptorKind::local_offset;
  spec.delta.constant = delta;
  spec.delta.unit = unit;
  return spec;
}

std::vector<Feature> offset_features(const ScalarTimeSeries& s, const Topo& tp, double percent) {
  const auto spec = resolve(offset_spec(percent, ValueUnit::percent), s.field_range(), s.topology());
  return features_local_offset(tp.bd, tp.extrema, spec);
}

std::set<VertexId> vertices_of(const Feature& f, const Topo& tp) {
  std::set<VertexId> out;
  for (const auto m : f.members) out.insert(tp.extrema[m].vertex);
  return out;
}

ScalarTimeSeries single(const GridTopology& g, std::vector<double> f) {
  return ScalarTimeSeries(g, 1, 1.0, std::move(f));
}

}  // namespace

TEST_CASE("three-well delta sweep gives 3, 2, 1, 1 carriers") {
  const auto s = synthetic::three_well_fixture();
  REQUIRE(s.field_range().span() == doctest::Approx(100.0));
  const auto tp = topo_of(s);
  REQUIRE(tp.extrema.size() == 3);

  const std::pair<double, std::size_t> sweep[] = {{2, 3}, {5, 2}, {10, 1}, {15, 1}};
  for (const auto& [pct, count] : sweep) {
    CAPTURE(pct);
    CHECK(offset_features(s, tp, pct).size() == count);
  }

  const auto at5 = offset_features(s, tp, 5);
  const auto g = s.topology();
  // The shallow well C at (60,14) carries nothing and joins B.
  for (const auto& f : at5)
    CHECK(vertices_of(f, tp).count(g.id(60, 14)) == (tp.extrema[f.carrier].vertex == g.id(60, 30)));

  const auto at15 = offset_features(s, tp, 15);
  CHECK(at15.front().members.size() == 3);
  CHECK(at15.front().detached_members == 0);
  CHECK(at15.front().level == doctest::Approx(15.0));
}

TEST_CASE("three-well at 10 percent: one feature, two contour regions") {
  const auto s = synthetic::three_well_fixture();
  const auto tp = topo_of(s);
  const auto feats = offset_features(s, tp, 10);
  REQUIRE(feats.size() == 1);
  CHECK(feats[0].members.size() == 3);
  // B and C only reach A above the contour level.
  CHECK(feats[0].detached_members == 2);

  const auto loops = feature_contour(s.topology(), s.step(0), Polarity::minimum, feats[0], tp.extrema);
  CHECK(loops.size() == 2);
  for (const auto& l : loops) {
    REQUIRE(l.size() >= 4);
    CHECK(l.front() == l.back());
  }

  const auto one = feature_contour(s.topology(), s.step(0), Polarity::minimum,
                                   offset_features(s, tp, 15)[0], tp.extrema);
  CHECK(one.size() == 1);
}

TEST_CASE("every member lies inside the contour at 15 percent") {
  const auto s = synthetic::three_well_fixture();
  const auto tp = topo_of(s);
  const auto f = offset_features(s, tp, 15).at(0);
  const auto loops = feature_contour(s.topology(), s.step(0), Polarity::minimum, f, tp.extrema);
  std::size_t inside = 0;
  for (const auto m : f.members) {
    const auto v = tp.extrema[m].vertex;
    const Point2 p{double(s.topology().x_of(v)), double(s.topology().y_of(v))};
    inside += std::any_of(loops.begin(), loops.end(), [&](const Polyline& l) { return polygon_contains(l, p); });
  }
  CHECK(inside == f.members.size());
}

TEST_CASE("delta above the field range yields no features") {
  const auto s = synthetic::three_well_fixture();
  const auto tp = topo_of(s);
  CHECK(offset_features(s, tp, 150).empty());
  CHECK(offset_features(s, tp, 99).size() == 1);
}

TEST_CASE("maxima of the negated fixture give the same sweep") {
  const auto base = synthetic::three_well_fixture();
  std::vector<double> neg(base.step(0).begin(), base.step(0).end());
  for (auto& v : neg) v = -v;
  const auto s = single(base.topology(), neg);
  const auto tp = topo_of(s, 0, Polarity::maximum);
  const std::pair<double, std::size_t> sweep[] = {{2, 3}, {5, 2}, {10, 1}, {15, 1}};
  for (const auto& [pct, count] : sweep) {
    auto spec = offset_spec(pct, ValueUnit::percent);
    spec.polarity = Polarity::maximum;
    spec = resolve(spec, s.field_range(), s.topology());
    const auto feats = features_local_offset(tp.bd, tp.extrema, spec);
    CHECK(feats.size() == count);
    if (count == 1) {
      CHECK(feats[0].level == doctest::Approx(-pct));
      const auto loops = feature_contour(s.topology(), s.step(0), Polarity::maximum, feats[0], tp.extrema);
      CHECK(loops.size() == (pct == 10 ? 2u : 1u));
    }
  }
}

TEST_CASE("radial well gives one near-circular contour") {
  const GridTopology g(41, 41);
  std::vector<double> f(g.vertex_count());
  for (std::uint32_t y = 0; y < 41; ++y)
    for (std::uint32_t x = 0; x < 41; ++x) f[g.id(x, y)] = 50.0 + std::hypot(x - 20.0, y - 20.0);
  const auto s = single(g, f);
  const auto tp = topo_of(s);
  const auto feats = features_local_offset(tp.bd, tp.extrema, offset_spec(8.0));
  REQUIRE(feats.size() == 1);
  const auto loops = feature_contour(g, s.step(0), Polarity::minimum, feats[0], tp.extrema);
  REQUIRE(loops.size() == 1);
  CHECK(loops[0].size() > 30);
  for (const auto& p : loops[0]) CHECK(std::abs(std::hypot(p[0] - 20.0, p[1] - 20.0) - 8.0) < 0.35);
  CHECK(polygon_contains(loops[0], {20.0, 20.0}));
  CHECK_FALSE(polygon_contains(loops[0], {20.0, 29.0}));
}

TEST_CASE("contour touching the boundary is closed outside the grid") {
  const GridTopology g(21, 21);
  std::vector<double> f(g.vertex_count());
  for (std::uint32_t y = 0; y < 21; ++y)
    for (std::uint32_t x = 0; x < 21; ++x) f[g.id(x, y)] = std::hypot(double(x), double(y));
  const auto s = single(g, f);
  const auto tp = topo_of(s);
  const auto feats = features_local_offset(tp.bd, tp.extrema, offset_spec(4.5));
  REQUIRE(feats.size() == 1);
  const auto loops = feature_contour(g, s.step(0), Polarity::minimum, feats[0], tp.extrema);
  REQUIRE(loops.size() == 1);
  CHECK(loops[0].front() == loops[0].back());
  CHECK(polygon_contains(loops[0], {0.0, 0.0}));
  const auto [lo, hi] = std::minmax_element(loops[0].begin(), loops[0].end(),
                                            [](const Point2& a, const Point2& b) { return a[0] < b[0]; });
  CHECK((*lo)[0] == doctest::Approx(-0.5));
  CHECK((*hi)[0] < 5.5);
}

TEST_CASE("global threshold splits and joins at the saddle") {
  const auto s = synthetic::two_well_hand_field();
  const auto tp = topo_of(s);
  auto spec = DescriptorSpec{};
  spec.kind = DescriptorKind::global_threshold;
  const auto at = [&](double level) {
    spec.level = level;
    return features_global_threshold(tp.tree, tp.bd, tp.extrema, spec);
  };
  CHECK(at(0.5).empty());
  CHECK(at(7.9).size() == 2);
  const auto joined = at(8.1);
  REQUIRE(joined.size() == 1);
  CHECK(joined[0].members.size() == 2);
  CHECK(tp.extrema[joined[0].carrier].value == 1.0);
  CHECK(at(100.0).size() == 1);
}

TEST_CASE("global threshold components match flood fill on random fields") {
  std::mt19937 rng(11);
  const GridTopology g(8, 8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = oracle::random_field(rng, g.vertex_count());
    const auto s = single(g, f);
    const auto tp = topo_of(s);
    const double level = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    DescriptorSpec spec;
    spec.kind = DescriptorKind::global_threshold;
    spec.level = level;
    std::set<std::set<VertexId>> got;
    for (const auto& feat : features_global_threshold(tp.tree, tp.bd, tp.extrema, spec))
      got.insert(vertices_of(feat, tp));

    std::vector<char> mask(f.size());
    for (std::size_t v = 0; v < f.size(); ++v) mask[v] = f[v] <= level;
    const auto mins = oracle::minima(g, f);
    std::set<std::set<VertexId>> want;
    for (const auto& comp : oracle::components(g, mask)) {
      std::set<VertexId> in;
      for (const auto m : mins)
        if (std::binary_search(comp.begin(), comp.end(), m)) in.insert(m);
      if (!in.empty()) want.insert(in);
    }
    CHECK(got == want);
  }
}

TEST_CASE("local-offset features satisfy the criteria under an independent validator") {
  std::mt19937 rng(5);
  const GridTopology g(9, 8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = oracle::random_field(rng, g.vertex_count());
    const auto s = single(g, f);
    const auto tp = topo_of(s);
    const double delta = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    const auto feats = features_local_offset(tp.bd, tp.extrema, offset_spec(delta));
    const auto pairing = oracle::flood_pairing(g, f);
    auto pers = [&](VertexId m) { return pairing.at(m).death - f[m]; };
    auto ancestor = [&](VertexId c, VertexId m) {
      for (VertexId a = m; pairing.at(a).absorbed_by != a;) {
        a = pairing.at(a).absorbed_by;
        if (a == c) return true;
      }
      return false;
    };

    std::set<VertexId> carriers, seen;
    for (const auto& feat : feats) {
      const auto c = tp.extrema[feat.carrier].vertex;
      carriers.insert(c);
      CHECK(pers(c) > delta);
      CHECK(std::binary_search(feat.members.begin(), feat.members.end(), feat.carrier));
      for (const auto e : feat.members) {
        const auto m = tp.extrema[e].vertex;
        CHECK(seen.insert(m).second);
        if (m == c) continue;
        CHECK(f[m] <= f[c] + delta);
        CHECK(pers(m) < delta);
        CHECK(ancestor(c, m));
      }
    }
    // Completeness: every carrier-grade minimum is a carrier, and every
    // minimum with a qualifying carrier ancestor is attached somewhere.
    for (const auto m : oracle::minima(g, f)) {
      if (pers(m) > delta) {
        CHECK(carriers.count(m) == 1);
        continue;
      }
      bool qualifies = false;
      for (const auto c : carriers) qualifies |= ancestor(c, m) && f[m] <= f[c] + delta && pers(m) < delta;
      CHECK(seen.count(m) == (qualifies ? 1u : 0u));
    }
  }
}

TEST_CASE("carrier sets shrink as delta grows") {
  std::mt19937 rng(23);
  const GridTopology g(10, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = single(g, oracle::random_field(rng, g.vertex_count()));
    const auto tp = topo_of(s);
    std::set<ExtremumId> prev;
    bool first = true;
    for (double delta : {0.02, 0.1, 0.2, 0.35, 0.5, 0.8, 1.2}) {
      std::set<ExtremumId> cur;
      for (const auto& feat : features_local_offset(tp.bd, tp.extrema, offset_spec(delta)))
        cur.insert(feat.carrier);
      if (!first) CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
      first = false;
    }
  }
}

TEST_CASE("persistence threshold attaches everything to the nearest carrier") {
  const auto s = synthetic::three_well_fixture();
  const auto tp = topo_of(s);
  DescriptorSpec spec;
  spec.kind = DescriptorKind::persistence_threshold;
  spec.persistence.constant = 5.0;
  auto feats = features_persistence_threshold(tp.bd, tp.extrema, spec);
  REQUIRE(feats.size() == 2);
  std::size_t total = 0;
  for (const auto& f : feats) total += f.members.size();
  CHECK(total == 3);
  spec.persistence.constant = 10.0;
  feats = features_persistence_threshold(tp.bd, tp.extrema, spec);
  REQUIRE(feats.size() == 1);
  CHECK(feats[0].members.size() == 3);
  CHECK(feats[0].master_persistence == doctest::Approx(100.0));
}

TEST_CASE("representative follows the spec flag") {
  const auto s = synthetic::three_well_fixture();
  const auto tp = topo_of(s);
  auto spec = offset_spec(15.0);
  auto f = features_local_offset(tp.bd, tp.extrema, spec).at(0);
  CHECK(f.representative == f.carrier);
  CHECK(f.representative_value == doctest::Approx(0.0));
  spec.representative = Representative::lowest_extremum;
  f = features_local_offset(tp.bd, tp.extrema, spec).at(0);
  CHECK(f.representative_value == doctest::Approx(0.0));
}

TEST_CASE("regions of interest restrict carriers and members") {
  const auto s = synthetic::three_well_fixture();
  const auto tp = topo_of(s);
  const auto g = s.topology();

  const std::vector<SpatialBox> around_a{{10, 30, 20, 40}};
  auto mask = roi_mask(around_a, g, std::nullopt, tp.extrema);
  auto feats = features_local_offset(tp.bd, tp.extrema, offset_spec(2.0), mask);
  REQUIRE(feats.size() == 1);
  CHECK(tp.extrema[feats[0].carrier].vertex == g.id(20, 30));

  const std::vector<SpatialBox> right{{50, 70, 0, 47}};
  mask = roi_mask(right, g, std::nullopt, tp.extrema);
  feats = features_local_offset(tp.bd, tp.extrema, offset_spec(5.0), mask);
  REQUIRE(feats.size() == 1);
  CHECK(feats[0].members.size() == 2);
  CHECK(tp.extrema[feats[0].carrier].vertex == g.id(60, 30));

  CHECK(roi_mask({}, g, std::nullopt, tp.extrema) == std::vector<char>(3, 1));
}

TEST_CASE("descriptor json round trip and canonical form") {
  const auto spec = parse_descriptor(nlohmann::json::parse(
      R"({"kind":"local-offset","delta":{"constant":2,"unit":"percent"},"roi":[{"x0":0,"x1":1,"y0":2,"y1":3}]})"));
  CHECK(spec.kind == DescriptorKind::local_offset);
  CHECK(spec.delta.unit == ValueUnit::percent);
  CHECK(spec.roi.size() == 1);
  const auto canon = to_json(spec);
  CHECK(parse_descriptor(canon) == spec);
  CHECK(canon.contains("representative"));
  CHECK_FALSE(canon.contains("level"));

  const auto plain = parse_descriptor(nlohmann::json::parse(R"({"kind":"local-offset","delta":3.5})"));
  CHECK(plain.delta.constant == 3.5);
  CHECK(plain.delta.unit == ValueUnit::raw);

  const auto glob = parse_descriptor(
      nlohmann::json::parse(R"({"kind":"global-threshold","level":990,"polarity":"maximum"})"));
  CHECK(glob.polarity == Polarity::maximum);
  CHECK(to_json(glob).dump() == to_json(parse_descriptor(to_json(glob))).dump());
}

TEST_CASE("descriptor errors name the offending field") {
  auto msg = [](const char* text) {
    try {
      parse_descriptor(nlohmann::json::parse(text));
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(msg(R"({})").find("descriptor.kind") != std::string::npos);
  CHECK(msg(R"({"kind":"blob"})").find("descriptor.kind") != std::string::npos);
  CHECK(msg(R"({"kind":"local-offset"})").find("descriptor.delta") != std::string::npos);
  CHECK(msg(R"({"kind":"local-offset","delta":1,"colour":1})").find("descriptor.colour") != std::string::npos);
  CHECK(msg(R"({"kind":"local-offset","delta":{"unit":"raw"}})").find("descriptor.delta") != std::string::npos);
  CHECK(msg(R"({"kind":"global-threshold","level":"x"})").find("descriptor.level") != std::string::npos);
  CHECK(msg(R"({"kind":"local-offset","delta":1,"polarity":"up"})").find("descriptor.polarity") != std::string::npos);
  CHECK(msg(R"({"kind":"local-offset","delta":1,"roi":[{"x0":0}]})").find("descriptor.roi") != std::string::npos);
  CHECK(msg("[1]").find("descriptor") != std::string::npos);

  const GridTopology g(4, 3);
  const FieldRange range{0.0, 50.0};
  CHECK_THROWS_AS(resolve(offset_spec(0.0), range, g), std::invalid_argument);
  CHECK_THROWS_AS(resolve(offset_spec(-1.0), range, g), std::invalid_argument);
  auto grid = offset_spec(0.0);
  grid.delta.grid = std::vector<double>(5, 1.0);
  CHECK_THROWS_AS(resolve(grid, range, g), std::invalid_argument);
  grid.delta.grid = std::vector<double>(12, 1.0);
  grid.delta.grid[3] = 0.0;
  CHECK_THROWS_AS(resolve(grid, range, g), std::invalid_argument);
  CHECK(resolve(offset_spec(10.0, ValueUnit::percent), range, g).delta.constant == doctest::Approx(5.0));
}

TEST_CASE("per-vertex delta is sampled at the carrier") {
  const auto s = synthetic::three_well_fixture();
  const auto tp = topo_of(s);
  const auto g = s.topology();
  auto spec = offset_spec(0.0);
  spec.delta.grid.assign(g.vertex_count(), 2.0);
  // A large delta at A only: B keeps its own feature, C still joins B.
  spec.delta.grid[g.id(20, 30)] = 15.0;
  spec.delta.grid[g.id(60, 30)] = 5.0;
  spec.delta.grid[g.id(60, 14)] = 5.0;
  const auto feats = features_local_offset(tp.bd, tp.extrema, spec);
  REQUIRE(feats.size() == 2);
  for (const auto& f : feats) {
    if (tp.extrema[f.carrier].vertex == g.id(20, 30)) CHECK(f.members.size() == 1);
    else CHECK(f.members.size() == 2);
  }
}
