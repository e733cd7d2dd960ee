#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "toptrack/artifact.hpp"
#include "toptrack/evaluate.hpp"
#include "toptrack/synthetic.hpp"

using namespace toptrack;

namespace {

DescriptorSpec offset(double delta, ValueUnit unit = ValueUnit::raw) {
  DescriptorSpec spec;
  spec.kind = DescriptorKind::local_offset;
  spec.delta.constant = delta;
  spec.delta.unit = unit;
  return spec;
}

Artifact make(ScalarTimeSeries s) { return precompute(std::move(s), {}); }

ScalarTimeSeries reversed(const ScalarTimeSeries& s) {
  std::vector<double> v;
  for (Timestep t = s.num_timesteps(); t-- > 0;) v.insert(v.end(), s.step(t).begin(), s.step(t).end());
  return ScalarTimeSeries(s.topology(), s.num_timesteps(), s.dt_hours(), std::move(v));
}

std::size_t count(const TrackingResult& r, EventKind k) {
  return std::count_if(r.events.begin(), r.events.end(), [&](const TrackingEvent& e) { return e.kind == k; });
}

Feature hand_feature(Timestep t, FeatureId id, std::vector<ExtremumId> members) {
  Feature f;
  f.id = id;
  f.timestep = t;
  f.carrier = members.front();
  f.members = std::move(members);
  return f;
}

ScalarTimeSeries random_series(std::mt19937& rng, const GridTopology& g, std::uint32_t steps) {
  // Smooth-ish fields so features persist across steps.
  std::vector<double> v;
  auto base = oracle::random_field(rng, g.vertex_count());
  for (std::uint32_t t = 0; t < steps; ++t) {
    const auto noise = oracle::random_field(rng, g.vertex_count());
    for (std::size_t i = 0; i < base.size(); ++i) base[i] = 0.7 * base[i] + 0.3 * noise[i];
    v.insert(v.end(), base.begin(), base.end());
  }
  return ScalarTimeSeries(g, steps, 1.0, std::move(v));
}

}  // namespace

TEST_CASE("static series: identity matching and full-length tracks") {
  const auto a = make(synthetic::repeat(synthetic::three_well_fixture(), 5));
  const auto r = track_descriptor(a, offset(5.0));
  REQUIRE(r.frames.size() == 5);
  for (const auto& fr : r.frames) CHECK(fr.features.size() == 2);
  for (const auto& m : r.forward) {
    CHECK(m.target == std::vector<std::optional<FeatureId>>{0u, 1u});
    CHECK(m.unmatched == std::vector<double>{0.0, 0.0});
  }
  CHECK(r.events.size() == 2);
  CHECK(count(r, EventKind::birth) == 2);
  REQUIRE(r.tracks.size() == 2);
  for (const auto& t : r.tracks) {
    CHECK(t.nodes.size() == 5);
    CHECK(t.end == TrackEnd::open);
    CHECK(t.start == TrackStart::birth);
  }
}

TEST_CASE("persistence score of a single self-mapping member is its persistence") {
  const auto a = make(synthetic::repeat(synthetic::three_well_fixture(), 2));
  const auto& pt = a.at(Polarity::minimum);
  const MatchingWeights w(pt.graph, WeightKind::persistence);
  for (ExtremumId e = 0; e < 3; ++e) {
    const auto fa = hand_feature(0, 0, {e});
    const auto fb = hand_feature(1, 0, {e});
    CHECK(match_score(fa, fb, w) == doctest::Approx(*pt.extrema[0][e].persistence));
    CHECK(match_score(fb, fa, w, EdgeDirection::backward) == doctest::Approx(*pt.extrema[1][e].persistence));
  }
  CHECK(match_score(hand_feature(0, 0, {0}), hand_feature(1, 0, {1}), w) == 0.0);
  CHECK_THROWS_AS(match_score(hand_feature(0, 0, {0}), hand_feature(0, 0, {0}), w), std::invalid_argument);
  CHECK_THROWS_AS(match_score(hand_feature(1, 0, {0}), hand_feature(0, 0, {0}), w), std::invalid_argument);
}

TEST_CASE("uniform score counts member pairs joined by forward edges") {
  const auto a = make(synthetic::repeat(synthetic::three_well_fixture(), 2));
  const MatchingWeights w(a.at(Polarity::minimum).graph, WeightKind::uniform);
  const FeatureFrame from{0, {hand_feature(0, 0, {0, 1, 2})}};
  const FeatureFrame to{1, {hand_feature(1, 0, {0, 1})}};
  CHECK(match_score(from.features[0], to.features[0], w) == 2.0);
  const auto m = match_forward(from, to, w);
  CHECK(m.target[0] == 0u);
  CHECK(m.score[0] == 2.0);
  CHECK(m.unmatched[0] == 1.0);

  // Two of three members land outside every feature: the feature dies.
  const FeatureFrame sparse{1, {hand_feature(1, 0, {0})}};
  CHECK_FALSE(match_forward(from, sparse, w).target[0].has_value());
}

TEST_CASE("uniform score equals brute-force enumeration of forward pairs") {
  std::mt19937 rng(3);
  const GridTopology g(10, 9);
  const auto a = make(random_series(rng, g, 4));
  const auto& pt = a.at(Polarity::minimum);
  const MatchingWeights w(pt.graph, WeightKind::uniform);
  const auto frames = evaluate_descriptor(a, offset(0.15));
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    for (const auto& fa : frames[k].features)
      for (const auto& fb : frames[k + 1].features) {
        const auto fm = forward_map(pt.labelings, pt.extrema, frames[k].timestep);
        double pairs = 0;
        for (const auto& [i, j] : fm)
          pairs += std::binary_search(fa.members.begin(), fa.members.end(), i) &&
                   std::binary_search(fb.members.begin(), fb.members.end(), j);
        CHECK(match_score(fa, fb, w) == pairs);
      }
  }
}

TEST_CASE("merging wells give one merge; the reversal gives one split") {
  const auto fx = synthetic::merging_wells();
  const auto r = track_descriptor(make(fx.series), offset(fx.delta));
  REQUIRE(r.frames.size() == fx.series.num_timesteps());
  CHECK(r.frames[fx.merge_step - 1].features.size() == 2);
  CHECK(r.frames[fx.merge_step].features.size() == 1);
  CHECK(count(r, EventKind::merge) == 1);
  CHECK(count(r, EventKind::split) == 0);
  CHECK(count(r, EventKind::death) == 0);
  for (const auto& e : r.events)
    if (e.kind == EventKind::merge) {
      CHECK(e.timestep == fx.merge_step);
      CHECK(e.before.size() == 2);
    }
  REQUIRE(r.tracks.size() == 2);
  CHECK(std::count_if(r.tracks.begin(), r.tracks.end(),
                      [](const FeatureTrack& t) { return t.end == TrackEnd::merge; }) == 1);
  const auto& longest = *std::max_element(r.tracks.begin(), r.tracks.end(),
                                          [](const auto& x, const auto& y) { return x.nodes.size() < y.nodes.size(); });
  CHECK(longest.nodes.size() == fx.series.num_timesteps());
  CHECK(longest.end == TrackEnd::open);

  const auto back = track_descriptor(make(reversed(fx.series)), offset(fx.delta));
  CHECK(count(back, EventKind::split) == 1);
  CHECK(count(back, EventKind::merge) == 0);
  for (const auto& e : back.events)
    if (e.kind == EventKind::split) {
      CHECK(e.timestep == fx.series.num_timesteps() - fx.merge_step);
      CHECK(e.after.size() == 2);
    }
  CHECK(std::count_if(back.tracks.begin(), back.tracks.end(),
                      [](const FeatureTrack& t) { return t.start == TrackStart::split; }) == 1);
}

TEST_CASE("dominant minimum jump keeps the feature stable") {
  const auto fx = synthetic::dominant_jump();
  const auto a = make(fx.series);
  const auto r = track_descriptor(a, offset(fx.delta), WeightKind::persistence, {}, true);
  const auto& ex = a.at(Polarity::minimum).extrema;
  std::set<VertexId> carriers;
  std::vector<std::set<VertexId>> members;
  for (const auto& fr : r.frames) {
    REQUIRE(fr.features.size() == 1);
    const auto& f = fr.features[0];
    carriers.insert(ex[fr.timestep][f.carrier].vertex);
    std::set<VertexId> m;
    for (const auto e : f.members) m.insert(ex[fr.timestep][e].vertex);
    members.push_back(m);
  }
  CHECK(carriers == std::set<VertexId>{fx.left, fx.right});
  for (const auto& m : members) CHECK(m == std::set<VertexId>{fx.left, fx.right});
  for (const auto& m : r.forward) {
    CHECK(m.target[0] == 0u);
    CHECK(m.score[0] > 0.0);
  }
  CHECK(r.events.size() == 1);
  CHECK(r.tracks.size() == 1);
  CHECK(r.frames[0].features[0].geometry == r.frames[2].features[0].geometry);
}

TEST_CASE("event bookkeeping balances on random series") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const GridTopology g(9, 8);
    const auto a = make(random_series(rng, g, 5));
    for (const auto kind : {WeightKind::persistence, WeightKind::uniform, WeightKind::manifold_overlap}) {
      const auto r = track_descriptor(a, offset(0.1), kind);
      for (std::size_t k = 0; k + 1 < r.frames.size(); ++k) {
        const auto t1 = r.frames[k + 1].timestep;
        long deaths = 0, absorbed = 0, births = 0;
        for (const auto& e : r.events) {
          if (e.kind == EventKind::death && e.timestep == r.frames[k].timestep) ++deaths;
          if (e.kind == EventKind::merge && e.timestep == t1) absorbed += long(e.before.size()) - 1;
          if (e.kind == EventKind::birth && e.timestep == t1) ++births;
        }
        std::vector<char> targeted(r.frames[k + 1].features.size(), 0);
        for (const auto& tgt : r.forward[k].target)
          if (tgt) targeted[*tgt] = 1;
        long untargeted_parts = 0;
        for (const auto& e : r.events)
          if (e.kind == EventKind::split && e.timestep == t1)
            for (const auto& p : e.after) untargeted_parts += !targeted[p.id];
        CHECK(long(r.frames[k + 1].features.size()) ==
              long(r.frames[k].features.size()) - deaths - absorbed + births + untargeted_parts);
      }
      // Every feature sits on exactly one track, with strictly increasing timesteps.
      std::set<FeatureRef> onto;
      std::size_t total = 0;
      for (const auto& tr : r.tracks) {
        for (std::size_t i = 0; i < tr.nodes.size(); ++i) {
          CHECK(onto.insert(tr.nodes[i]).second);
          if (i) CHECK(tr.nodes[i].timestep == tr.nodes[i - 1].timestep + 1);
        }
      }
      for (const auto& fr : r.frames) total += fr.features.size();
      CHECK(onto.size() == total);
    }
  }
}

TEST_CASE("matching is a function and respects the death rule") {
  std::mt19937 rng(29);
  const GridTopology g(10, 10);
  const auto a = make(random_series(rng, g, 4));
  const MatchingWeights w(a.at(Polarity::minimum).graph, WeightKind::persistence);
  const auto frames = evaluate_descriptor(a, offset(0.12));
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const auto m = match_forward(frames[k], frames[k + 1], w);
    REQUIRE(m.target.size() == frames[k].features.size());
    for (const auto& f : frames[k].features) {
      double best = 0;
      for (const auto& h : frames[k + 1].features) best = std::max(best, match_score(f, h, w));
      CHECK(m.score[f.id] == doctest::Approx(best));
      const bool dies = best <= 0.0 || m.unmatched[f.id] > best;
      CHECK(m.target[f.id].has_value() == !dies);
      if (m.target[f.id]) CHECK(match_score(f, frames[k + 1].features[*m.target[f.id]], w) == best);
    }
  }
}

TEST_CASE("tracking is deterministic") {
  std::mt19937 rng(41);
  const auto s = random_series(rng, GridTopology(12, 10), 6);
  const auto a = make(s);
  const auto spec = offset(0.1);
  const auto r1 = track_descriptor(a, spec, WeightKind::manifold_overlap);
  const auto r2 = track_descriptor(make(s), spec, WeightKind::manifold_overlap);
  CHECK(r1.frames == r2.frames);
  CHECK(r1.forward == r2.forward);
  CHECK(r1.events == r2.events);
  CHECK(r1.tracks == r2.tracks);
  CHECK(tracks_csv(r1) == tracks_csv(r2));
  CHECK(export_json(a, spec, WeightKind::manifold_overlap, r1).dump() ==
        export_json(a, spec, WeightKind::manifold_overlap, r2).dump());
}

TEST_CASE("sublevel overlap weights on the translating well") {
  const auto a = make(synthetic::translating_well(48, 32, 4, 1.0));
  const auto spec = offset(10.0, ValueUnit::percent);
  const auto r = track_descriptor(a, spec, WeightKind::sublevel_overlap);
  REQUIRE(r.tracks.size() == 1);
  CHECK(r.tracks[0].nodes.size() == 4);
  for (const auto& m : r.forward) CHECK(m.score[0] > 0.0);

  auto global = DescriptorSpec{};
  global.kind = DescriptorKind::global_threshold;
  global.level = 0.0;
  CHECK_THROWS_AS(track_descriptor(a, global, WeightKind::sublevel_overlap), std::invalid_argument);
}

TEST_CASE("no features gives no tracks; empty windows give nothing") {
  const auto a = make(synthetic::repeat(synthetic::three_well_fixture(), 3));
  const auto r = track_descriptor(a, offset(500.0));
  CHECK(r.tracks.empty());
  CHECK(r.events.empty());
  CHECK(evaluate_descriptor(a, offset(5.0), {2, 1}).empty());
  CHECK(evaluate_descriptor(a, offset(5.0), {7, std::nullopt}).empty());
  const auto w = evaluate_descriptor(a, offset(5.0), {1, 9});
  REQUIRE(w.size() == 2);
  CHECK(w[0].timestep == 1);
  CHECK(track_descriptor(a, offset(5.0), WeightKind::persistence, {2, 1}).tracks.empty());
}

TEST_CASE("csv export lists one row per track") {
  const auto fx = synthetic::merging_wells();
  const auto r = track_descriptor(make(fx.series), offset(fx.delta));
  const auto csv = tracks_csv(r);
  CHECK(csv.rfind("track,start,end,length,max_persistence,events\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == long(r.tracks.size()) + 1);
  CHECK(csv.find("merge") != std::string::npos);
}

TEST_CASE("weight kinds parse and print") {
  for (const auto k : {WeightKind::persistence, WeightKind::manifold_overlap, WeightKind::sublevel_overlap,
                       WeightKind::uniform})
    CHECK(parse_weight_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_weight_kind("heaviest"), std::invalid_argument);
}
