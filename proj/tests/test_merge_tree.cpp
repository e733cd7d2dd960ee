#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "toptrack/merge_tree.hpp"
#include "toptrack/synthetic.hpp"

using namespace toptrack;

namespace {

ScalarTimeSeries single(const GridTopology& g, std::vector<double> f) {
  return ScalarTimeSeries(g, 1, 1.0, std::move(f));
}

std::size_t count_kind(const MergeTree& t, NodeKind k) {
  return std::count_if(t.nodes.begin(), t.nodes.end(), [&](const auto& n) { return n.kind == k; });
}

/// Leaf-vertex sets of the tree components alive after sweeping order[0..k].
std::multiset<std::vector<VertexId>> tree_components(const MergeTree& tree,
                                                     const std::vector<std::size_t>& rank,
                                                     std::size_t k) {
  const auto kids = tree.children();
  std::multiset<std::vector<VertexId>> out;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (rank[n.vertex] > k) continue;
    if (n.parent >= 0 && rank[tree.nodes[static_cast<std::size_t>(n.parent)].vertex] <= k) continue;
    std::vector<VertexId> leaves;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const auto j = stack.back();
      stack.pop_back();
      if (tree.nodes[j].kind == NodeKind::leaf) leaves.push_back(tree.nodes[j].vertex);
      stack.insert(stack.end(), kids[j].begin(), kids[j].end());
    }
    std::sort(leaves.begin(), leaves.end());
    out.insert(leaves);
  }
  return out;
}

void check_against_flood_fill(const GridTopology& g, const std::vector<double>& f) {
  const auto tree = compute_merge_tree(single(g, f), 0, Polarity::minimum);
  const auto order = oracle::sorted_vertices(f);
  std::vector<std::size_t> rank(f.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto expected = oracle::sublevel_minima_sets(g, f, order, k);
    const auto got = tree_components(tree, rank, k);
    REQUIRE_MESSAGE(got == expected, "level index " << k);
  }
}

}  // namespace

TEST_CASE("monotone field gives a single path") {
  const GridTopology g(6, 4);
  const auto s = synthetic::from_function(g, 1, 1.0, [](Timestep, double x, double y) { return 2 * x + y; });
  const auto tree = compute_merge_tree(s, 0, Polarity::minimum);
  CHECK(count_kind(tree, NodeKind::leaf) == 1);
  CHECK(count_kind(tree, NodeKind::saddle) == 0);
  CHECK(count_kind(tree, NodeKind::root) == 1);
  CHECK(tree.nodes.size() == 2);
  CHECK(tree.nodes.back().vertex == 23);
}

TEST_CASE("alternating row: leaves at the dips, saddles at the peaks") {
  // Row 0 is [0,5,1,6,2,7,3]; row 1 sits far above and closes the tree.
  const std::vector<double> row{0, 5, 1, 6, 2, 7, 3};
  std::vector<double> f(row);
  for (double v : row) f.push_back(v + 100);
  const GridTopology g(7, 2);
  const auto tree = compute_merge_tree(single(g, f), 0, Polarity::minimum);

  std::vector<VertexId> leaves, saddles;
  for (const auto& n : tree.nodes) {
    if (n.kind == NodeKind::leaf) leaves.push_back(n.vertex);
    if (n.kind == NodeKind::saddle) saddles.push_back(n.vertex);
  }
  std::sort(leaves.begin(), leaves.end());
  std::sort(saddles.begin(), saddles.end());
  CHECK(leaves == std::vector<VertexId>{0, 2, 4, 6});
  CHECK(saddles == std::vector<VertexId>{1, 3, 5});
  CHECK(tree.nodes.back().kind == NodeKind::root);
  CHECK(tree.nodes.back().vertex == 12);
  check_against_flood_fill(g, f);
}

TEST_CASE("tree structure invariants on random fields") {
  std::mt19937 rng(8);
  const GridTopology g(9, 7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = single(g, oracle::random_field(rng, g.vertex_count(), trial % 2 == 1));
    for (const auto pol : {Polarity::minimum, Polarity::maximum}) {
      const auto tree = compute_merge_tree(s, 0, pol);
      const auto kids = tree.children();
      const VertexOrder order(s.step(0), pol);
      CHECK(count_kind(tree, NodeKind::root) == 1);
      CHECK(tree.nodes.back().kind == NodeKind::root);
      for (std::size_t i = 0; i + 1 < tree.nodes.size(); ++i) {
        const auto p = tree.nodes[i].parent;
        REQUIRE(p > static_cast<std::int32_t>(i));
        CHECK(order.lower(tree.nodes[i].vertex, tree.nodes[static_cast<std::size_t>(p)].vertex));
        if (tree.nodes[i].kind == NodeKind::saddle) CHECK(kids[i].size() >= 2);
        if (tree.nodes[i].kind == NodeKind::leaf) CHECK(kids[i].empty());
      }
      std::vector<VertexId> leaves;
      for (const auto& n : tree.nodes)
        if (n.kind == NodeKind::leaf) leaves.push_back(n.vertex);
      std::sort(leaves.begin(), leaves.end());
      std::vector<VertexId> ext;
      for (const auto& e : extract_extrema(s, 0, pol)) ext.push_back(e.vertex);
      CHECK(leaves == ext);
      CHECK(tree.nodes.size() <= g.vertex_count());
    }
  }
}

TEST_CASE("sublevel components match flood fill at every level (random 10x10)") {
  std::mt19937 rng(2024);
  const GridTopology g(10, 10);
  for (int trial = 0; trial < 25; ++trial)
    check_against_flood_fill(g, oracle::random_field(rng, g.vertex_count(), trial % 4 == 0));
}

TEST_CASE("hand-built two-well branch decomposition") {
  const auto s = synthetic::two_well_hand_field();
  auto ext = extract_extrema(s, 0, Polarity::minimum);
  REQUIRE(ext.size() == 2);
  const auto tree = compute_merge_tree(s, 0, Polarity::minimum);
  const auto bd = branch_decomposition(tree, ext);
  REQUIRE(bd.branches.size() == 2);
  const auto& root = bd.branches[bd.root_branch];
  const auto& child = bd.branches[1 - bd.root_branch];
  CHECK(root.birth == 1.0);
  CHECK(root.death == 10.0);
  CHECK_FALSE(root.parent.has_value());
  CHECK(child.birth == 3.0);
  CHECK(child.death == 8.0);
  CHECK(child.persistence() == 5.0);
  CHECK(child.parent == bd.root_branch);
  CHECK(child.merge_saddle == 7u);
  CHECK(ext[child.extremum].persistence == 5.0);

  // The flood-fill pairing agrees.
  const std::vector<double> f(s.step(0).begin(), s.step(0).end());
  const auto pairing = oracle::flood_pairing(s.topology(), f);
  CHECK(pairing.at(child.leaf_vertex).death == 8.0);
  CHECK(pairing.at(child.leaf_vertex).absorbed_by == root.leaf_vertex);
}

TEST_CASE("single minimum: one branch spanning the range") {
  const auto s = synthetic::from_function(GridTopology(5, 5), 1, 1.0,
                                          [](Timestep, double x, double y) { return x * x + y; });
  auto ext = extract_extrema(s, 0, Polarity::minimum);
  const auto bd = branch_decomposition(compute_merge_tree(s, 0, Polarity::minimum), ext);
  REQUIRE(bd.branches.size() == 1);
  CHECK(bd.branches[0].persistence() == s.field_range().span());
}

TEST_CASE("branch decomposition matches the flood-fill pairing on random 8x8 fields") {
  std::mt19937 rng(77);
  const GridTopology g(8, 8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = oracle::random_field(rng, g.vertex_count(), trial % 3 == 0);
    const auto s = single(g, f);
    auto ext = extract_extrema(s, 0, Polarity::minimum);
    const auto bd = branch_decomposition(compute_merge_tree(s, 0, Polarity::minimum), ext);
    const auto pairing = oracle::flood_pairing(g, f);
    REQUIRE(pairing.size() == bd.branches.size());
    std::size_t roots = 0;
    for (const auto& b : bd.branches) {
      const auto& p = pairing.at(b.leaf_vertex);
      CHECK(b.death == p.death);
      CHECK(b.persistence() >= 0.0);
      if (b.parent) {
        CHECK(bd.branches[*b.parent].leaf_vertex == p.absorbed_by);
        CHECK(b.persistence() <= bd.branches[*b.parent].persistence());
      } else {
        ++roots;
        CHECK(b.leaf_vertex == oracle::sorted_vertices(f).front());
        CHECK(b.death == s.field_range().max);
      }
    }
    CHECK(roots == 1);
  }
}

TEST_CASE("split tree pairs maxima") {
  const auto s = synthetic::two_well_hand_field().negated();
  auto ext = extract_extrema(s, 0, Polarity::maximum);
  const auto bd = branch_decomposition(compute_merge_tree(s, 0, Polarity::maximum), ext);
  REQUIRE(bd.branches.size() == 2);
  const auto& child = bd.branches[1 - bd.root_branch];
  CHECK(child.birth == -3.0);
  CHECK(child.death == -8.0);
  CHECK(child.persistence() == 5.0);
}

TEST_CASE("subtree queries on the three-level chain") {
  const auto s = synthetic::three_well_fixture();
  auto ext = extract_extrema(s, 0, Polarity::minimum);
  REQUIRE(ext.size() == 3);
  const auto bd = branch_decomposition(compute_merge_tree(s, 0, Polarity::minimum), ext);
  const auto& g = s.topology();
  const auto a = *find_extremum(ext, g.id(20, 30));
  const auto b = *find_extremum(ext, g.id(60, 30));
  const auto c = *find_extremum(ext, g.id(60, 14));
  CHECK(bd.root_branch == a);
  CHECK(bd.branches[b].parent == a);
  CHECK(bd.branches[c].parent == b);
  CHECK(bd.branches[b].persistence() == doctest::Approx(8.0));
  CHECK(bd.branches[c].persistence() == doctest::Approx(3.0));

  std::vector<BranchId> bc{b, c};
  std::sort(bc.begin(), bc.end());
  CHECK(subtree_query(bd, a) == bc);
  CHECK(subtree_query(bd, b) == std::vector<BranchId>{c});
  CHECK(subtree_query(bd, c).empty());
  CHECK_THROWS_AS(subtree_query(bd, 3), std::out_of_range);
}

TEST_CASE("level components against flood fill") {
  const auto s = synthetic::two_well_hand_field();
  const auto ext = extract_extrema(s, 0, Polarity::minimum);
  const auto tree = compute_merge_tree(s, 0, Polarity::minimum);
  CHECK(level_components(tree, ext, 0.5).empty());
  CHECK(level_components(tree, ext, 7.9).size() == 2);
  CHECK(level_components(tree, ext, 8.1).size() == 1);
  CHECK(level_components(tree, ext, 8.0).size() == 1);
  CHECK(level_components(tree, ext, 11.0) == std::vector<std::vector<ExtremumId>>{{0, 1}});

  std::mt19937 rng(4);
  const GridTopology g(10, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = oracle::random_field(rng, g.vertex_count(), true);
    const auto rs = single(g, f);
    const auto e = extract_extrema(rs, 0, Polarity::minimum);
    const auto t = compute_merge_tree(rs, 0, Polarity::minimum);
    for (double level : {0.0, 2.0, 4.5, 7.0, 9.0}) {
      std::vector<char> mask(f.size());
      for (std::size_t v = 0; v < f.size(); ++v) mask[v] = f[v] <= level;
      std::multiset<std::vector<VertexId>> expected;
      for (const auto& comp : oracle::components(g, mask)) {
        std::vector<VertexId> in;
        for (const auto& m : e)
          if (std::binary_search(comp.begin(), comp.end(), m.vertex)) in.push_back(m.vertex);
        expected.insert(in);
      }
      std::multiset<std::vector<VertexId>> got;
      for (const auto& comp : level_components(t, e, level)) {
        std::vector<VertexId> in;
        for (const auto id : comp) in.push_back(e[id].vertex);
        got.insert(in);
      }
      CHECK(got == expected);
    }
  }
}
