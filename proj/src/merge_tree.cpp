#include "toptrack/merge_tree.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "toptrack/union_find.hpp"

namespace toptrack {

std::vector<std::vector<std::uint32_t>> MergeTree::children() const {
  std::vector<std::vector<std::uint32_t>> out(nodes.size());
  for (std::uint32_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].parent >= 0) out[static_cast<std::size_t>(nodes[i].parent)].push_back(i);
  return out;
}

MergeTree compute_merge_tree(const ScalarTimeSeries& series, Timestep t, Polarity polarity) {
  return compute_merge_tree(series.topology(), series.step(t), t, polarity);
}

MergeTree compute_merge_tree(const GridTopology& topo, std::span<const double> values, Timestep t,
                             Polarity polarity) {
  const VertexOrder order(values, polarity);
  const std::size_t n = topo.vertex_count();
  constexpr std::uint32_t kNone = ~std::uint32_t{0};

  MergeTree tree;
  tree.timestep = t;
  tree.polarity = polarity;

  UnionFind uf(n);
  // Topmost tree node of each component, indexed by union-find root.
  std::vector<std::uint32_t> top(n, kNone);
  std::vector<std::uint8_t> swept(n, 0);
  std::vector<std::uint32_t> comps;
  comps.reserve(6);

  const auto sweep = order.sweep();
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const VertexId v = sweep[i];
    const bool last = i + 1 == sweep.size();
    comps.clear();
    for (const VertexId u : neighborhood(topo, v)) {
      if (!swept[u]) continue;
      const auto r = uf.find(u);
      if (std::find(comps.begin(), comps.end(), r) == comps.end()) comps.push_back(r);
    }
    swept[v] = 1;

    if (comps.empty()) {
      top[v] = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.push_back({v, values[v], last ? NodeKind::root : NodeKind::leaf, -1});
      continue;
    }
    if (comps.size() == 1 && !last) {
      const auto node = top[comps.front()];
      top[uf.unite(comps.front(), v)] = node;
      continue;
    }
    const auto node = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.push_back({v, values[v], last ? NodeKind::root : NodeKind::saddle, -1});
    std::uint32_t r = v;
    for (const auto c : comps) {
      tree.nodes[top[c]].parent = static_cast<std::int32_t>(node);
      r = uf.unite(r, c);
    }
    top[r] = node;
  }
  return tree;
}

BranchDecomposition branch_decomposition(const MergeTree& tree,
                                         std::span<CriticalPoint> extrema) {
  BranchDecomposition bd;
  bd.timestep = tree.timestep;
  bd.polarity = tree.polarity;
  bd.branches.resize(extrema.size());
  bd.branch_of_extremum.resize(extrema.size());
  for (ExtremumId e = 0; e < extrema.size(); ++e) {
    bd.branch_of_extremum[e] = e;
    bd.branches[e].id = e;
    bd.branches[e].extremum = e;
    bd.branches[e].leaf_vertex = extrema[e].vertex;
    bd.branches[e].birth = extrema[e].value;
  }

  const auto kids = tree.children();
  // Deepest leaf below each node, as a node index. Leaves come earlier in
  // the sweep the deeper they are, so the smallest index wins.
  std::vector<std::uint32_t> deepest(tree.nodes.size());
  auto extremum_of = [&](std::uint32_t leaf_node) {
    const auto e = find_extremum(extrema, tree.nodes[leaf_node].vertex);
    if (!e) throw std::logic_error("merge tree leaf is not an extremum");
    return *e;
  };

  for (std::uint32_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& node = tree.nodes[i];
    if (kids[i].empty()) {
      deepest[i] = i;
      continue;
    }
    std::uint32_t winner = deepest[kids[i].front()];
    for (const auto c : kids[i]) winner = std::min(winner, deepest[c]);
    deepest[i] = winner;
    const ExtremumId parent = extremum_of(winner);
    for (const auto c : kids[i]) {
      if (deepest[c] == winner) continue;
      Branch& b = bd.branches[extremum_of(deepest[c])];
      b.death = node.value;
      b.parent = parent;
      b.merge_saddle = node.vertex;
    }
  }

  const auto root = static_cast<std::uint32_t>(tree.root());
  bd.root_branch = extremum_of(deepest[root]);
  bd.branches[bd.root_branch].death = tree.nodes[root].value;

  for (ExtremumId e = 0; e < extrema.size(); ++e)
    extrema[e].persistence = bd.branches[e].persistence();
  link_children(bd);
  return bd;
}

void link_children(BranchDecomposition& bd) {
  bd.children.assign(bd.branches.size(), {});
  for (const auto& b : bd.branches)
    if (b.parent) bd.children[*b.parent].push_back(b.id);
}

std::vector<BranchId> subtree_query(const BranchDecomposition& bd, BranchId id) {
  if (id >= bd.branches.size())
    throw std::out_of_range("unknown branch " + std::to_string(id));
  std::vector<BranchId> out;
  std::vector<BranchId> stack(bd.children[id].begin(), bd.children[id].end());
  while (!stack.empty()) {
    const auto b = stack.back();
    stack.pop_back();
    out.push_back(b);
    stack.insert(stack.end(), bd.children[b].begin(), bd.children[b].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<ExtremumId>> level_components(const MergeTree& tree,
                                                      std::span<const CriticalPoint> extrema,
                                                      double level) {
  const bool minima = tree.polarity == Polarity::minimum;
  auto inside = [&](double v) { return minima ? v <= level : v >= level; };
  const auto kids = tree.children();

  std::vector<std::pair<std::uint32_t, std::vector<ExtremumId>>> comps;
  for (std::uint32_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& node = tree.nodes[i];
    if (!inside(node.value)) continue;
    if (node.parent >= 0 && inside(tree.nodes[static_cast<std::size_t>(node.parent)].value))
      continue;
    // Node i tops a component: gather the leaves below it.
    std::vector<ExtremumId> members;
    std::uint32_t deepest = i;
    std::vector<std::uint32_t> stack{i};
    while (!stack.empty()) {
      const auto k = stack.back();
      stack.pop_back();
      if (kids[k].empty()) {
        if (const auto e = find_extremum(extrema, tree.nodes[k].vertex)) members.push_back(*e);
        deepest = std::min(deepest, k);
      }
      stack.insert(stack.end(), kids[k].begin(), kids[k].end());
    }
    std::sort(members.begin(), members.end());
    comps.emplace_back(deepest, std::move(members));
  }
  std::sort(comps.begin(), comps.end());
  std::vector<std::vector<ExtremumId>> out;
  out.reserve(comps.size());
  for (auto& c : comps) out.push_back(std::move(c.second));
  return out;
}

std::size_t prune_low_persistence(std::vector<CriticalPoint>& extrema, ManifoldLabeling& labeling,
                                  MergeTree& tree, BranchDecomposition& bd, double epsilon) {
  const auto n = static_cast<ExtremumId>(extrema.size());
  std::vector<char> keep(n, 1);
  std::size_t removed = 0;
  for (ExtremumId e = 0; e < n; ++e)
    if (e != bd.root_branch && bd.branches[e].persistence() < epsilon) {
      keep[e] = 0;
      ++removed;
    }
  if (removed == 0) return 0;

  // Elder rule: a child never outlives its parent, so kept branches have
  // kept parents and every pruned branch has a kept ancestor.
  std::vector<ExtremumId> new_id(n, 0), survivor(n);
  ExtremumId next = 0;
  for (ExtremumId e = 0; e < n; ++e)
    if (keep[e]) new_id[e] = next++;
  for (ExtremumId e = 0; e < n; ++e) {
    BranchId b = e;
    while (!keep[b]) b = *bd.branches[b].parent;
    survivor[e] = new_id[b];
  }

  for (auto& l : labeling.label) l = survivor[l];

  std::vector<CriticalPoint> kept_extrema;
  BranchDecomposition pruned;
  pruned.timestep = bd.timestep;
  pruned.polarity = bd.polarity;
  for (ExtremumId e = 0; e < n; ++e) {
    if (!keep[e]) continue;
    kept_extrema.push_back(extrema[e]);
    Branch b = bd.branches[e];
    b.id = b.extremum = new_id[e];
    if (b.parent) b.parent = new_id[*b.parent];
    pruned.branches.push_back(b);
    pruned.branch_of_extremum.push_back(new_id[e]);
  }
  pruned.root_branch = new_id[bd.root_branch];
  link_children(pruned);

  const auto kids = tree.children();
  std::vector<char> alive(tree.nodes.size(), 0);
  for (std::uint32_t i = 0; i < tree.nodes.size(); ++i) {
    if (i == tree.root()) {
      alive[i] = 1;
    } else if (kids[i].empty()) {
      alive[i] = keep[*find_extremum(extrema, tree.nodes[i].vertex)];
    } else {
      const auto live = std::count_if(kids[i].begin(), kids[i].end(), [&](auto c) { return alive[c]; });
      alive[i] = live >= 2;
      // A saddle left with one live child is spliced out; its child's
      // parent is resolved below by skipping dead ancestors.
      if (live == 1) alive[i] = 2;
    }
  }
  std::vector<std::int32_t> index(tree.nodes.size(), -1);
  MergeTree out;
  out.timestep = tree.timestep;
  out.polarity = tree.polarity;
  for (std::uint32_t i = 0; i < tree.nodes.size(); ++i)
    if (alive[i] == 1) {
      index[i] = static_cast<std::int32_t>(out.nodes.size());
      out.nodes.push_back(tree.nodes[i]);
    }
  for (std::uint32_t i = 0; i < tree.nodes.size(); ++i) {
    if (alive[i] != 1) continue;
    auto p = tree.nodes[i].parent;
    while (p >= 0 && alive[static_cast<std::size_t>(p)] != 1) p = tree.nodes[static_cast<std::size_t>(p)].parent;
    out.nodes[static_cast<std::size_t>(index[i])].parent = p >= 0 ? index[static_cast<std::size_t>(p)] : -1;
  }

  extrema = std::move(kept_extrema);
  bd = std::move(pruned);
  tree = std::move(out);
  return removed;
}

}  // namespace toptrack
