#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "toptrack/morse.hpp"
#include "toptrack/series.hpp"

namespace toptrack {

enum class NodeKind : std::uint8_t { leaf = 0, saddle = 1, root = 2 };

struct MergeTreeNode {
  VertexId vertex = 0;
  double value = 0.0;
  NodeKind kind = NodeKind::leaf;
  /// Index of the parent node, -1 for the root.
  std::int32_t parent = -1;

  bool operator==(const MergeTreeNode&) const = default;
};

/// Join tree of the sublevel sets (split tree of the superlevel sets for
/// Polarity::maximum), unaugmented: only leaves, merge saddles and the root.
/// Nodes are stored in sweep order, so every parent index is larger than
/// the indices of its children and the root is the last node.
struct MergeTree {
  Timestep timestep = 0;
  Polarity polarity = Polarity::minimum;
  std::vector<MergeTreeNode> nodes;

  std::size_t root() const noexcept { return nodes.size() - 1; }
  std::vector<std::vector<std::uint32_t>> children() const;

  bool operator==(const MergeTree&) const = default;
};

/// Sweeps the vertices in order with a union-find over already swept
/// neighbours. A vertex that joins k >= 2 components is a single k-way
/// saddle; the last vertex is the root.
MergeTree compute_merge_tree(const ScalarTimeSeries& series, Timestep t, Polarity polarity);
MergeTree compute_merge_tree(const GridTopology& topo, std::span<const double> values, Timestep t,
                             Polarity polarity);

using BranchId = std::uint32_t;

struct Branch {
  BranchId id = 0;
  ExtremumId extremum = 0;
  VertexId leaf_vertex = 0;
  double birth = 0.0;
  double death = 0.0;
  std::optional<BranchId> parent;
  std::optional<VertexId> merge_saddle;

  /// |death - birth|; birth lies below death for minima and above it for maxima.
  double persistence() const noexcept { return death >= birth ? death - birth : birth - death; }

  bool operator==(const Branch&) const = default;
};

/// Persistence pairing of a merge tree under the elder rule. There is one
/// branch per extremum and branch ids equal extremum ids.
struct BranchDecomposition {
  Timestep timestep = 0;
  Polarity polarity = Polarity::minimum;
  std::vector<Branch> branches;
  std::vector<BranchId> branch_of_extremum;
  BranchId root_branch = 0;
  /// Direct child branches, ascending.
  std::vector<std::vector<BranchId>> children;

  bool operator==(const BranchDecomposition&) const = default;
};

/// At each saddle the child holding the deepest leaf continues; every other
/// child ends there. Writes each branch's persistence into extrema, which
/// must be the vertex-sorted extremum list of the tree's timestep.
BranchDecomposition branch_decomposition(const MergeTree& tree,
                                         std::span<CriticalPoint> extrema);

/// Rebuilds the children lists from the parent links.
void link_children(BranchDecomposition& bd);

/// All transitive descendants of a branch, ascending. Throws
/// std::out_of_range for an unknown id.
std::vector<BranchId> subtree_query(const BranchDecomposition& bd, BranchId id);

/// Connected components of {f <= level} ({f >= level} for maxima), each
/// given by the ids of the extrema it contains, ascending. Components are
/// listed in order of their deepest extremum.
std::vector<std::vector<ExtremumId>> level_components(const MergeTree& tree,
                                                      std::span<const CriticalPoint> extrema,
                                                      double level);

/// Removes every non-root branch with persistence below epsilon together
/// with its extremum. Its manifold is folded into the nearest surviving
/// ancestor, its leaf and any saddle left with one child are spliced out of
/// the tree, and extremum and branch ids are renumbered densely. Returns
/// the number of extrema removed.
std::size_t prune_low_persistence(std::vector<CriticalPoint>& extrema, ManifoldLabeling& labeling,
                                  MergeTree& tree, BranchDecomposition& bd, double epsilon);

}  // namespace toptrack
