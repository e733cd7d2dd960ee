#pragma once

// Precompute stage and its on-disk artifact.
//
// Layout of an artifact directory:
//   manifest.json            grid, timesteps, field range, options, checksums
//   field.ttsf               the input series in raw-f64 form
//   <polarity>/extrema.bin   TTEX  per timestep: u32 n, n x (u32 vertex, f64 value, f64 persistence)
//   <polarity>/labels.bin    TTLB  per timestep: vertex_count x u32
//   <polarity>/trees.bin     TTMT  per timestep: u32 n, n x (u32 vertex, f64 value, u8 kind, i32 parent)
//   <polarity>/branches.bin  TTBD  per timestep: u32 n, u32 root, n x (u32 extremum, u32 leaf,
//                                  f64 birth, f64 death, u32 parent, u32 saddle); ~0 = none
//   <polarity>/graph.bin     TTGR  offsets, nodes, forward, backward, property tables
// Every binary file starts with its magic, u32 format version, u8 polarity
// and u32 timestep count. All integers and floats are little-endian.
// manifest.json is rewritten last with "valid": true; a directory whose
// manifest says false is an interrupted precompute and will not load.

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "toptrack/merge_tree.hpp"
#include "toptrack/tracking_graph.hpp"

namespace toptrack {

inline constexpr std::uint32_t kArtifactVersion = 1;

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-timestep topology of one polarity plus its tracking graph.
struct PolarityTopology {
  Polarity polarity = Polarity::minimum;
  std::vector<std::vector<CriticalPoint>> extrema;
  std::vector<ManifoldLabeling> labelings;
  std::vector<MergeTree> trees;
  std::vector<BranchDecomposition> branches;
  TrackingGraph graph;
};

struct PrecomputeOptions {
  std::vector<Polarity> polarities{Polarity::minimum};
  /// OpenMP worker count across timesteps; 0 keeps the runtime default.
  int threads = 0;
  /// Extrema whose branch persistence is below this are dropped (root excepted).
  double min_persistence = 0.0;
};

/// Mean wall-clock milliseconds per timestep for each stage.
struct StageTimings {
  Polarity polarity = Polarity::minimum;
  double segmentation_ms = 0.0;
  double merge_tree_ms = 0.0;
  double graph_ms = 0.0;  ///< whole graph, not per timestep
  std::size_t pruned = 0;
};

struct Artifact {
  ScalarTimeSeries series;
  double min_persistence = 0.0;
  std::vector<PolarityTopology> polarities;

  /// Throws std::out_of_range when the polarity was not precomputed.
  const PolarityTopology& at(Polarity p) const;
  bool has(Polarity p) const noexcept;
};

/// Segments, builds merge trees and branch decompositions for every
/// timestep in parallel, then assembles the tracking graph.
Artifact precompute(ScalarTimeSeries series, const PrecomputeOptions& options,
                    std::vector<StageTimings>* timings = nullptr);

/// Writes the artifact. Refuses a non-empty directory unless force is set,
/// in which case its previous contents are removed. Throws ArtifactError.
void save_artifact(const Artifact& artifact, const std::filesystem::path& dir, bool force = false);

/// Loads and validates checksums and versions. Throws ArtifactError.
Artifact load_artifact(const std::filesystem::path& dir);

}  // namespace toptrack
