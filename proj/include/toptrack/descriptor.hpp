#pragma once

// Feature descriptors: rules grouping the extrema of one timestep into
// features, evaluated against precomputed branch decompositions.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "toptrack/graph_filter.hpp"
#include "toptrack/merge_tree.hpp"

namespace toptrack {

enum class DescriptorKind { global_threshold, persistence_threshold, local_offset };
enum class ValueUnit { raw, percent };
enum class Representative { master_branch, lowest_extremum };

std::string_view to_string(DescriptorKind k) noexcept;

/// A positive threshold that is either constant or given per vertex.
/// Percent values are relative to the series field range.
struct Threshold {
  double constant = 0.0;
  std::vector<double> grid;
  ValueUnit unit = ValueUnit::raw;

  bool is_grid() const noexcept { return !grid.empty(); }
  double at(VertexId v) const { return grid.empty() ? constant : grid.at(v); }
  bool operator==(const Threshold&) const = default;
};

struct DescriptorSpec {
  DescriptorKind kind = DescriptorKind::local_offset;
  Polarity polarity = Polarity::minimum;
  Threshold delta;        ///< local-offset
  Threshold persistence;  ///< persistence-threshold
  double level = 0.0;     ///< global-threshold, raw units
  Representative representative = Representative::master_branch;
  std::vector<SpatialBox> roi;

  bool operator==(const DescriptorSpec&) const = default;
};

/// JSON form:
///   {"kind": "local-offset", "polarity": "minimum",
///    "delta": {"constant": 2, "unit": "percent"} | {"grid": [...], "unit": "raw"},
///    "persistence": {...}, "level": 1000.0,
///    "representative": "master-branch" | "lowest-extremum",
///    "roi": [{"x0": .., "x1": .., "y0": .., "y1": ..}]}
/// Only the parameter of the chosen kind is required. Throws
/// std::invalid_argument naming the offending field path.
DescriptorSpec parse_descriptor(const nlohmann::json& j);

/// Canonical form: only the fields relevant to the kind, keys sorted.
nlohmann::json to_json(const DescriptorSpec& spec);

/// Converts percent thresholds to raw units and checks them against the
/// grid. Throws std::invalid_argument.
DescriptorSpec resolve(const DescriptorSpec& spec, FieldRange range, const GridTopology& topo);

using FeatureId = std::uint32_t;
using Point2 = std::array<double, 2>;
/// Closed polyline in grid coordinates; the first point is repeated at the end.
using Polyline = std::vector<Point2>;

struct Feature {
  FeatureId id = 0;
  Timestep timestep = 0;
  ExtremumId carrier = 0;
  std::vector<ExtremumId> members;  ///< ascending, contains the carrier
  BranchId master_branch = 0;       ///< highest-persistence member branch
  double master_persistence = 0.0;
  ExtremumId representative = 0;
  double representative_value = 0.0;
  /// Iso-value bounding the feature region: f(carrier) + delta for minima
  /// (minus for maxima), or the global level.
  double level = 0.0;
  /// Members whose branch joins the carrier only above `level`, so they
  /// lie outside the carrier's contour component.
  std::uint32_t detached_members = 0;
  std::vector<Polyline> geometry;

  bool operator==(const Feature&) const = default;
};

/// Extrema admitted by the spec's regions of interest (all when empty).
/// Boxes are in lon/lat with geo axes, grid coordinates otherwise.
std::vector<char> roi_mask(std::span<const SpatialBox> roi, const GridTopology& topo,
                           const std::optional<GeoAxes>& geo,
                           std::span<const CriticalPoint> extrema);

/// Carriers are extrema whose branch persistence exceeds delta at their
/// vertex. A non-carrier m_j joins the nearest carrier ancestor m_i with
/// (i) f(m_j) <= f(m_i) + delta, (ii) persistence(m_j) < delta, both with
/// delta taken at m_i. Spec must be resolved. Features are ordered by carrier.
std::vector<Feature> features_local_offset(const BranchDecomposition& bd,
                                           std::span<const CriticalPoint> extrema,
                                           const DescriptorSpec& spec,
                                           std::span<const char> eligible = {});

/// Carriers are extrema with persistence above p; every other extremum
/// joins its nearest carrier ancestor, as in persistence simplification.
std::vector<Feature> features_persistence_threshold(const BranchDecomposition& bd,
                                                    std::span<const CriticalPoint> extrema,
                                                    const DescriptorSpec& spec,
                                                    std::span<const char> eligible = {});

/// One feature per component of {f <= level} ({f >= level} for maxima)
/// holding at least one eligible extremum; the deepest member carries it.
std::vector<Feature> features_global_threshold(const MergeTree& tree,
                                               const BranchDecomposition& bd,
                                               std::span<const CriticalPoint> extrema,
                                               const DescriptorSpec& spec,
                                               std::span<const char> eligible = {});

/// Closed iso-contour components at feature.level that enclose at least
/// one member, traced on the triangulated grid. Regions touching the
/// domain boundary are closed along it.
std::vector<Polyline> feature_contour(const GridTopology& topo, std::span<const double> values,
                                      Polarity polarity, const Feature& feature,
                                      std::span<const CriticalPoint> extrema);

/// Even-odd point in polygon test.
bool polygon_contains(const Polyline& poly, Point2 p);

}  // namespace toptrack
