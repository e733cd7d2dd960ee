#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "toptrack/artifact.hpp"
#include "toptrack/descriptor.hpp"
#include "toptrack/feature_track.hpp"

namespace toptrack {

/// Inclusive timestep window; open ends default to the series bounds.
struct TimeWindow {
  std::optional<Timestep> t0;
  std::optional<Timestep> t1;
};

/// Features of every timestep in the window. Pure in (artifact, spec,
/// window); an empty or out-of-range window yields no frames. Throws
/// std::invalid_argument for a spec that does not fit the artifact.
std::vector<FeatureFrame> evaluate_descriptor(const Artifact& artifact, const DescriptorSpec& spec,
                                              TimeWindow window = {}, bool with_geometry = false);

/// Weights for matching features of `spec` over the artifact. The spec
/// must be resolved.
MatchingWeights make_weights(const Artifact& artifact, const DescriptorSpec& resolved, WeightKind kind);

TrackingResult track_descriptor(const Artifact& artifact, const DescriptorSpec& spec,
                                WeightKind weights = WeightKind::persistence, TimeWindow window = {},
                                bool with_geometry = false);

/// The export written by the features command: canonical descriptor,
/// window, features, tracks and events.
nlohmann::json export_json(const Artifact& artifact, const DescriptorSpec& spec, WeightKind weights,
                           const TrackingResult& result);

}  // namespace toptrack
