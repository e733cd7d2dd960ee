#include "toptrack/evaluate.hpp"

#include <stdexcept>

namespace toptrack {

namespace {

std::pair<Timestep, Timestep> bounds(const Artifact& a, TimeWindow w, bool& empty) {
  const auto steps = a.series.num_timesteps();
  const Timestep t0 = w.t0.value_or(0);
  const Timestep t1 = w.t1 ? std::min<Timestep>(*w.t1, steps - 1) : steps - 1;
  empty = steps == 0 || t0 >= steps || t0 > t1;
  return {t0, t1};
}

}  // namespace

std::vector<FeatureFrame> evaluate_descriptor(const Artifact& artifact, const DescriptorSpec& spec,
                                              TimeWindow window, bool with_geometry) {
  bool empty = false;
  const auto [t0, t1] = bounds(artifact, window, empty);
  if (empty) return {};
  const auto& series = artifact.series;
  const auto& topo = series.topology();
  const auto resolved = resolve(spec, series.field_range(), topo);
  const PolarityTopology* pt = nullptr;
  try {
    pt = &artifact.at(spec.polarity);
  } catch (const std::out_of_range& e) {
    throw std::invalid_argument(std::string("descriptor.polarity: ") + e.what());
  }

  std::vector<FeatureFrame> frames(t1 - t0 + 1);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(frames.size()); ++i) {
    const auto t = static_cast<Timestep>(t0 + i);
    const auto& extrema = pt->extrema[t];
    const auto mask = roi_mask(resolved.roi, topo, series.geo(), extrema);
    auto& frame = frames[static_cast<std::size_t>(i)];
    frame.timestep = t;
    switch (resolved.kind) {
      case DescriptorKind::local_offset:
        frame.features = features_local_offset(pt->branches[t], extrema, resolved, mask);
        break;
      case DescriptorKind::persistence_threshold:
        frame.features = features_persistence_threshold(pt->branches[t], extrema, resolved, mask);
        break;
      case DescriptorKind::global_threshold:
        frame.features = features_global_threshold(pt->trees[t], pt->branches[t], extrema, resolved, mask);
        break;
    }
    if (with_geometry)
      for (auto& f : frame.features)
        f.geometry = feature_contour(topo, series.step(t), resolved.polarity, f, extrema);
  }
  return frames;
}

MatchingWeights make_weights(const Artifact& artifact, const DescriptorSpec& resolved, WeightKind kind) {
  const auto& pt = artifact.at(resolved.polarity);
  if (kind != WeightKind::sublevel_overlap) return MatchingWeights(pt.graph, kind);
  const auto& series = artifact.series;
  std::function<double(VertexId)> delta;
  switch (resolved.kind) {
    case DescriptorKind::local_offset:
      delta = [d = resolved.delta](VertexId v) { return d.at(v); };
      break;
    case DescriptorKind::persistence_threshold:
      delta = [p = resolved.persistence](VertexId v) { return p.at(v); };
      break;
    case DescriptorKind::global_threshold:
      throw std::invalid_argument(
          "weights: sublevel-overlap is not defined for global-threshold descriptors");
  }
  return MatchingWeights(pt.graph, series, std::move(delta));
}

TrackingResult track_descriptor(const Artifact& artifact, const DescriptorSpec& spec,
                                WeightKind weights, TimeWindow window, bool with_geometry) {
  auto frames = evaluate_descriptor(artifact, spec, window, with_geometry);
  const auto resolved = resolve(spec, artifact.series.field_range(), artifact.series.topology());
  return track_features(std::move(frames), make_weights(artifact, resolved, weights));
}

nlohmann::json export_json(const Artifact& artifact, const DescriptorSpec& spec, WeightKind weights,
                           const TrackingResult& result) {
  const auto& pt = artifact.at(spec.polarity);
  auto j = tracks_json(result);
  nlohmann::json window = nullptr;
  if (!result.frames.empty())
    window = {result.frames.front().timestep, result.frames.back().timestep};
  return {{"descriptor", to_json(spec)},
          {"weights", std::string(to_string(weights))},
          {"window", window},
          {"frames", features_json(result.frames, pt.extrema, artifact.series.topology())},
          {"tracks", std::move(j["tracks"])},
          {"events", std::move(j["events"])}};
}

}  // namespace toptrack
