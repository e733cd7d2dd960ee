#include "toptrack/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace toptrack {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument(where + ": " + what);
}

const char* unit_string(ValueUnit u) { return u == ValueUnit::raw ? "raw" : "percent"; }

Threshold parse_threshold(const json& j, const std::string& where) {
  Threshold t;
  if (j.is_number()) {
    t.constant = j.get<double>();
    return t;
  }
  if (!j.is_object()) fail(where, "expected a number or an object");
  for (const auto& [key, _] : j.items())
    if (key != "constant" && key != "grid" && key != "unit") fail(where + "." + key, "unknown field");
  const bool has_c = j.contains("constant"), has_g = j.contains("grid");
  if (has_c == has_g) fail(where, "exactly one of 'constant' or 'grid' is required");
  if (has_c) {
    if (!j["constant"].is_number()) fail(where + ".constant", "expected a number");
    t.constant = j["constant"].get<double>();
  } else {
    const auto& g = j["grid"];
    if (!g.is_array() || g.empty()) fail(where + ".grid", "expected a non-empty array of numbers");
    t.grid.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g[i].is_number()) fail(where + ".grid[" + std::to_string(i) + "]", "expected a number");
      t.grid.push_back(g[i].get<double>());
    }
  }
  if (j.contains("unit")) {
    if (!j["unit"].is_string()) fail(where + ".unit", "expected a string");
    const auto u = j["unit"].get<std::string>();
    if (u == "raw") t.unit = ValueUnit::raw;
    else if (u == "percent") t.unit = ValueUnit::percent;
    else fail(where + ".unit", "expected 'raw' or 'percent'");
  }
  return t;
}

json threshold_json(const Threshold& t) {
  json j = {{"unit", unit_string(t.unit)}};
  if (t.is_grid()) j["grid"] = t.grid;
  else j["constant"] = t.constant;
  return j;
}

Threshold resolve_threshold(const Threshold& t, FieldRange range, const GridTopology& topo,
                            const std::string& where, bool strictly_positive) {
  Threshold out = t;
  const double scale = t.unit == ValueUnit::percent ? range.span() / 100.0 : 1.0;
  out.unit = ValueUnit::raw;
  out.constant *= scale;
  for (auto& v : out.grid) v *= scale;
  if (out.is_grid() && out.grid.size() != topo.vertex_count())
    fail(where + ".grid", "expected " + std::to_string(topo.vertex_count()) + " values, got " +
                              std::to_string(out.grid.size()));
  auto bad = [&](double v) {
    return !std::isfinite(v) || (strictly_positive ? v <= 0.0 : v < 0.0);
  };
  const char* req = strictly_positive ? "must be > 0" : "must be >= 0";
  if (out.is_grid()) {
    if (std::any_of(out.grid.begin(), out.grid.end(), bad)) fail(where + ".grid", req);
  } else if (bad(out.constant)) {
    fail(where + ".constant", req);
  }
  return out;
}

/// Distance below `level` in the direction of the polarity.
double oriented(double v, Polarity p) { return p == Polarity::minimum ? v : -v; }

bool deeper(const CriticalPoint& a, const CriticalPoint& b) {
  return a.polarity == Polarity::minimum ? precedes_value(a.value, a.vertex, b.value, b.vertex)
                                         : precedes_value(b.value, b.vertex, a.value, a.vertex);
}

bool admitted(std::span<const char> eligible, ExtremumId e) {
  return eligible.empty() || eligible[e] != 0;
}

Feature make_feature(ExtremumId carrier, std::vector<ExtremumId> members,
                     const BranchDecomposition& bd, std::span<const CriticalPoint> extrema,
                     Representative rep, double level) {
  Feature f;
  f.timestep = extrema[carrier].timestep;
  f.carrier = carrier;
  std::sort(members.begin(), members.end());
  f.members = std::move(members);
  f.level = level;

  BranchId master = bd.branch_of_extremum[carrier];
  for (const auto m : f.members) {
    const auto b = bd.branch_of_extremum[m];
    const double pb = bd.branches[b].persistence(), pm = bd.branches[master].persistence();
    if (pb > pm || (pb == pm && b < master)) master = b;
  }
  f.master_branch = master;
  f.master_persistence = bd.branches[master].persistence();

  if (rep == Representative::master_branch) {
    f.representative = bd.branches[master].extremum;
  } else {
    f.representative = f.members.front();
    for (const auto m : f.members)
      if (deeper(extrema[m], extrema[f.representative])) f.representative = m;
  }
  f.representative_value = extrema[f.representative].value;

  const auto pol = extrema[carrier].polarity;
  const auto carrier_branch = bd.branch_of_extremum[carrier];
  for (const auto m : f.members) {
    if (m == carrier) continue;
    bool attached = false;
    for (std::optional<BranchId> b = bd.branch_of_extremum[m]; b; b = bd.branches[*b].parent) {
      if (*b == carrier_branch) {
        attached = true;
        break;
      }
      if (oriented(bd.branches[*b].death, pol) > oriented(level, pol)) break;
    }
    if (!attached) ++f.detached_members;
  }
  return f;
}

void number(std::vector<Feature>& features) {
  std::sort(features.begin(), features.end(),
            [](const Feature& a, const Feature& b) { return a.carrier < b.carrier; });
  for (FeatureId i = 0; i < features.size(); ++i) features[i].id = i;
}

/// Shared carrier/attachment scheme. `attach(carrier, member)` decides
/// criteria beyond ancestry.
template <class IsCarrier, class Attach, class Level>
std::vector<Feature> group_by_ancestry(const BranchDecomposition& bd,
                                       std::span<const CriticalPoint> extrema,
                                       std::span<const char> eligible, Representative rep,
                                       IsCarrier is_carrier, Attach attach, Level level_of) {
  const auto n = static_cast<ExtremumId>(extrema.size());
  std::vector<char> carrier(n, 0);
  for (ExtremumId e = 0; e < n; ++e) carrier[e] = admitted(eligible, e) && is_carrier(e);

  std::vector<std::vector<ExtremumId>> members(n);
  for (ExtremumId e = 0; e < n; ++e) {
    if (carrier[e]) {
      members[e].push_back(e);
      continue;
    }
    if (!admitted(eligible, e)) continue;
    for (auto b = bd.branches[bd.branch_of_extremum[e]].parent; b; b = bd.branches[*b].parent) {
      const auto c = bd.branches[*b].extremum;
      if (carrier[c] && attach(c, e)) {
        members[c].push_back(e);
        break;
      }
    }
  }
  std::vector<Feature> out;
  for (ExtremumId c = 0; c < n; ++c)
    if (carrier[c]) out.push_back(make_feature(c, std::move(members[c]), bd, extrema, rep, level_of(c)));
  number(out);
  return out;
}

}  // namespace

std::string_view to_string(DescriptorKind k) noexcept {
  switch (k) {
    case DescriptorKind::global_threshold: return "global-threshold";
    case DescriptorKind::persistence_threshold: return "persistence-threshold";
    case DescriptorKind::local_offset: return "local-offset";
  }
  return "?";
}

DescriptorSpec parse_descriptor(const json& j) {
  const std::string root = "descriptor";
  if (!j.is_object()) fail(root, "expected an object");
  for (const auto& [key, _] : j.items())
    if (key != "kind" && key != "polarity" && key != "delta" && key != "persistence" &&
        key != "level" && key != "representative" && key != "roi")
      fail(root + "." + key, "unknown field");

  DescriptorSpec spec;
  if (!j.contains("kind")) fail(root + ".kind", "missing");
  if (!j["kind"].is_string()) fail(root + ".kind", "expected a string");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "local-offset") spec.kind = DescriptorKind::local_offset;
  else if (kind == "persistence-threshold") spec.kind = DescriptorKind::persistence_threshold;
  else if (kind == "global-threshold") spec.kind = DescriptorKind::global_threshold;
  else fail(root + ".kind", "unknown descriptor kind '" + kind + "'");

  if (j.contains("polarity")) {
    if (!j["polarity"].is_string()) fail(root + ".polarity", "expected a string");
    try {
      spec.polarity = parse_polarity(j["polarity"].get<std::string>());
    } catch (const std::invalid_argument&) {
      fail(root + ".polarity", "expected 'minimum' or 'maximum'");
    }
  }

  switch (spec.kind) {
    case DescriptorKind::local_offset:
      if (!j.contains("delta")) fail(root + ".delta", "missing");
      spec.delta = parse_threshold(j["delta"], root + ".delta");
      break;
    case DescriptorKind::persistence_threshold:
      if (!j.contains("persistence")) fail(root + ".persistence", "missing");
      spec.persistence = parse_threshold(j["persistence"], root + ".persistence");
      break;
    case DescriptorKind::global_threshold:
      if (!j.contains("level")) fail(root + ".level", "missing");
      if (!j["level"].is_number()) fail(root + ".level", "expected a number");
      spec.level = j["level"].get<double>();
      break;
  }

  if (j.contains("representative")) {
    if (!j["representative"].is_string()) fail(root + ".representative", "expected a string");
    const auto r = j["representative"].get<std::string>();
    if (r == "master-branch") spec.representative = Representative::master_branch;
    else if (r == "lowest-extremum") spec.representative = Representative::lowest_extremum;
    else fail(root + ".representative", "expected 'master-branch' or 'lowest-extremum'");
  }
  if (j.contains("roi")) spec.roi = parse_boxes(j["roi"], root + ".roi");
  return spec;
}

json to_json(const DescriptorSpec& spec) {
  json j = {{"kind", std::string(to_string(spec.kind))},
            {"polarity", std::string(to_string(spec.polarity))},
            {"representative", spec.representative == Representative::master_branch
                                   ? "master-branch"
                                   : "lowest-extremum"},
            {"roi", boxes_json(spec.roi)}};
  switch (spec.kind) {
    case DescriptorKind::local_offset: j["delta"] = threshold_json(spec.delta); break;
    case DescriptorKind::persistence_threshold:
      j["persistence"] = threshold_json(spec.persistence);
      break;
    case DescriptorKind::global_threshold: j["level"] = spec.level; break;
  }
  return j;
}

DescriptorSpec resolve(const DescriptorSpec& spec, FieldRange range, const GridTopology& topo) {
  DescriptorSpec out = spec;
  switch (spec.kind) {
    case DescriptorKind::local_offset:
      out.delta = resolve_threshold(spec.delta, range, topo, "descriptor.delta", true);
      break;
    case DescriptorKind::persistence_threshold:
      out.persistence =
          resolve_threshold(spec.persistence, range, topo, "descriptor.persistence", false);
      break;
    case DescriptorKind::global_threshold:
      if (!std::isfinite(spec.level)) fail("descriptor.level", "must be finite");
      break;
  }
  return out;
}

std::vector<char> roi_mask(std::span<const SpatialBox> roi, const GridTopology& topo,
                           const std::optional<GeoAxes>& geo,
                           std::span<const CriticalPoint> extrema) {
  std::vector<char> mask(extrema.size(), 1);
  if (roi.empty()) return mask;
  for (std::size_t e = 0; e < extrema.size(); ++e) {
    double x = topo.x_of(extrema[e].vertex), y = topo.y_of(extrema[e].vertex);
    if (geo) {
      x = geo->lon0 + x * geo->dlon;
      y = geo->lat0 + y * geo->dlat;
    }
    mask[e] = std::any_of(roi.begin(), roi.end(), [&](const SpatialBox& b) { return b.contains(x, y); });
  }
  return mask;
}

std::vector<Feature> features_local_offset(const BranchDecomposition& bd,
                                           std::span<const CriticalPoint> extrema,
                                           const DescriptorSpec& spec,
                                           std::span<const char> eligible) {
  const auto pol = spec.polarity;
  auto delta = [&](ExtremumId e) { return spec.delta.at(extrema[e].vertex); };
  auto pers = [&](ExtremumId e) { return bd.branches[bd.branch_of_extremum[e]].persistence(); };
  return group_by_ancestry(
      bd, extrema, eligible, spec.representative,
      [&](ExtremumId e) { return pers(e) > delta(e); },
      [&](ExtremumId c, ExtremumId m) {
        const double d = delta(c);
        return oriented(extrema[m].value, pol) <= oriented(extrema[c].value, pol) + d &&
               pers(m) < d;
      },
      [&](ExtremumId c) {
        return pol == Polarity::minimum ? extrema[c].value + delta(c) : extrema[c].value - delta(c);
      });
}

std::vector<Feature> features_persistence_threshold(const BranchDecomposition& bd,
                                                    std::span<const CriticalPoint> extrema,
                                                    const DescriptorSpec& spec,
                                                    std::span<const char> eligible) {
  const auto pol = spec.polarity;
  auto p = [&](ExtremumId e) { return spec.persistence.at(extrema[e].vertex); };
  return group_by_ancestry(
      bd, extrema, eligible, spec.representative,
      [&](ExtremumId e) { return bd.branches[bd.branch_of_extremum[e]].persistence() > p(e); },
      [](ExtremumId, ExtremumId) { return true; },
      [&](ExtremumId c) {
        return pol == Polarity::minimum ? extrema[c].value + p(c) : extrema[c].value - p(c);
      });
}

std::vector<Feature> features_global_threshold(const MergeTree& tree,
                                               const BranchDecomposition& bd,
                                               std::span<const CriticalPoint> extrema,
                                               const DescriptorSpec& spec,
                                               std::span<const char> eligible) {
  std::vector<Feature> out;
  for (auto& comp : level_components(tree, extrema, spec.level)) {
    std::erase_if(comp, [&](ExtremumId e) { return !admitted(eligible, e); });
    if (comp.empty()) continue;
    ExtremumId carrier = comp.front();
    for (const auto e : comp)
      if (deeper(extrema[e], extrema[carrier])) carrier = e;
    out.push_back(make_feature(carrier, std::move(comp), bd, extrema, spec.representative, spec.level));
  }
  number(out);
  return out;
}

}  // namespace toptrack
