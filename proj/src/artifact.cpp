#include "toptrack/artifact.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>
#include <spdlog/spdlog.h>
#include <zlib.h>

#include "binary_io.hpp"
#include "toptrack/series_io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace toptrack {

namespace fs = std::filesystem;
using detail::ByteReader;
using detail::ByteWriter;
using nlohmann::json;

namespace {

constexpr std::uint32_t kNone32 = ~std::uint32_t{0};
constexpr const char* kFormat = "toptrack-artifact";

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string crc_hex(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  constexpr std::size_t chunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += chunk) {
    const auto n = std::min(chunk, bytes.size() - off);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(n));
  }
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", crc);
  return buf;
}

void header(ByteWriter& w, const char* magic, Polarity p, std::uint32_t steps) {
  w.magic(magic);
  w.put(kArtifactVersion);
  w.put(static_cast<std::uint8_t>(p));
  w.put(steps);
}

void check_header(ByteReader& r, const char* magic, Polarity p, std::uint32_t steps,
                  const std::string& name) {
  r.expect_magic(magic);
  const auto version = r.get<std::uint32_t>();
  if (version != kArtifactVersion)
    throw ArtifactError(name + ": format version " + std::to_string(version) + ", expected " +
                        std::to_string(kArtifactVersion));
  if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(p))
    throw ArtifactError(name + ": polarity does not match its directory");
  if (r.get<std::uint32_t>() != steps) throw ArtifactError(name + ": timestep count mismatch");
}

std::string encode_extrema(const PolarityTopology& pt) {
  ByteWriter w;
  header(w, "TTEX", pt.polarity, static_cast<std::uint32_t>(pt.extrema.size()));
  for (const auto& list : pt.extrema) {
    w.put(static_cast<std::uint32_t>(list.size()));
    for (const auto& cp : list) {
      w.put(cp.vertex);
      w.put(cp.value);
      w.put(cp.persistence.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
  }
  return w.take();
}

std::string encode_labels(const PolarityTopology& pt) {
  ByteWriter w;
  header(w, "TTLB", pt.polarity, static_cast<std::uint32_t>(pt.labelings.size()));
  for (const auto& l : pt.labelings) w.put_array<std::uint32_t>(l.label);
  return w.take();
}

std::string encode_trees(const PolarityTopology& pt) {
  ByteWriter w;
  header(w, "TTMT", pt.polarity, static_cast<std::uint32_t>(pt.trees.size()));
  for (const auto& t : pt.trees) {
    w.put(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.put(n.vertex);
      w.put(n.value);
      w.put(static_cast<std::uint8_t>(n.kind));
      w.put(n.parent);
    }
  }
  return w.take();
}

std::string encode_branches(const PolarityTopology& pt) {
  ByteWriter w;
  header(w, "TTBD", pt.polarity, static_cast<std::uint32_t>(pt.branches.size()));
  for (const auto& bd : pt.branches) {
    w.put(static_cast<std::uint32_t>(bd.branches.size()));
    w.put(bd.root_branch);
    for (const auto& b : bd.branches) {
      w.put(b.extremum);
      w.put(b.leaf_vertex);
      w.put(b.birth);
      w.put(b.death);
      w.put(b.parent.value_or(kNone32));
      w.put(b.merge_saddle.value_or(kNone32));
    }
  }
  return w.take();
}

void encode_props(ByteWriter& w, const PropertyTable& props) {
  w.put(static_cast<std::uint32_t>(props.size()));
  for (const auto& [name, values] : props) {
    w.put_string(name);
    w.put_array<double>(values);
  }
}

std::string encode_graph(const PolarityTopology& pt) {
  const auto& g = pt.graph;
  ByteWriter w;
  header(w, "TTGR", pt.polarity, g.num_timesteps());
  w.put_array<std::uint32_t>(g.offsets);
  for (const auto& n : g.nodes) {
    w.put(n.timestep);
    w.put(n.extremum);
    w.put(n.vertex);
    w.put(n.value);
    w.put(n.persistence);
  }
  w.put_array<NodeId>(g.forward);
  w.put_array<NodeId>(g.backward);
  encode_props(w, g.node_props);
  encode_props(w, g.forward_props);
  encode_props(w, g.backward_props);
  return w.take();
}

void decode_extrema(ByteReader& r, PolarityTopology& pt, std::uint32_t steps) {
  pt.extrema.resize(steps);
  for (Timestep t = 0; t < steps; ++t) {
    const auto n = r.get<std::uint32_t>();
    auto& list = pt.extrema[t];
    list.resize(n);
    for (auto& cp : list) {
      cp.vertex = r.get<std::uint32_t>();
      cp.value = r.get<double>();
      const double p = r.get<double>();
      if (!std::isnan(p)) cp.persistence = p;
      cp.timestep = t;
      cp.polarity = pt.polarity;
    }
  }
}

void decode_labels(ByteReader& r, PolarityTopology& pt, std::uint32_t steps, std::size_t vertices) {
  pt.labelings.resize(steps);
  for (Timestep t = 0; t < steps; ++t) {
    pt.labelings[t].timestep = t;
    pt.labelings[t].polarity = pt.polarity;
    pt.labelings[t].label = r.get_array<std::uint32_t>(vertices);
  }
}

void decode_trees(ByteReader& r, PolarityTopology& pt, std::uint32_t steps) {
  pt.trees.resize(steps);
  for (Timestep t = 0; t < steps; ++t) {
    auto& tree = pt.trees[t];
    tree.timestep = t;
    tree.polarity = pt.polarity;
    tree.nodes.resize(r.get<std::uint32_t>());
    for (auto& n : tree.nodes) {
      n.vertex = r.get<std::uint32_t>();
      n.value = r.get<double>();
      n.kind = static_cast<NodeKind>(r.get<std::uint8_t>());
      n.parent = r.get<std::int32_t>();
    }
  }
}

void decode_branches(ByteReader& r, PolarityTopology& pt, std::uint32_t steps) {
  pt.branches.resize(steps);
  for (Timestep t = 0; t < steps; ++t) {
    auto& bd = pt.branches[t];
    bd.timestep = t;
    bd.polarity = pt.polarity;
    const auto n = r.get<std::uint32_t>();
    bd.root_branch = r.get<std::uint32_t>();
    bd.branches.resize(n);
    bd.branch_of_extremum.resize(n);
    for (BranchId i = 0; i < n; ++i) {
      auto& b = bd.branches[i];
      b.id = i;
      b.extremum = r.get<std::uint32_t>();
      b.leaf_vertex = r.get<std::uint32_t>();
      b.birth = r.get<double>();
      b.death = r.get<double>();
      if (const auto p = r.get<std::uint32_t>(); p != kNone32) b.parent = p;
      if (const auto s = r.get<std::uint32_t>(); s != kNone32) b.merge_saddle = s;
      bd.branch_of_extremum[b.extremum] = i;
    }
    link_children(bd);
  }
}

PropertyTable decode_props(ByteReader& r, std::size_t n) {
  PropertyTable props;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.get_string();
    props.emplace(std::move(name), r.get_array<double>(n));
  }
  return props;
}

void decode_graph(ByteReader& r, PolarityTopology& pt, std::uint32_t steps,
                  const ScalarTimeSeries& series) {
  auto& g = pt.graph;
  g.polarity = pt.polarity;
  g.topology = series.topology();
  g.geo = series.geo();
  g.offsets = r.get_array<std::uint32_t>(steps + 1);
  const std::size_t n = g.offsets.back();
  g.nodes.resize(n);
  for (auto& node : g.nodes) {
    node.timestep = r.get<std::uint32_t>();
    node.extremum = r.get<std::uint32_t>();
    node.vertex = r.get<std::uint32_t>();
    node.value = r.get<double>();
    node.persistence = r.get<double>();
  }
  g.forward = r.get_array<NodeId>(n);
  g.backward = r.get_array<NodeId>(n);
  g.node_props = decode_props(r, n);
  g.forward_props = decode_props(r, n);
  g.backward_props = decode_props(r, n);
  g.index_incoming();
}

json manifest_json(const Artifact& a, bool valid, const json& files) {
  const auto& s = a.series;
  const auto& topo = s.topology();
  json pols = json::array();
  for (const auto& p : a.polarities) pols.push_back(std::string(to_string(p.polarity)));
  json geo = nullptr;
  if (s.geo()) geo = {{"lon0", s.geo()->lon0}, {"dlon", s.geo()->dlon}, {"lat0", s.geo()->lat0}, {"dlat", s.geo()->dlat}};
  return {{"format", kFormat},
          {"version", kArtifactVersion},
          {"valid", valid},
          {"grid", {{"width", topo.width}, {"height", topo.height}, {"wrap_x", topo.wrap_x}, {"wrap_y", topo.wrap_y}}},
          {"num_timesteps", s.num_timesteps()},
          {"dt_hours", s.dt_hours()},
          {"geo", geo},
          {"field_range", {s.field_range().min, s.field_range().max}},
          {"polarities", pols},
          {"min_persistence", a.min_persistence},
          {"files", files}};
}

void write_manifest(const fs::path& dir, const json& m) {
  detail::write_file(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

const PolarityTopology& Artifact::at(Polarity p) const {
  for (const auto& pt : polarities)
    if (pt.polarity == p) return pt;
  throw std::out_of_range("artifact has no " + std::string(to_string(p)) + " topology");
}

bool Artifact::has(Polarity p) const noexcept {
  for (const auto& pt : polarities)
    if (pt.polarity == p) return true;
  return false;
}

Artifact precompute(ScalarTimeSeries series, const PrecomputeOptions& options,
                    std::vector<StageTimings>* timings) {
  Artifact a;
  a.series = std::move(series);
  a.min_persistence = options.min_persistence;
  const auto& s = a.series;
  const auto steps = s.num_timesteps();
#ifdef _OPENMP
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#else
  const int threads = 1;
#endif

  for (const auto pol : options.polarities) {
    if (a.has(pol)) continue;
    const auto wall = std::chrono::steady_clock::now();
    PolarityTopology pt;
    pt.polarity = pol;
    pt.extrema.resize(steps);
    pt.labelings.resize(steps);
    pt.trees.resize(steps);
    pt.branches.resize(steps);
    double seg_ms = 0.0, tree_ms = 0.0;
    std::size_t pruned = 0;

#pragma omp parallel for schedule(dynamic) num_threads(threads) reduction(+ : seg_ms, tree_ms, pruned)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(steps); ++i) {
      const auto t = static_cast<Timestep>(i);
      auto t0 = std::chrono::steady_clock::now();
      auto seg = segment_timestep(s, t, pol, Execution::serial);
      seg_ms += ms_since(t0);
      t0 = std::chrono::steady_clock::now();
      auto tree = compute_merge_tree(s, t, pol);
      auto bd = branch_decomposition(tree, seg.extrema);
      tree_ms += ms_since(t0);
      if (options.min_persistence > 0.0)
        pruned += prune_low_persistence(seg.extrema, seg.labeling, tree, bd, options.min_persistence);
      pt.extrema[t] = std::move(seg.extrema);
      pt.labelings[t] = std::move(seg.labeling);
      pt.trees[t] = std::move(tree);
      pt.branches[t] = std::move(bd);
    }

    const auto g0 = std::chrono::steady_clock::now();
    pt.graph = build_tracking_graph(s.topology(), s.geo(), pt.labelings, pt.extrema);
    StageTimings st{pol, steps ? seg_ms / steps : 0.0, steps ? tree_ms / steps : 0.0, ms_since(g0),
                    pruned};
    spdlog::debug(
        "precompute {}: {} timesteps, {} extrema, segmentation {:.2f} ms/step, merge tree {:.2f} "
        "ms/step, graph {:.1f} ms, total {:.1f} ms on {} threads",
        to_string(pol), steps, pt.graph.node_count(), st.segmentation_ms, st.merge_tree_ms,
        st.graph_ms, ms_since(wall), threads);
    if (pruned) spdlog::debug("precompute {}: pruned {} extrema below persistence {}", to_string(pol), pruned, options.min_persistence);
    if (timings) timings->push_back(st);
    a.polarities.push_back(std::move(pt));
  }
  return a;
}

void save_artifact(const Artifact& a, const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir)) throw ArtifactError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw ArtifactError(dir.string() + " is not empty; pass --force to overwrite");
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  fs::create_directories(dir);

  json files = json::object();
  write_manifest(dir, manifest_json(a, false, files));
  auto put = [&](const std::string& rel, std::string_view bytes) {
    detail::write_file(dir / rel, bytes);
    files[rel] = {{"crc32", crc_hex(bytes)}, {"bytes", bytes.size()}};
  };

  write_raw_f64(dir / "field.ttsf", a.series);
  {
    const auto bytes = detail::read_file(dir / "field.ttsf");
    files["field.ttsf"] = {{"crc32", crc_hex({bytes.data(), bytes.size()})}, {"bytes", bytes.size()}};
  }
  for (const auto& pt : a.polarities) {
    const std::string sub(to_string(pt.polarity));
    fs::create_directories(dir / sub);
    put(sub + "/extrema.bin", encode_extrema(pt));
    put(sub + "/labels.bin", encode_labels(pt));
    put(sub + "/trees.bin", encode_trees(pt));
    put(sub + "/branches.bin", encode_branches(pt));
    put(sub + "/graph.bin", encode_graph(pt));
  }
  write_manifest(dir, manifest_json(a, true, files));
}

Artifact load_artifact(const fs::path& dir) {
  json m;
  try {
    const auto bytes = detail::read_file(dir / "manifest.json");
    m = json::parse(bytes.begin(), bytes.end());
  } catch (const std::exception& e) {
    throw ArtifactError("cannot read artifact manifest in " + dir.string() + ": " + e.what());
  }
  try {
    if (m.at("format") != kFormat) throw ArtifactError("not a toptrack artifact: " + dir.string());
    if (m.at("version").get<std::uint32_t>() != kArtifactVersion)
      throw ArtifactError("artifact version " + m.at("version").dump() + " is not supported (expected " +
                          std::to_string(kArtifactVersion) + ")");
    if (!m.at("valid").get<bool>())
      throw ArtifactError("artifact in " + dir.string() + " is incomplete (precompute did not finish)");

    std::map<std::string, std::vector<char>> contents;
    for (const auto& [rel, info] : m.at("files").items()) {
      auto bytes = detail::read_file(dir / rel);
      if (bytes.size() != info.at("bytes").get<std::size_t>() ||
          crc_hex({bytes.data(), bytes.size()}) != info.at("crc32").get<std::string>())
        throw ArtifactError("checksum mismatch in " + (dir / rel).string());
      contents.emplace(rel, std::move(bytes));
    }

    const auto& grid = m.at("grid");
    SeriesMeta meta;
    meta.topology = GridTopology(grid.at("width").get<std::uint32_t>(), grid.at("height").get<std::uint32_t>(),
                                 grid.at("wrap_x").get<bool>());
    meta.topology->wrap_y = grid.at("wrap_y").get<bool>();
    meta.num_timesteps = m.at("num_timesteps").get<std::uint32_t>();
    if (!m.at("geo").is_null()) {
      const auto& g = m.at("geo");
      meta.geo = GeoAxes{g.at("lon0").get<double>(), g.at("dlon").get<double>(),
                         g.at("lat0").get<double>(), g.at("dlat").get<double>()};
    }
    if (!contents.count("field.ttsf")) throw ArtifactError("artifact lists no field.ttsf");

    Artifact a;
    a.series = load_series(dir / "field.ttsf", SeriesFormat::raw_f64, meta);
    a.min_persistence = m.at("min_persistence").get<double>();
    const auto steps = a.series.num_timesteps();
    for (const auto& pname : m.at("polarities")) {
      PolarityTopology pt;
      pt.polarity = parse_polarity(pname.get<std::string>());
      const std::string sub(to_string(pt.polarity));
      auto reader = [&](const std::string& file) {
        const auto rel = sub + "/" + file;
        const auto it = contents.find(rel);
        if (it == contents.end()) throw ArtifactError("artifact lists no " + rel);
        return ByteReader(it->second, (dir / rel).string());
      };
      const std::pair<const char*, const char*> parts[] = {
          {"extrema.bin", "TTEX"}, {"labels.bin", "TTLB"}, {"trees.bin", "TTMT"},
          {"branches.bin", "TTBD"}, {"graph.bin", "TTGR"}};
      for (const auto& [file, magic] : parts) {
        auto r = reader(file);
        check_header(r, magic, pt.polarity, steps, sub + "/" + file);
        const std::string f = file;
        if (f == "extrema.bin") decode_extrema(r, pt, steps);
        else if (f == "labels.bin") decode_labels(r, pt, steps, a.series.vertex_count());
        else if (f == "trees.bin") decode_trees(r, pt, steps);
        else if (f == "branches.bin") decode_branches(r, pt, steps);
        else decode_graph(r, pt, steps, a.series);
        if (!r.at_end()) throw ArtifactError(sub + "/" + f + ": trailing bytes");
      }
      a.polarities.push_back(std::move(pt));
    }
    return a;
  } catch (const ArtifactError&) {
    throw;
  } catch (const std::exception& e) {
    throw ArtifactError("invalid artifact in " + dir.string() + ": " + e.what());
  }
}

}  // namespace toptrack
