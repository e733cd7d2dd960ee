#include "toptrack/series_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"

namespace toptrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kRawMagic = "TTSF";
constexpr std::uint32_t kRawVersion = 1;

using Kind = IngestError::Kind;

void check_meta(const SeriesMeta& meta, const GridTopology& topo, std::uint32_t steps) {
  if (meta.topology && (meta.topology->width != topo.width ||
                        meta.topology->height != topo.height ||
                        meta.topology->wrap_x != topo.wrap_x))
    throw IngestError(Kind::dimension_mismatch,
                      "declared grid " + std::to_string(meta.topology->width) + "x" +
                          std::to_string(meta.topology->height) + " does not match file grid " +
                          std::to_string(topo.width) + "x" + std::to_string(topo.height));
  if (meta.num_timesteps && *meta.num_timesteps != steps)
    throw IngestError(Kind::dimension_mismatch, "declared " + std::to_string(*meta.num_timesteps) +
                                                    " timesteps, file has " +
                                                    std::to_string(steps));
}

void check_finite(const std::vector<double>& values, std::size_t n) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      const auto t = static_cast<Timestep>(i / n);
      const auto v = static_cast<VertexId>(i % n);
      throw IngestError(Kind::non_finite,
                        "non-finite sample at timestep " + std::to_string(t) + ", vertex " +
                            std::to_string(v),
                        t, v);
    }
  }
}

ScalarTimeSeries load_raw(const fs::path& path, const SeriesMeta& meta) {
  std::vector<char> data;
  try {
    data = detail::read_file(path);
  } catch (const std::exception& e) {
    throw IngestError(Kind::unreadable, e.what());
  }
  detail::ByteReader r(data, path.string());
  GridTopology topo;
  std::uint32_t steps = 0;
  double dt = 0.0;
  try {
    r.expect_magic(kRawMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kRawVersion)
      throw IngestError(Kind::malformed, "unsupported raw-f64 version " + std::to_string(version));
    topo.width = r.get<std::uint32_t>();
    topo.height = r.get<std::uint32_t>();
    steps = r.get<std::uint32_t>();
    topo.wrap_x = r.get<std::uint8_t>() != 0;
    dt = r.get<double>();
  } catch (const IngestError&) {
    throw;
  } catch (const std::exception& e) {
    throw IngestError(Kind::malformed, e.what());
  }
  try {
    topo.validate();
  } catch (const std::exception& e) {
    throw IngestError(Kind::malformed, e.what());
  }
  check_meta(meta, topo, steps);

  const std::size_t n = topo.vertex_count();
  const std::size_t expected = n * steps * sizeof(double);
  if (r.remaining() != expected)
    throw IngestError(Kind::dimension_mismatch,
                      path.string() + ": payload has " + std::to_string(r.remaining()) +
                          " bytes, header declares " + std::to_string(expected));
  auto values = r.get_array<double>(n * steps);
  check_finite(values, n);
  return ScalarTimeSeries(topo, steps, meta.dt_hours.value_or(dt), std::move(values), meta.geo);
}

std::vector<double> parse_csv(const fs::path& path, std::size_t n, Timestep t) {
  std::ifstream in(path);
  if (!in) throw IngestError(Kind::unreadable, "cannot open " + path.string());
  std::vector<double> out;
  out.reserve(n);
  std::string line;
  while (std::getline(in, line)) {
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && (*p == ',' || *p == ' ' || *p == '\t' || *p == '\r' || *p == ';')) ++p;
      if (p >= end) break;
      double v = 0.0;
      const char* start = p;
      // from_chars rejects a leading '+'.
      if (*p == '+') ++p;
      auto [q, ec] = std::from_chars(p, end, v);
      if (ec != std::errc())
        throw IngestError(Kind::malformed, path.string() + ": cannot parse '" +
                                               std::string(start, std::min<std::size_t>(
                                                                      16, end - start)) +
                                               "'");
      if (!std::isfinite(v)) {
        const auto vid = static_cast<VertexId>(out.size());
        throw IngestError(Kind::non_finite,
                          "non-finite sample at timestep " + std::to_string(t) + ", vertex " +
                              std::to_string(vid),
                          t, vid);
      }
      out.push_back(v);
      p = q;
    }
  }
  if (out.size() != n)
    throw IngestError(Kind::dimension_mismatch, path.string() + ": expected " +
                                                    std::to_string(n) + " values, got " +
                                                    std::to_string(out.size()));
  return out;
}

ScalarTimeSeries load_csv_stack(const fs::path& manifest_path, const SeriesMeta& meta) {
  std::ifstream in(manifest_path);
  if (!in) throw IngestError(Kind::unreadable, "cannot open " + manifest_path.string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw IngestError(Kind::malformed, manifest_path.string() + ": " + e.what());
  }
  GridTopology topo;
  std::vector<std::string> steps;
  double dt = 0.0;
  std::optional<GeoAxes> geo = meta.geo;
  try {
    topo.width = m.at("width").get<std::uint32_t>();
    topo.height = m.at("height").get<std::uint32_t>();
    topo.wrap_x = m.value("wrap_x", false);
    dt = m.value("dt_hours", 0.0);
    steps = m.at("timesteps").get<std::vector<std::string>>();
    if (!geo && m.contains("geo")) {
      const auto& g = m["geo"];
      geo = GeoAxes{g.at("lon0").get<double>(), g.at("dlon").get<double>(),
                    g.at("lat0").get<double>(), g.at("dlat").get<double>()};
    }
    topo.validate();
  } catch (const std::exception& e) {
    throw IngestError(Kind::malformed, manifest_path.string() + ": " + e.what());
  }
  if (steps.empty()) throw IngestError(Kind::malformed, "manifest lists no timesteps");
  check_meta(meta, topo, static_cast<std::uint32_t>(steps.size()));

  const std::size_t n = topo.vertex_count();
  const fs::path base = manifest_path.parent_path();
  std::vector<double> values;
  values.reserve(n * steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto step = parse_csv(base / steps[t], n, static_cast<Timestep>(t));
    values.insert(values.end(), step.begin(), step.end());
  }
  return ScalarTimeSeries(topo, static_cast<std::uint32_t>(steps.size()), meta.dt_hours.value_or(dt),
                          std::move(values), geo);
}

}  // namespace

SeriesFormat parse_series_format(std::string_view s) {
  if (s == "raw-f64") return SeriesFormat::raw_f64;
  if (s == "csv-stack") return SeriesFormat::csv_stack;
  throw std::invalid_argument("unknown series format '" + std::string(s) + "'");
}

ScalarTimeSeries load_series(const fs::path& path, SeriesFormat format, const SeriesMeta& meta) {
  if (!fs::exists(path)) throw IngestError(Kind::unreadable, path.string() + " does not exist");
  return format == SeriesFormat::raw_f64 ? load_raw(path, meta) : load_csv_stack(path, meta);
}

void write_raw_f64(const fs::path& path, const ScalarTimeSeries& series) {
  detail::ByteWriter w;
  const auto& topo = series.topology();
  w.magic(kRawMagic);
  w.put(kRawVersion);
  w.put(topo.width);
  w.put(topo.height);
  w.put(series.num_timesteps());
  w.put(static_cast<std::uint8_t>(topo.wrap_x ? 1 : 0));
  w.put(series.dt_hours());
  w.put_array(series.values());
  detail::write_file(path, w.bytes());
}

void write_csv_stack(const fs::path& dir, const ScalarTimeSeries& series) {
  fs::create_directories(dir);
  const auto& topo = series.topology();
  json m;
  m["width"] = topo.width;
  m["height"] = topo.height;
  m["wrap_x"] = topo.wrap_x;
  m["dt_hours"] = series.dt_hours();
  if (const auto& g = series.geo())
    m["geo"] = {{"lon0", g->lon0}, {"dlon", g->dlon}, {"lat0", g->lat0}, {"dlat", g->dlat}};
  auto names = json::array();
  for (Timestep t = 0; t < series.num_timesteps(); ++t) {
    std::ostringstream name;
    name << "step_" << std::setw(4) << std::setfill('0') << t << ".csv";
    names.push_back(name.str());
    std::ofstream out(dir / name.str());
    if (!out) throw std::runtime_error("cannot create " + (dir / name.str()).string());
    out << std::setprecision(17);
    const auto f = series.step(t);
    for (std::uint32_t y = 0; y < topo.height; ++y) {
      for (std::uint32_t x = 0; x < topo.width; ++x) {
        if (x) out << ',';
        out << f[topo.id(x, y)];
      }
      out << '\n';
    }
  }
  m["timesteps"] = names;
  std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
}

}  // namespace toptrack
