// toptrack command line: precompute, features, serve, synth.
//
// Exit codes: 0 success, 2 invalid arguments or descriptor schema errors,
// 1 any other failure (unreadable input, invalid artifact, bind failure).

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "toptrack/artifact.hpp"
#include "toptrack/evaluate.hpp"
#include "toptrack/series_io.hpp"
#include "toptrack/service.hpp"
#include "toptrack/synthetic.hpp"

using namespace toptrack;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::optional<GeoAxes> parse_geo(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::array<double, 4> v{};
  std::istringstream in(s);
  for (auto& x : v) {
    std::string tok;
    if (!std::getline(in, tok, ',')) throw UsageError("--geo: expected lon0,dlon,lat0,dlat");
    try {
      x = std::stod(tok);
    } catch (const std::exception&) {
      throw UsageError("--geo: '" + tok + "' is not a number");
    }
  }
  return GeoAxes{v[0], v[1], v[2], v[3]};
}

struct PrecomputeArgs {
  std::string input, format = "raw-f64", output, geo;
  std::vector<std::string> polarities{"minimum"};
  int threads = 0;
  double min_persistence = 0.0;
  bool force = false;
};

int run_precompute(const PrecomputeArgs& a) {
  PrecomputeOptions opt;
  opt.polarities.clear();
  for (const auto& p : a.polarities) {
    try {
      opt.polarities.push_back(parse_polarity(p));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--polarity: ") + e.what());
    }
  }
  opt.threads = a.threads;
  opt.min_persistence = a.min_persistence;
  SeriesFormat format;
  try {
    format = parse_series_format(a.format);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--format: ") + e.what());
  }
  SeriesMeta meta;
  meta.geo = parse_geo(a.geo);
  std::error_code ec;
  if (!a.force && fs::is_directory(a.output, ec) && !fs::is_empty(a.output, ec))
    throw std::runtime_error(a.output + " is not empty; pass --force to overwrite");

  const auto series = load_series(a.input, format, meta);
  std::vector<StageTimings> timings;
  const auto artifact = precompute(series, opt, &timings);
  for (const auto& t : timings) {
    spdlog::info("{}: segmentation {:.1f} ms/step, merge tree {:.1f} ms/step, graph {:.1f} ms, {} extrema",
                 to_string(t.polarity), t.segmentation_ms, t.merge_tree_ms, t.graph_ms,
                 artifact.at(t.polarity).graph.node_count());
    if (t.pruned) spdlog::info("{}: pruned {} extrema below persistence {}", to_string(t.polarity), t.pruned, a.min_persistence);
  }
  save_artifact(artifact, a.output, a.force);
  spdlog::info("wrote {}", a.output);
  return 0;
}

struct FeaturesArgs {
  std::string artifact, descriptor, weights = "persistence", output, csv;
  std::optional<Timestep> t0, t1;
  bool geometry = false;
};

int run_features(const FeaturesArgs& a) {
  const auto text = a.descriptor.starts_with("{") ? a.descriptor : slurp(a.descriptor);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("descriptor: invalid JSON: ") + e.what());
  }
  const auto spec = parse_descriptor(j);
  WeightKind weights;
  try {
    weights = parse_weight_kind(a.weights);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--weights: ") + e.what());
  }
  const auto artifact = load_artifact(a.artifact);
  if (!artifact.has(spec.polarity))
    throw UsageError("descriptor.polarity: '" + std::string(to_string(spec.polarity)) + "' was not precomputed");
  const auto result = track_descriptor(artifact, spec, weights, {a.t0, a.t1}, a.geometry);
  write_text(a.output, export_json(artifact, spec, weights, result).dump(2) + "\n");
  if (!a.csv.empty()) write_text(a.csv, tracks_csv(result));
  return 0;
}

struct ServeArgs {
  std::string artifact, bind = "127.0.0.1";
  int port = 8080;
  std::size_t cache = 64;
};

int run_serve(const ServeArgs& a) {
  auto artifact = std::make_shared<const Artifact>(load_artifact(a.artifact));
  Service service(artifact, a.cache);
  httplib::Server server;
  service.mount(server);
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });
  if (!server.bind_to_port(a.bind, a.port)) {
    spdlog::error("cannot bind {}:{}", a.bind, a.port);
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("serving {} on http://{}:{}", a.artifact, a.bind, a.port);
  server.listen_after_bind();
  g_server = nullptr;
  return 0;
}

struct SynthArgs {
  std::string scenario, output, format = "raw-f64";
  std::uint32_t width = 320, height = 160, steps = 24, seed = 1;
};

int run_synth(const SynthArgs& a) {
  ScalarTimeSeries s;
  if (a.scenario == "three-well") s = synthetic::three_well_fixture();
  else if (a.scenario == "merging") s = synthetic::merging_wells().series;
  else if (a.scenario == "jump") s = synthetic::dominant_jump().series;
  else if (a.scenario == "translating") s = synthetic::translating_well(a.width, a.height, a.steps, 1.0);
  else if (a.scenario == "independent") s = synthetic::independent_wells(a.steps);
  else if (a.scenario == "pressure") s = synthetic::pressure_like(a.width, a.height, a.steps, a.seed);
  else throw UsageError("--scenario: unknown scenario '" + a.scenario + "'");
  if (a.format == "raw-f64") write_raw_f64(a.output, s);
  else if (a.format == "csv-stack") write_csv_stack(a.output, s);
  else throw UsageError("--format: expected raw-f64 or csv-stack");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("toptrack"));
  spdlog::set_pattern("[%l] %v");
  spdlog::cfg::load_env_levels();

  CLI::App app{"Topology-based feature tracking on gridded scalar time series"};
  app.require_subcommand(1);

  PrecomputeArgs pa;
  auto* pre = app.add_subcommand("precompute", "Segment, build merge trees and the tracking graph");
  pre->add_option("--input", pa.input, "Series file (raw-f64) or manifest (csv-stack)")->required();
  pre->add_option("--format", pa.format, "raw-f64 or csv-stack")->capture_default_str();
  pre->add_option("--polarity", pa.polarities, "minimum and/or maximum")->capture_default_str();
  pre->add_option("--output", pa.output, "Artifact directory")->required();
  pre->add_option("--threads", pa.threads, "Worker threads, 0 for the OpenMP default")
      ->envname("TOPTRACK_THREADS")
      ->check(CLI::NonNegativeNumber);
  pre->add_option("--min-persistence", pa.min_persistence, "Drop extrema below this persistence")
      ->check(CLI::NonNegativeNumber);
  pre->add_flag("--force", pa.force, "Overwrite a non-empty output directory");
  pre->add_option("--geo", pa.geo, "lon0,dlon,lat0,dlat when the input carries no axes");

  FeaturesArgs fa;
  auto* feat = app.add_subcommand("features", "Evaluate a descriptor and export features and tracks");
  feat->add_option("--artifact", fa.artifact)->required();
  feat->add_option("--descriptor", fa.descriptor, "Descriptor JSON file, '-' for stdin, or inline JSON")->required();
  feat->add_option("--t0", fa.t0);
  feat->add_option("--t1", fa.t1);
  feat->add_option("--weights", fa.weights, "persistence, manifold-overlap, sublevel-overlap, uniform")
      ->capture_default_str();
  feat->add_flag("--geometry", fa.geometry, "Include contour polylines");
  feat->add_option("--output", fa.output, "JSON export, stdout when omitted");
  feat->add_option("--csv", fa.csv, "Track summary CSV");

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP query API");
  serve->add_option("--artifact", sa.artifact)->required();
  serve->add_option("--bind", sa.bind)->capture_default_str();
  serve->add_option("--port", sa.port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--cache", sa.cache, "Cached responses")->envname("TOPTRACK_CACHE")->capture_default_str();

  SynthArgs ya;
  auto* synth = app.add_subcommand("synth", "Write a synthetic series");
  synth->add_option("--scenario", ya.scenario, "three-well, merging, jump, translating, independent, pressure")
      ->required();
  synth->add_option("--output", ya.output)->required();
  synth->add_option("--format", ya.format)->capture_default_str();
  synth->add_option("--width", ya.width)->capture_default_str();
  synth->add_option("--height", ya.height)->capture_default_str();
  synth->add_option("--steps", ya.steps)->capture_default_str();
  synth->add_option("--seed", ya.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*pre) return run_precompute(pa);
    if (*feat) return run_features(fa);
    if (*serve) return run_serve(sa);
    if (*synth) return run_synth(ya);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
