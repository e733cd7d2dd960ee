#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "toptrack/series_io.hpp"

using namespace toptrack;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("toptrack_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ScalarTimeSeries random_series(std::uint32_t w, std::uint32_t h, std::uint32_t steps,
                               unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d(101325.0, 800.0);
  std::vector<double> v(static_cast<std::size_t>(w) * h * steps);
  for (auto& x : v) x = d(rng);
  return ScalarTimeSeries(GridTopology(w, h), steps, 6.0, std::move(v));
}

}  // namespace

TEST_CASE("raw-f64 round trip is bit identical") {
  const auto dir = scratch_dir("raw_roundtrip");
  const auto s = random_series(7, 5, 3, 11);
  write_raw_f64(dir / "s.ttsf", s);
  const auto back = load_series(dir / "s.ttsf", SeriesFormat::raw_f64);
  REQUIRE(back.values().size() == s.values().size());
  CHECK(std::memcmp(back.values().data(), s.values().data(), s.values().size_bytes()) == 0);
  CHECK(back.topology() == s.topology());
  CHECK(back.dt_hours() == 6.0);
  CHECK(back.field_range() == s.field_range());
}

TEST_CASE("raw-f64 header layout") {
  const auto dir = scratch_dir("raw_header");
  const ScalarTimeSeries s(GridTopology(2, 2, true), 1, 6.0, {0.0, 1.0, 2.0, 3.0});
  write_raw_f64(dir / "s.ttsf", s);
  std::ifstream in(dir / "s.ttsf", std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() == 4 + 4 + 12 + 1 + 8 + 4 * 8);
  CHECK(std::string(bytes.data(), 4) == "TTSF");
  std::uint32_t u[4];
  std::memcpy(u, bytes.data() + 4, 16);
  CHECK(u[0] == 1);
  CHECK(u[1] == 2);
  CHECK(u[2] == 2);
  CHECK(u[3] == 1);
  CHECK(bytes[20] == 1);
  double dt;
  std::memcpy(&dt, bytes.data() + 21, 8);
  CHECK(dt == 6.0);
}

TEST_CASE("2x2 single step reads back its range") {
  const auto dir = scratch_dir("tiny");
  write_raw_f64(dir / "t.ttsf", ScalarTimeSeries(GridTopology(2, 2), 1, 1.0, {0, 1, 2, 3}));
  const auto s = load_series(dir / "t.ttsf", SeriesFormat::raw_f64);
  CHECK(s.field_range().min == 0.0);
  CHECK(s.field_range().max == 3.0);
  CHECK(s.num_timesteps() == 1);
}

TEST_CASE("truncated raw file is a dimension mismatch") {
  const auto dir = scratch_dir("truncated");
  const auto s = random_series(5, 5, 1, 3);
  write_raw_f64(dir / "s.ttsf", s);
  fs::resize_file(dir / "s.ttsf", fs::file_size(dir / "s.ttsf") - sizeof(double));
  try {
    (void)load_series(dir / "s.ttsf", SeriesFormat::raw_f64);
    FAIL("expected an IngestError");
  } catch (const IngestError& e) {
    CHECK(e.kind() == IngestError::Kind::dimension_mismatch);
  }
}

TEST_CASE("declared metadata must match the file") {
  const auto dir = scratch_dir("meta");
  write_raw_f64(dir / "s.ttsf", random_series(6, 4, 2, 5));
  SeriesMeta meta;
  meta.topology = GridTopology(4, 6);
  CHECK_THROWS_AS(load_series(dir / "s.ttsf", SeriesFormat::raw_f64, meta), IngestError);
  meta.topology = GridTopology(6, 4);
  meta.num_timesteps = 2;
  meta.geo = GeoAxes{0, 1.125, -90, 1.125};
  const auto s = load_series(dir / "s.ttsf", SeriesFormat::raw_f64, meta);
  CHECK(s.geo().has_value());
}

TEST_CASE("non-finite samples are reported with their location") {
  const auto dir = scratch_dir("nan");
  // Bypass ScalarTimeSeries validation by patching the bytes on disk.
  write_raw_f64(dir / "s.ttsf", ScalarTimeSeries(GridTopology(3, 2), 2, 1.0,
                                                 std::vector<double>(12, 1.0)));
  {
    std::fstream f(dir / "s.ttsf", std::ios::in | std::ios::out | std::ios::binary);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    f.seekp(29 + (6 + 4) * 8);
    f.write(reinterpret_cast<const char*>(&nan), 8);
  }
  try {
    (void)load_series(dir / "s.ttsf", SeriesFormat::raw_f64);
    FAIL("expected an IngestError");
  } catch (const IngestError& e) {
    CHECK(e.kind() == IngestError::Kind::non_finite);
    CHECK(e.timestep() == 1u);
    CHECK(e.vertex() == 4u);
  }
}

TEST_CASE("csv-stack round trip and error paths") {
  const auto dir = scratch_dir("csv");
  const auto s = random_series(4, 3, 2, 9);
  write_csv_stack(dir, s);
  const auto back = load_series(dir / "manifest.json", SeriesFormat::csv_stack);
  CHECK(back.topology() == s.topology());
  CHECK(back.num_timesteps() == 2);
  for (std::size_t i = 0; i < s.values().size(); ++i) CHECK(back.values()[i] == s.values()[i]);

  {
    std::ofstream(dir / "step_0001.csv") << "1,2,3,4\n5,6,7,8\n9,10,nan,12\n";
  }
  try {
    (void)load_series(dir / "manifest.json", SeriesFormat::csv_stack);
    FAIL("expected an IngestError");
  } catch (const IngestError& e) {
    CHECK(e.kind() == IngestError::Kind::non_finite);
    CHECK(e.timestep() == 1u);
    CHECK(e.vertex() == 10u);
  }
  { std::ofstream(dir / "step_0001.csv") << "1,2,3,4\n5,6,7,8\n9,10,11\n"; }
  CHECK_THROWS_AS(load_series(dir / "manifest.json", SeriesFormat::csv_stack), IngestError);
  CHECK_THROWS_AS(load_series(dir / "missing.json", SeriesFormat::csv_stack), IngestError);
}

TEST_CASE("series invariants") {
  CHECK_THROWS_AS(ScalarTimeSeries(GridTopology(2, 2), 1, 1.0, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(ScalarTimeSeries(GridTopology(2, 2), 1, 1.0,
                                   {1, 2, 3, std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);
  const auto s = random_series(3, 3, 4, 1);
  const auto r = s.reversed();
  CHECK(r.value(0, 4) == s.value(3, 4));
  CHECK(s.negated().field_range().max == -s.field_range().min);
  for (double x : s.values()) {
    CHECK(x >= s.field_range().min);
    CHECK(x <= s.field_range().max);
  }
}
