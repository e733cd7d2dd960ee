#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "toptrack/series.hpp"

namespace toptrack {

enum class SeriesFormat { csv_stack, raw_f64 };

SeriesFormat parse_series_format(std::string_view s);

class IngestError : public std::runtime_error {
 public:
  enum class Kind { unreadable, dimension_mismatch, non_finite, malformed };

  IngestError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IngestError(Kind kind, const std::string& what, Timestep t, VertexId v)
      : std::runtime_error(what), kind_(kind), timestep_(t), vertex_(v) {}

  Kind kind() const noexcept { return kind_; }
  /// Location of the offending sample for Kind::non_finite.
  std::optional<Timestep> timestep() const noexcept { return timestep_; }
  std::optional<VertexId> vertex() const noexcept { return vertex_; }

 private:
  Kind kind_;
  std::optional<Timestep> timestep_;
  std::optional<VertexId> vertex_;
};

/// Caller-declared metadata. Anything set here must agree with what the
/// file declares; geo is attached when the file carries none.
struct SeriesMeta {
  std::optional<GridTopology> topology;
  std::optional<std::uint32_t> num_timesteps;
  std::optional<double> dt_hours;
  std::optional<GeoAxes> geo;
};

/// raw-f64 layout (little-endian):
///   "TTSF" | u32 version=1 | u32 width | u32 height | u32 steps | u8 wrap_x
///   | f64 dt_hours | steps*height*width f64 samples, row-major per step.
///
/// csv-stack: a JSON manifest
///   {"width", "height", "wrap_x", "dt_hours", "timesteps": [paths...],
///    "geo": {"lon0","dlon","lat0","dlat"}?}
/// with one CSV per timestep holding height rows of width values.
/// Paths are relative to the manifest.
ScalarTimeSeries load_series(const std::filesystem::path& path, SeriesFormat format,
                             const SeriesMeta& meta = {});

void write_raw_f64(const std::filesystem::path& path, const ScalarTimeSeries& series);

/// Writes manifest.json plus step_NNNN.csv files into dir.
void write_csv_stack(const std::filesystem::path& dir, const ScalarTimeSeries& series);

}  // namespace toptrack
