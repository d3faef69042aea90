#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mergelens/road_config.hpp"
#include "mergelens/track.hpp"

namespace mergelens {

/// Header names of the table columns feeding each record field.
/// Defaults follow the NGSIM trajectory export. An empty `speed` means the
/// corpus has no speed column.
struct ColumnMap {
  std::string vehicle_id = "Vehicle_ID";
  std::string frame_id = "Frame_ID";
  std::string timestamp = "Global_Time";
  std::string local_x = "Local_X";
  std::string local_y = "Local_Y";
  std::string lane_id = "Lane_ID";
  std::string speed = "v_Vel";

  /// Builds a map from header-name -> field-name pairs, e.g. {"veh", "vehicle_id"}.
  /// Fields not mentioned keep their NGSIM default.
  static ColumnMap from_header_map(const std::map<std::string, std::string>& header_to_field);
};

ColumnMap load_column_map(const std::filesystem::path& path);

/// Parses a comma-delimited table with a header row into a dataset in meters
/// and seconds. Rows are grouped per vehicle and ordered by frame, so input row
/// order does not matter. Frame gaps split a vehicle into several segments;
/// segments shorter than two samples are dropped and counted.
///
/// Throws Error with kEmptyInput, kMissingColumn or kNonMonotonicFrames.
Dataset parse_dataset(std::string_view source, const ColumnMap& columns, const RoadConfig& road);
Dataset parse_dataset(std::istream& source, const ColumnMap& columns, const RoadConfig& road);
Dataset load_dataset(const std::filesystem::path& path, const ColumnMap& columns,
                     const RoadConfig& road);

/// Loads several files concurrently; result order follows `paths`.
std::vector<Dataset> load_datasets(const std::vector<std::filesystem::path>& paths,
                                   const ColumnMap& columns, const RoadConfig& road, unsigned jobs);

/// Converts a feet-tagged dataset to meters and retags it. Meters-tagged input
/// is returned unchanged.
Dataset normalize_units(Dataset ds);

/// Writes the dataset in the input table format (NGSIM headers, meters,
/// milliseconds). Parsing the output with a meters road config reproduces the
/// tracks exactly.
void write_dataset(std::ostream& out, const Dataset& ds);
std::string dataset_to_csv(const Dataset& ds);

struct SplitFractions {
  double train = 0.7;
  double validation = 0.1;
};

/// Keeps the vehicles of the requested splits. Vehicles are assigned by id:
/// ids up to round(train * max_id) are train, up to round((train + validation) *
/// max_id) validation, the rest test.
Dataset select_split(const Dataset& ds, SplitTag splits, SplitFractions fractions = {});

struct VehicleDefects {
  std::size_t gaps = 0;
  std::size_t missing_frames = 0;
  std::size_t duplicate_frames = 0;
  std::size_t out_of_bounds_samples = 0;
  std::size_t unknown_lane_samples = 0;

  std::size_t total() const noexcept {
    return gaps + duplicate_frames + out_of_bounds_samples + unknown_lane_samples;
  }
};

struct ValidationReport {
  std::size_t vehicles = 0;
  std::size_t segments = 0;
  std::size_t samples = 0;
  std::size_t malformed_rows = 0;
  std::size_t short_segments_dropped = 0;
  std::map<VehicleId, VehicleDefects> defects;  // only vehicles with at least one defect

  std::size_t total_defects() const noexcept;
  bool clean() const noexcept { return total_defects() == 0 && malformed_rows == 0; }
};

ValidationReport validate(const Dataset& ds);
std::string validation_report_to_json(const ValidationReport& report);

}  // namespace mergelens
