#include "mergelens/road_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mergelens/error.hpp"

namespace mergelens {

using nlohmann::json;

std::string_view to_string(UnitSystem units) noexcept {
  return units == UnitSystem::kFeet ? "feet" : "meters";
}

std::optional<std::size_t> RoadConfig::lane_index(int lane) const noexcept {
  auto it = std::find(lane_ids.begin(), lane_ids.end(), lane);
  if (it == lane_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - lane_ids.begin());
}

std::optional<int> RoadConfig::lane_at(double x) const noexcept {
  if (lane_boundaries.size() < 2 || !(x >= lane_boundaries.front()) ||
      !(x <= lane_boundaries.back())) {
    return std::nullopt;
  }
  auto it = std::upper_bound(lane_boundaries.begin(), lane_boundaries.end(), x);
  auto idx = static_cast<std::size_t>(it - lane_boundaries.begin());
  // x == back() lands one past the last lane
  idx = std::min(idx, lane_boundaries.size() - 1);
  return lane_ids[idx - 1];
}

double RoadConfig::lane_center(int lane) const {
  auto idx = lane_index(lane);
  if (!idx) {
    throw Error(ErrorCode::kInvalidArgument, "lane " + std::to_string(lane) + " not in road");
  }
  return 0.5 * (lane_boundaries[*idx] + lane_boundaries[*idx + 1]);
}

bool RoadConfig::is_mainline_at_or_inside_outer(int lane) const noexcept {
  auto idx = lane_index(lane);
  auto outer = lane_index(outer_lane_id);
  return idx && outer && *idx <= *outer && lane != ramp_lane_id;
}

void RoadConfig::check() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (!(frame_interval > 0.0)) fail("frame_interval must be > 0");
  if (ramp_lane_id == outer_lane_id) fail("ramp_lane_id must differ from outer_lane_id");
  if (lane_boundaries.size() < 2) fail("lane_boundaries needs at least two entries");
  for (std::size_t i = 1; i < lane_boundaries.size(); ++i) {
    if (!(lane_boundaries[i] > lane_boundaries[i - 1])) {
      fail("lane_boundaries must be strictly increasing");
    }
  }
  if (lane_ids.size() + 1 != lane_boundaries.size()) {
    fail("lane_ids must have one entry per lane (lane_boundaries.size() - 1)");
  }
  auto sorted = lane_ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail("lane_ids must be unique");
  }
  if (!lane_index(ramp_lane_id)) fail("ramp_lane_id not among lane_ids");
  if (!lane_index(outer_lane_id)) fail("outer_lane_id not among lane_ids");
  if (!(neighborhood_radius > 0.0)) fail("neighborhood_radius must be > 0");
}

namespace {

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::kInvalidConfig, std::string("missing key '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

UnitSystem parse_units(const std::string& s) {
  if (s == "feet" || s == "ft") return UnitSystem::kFeet;
  if (s == "meters" || s == "m") return UnitSystem::kMeters;
  throw Error(ErrorCode::kInvalidConfig, "unit_system must be 'feet' or 'meters', got '" + s + "'");
}

}  // namespace

RoadConfig parse_road_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("road config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "road config must be an object");

  RoadConfig road;
  road.site_name = required<std::string>(j, "site_name");
  road.unit_system = parse_units(required<std::string>(j, "unit_system"));
  road.frame_interval = required<double>(j, "frame_interval");
  road.merge_point_y = required<double>(j, "merge_point_y");
  road.ramp_lane_id = required<int>(j, "ramp_lane_id");
  road.outer_lane_id = required<int>(j, "outer_lane_id");
  road.lane_boundaries = required<std::vector<double>>(j, "lane_boundaries");
  if (j.contains("lane_ids")) {
    road.lane_ids = required<std::vector<int>>(j, "lane_ids");
  } else {
    for (std::size_t i = 1; i < road.lane_boundaries.size(); ++i) {
      road.lane_ids.push_back(static_cast<int>(i));
    }
  }
  if (j.contains("neighborhood_radius")) {
    road.neighborhood_radius = required<double>(j, "neighborhood_radius");
  }
  road.check();
  return road;
}

RoadConfig load_road_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open road config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_road_config(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string road_config_to_text(const RoadConfig& road) {
  json j = {
      {"site_name", road.site_name},
      {"unit_system", std::string(to_string(road.unit_system))},
      {"frame_interval", road.frame_interval},
      {"merge_point_y", road.merge_point_y},
      {"ramp_lane_id", road.ramp_lane_id},
      {"outer_lane_id", road.outer_lane_id},
      {"lane_boundaries", road.lane_boundaries},
      {"lane_ids", road.lane_ids},
      {"neighborhood_radius", road.neighborhood_radius},
  };
  return j.dump(2) + "\n";
}

}  // namespace mergelens
