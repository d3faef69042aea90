#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mergelens {

enum class UnitSystem { kFeet, kMeters };

inline constexpr double kFeetToMeters = 0.3048;

std::string_view to_string(UnitSystem units) noexcept;

/// Road geometry for one recording site.
///
/// Geometric fields are in meters regardless of `unit_system`, which names the
/// units of the trajectory files recorded at this site. Lanes are ordered from
/// the median side (index 0) toward the shoulder; lane `lane_ids[i]` occupies
/// the lateral interval [lane_boundaries[i], lane_boundaries[i + 1]).
struct RoadConfig {
  std::string site_name;
  UnitSystem unit_system = UnitSystem::kMeters;
  double frame_interval = 0.1;
  double merge_point_y = 0.0;
  int ramp_lane_id = 0;
  int outer_lane_id = 0;
  std::vector<double> lane_boundaries;
  std::vector<int> lane_ids;  // defaults to 1..N when omitted from the config file
  double neighborhood_radius = 100.0;

  double unit_scale() const noexcept {
    return unit_system == UnitSystem::kFeet ? kFeetToMeters : 1.0;
  }

  std::size_t lane_count() const noexcept { return lane_ids.size(); }

  /// Position of `lane` in median-to-shoulder order, if the lane is known.
  std::optional<std::size_t> lane_index(int lane) const noexcept;

  /// Lane containing lateral position `x`; nullopt outside the outermost boundaries.
  std::optional<int> lane_at(double x) const noexcept;

  /// Lateral coordinate of the middle of `lane`.
  double lane_center(int lane) const;

  /// True for mainline lanes at or inside the outer lane.
  bool is_mainline_at_or_inside_outer(int lane) const noexcept;

  /// Throws Error(kInvalidConfig) naming the first violated invariant.
  void check() const;
};

RoadConfig parse_road_config(std::string_view text);
RoadConfig load_road_config(const std::filesystem::path& path);
std::string road_config_to_text(const RoadConfig& road);

}  // namespace mergelens
