#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mergelens/road_config.hpp"

namespace mergelens {

enum class VehicleId : std::int64_t {};

constexpr std::int64_t to_int(VehicleId id) noexcept { return static_cast<std::int64_t>(id); }

/// One gap-free, uniformly sampled segment of a vehicle's trajectory.
///
/// Times are seconds relative to the owning dataset's epoch; positions are
/// meters. `speeds` is either empty or parallel to `ys` (m/s, from the corpus).
struct VehicleTrack {
  VehicleId vehicle_id{};
  std::int64_t first_frame = 0;
  double t0 = 0.0;
  double dt = 0.1;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<int> lanes;
  std::vector<double> speeds;

  std::size_t size() const noexcept { return ys.size(); }
  double time_at(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
  double t_end() const noexcept { return time_at(size() - 1); }

  /// Fractional sample position of time `t`.
  double position_of(double t) const noexcept { return (t - t0) / dt; }

  /// Sample index of `t` if `t` falls on the sampling grid (within 1e-6 frames).
  bool on_grid(double t, std::size_t& index) const noexcept;

  /// True when t0 - eps <= t <= t_end + eps with eps = 1e-6 frames.
  bool covers(double t) const noexcept;

  /// Lane occupied at time `t` (nearest sample). Requires covers(t).
  int lane_at(double t) const noexcept;

  /// Linearly interpolated position at time `t`. Requires covers(t).
  double y_at(double t) const noexcept;
  double x_at(double t) const noexcept;

  /// Throws Error(kInvalidArgument) if the structural invariants do not hold.
  void check() const;
};

enum class SplitTag : unsigned {
  kTrain = 1u,
  kValidation = 2u,
  kTest = 4u,
  kAll = 7u,
};

constexpr SplitTag operator|(SplitTag a, SplitTag b) noexcept {
  return static_cast<SplitTag>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool includes(SplitTag set, SplitTag member) noexcept {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(member)) ==
         static_cast<unsigned>(member);
}
std::string to_string(SplitTag tag);
/// Accepts "train", "validation", "test", "all" and '+'-joined combinations.
SplitTag parse_split_tag(std::string_view text);

/// Counters gathered while parsing; carried by the dataset for validation reports.
struct ParseReport {
  std::size_t rows = 0;
  std::size_t malformed_rows = 0;
  std::size_t duplicate_rows = 0;
  std::size_t short_segments_dropped = 0;
  std::vector<std::size_t> malformed_lines;  // first few 1-based line numbers
  std::map<VehicleId, std::size_t> duplicates_by_vehicle;
};

using TrackMap = std::map<VehicleId, std::vector<VehicleTrack>>;

/// All tracks of one recording. Immutable once built; share by const reference.
struct Dataset {
  RoadConfig road;
  TrackMap tracks;  // segments of each vehicle, ordered by t0
  SplitTag split = SplitTag::kAll;
  std::int64_t epoch_ms = 0;  // wall-clock time of t = 0
  std::string source;         // file the dataset was read from, if any
  ParseReport parse_report;

  std::size_t vehicle_count() const noexcept { return tracks.size(); }
  std::size_t segment_count() const noexcept;

  /// Segment of `id` that covers time `t`, or nullptr.
  const VehicleTrack* find_track(VehicleId id, double t) const noexcept;
};

}  // namespace mergelens
