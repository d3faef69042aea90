#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "mergelens/error.hpp"
#include "mergelens/road_config.hpp"
#include "mergelens/track.hpp"

namespace mergelens {

struct MergeEvent;

struct KinematicsConfig {
  /// Speeds below this make time-to-arrival meaningless; such samples are excluded.
  double speed_floor = 0.1;
  /// Span of the moving average applied to y before differencing.
  double smoothing_window = 0.5;
  /// Span of the symmetric difference.
  double difference_window = 0.5;
  /// Use the corpus speed column instead of differencing positions.
  bool use_speed_column = false;

  /// Samples on each side of the moving-average centre.
  std::size_t smoothing_half_width(double dt) const noexcept;
  /// Samples on each side of the difference centre (at least 1).
  std::size_t difference_half_width(double dt) const noexcept;
  /// Seconds of track needed on each side of t for estimate_velocity.
  double margin(double dt) const noexcept;
};

/// Longitudinal speed at time `t` (m/s, signed). Positions are smoothed with a
/// centred moving average, then differenced symmetrically; both windows are
/// odd sample counts. Off-grid times interpolate between neighbouring samples.
///
/// Throws Error(kOutOfRange) when the windows do not fit inside the track.
double estimate_velocity(const VehicleTrack& track, double t, const KinematicsConfig& config = {});

/// merge_point_y - y(t); positive upstream of the merge point.
/// Throws Error(kOutOfRange) when `t` is outside the track.
double distance_to_merge(const VehicleTrack& track, double t, const RoadConfig& road);

/// Highway minus merger time-to-arrival: d_h / v_h - d_m / v_m.
/// Throws Error(kDegenerateSpeed) if either speed is below `speed_floor`.
double compute_lead_time(double d_h, double v_h, double d_m, double v_m, double speed_floor = 0.1);

struct KinematicState {
  double t = 0.0;
  double speed_long = 0.0;
  double dist_to_merge = 0.0;
  bool valid = false;

  double time_to_arrival() const noexcept { return dist_to_merge / speed_long; }
};

/// State at `t`; `valid` is false when the speed is under the floor.
/// Throws Error(kOutOfRange) like estimate_velocity.
KinematicState kinematic_state(const VehicleTrack& track, double t, const RoadConfig& road,
                               const KinematicsConfig& config = {});

struct LeadTimeSample {
  double tau = 0.0;
  double lead_time = 0.0;
  KinematicState highway_state;
  KinematicState merger_state;
  bool valid = false;
  std::optional<ErrorCode> invalid_reason;
};

/// Lead time of the highway vehicle at t_m - tau for a paired event.
/// Degenerate speeds yield an invalid sample rather than an exception.
///
/// Throws Error(kInvalidArgument) if tau is shorter than one frame and
/// Error(kInsufficientHistory) if either track cannot support the estimate.
LeadTimeSample lead_time_at(const MergeEvent& event, double tau, const Dataset& ds,
                            const KinematicsConfig& config = {});

}  // namespace mergelens
