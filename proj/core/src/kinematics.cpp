#include "mergelens/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "mergelens/events.hpp"

namespace mergelens {

namespace {

std::size_t half_width(double window, double dt) noexcept {
  if (!(window > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(window / (2.0 * dt) + 1e-9));
}

double smoothed(const std::vector<double>& ys, std::size_t i, std::size_t m) noexcept {
  double sum = 0.0;
  for (std::size_t j = i - m; j <= i + m; ++j) sum += ys[j];
  return sum / static_cast<double>(2 * m + 1);
}

}  // namespace

std::size_t KinematicsConfig::smoothing_half_width(double dt) const noexcept {
  return half_width(smoothing_window, dt);
}

std::size_t KinematicsConfig::difference_half_width(double dt) const noexcept {
  return std::max<std::size_t>(1, half_width(difference_window, dt));
}

double KinematicsConfig::margin(double dt) const noexcept {
  if (use_speed_column) return 0.0;
  return static_cast<double>(smoothing_half_width(dt) + difference_half_width(dt)) * dt;
}

double estimate_velocity(const VehicleTrack& track, double t, const KinematicsConfig& config) {
  const double margin = config.margin(track.dt);
  if (!track.covers(t - margin) || !track.covers(t + margin)) {
    throw Error(ErrorCode::kOutOfRange,
                "t=" + std::to_string(t) + " outside usable span of vehicle " +
                    std::to_string(to_int(track.vehicle_id)));
  }
  const double last = static_cast<double>(track.size() - 1);

  if (config.use_speed_column) {
    if (track.speeds.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "track carries no speed column");
    }
    double pos = std::clamp(track.position_of(t), 0.0, last);
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= track.size()) return track.speeds.back();
    double f = pos - static_cast<double>(i);
    return f < 1e-6 ? track.speeds[i] : track.speeds[i] + f * (track.speeds[i + 1] - track.speeds[i]);
  }

  const std::size_t m = config.smoothing_half_width(track.dt);
  const std::size_t k = config.difference_half_width(track.dt);
  const std::size_t reach = m + k;
  auto at_sample = [&](std::size_t i) {
    return (smoothed(track.ys, i + k, m) - smoothed(track.ys, i - k, m)) /
           (2.0 * static_cast<double>(k) * track.dt);
  };

  std::size_t idx = 0;
  if (track.on_grid(t, idx)) {
    idx = std::clamp(idx, reach, track.size() - 1 - reach);
    return at_sample(idx);
  }
  double pos = track.position_of(t);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  double f = pos - static_cast<double>(lo);
  if (lo < reach || lo + 1 + reach > track.size() - 1) {
    throw Error(ErrorCode::kOutOfRange, "t=" + std::to_string(t) + " too close to track end");
  }
  return (1.0 - f) * at_sample(lo) + f * at_sample(lo + 1);
}

double distance_to_merge(const VehicleTrack& track, double t, const RoadConfig& road) {
  if (!track.covers(t)) {
    throw Error(ErrorCode::kOutOfRange, "t=" + std::to_string(t) + " outside track of vehicle " +
                                            std::to_string(to_int(track.vehicle_id)));
  }
  return road.merge_point_y - track.y_at(t);
}

double compute_lead_time(double d_h, double v_h, double d_m, double v_m, double speed_floor) {
  if (!(v_h >= speed_floor) || !(v_m >= speed_floor)) {
    throw Error(ErrorCode::kDegenerateSpeed, "speed below floor " + std::to_string(speed_floor) +
                                                 " (v_h=" + std::to_string(v_h) +
                                                 ", v_m=" + std::to_string(v_m) + ")");
  }
  return d_h / v_h - d_m / v_m;
}

KinematicState kinematic_state(const VehicleTrack& track, double t, const RoadConfig& road,
                               const KinematicsConfig& config) {
  KinematicState s;
  s.t = t;
  s.speed_long = estimate_velocity(track, t, config);
  s.dist_to_merge = distance_to_merge(track, t, road);
  s.valid = s.speed_long > config.speed_floor && std::isfinite(s.dist_to_merge);
  return s;
}

LeadTimeSample lead_time_at(const MergeEvent& event, double tau, const Dataset& ds,
                            const KinematicsConfig& config) {
  const double dt = ds.road.frame_interval;
  if (!(tau >= dt * (1.0 - 1e-6))) {
    throw Error(ErrorCode::kInvalidArgument, "tau must be at least one frame, got " + std::to_string(tau));
  }
  if (!event.highway_id) {
    throw Error(ErrorCode::kInvalidArgument, "merge event of vehicle " +
                                                 std::to_string(to_int(event.merger_id)) + " is not paired");
  }
  const double t = event.t_m - tau;
  const double margin = config.margin(dt);
  auto state_of = [&](VehicleId id, const char* role) {
    const VehicleTrack* track = ds.find_track(id, t);
    if (!track || !track->covers(t - margin) || !track->covers(t + margin)) {
      throw Error(ErrorCode::kInsufficientHistory,
                  std::string(role) + " vehicle " + std::to_string(to_int(id)) +
                      " does not cover t=" + std::to_string(t));
    }
    return kinematic_state(*track, t, ds.road, config);
  };

  LeadTimeSample sample;
  sample.tau = tau;
  sample.highway_state = state_of(*event.highway_id, "highway");
  sample.merger_state = state_of(event.merger_id, "merging");
  if (!sample.highway_state.valid || !sample.merger_state.valid) {
    sample.invalid_reason = ErrorCode::kDegenerateSpeed;
    return sample;
  }
  sample.lead_time = compute_lead_time(sample.highway_state.dist_to_merge, sample.highway_state.speed_long,
                                       sample.merger_state.dist_to_merge, sample.merger_state.speed_long,
                                       config.speed_floor);
  sample.valid = true;
  return sample;
}

}  // namespace mergelens
