#include "mergelens/events.hpp"

#include <cmath>
#include <string>

namespace mergelens {

std::string_view to_string(LaneChangeDirection d) noexcept {
  return d == LaneChangeDirection::kTowardMedian ? "toward_median" : "toward_shoulder";
}

namespace {

template <typename Pred>
bool holds_for(const std::vector<int>& lanes, std::size_t from, std::size_t count, Pred pred,
               bool until_end = false) {
  if (from + count > lanes.size()) {
    if (!until_end) return false;
    count = lanes.size() - from;
  }
  for (std::size_t i = from; i < from + count; ++i) {
    if (!pred(lanes[i])) return false;
  }
  return true;
}

std::optional<MergeEvent> find_merge(const VehicleTrack& seg, const RoadConfig& road,
                                     std::size_t persistence) {
  for (std::size_t i = 1; i < seg.size(); ++i) {
    if (seg.lanes[i - 1] != road.ramp_lane_id || seg.lanes[i] != road.outer_lane_id) continue;
    bool persists = holds_for(seg.lanes, i, std::max<std::size_t>(persistence, 1),
                              [&](int lane) { return road.is_mainline_at_or_inside_outer(lane); });
    if (!persists) continue;
    MergeEvent e;
    e.merger_id = seg.vehicle_id;
    e.t_m = seg.time_at(i);
    e.merge_y = seg.ys[i];
    return e;
  }
  return std::nullopt;
}

}  // namespace

std::vector<MergeEvent> detect_merges(const Dataset& ds, std::size_t persistence) {
  std::vector<MergeEvent> events;
  for (const auto& [id, segments] : ds.tracks) {
    for (const auto& seg : segments) {
      if (auto e = find_merge(seg, ds.road, persistence)) {
        events.push_back(*e);
        break;
      }
    }
  }
  return events;
}

MergeEvent pair_interacting_vehicle(const Dataset& ds, const MergeEvent& event, double tau_max,
                                    const KinematicsConfig& config) {
  const double t_p = event.t_m - tau_max;
  const double margin = config.margin(ds.road.frame_interval);
  auto usable = [&](const VehicleTrack* track) {
    return track && track->covers(t_p - margin) && track->covers(t_p + margin);
  };

  const VehicleTrack* merger = ds.find_track(event.merger_id, t_p);
  if (!usable(merger)) {
    throw Error(ErrorCode::kInsufficientHistory, "merging vehicle " + std::to_string(to_int(event.merger_id)) +
                                                     " not observed at t=" + std::to_string(t_p));
  }
  const KinematicState merger_state = kinematic_state(*merger, t_p, ds.road, config);
  if (!merger_state.valid) {
    throw Error(ErrorCode::kDegenerateSpeed, "merging vehicle " + std::to_string(to_int(event.merger_id)) +
                                                 " too slow at pairing time");
  }
  const double merger_tta = merger_state.time_to_arrival();

  std::optional<VehicleId> best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& [id, segments] : ds.tracks) {
    if (id == event.merger_id) continue;
    const VehicleTrack* track = ds.find_track(id, t_p);
    if (!usable(track)) continue;
    if (track->lane_at(t_p) != ds.road.outer_lane_id) continue;
    if (!(track->y_at(t_p) < event.merge_y)) continue;
    const KinematicState s = kinematic_state(*track, t_p, ds.road, config);
    if (!s.valid) continue;
    const double gap = std::abs(s.time_to_arrival() - merger_tta);
    if (gap < best_gap) {  // ascending id order makes ties go to the lower id
      best_gap = gap;
      best = id;
    }
  }
  if (!best) {
    throw Error(ErrorCode::kNoCandidate, "no outer-lane vehicle qualifies for merger " +
                                             std::to_string(to_int(event.merger_id)));
  }
  MergeEvent paired = event;
  paired.highway_id = best;
  paired.pairing_score = best_gap;
  return paired;
}

std::vector<LaneChangeEvent> detect_lane_changes(const VehicleTrack& track, double t_a, double t_b,
                                                 const RoadConfig& road, std::size_t persistence,
                                                 bool confirm_at_end) {
  if (!(t_a <= t_b) || !track.covers(t_a) || !track.covers(t_b)) {
    throw Error(ErrorCode::kOutOfRange, "window [" + std::to_string(t_a) + ", " + std::to_string(t_b) +
                                            "] outside track of vehicle " +
                                            std::to_string(to_int(track.vehicle_id)));
  }
  persistence = std::max<std::size_t>(persistence, 1);
  const double eps = 1e-6 * track.dt;
  std::vector<LaneChangeEvent> out;
  int current = track.lanes.front();
  for (std::size_t i = 1; i < track.size(); ++i) {
    const int lane = track.lanes[i];
    if (lane == current) continue;
    if (!holds_for(track.lanes, i, persistence, [lane](int l) { return l == lane; }, confirm_at_end)) continue;
    const double t = track.time_at(i);
    const auto from = road.lane_index(current);
    const auto to = road.lane_index(lane);
    if (from && to && t >= t_a - eps && t <= t_b + eps) {
      const bool inward = *to < *from;
      const auto step = [&](std::size_t idx) { return inward ? idx - 1 : idx + 1; };
      for (std::size_t idx = *from; idx != *to; idx = step(idx)) {
        out.push_back(LaneChangeEvent{track.vehicle_id, t, road.lane_ids[idx], road.lane_ids[step(idx)],
                                      inward ? LaneChangeDirection::kTowardMedian
                                             : LaneChangeDirection::kTowardShoulder});
      }
    }
    current = lane;
    i += persistence - 1;
  }
  return out;
}

std::optional<double> crossing_time(const VehicleTrack& track, double target_y) noexcept {
  for (std::size_t j = 1; j < track.size(); ++j) {
    if (!(track.ys[j - 1] < target_y) || !(track.ys[j] >= target_y)) continue;
    if (track.ys[j] == target_y) return track.time_at(j);
    const double f = (target_y - track.ys[j - 1]) / (track.ys[j] - track.ys[j - 1]);
    return track.time_at(j - 1) + f * track.dt;
  }
  return std::nullopt;
}

PassFirstOutcome pass_first_outcome(const VehicleTrack& highway, const VehicleTrack& merger,
                                    const MergeEvent& event) {
  const auto h = crossing_time(highway, event.merge_y);
  const auto m = crossing_time(merger, event.merge_y);
  if (!h || !m) {
    throw Error(ErrorCode::kNeverCrosses,
                std::string(!h ? "highway" : "merging") + " vehicle " +
                    std::to_string(to_int(!h ? highway.vehicle_id : merger.vehicle_id)) +
                    " not observed crossing y=" + std::to_string(event.merge_y));
  }
  PassFirstOutcome out;
  out.merger_id = event.merger_id;
  out.highway_id = highway.vehicle_id;
  out.highway_cross_t = *h;
  out.merger_cross_t = *m;
  out.exact_tie = *h == *m;
  out.highway_passed_first = *h < *m;
  return out;
}

PassFirstOutcome pass_first_outcome(const Dataset& ds, const MergeEvent& event) {
  if (!event.highway_id) {
    throw Error(ErrorCode::kInvalidArgument, "merge event is not paired");
  }
  auto first_crossing_segment = [&](VehicleId id) -> const VehicleTrack* {
    auto it = ds.tracks.find(id);
    if (it == ds.tracks.end()) return nullptr;
    for (const auto& seg : it->second) {
      if (crossing_time(seg, event.merge_y)) return &seg;
    }
    return it->second.empty() ? nullptr : &it->second.back();
  };
  const VehicleTrack* h = first_crossing_segment(*event.highway_id);
  const VehicleTrack* m = first_crossing_segment(event.merger_id);
  if (!h || !m) {
    throw Error(ErrorCode::kNeverCrosses, "vehicle missing from dataset");
  }
  return pass_first_outcome(*h, *m, event);
}

}  // namespace mergelens
