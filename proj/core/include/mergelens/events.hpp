#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "mergelens/kinematics.hpp"
#include "mergelens/road_config.hpp"
#include "mergelens/track.hpp"

namespace mergelens {

struct MergeEvent {
  VehicleId merger_id{};
  double t_m = 0.0;      // first frame in the outer lane
  double merge_y = 0.0;  // merger's longitudinal position at t_m
  std::optional<VehicleId> highway_id;
  double pairing_score = std::numeric_limits<double>::quiet_NaN();  // |TTA gap| at pairing time
};

enum class LaneChangeDirection { kTowardMedian, kTowardShoulder };
std::string_view to_string(LaneChangeDirection d) noexcept;

struct LaneChangeEvent {
  VehicleId vehicle_id{};
  double t_lc = 0.0;  // first frame in the new lane
  int from_lane = 0;
  int to_lane = 0;
  LaneChangeDirection direction = LaneChangeDirection::kTowardMedian;

  friend bool operator==(const LaneChangeEvent&, const LaneChangeEvent&) = default;
};

struct PassFirstOutcome {
  VehicleId merger_id{};
  VehicleId highway_id{};
  double highway_cross_t = 0.0;
  double merger_cross_t = 0.0;
  bool highway_passed_first = false;
  bool exact_tie = false;
};

/// Frames a new lane must be held before a merge or lane change is confirmed.
inline constexpr std::size_t kDefaultPersistenceFrames = 10;

/// One event per vehicle whose lane goes from the ramp lane straight to the
/// outer lane and then stays at or inside the outer lane for `persistence`
/// frames. Only the first qualifying transition counts. Result is ordered by
/// merger id.
std::vector<MergeEvent> detect_merges(const Dataset& ds,
                                      std::size_t persistence = kDefaultPersistenceFrames);

/// Picks the highway vehicle the merger interacts with. At t_m - tau_max the
/// candidates are outer-lane vehicles with valid kinematics that are still
/// upstream of merge_y; the one with the smallest |TTA gap| to the merger wins,
/// ties going to the lower id.
///
/// Throws Error(kNoCandidate) when nobody qualifies, kInsufficientHistory or
/// kDegenerateSpeed when the merger's own state at t_m - tau_max is unusable.
MergeEvent pair_interacting_vehicle(const Dataset& ds, const MergeEvent& event, double tau_max = 5.0,
                                    const KinematicsConfig& config = {});

/// Lane changes whose first frame in the new lane lies in the closed window
/// [t_a, t_b]. Persistence may be confirmed with samples after t_b. A jump
/// across several lanes is reported as one adjacent step per lane crossed;
/// changes involving lanes unknown to `road` are not reported. With
/// `confirm_at_end` a new lane held until the last sample counts even when the
/// track ends before `persistence` frames have passed (for truncated tracks).
///
/// Throws Error(kOutOfRange) when the window is not inside the track.
std::vector<LaneChangeEvent> detect_lane_changes(const VehicleTrack& track, double t_a, double t_b,
                                                 const RoadConfig& road,
                                                 std::size_t persistence = kDefaultPersistenceFrames,
                                                 bool confirm_at_end = false);

/// Time at which y first rises through `target` (linear interpolation between
/// the straddling samples). nullopt if the track never goes from below to at
/// or above the target.
std::optional<double> crossing_time(const VehicleTrack& track, double target_y) noexcept;

/// Who passed the event's merge position first.
/// Throws Error(kNeverCrosses) if either vehicle is not observed crossing.
PassFirstOutcome pass_first_outcome(const Dataset& ds, const MergeEvent& event);
PassFirstOutcome pass_first_outcome(const VehicleTrack& highway, const VehicleTrack& merger,
                                    const MergeEvent& event);

}  // namespace mergelens
