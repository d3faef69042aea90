#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mergelens/events.hpp"
#include "mergelens/road_config.hpp"
#include "mergelens/track.hpp"

namespace mergelens {

enum class CourtesyPolicy {
  kInert,               // nobody yields
  kCourtesyAlways,      // the paired highway vehicle always yields
  kCourtesyInConflict,  // it yields with probability p when |T| <= conflict half-width
};

std::string_view to_string(CourtesyPolicy p) noexcept;
CourtesyPolicy parse_courtesy_policy(std::string_view text);

struct HighwayAgent {
  double y0 = 0.0;
  double speed = 0.0;
  std::optional<double> lane_change_t;
  LaneChangeDirection lane_change_direction = LaneChangeDirection::kTowardMedian;
};

struct RampAgent {
  double y0 = 0.0;
  double speed = 0.0;
};

/// Constant-speed agents: highway vehicles start in the outer lane, the ramp
/// vehicle switches to the outer lane at the first frame at or past the merge
/// point. Highway agent i gets id i + 1, the ramp agent id N + 1.
struct ScenarioScript {
  std::uint64_t seed = 0;
  std::vector<HighwayAgent> highway;
  RampAgent ramp;
  RoadConfig road;
  double duration = 20.0;
  CourtesyPolicy policy = CourtesyPolicy::kInert;
  double courtesy_probability = 1.0;  // for kCourtesyInConflict
  double conflict_halfwidth = 1.0;
  double yield_lead = 0.5;  // a yielding vehicle leaves this long before t_m
  double pairing_lookback = 5.0;
};

struct GroundTruth {
  VehicleId merger_id{};
  double t_m = 0.0;
  double merge_y = 0.0;
  std::optional<VehicleId> intended_pair;
  std::vector<std::pair<double, double>> lead_times;  // (tau, T) for tau = 1..5
  std::optional<PassFirstOutcome> pass_first;
  std::vector<LaneChangeEvent> lane_changes;  // every scripted change, all agents
  bool yielded = false;

  double lead_time(double tau) const;
};

/// Minimum gap between two agents sharing a lane.
inline constexpr double kMinSpacing = 4.5;

/// Straight road: lanes 1..7 of 3.66 m, ramp lane 7, outer lane 6, merge point at 200 m.
RoadConfig synthetic_road();

/// Throws Error(kInfeasibleScript) when the script has no highway agents, the
/// ramp agent never reaches the merge point early enough to confirm the merge,
/// or two agents in one lane come closer than kMinSpacing.
std::pair<Dataset, GroundTruth> generate(const ScenarioScript& script);

struct CorpusRanges {
  double min_speed = 8.0;
  double max_speed = 20.0;
  double min_arrival = 9.0;  // ramp agent's time to the merge point
  double max_arrival = 13.0;
  double max_abs_lead = 4.5;
  std::size_t max_extra_agents = 2;
  double tail = 7.0;  // seconds recorded after the merge
  CourtesyPolicy policy = CourtesyPolicy::kInert;
  double courtesy_probability = 1.0;
  RoadConfig road = synthetic_road();
};

struct Scenario {
  ScenarioScript script;
  Dataset dataset;
  GroundTruth truth;
};

/// `n` scenarios cycling through the lead-time strata T < -2, |T| <= 1 and
/// T > 2 (closed form, paired vehicle). Infeasible draws are rejected and
/// redrawn. The corpus depends only on `n`, `seed` and `ranges`.
/// Throws Error(kInvalidArgument) for n == 0.
std::vector<Scenario> generate_corpus(std::size_t n, std::uint64_t seed, const CorpusRanges& ranges = {});

std::string script_to_json(const ScenarioScript& script);
ScenarioScript script_from_json(std::string_view text);
std::string ground_truth_to_json(const std::vector<GroundTruth>& truths, const std::vector<std::string>& files);

}  // namespace mergelens
