#include "mergelens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "json.hpp"
#include "mergelens/error.hpp"

namespace mergelens {

using nlohmann::json;

std::string_view to_string(CourtesyPolicy p) noexcept {
  switch (p) {
    case CourtesyPolicy::kInert: return "inert";
    case CourtesyPolicy::kCourtesyAlways: return "courtesy_always";
    case CourtesyPolicy::kCourtesyInConflict: return "courtesy_in_conflict";
  }
  return "inert";
}

CourtesyPolicy parse_courtesy_policy(std::string_view text) {
  for (auto p : {CourtesyPolicy::kInert, CourtesyPolicy::kCourtesyAlways, CourtesyPolicy::kCourtesyInConflict}) {
    if (text == to_string(p)) return p;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown courtesy policy '" + std::string(text) + "'");
}

double GroundTruth::lead_time(double tau) const {
  for (const auto& [t, v] : lead_times) {
    if (std::abs(t - tau) < 1e-9) return v;
  }
  throw Error(ErrorCode::kOutOfRange, "no expected lead time at tau " + std::to_string(tau));
}

RoadConfig synthetic_road() {
  RoadConfig r;
  r.site_name = "synthetic";
  r.unit_system = UnitSystem::kMeters;
  r.frame_interval = 0.1;
  r.merge_point_y = 200.0;
  r.ramp_lane_id = 7;
  r.outer_lane_id = 6;
  for (int i = 0; i <= 7; ++i) r.lane_boundaries.push_back(3.66 * i);
  for (int i = 1; i <= 7; ++i) r.lane_ids.push_back(i);
  r.neighborhood_radius = 100.0;
  return r;
}

namespace {

[[noreturn]] void infeasible(const std::string& what) { throw Error(ErrorCode::kInfeasibleScript, what); }

// Must match the pipeline's persistence and speed floor for the closed forms to agree.
constexpr std::size_t kPersistence = kDefaultPersistenceFrames;
constexpr double kSpeedFloor = 0.1;
constexpr double kMargin = 0.4;

struct Agent {
  VehicleId id{};
  double y0 = 0.0;
  double v = 0.0;
  std::vector<int> lanes;
  double y(double t) const { return y0 + v * t; }
};

int neighbour_lane(const RoadConfig& road, int lane, LaneChangeDirection dir) {
  const auto idx = road.lane_index(lane);
  if (!idx) infeasible("lane " + std::to_string(lane) + " is not on the road");
  if (dir == LaneChangeDirection::kTowardMedian) {
    if (*idx == 0) infeasible("no lane toward the median of lane " + std::to_string(lane));
    return road.lane_ids[*idx - 1];
  }
  if (*idx + 1 >= road.lane_count()) infeasible("no lane toward the shoulder of lane " + std::to_string(lane));
  const int to = road.lane_ids[*idx + 1];
  if (to == road.ramp_lane_id) infeasible("a highway agent cannot change into the ramp lane");
  return to;
}

}  // namespace

std::pair<Dataset, GroundTruth> generate(const ScenarioScript& script) {
  const RoadConfig& road = script.road;
  road.check();
  if (script.highway.empty()) infeasible("the script has no highway agents");
  const double dt = road.frame_interval;
  if (!(script.duration > 0.0)) throw Error(ErrorCode::kInvalidArgument, "duration must be positive");
  const auto last = static_cast<std::size_t>(std::floor(script.duration / dt + 1e-9));
  const auto frame_of = [&](double t) { return static_cast<long long>(std::llround(t / dt)); };
  const auto ok_speed = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok_speed(script.ramp.speed)) throw Error(ErrorCode::kInvalidArgument, "speeds must be non-negative");
  for (const auto& h : script.highway) {
    if (!ok_speed(h.speed) || !std::isfinite(h.y0)) throw Error(ErrorCode::kInvalidArgument, "speeds must be non-negative");
    if (h.lane_change_t && (*h.lane_change_t < 0.0 || *h.lane_change_t > script.duration)) {
      throw Error(ErrorCode::kInvalidArgument, "scripted lane change outside the duration");
    }
  }

  const std::size_t n_hw = script.highway.size();
  Agent ramp{VehicleId{static_cast<std::int64_t>(n_hw + 1)}, script.ramp.y0, script.ramp.speed, {}};
  const double P = road.merge_point_y;

  // Merge frame: first frame at or past the merge point.
  std::size_t k_m = 0;
  bool found = false;
  for (std::size_t k = 0; k <= last; ++k) {
    if (ramp.y(static_cast<double>(k) * dt) >= P) {
      k_m = k;
      found = true;
      break;
    }
  }
  if (!found) infeasible("the ramp agent never reaches the merge point");
  if (k_m == 0) infeasible("the ramp agent starts at or past the merge point");
  if (k_m + kPersistence - 1 > last) infeasible("the merge is too close to the end to be confirmed");
  const double t_m = static_cast<double>(k_m) * dt;
  const double merge_y = ramp.y(t_m);

  ramp.lanes.assign(last + 1, road.outer_lane_id);
  std::fill(ramp.lanes.begin(), ramp.lanes.begin() + static_cast<std::ptrdiff_t>(k_m), road.ramp_lane_id);

  std::vector<Agent> agents;
  std::vector<std::optional<std::pair<std::size_t, LaneChangeDirection>>> changes(n_hw);
  for (std::size_t i = 0; i < n_hw; ++i) {
    const auto& h = script.highway[i];
    agents.push_back({VehicleId{static_cast<std::int64_t>(i + 1)}, h.y0, h.speed, {}});
    if (h.lane_change_t) {
      changes[i] = std::pair{static_cast<std::size_t>(frame_of(*h.lane_change_t)), h.lane_change_direction};
    }
  }

  GroundTruth gt;
  gt.merger_id = ramp.id;
  gt.t_m = t_m;
  gt.merge_y = merge_y;

  // Pairing in closed form, with lanes as scripted so far.
  const auto lane_before_change = [&](std::size_t i, std::size_t k) {
    return !changes[i] || k < changes[i]->first;
  };
  const long long k_p = static_cast<long long>(k_m) - frame_of(script.pairing_lookback);
  const double t_p = static_cast<double>(k_p) * dt;
  const double t_end = static_cast<double>(last) * dt;
  if (k_p >= 0 && t_p - kMargin >= -1e-9 && t_p + kMargin <= t_end + 1e-9 && ramp.v >= kSpeedFloor) {
    const double tta_m = (P - ramp.y(t_p)) / ramp.v;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_hw; ++i) {
      const Agent& a = agents[i];
      if (!lane_before_change(i, static_cast<std::size_t>(k_p))) continue;
      if (a.v < kSpeedFloor || !(a.y(t_p) < merge_y)) continue;
      const double gap = std::abs((P - a.y(t_p)) / a.v - tta_m);
      if (gap < best) {
        best = gap;
        gt.intended_pair = a.id;
      }
    }
  }

  std::optional<std::size_t> pair_index;
  if (gt.intended_pair) pair_index = static_cast<std::size_t>(to_int(*gt.intended_pair) - 1);
  const auto closed_lead = [&](double tau) {
    const Agent& h = agents[*pair_index];
    const double t = t_m - tau;
    return (P - h.y(t)) / h.v - (P - ramp.y(t)) / ramp.v;
  };

  if (pair_index && !changes[*pair_index] && script.policy != CourtesyPolicy::kInert) {
    bool yield = script.policy == CourtesyPolicy::kCourtesyAlways;
    if (script.policy == CourtesyPolicy::kCourtesyInConflict && std::abs(closed_lead(1.0)) <= script.conflict_halfwidth) {
      std::mt19937_64 rng(script.seed);
      yield = script.courtesy_probability >= 1.0 ||
              std::generate_canonical<double, 53>(rng) < script.courtesy_probability;
    }
    if (yield) {
      const long long k_y = static_cast<long long>(k_m) - frame_of(script.yield_lead);
      if (k_y <= std::max(0LL, k_p)) infeasible("the yield would happen before pairing");
      changes[*pair_index] = std::pair{static_cast<std::size_t>(k_y), LaneChangeDirection::kTowardMedian};
      gt.yielded = true;
    }
  }

  for (std::size_t i = 0; i < n_hw; ++i) {
    Agent& a = agents[i];
    a.lanes.assign(last + 1, road.outer_lane_id);
    if (!changes[i]) continue;
    const auto [k_lc, dir] = *changes[i];
    if (k_lc == 0) infeasible("a lane change needs a frame before it");
    if (k_lc + kPersistence - 1 > last) infeasible("a lane change is too close to the end to be confirmed");
    const int to = neighbour_lane(road, road.outer_lane_id, dir);
    std::fill(a.lanes.begin() + static_cast<std::ptrdiff_t>(k_lc), a.lanes.end(), to);
    gt.lane_changes.push_back({a.id, static_cast<double>(k_lc) * dt, road.outer_lane_id, to, dir});
  }

  std::vector<const Agent*> all;
  for (const auto& a : agents) all.push_back(&a);
  all.push_back(&ramp);
  for (std::size_t k = 0; k <= last; ++k) {
    const double t = static_cast<double>(k) * dt;
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        if (all[i]->lanes[k] != all[j]->lanes[k]) continue;
        if (std::abs(all[i]->y(t) - all[j]->y(t)) < kMinSpacing) {
          infeasible("vehicles " + std::to_string(to_int(all[i]->id)) + " and " + std::to_string(to_int(all[j]->id)) +
                     " collide at t=" + std::to_string(t));
        }
      }
    }
  }

  if (pair_index) {
    for (int tau = 1; tau <= 5; ++tau) gt.lead_times.emplace_back(tau, closed_lead(tau));
    const Agent& h = agents[*pair_index];
    // Crossing needs a recorded sample below and one at or above merge_y.
    if (h.y0 < merge_y && h.v > 0.0) {
      const double cross = (merge_y - h.y0) / h.v;
      if (cross <= t_end) {
        PassFirstOutcome o;
        o.merger_id = ramp.id;
        o.highway_id = h.id;
        o.highway_cross_t = cross;
        o.merger_cross_t = t_m;
        o.exact_tie = cross == t_m;
        o.highway_passed_first = cross < t_m;
        gt.pass_first = o;
      }
    }
  }

  Dataset ds;
  ds.road = road;
  ds.road.unit_system = UnitSystem::kMeters;
  for (const Agent* a : all) {
    VehicleTrack tr;
    tr.vehicle_id = a->id;
    tr.first_frame = 1;
    tr.t0 = 0.0;
    tr.dt = dt;
    for (std::size_t k = 0; k <= last; ++k) {
      const double t = static_cast<double>(k) * dt;
      tr.ys.push_back(a->y(t));
      tr.xs.push_back(road.lane_center(a->lanes[k]));
      tr.lanes.push_back(a->lanes[k]);
      tr.speeds.push_back(a->v);
    }
    ds.tracks[a->id].push_back(std::move(tr));
  }
  return {std::move(ds), std::move(gt)};
}

namespace {

double draw(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
}

}  // namespace

std::vector<Scenario> generate_corpus(std::size_t n, std::uint64_t seed, const CorpusRanges& ranges) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "corpus size must be at least 1");
  ranges.road.check();
  std::mt19937_64 rng(seed);
  const double P = ranges.road.merge_point_y;
  const double dt = ranges.road.frame_interval;
  constexpr std::size_t kMaxAttempts = 100000;

  std::vector<Scenario> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int stratum = static_cast<int>(i % 3);
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      double lead = 0.0;
      if (stratum == 0) lead = draw(rng, -ranges.max_abs_lead, -2.05);
      if (stratum == 1) lead = draw(rng, -1.0, 1.0);
      if (stratum == 2) lead = draw(rng, 2.05, ranges.max_abs_lead);
      const double vm = draw(rng, ranges.min_speed, ranges.max_speed);
      const double vh = draw(rng, ranges.min_speed, ranges.max_speed);
      const double arrival = draw(rng, ranges.min_arrival, ranges.max_arrival);
      const auto extras = static_cast<std::size_t>(rng() % (ranges.max_extra_agents + 1));

      ScenarioScript s;
      s.seed = rng();
      s.road = ranges.road;
      s.policy = ranges.policy;
      s.courtesy_probability = ranges.courtesy_probability;
      s.duration = std::round((arrival + ranges.tail) / dt) * dt;
      s.ramp = {P - vm * arrival, vm};
      const double th = arrival + lead;
      s.highway.push_back({P - vh * th, vh, std::nullopt, LaneChangeDirection::kTowardMedian});
      // Extra agents sit further from the ramp agent in arrival time, so the
      // first highway agent stays the intended pair.
      double offset = 0.0;
      for (std::size_t e = 0; e < extras; ++e) {
        offset += draw(rng, 1.5, 4.0);
        const double t_e = lead <= 0.0 ? th - offset : th + offset;
        s.highway.push_back({P - vh * t_e, vh, std::nullopt, LaneChangeDirection::kTowardMedian});
      }

      try {
        auto [ds, gt] = generate(s);
        if (!gt.intended_pair || to_int(*gt.intended_pair) != 1 || !gt.pass_first) continue;
        if (std::abs(gt.pass_first->highway_cross_t - gt.t_m) < 1e-6) continue;
        const double t1 = gt.lead_time(1.0);
        const bool in_stratum = stratum == 0 ? t1 < -2.0 : stratum == 1 ? std::abs(t1) <= 1.0 : t1 > 2.0;
        if (!in_stratum) continue;
        out.push_back({std::move(s), std::move(ds), std::move(gt)});
        accepted = true;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kInfeasibleScript) throw;
      }
    }
    if (!accepted) throw Error(ErrorCode::kInfeasibleScript, "no feasible scenario for stratum " + std::to_string(stratum));
  }
  return out;
}

std::string script_to_json(const ScenarioScript& script) {
  json hw = json::array();
  for (const auto& h : script.highway) {
    json a = {{"y0", h.y0}, {"speed", h.speed}};
    if (h.lane_change_t) {
      a["lane_change_t"] = *h.lane_change_t;
      a["lane_change_direction"] = std::string(to_string(h.lane_change_direction));
    }
    hw.push_back(a);
  }
  json j = {{"seed", script.seed},
            {"duration", script.duration},
            {"policy", std::string(to_string(script.policy))},
            {"courtesy_probability", script.courtesy_probability},
            {"conflict_halfwidth", script.conflict_halfwidth},
            {"yield_lead", script.yield_lead},
            {"pairing_lookback", script.pairing_lookback},
            {"ramp", {{"y0", script.ramp.y0}, {"speed", script.ramp.speed}}},
            {"highway", hw},
            {"road", json::parse(road_config_to_text(script.road))}};
  return j.dump(2) + "\n";
}

ScenarioScript script_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("scenario script: ") + e.what());
  }
  auto need = [&](const json& obj, const char* key) -> const json& {
    if (!obj.is_object() || !obj.contains(key)) {
      throw Error(ErrorCode::kInvalidConfig, std::string("missing key '") + key + "'");
    }
    return obj.at(key);
  };
  try {
    ScenarioScript s;
    s.seed = j.value("seed", std::uint64_t{0});
    s.duration = need(j, "duration").get<double>();
    s.policy = parse_courtesy_policy(j.value("policy", std::string("inert")));
    s.courtesy_probability = j.value("courtesy_probability", 1.0);
    s.conflict_halfwidth = j.value("conflict_halfwidth", 1.0);
    s.yield_lead = j.value("yield_lead", 0.5);
    s.pairing_lookback = j.value("pairing_lookback", 5.0);
    s.road = j.contains("road") ? parse_road_config(j["road"].dump()) : synthetic_road();
    const json& ramp = need(j, "ramp");
    s.ramp = {need(ramp, "y0").get<double>(), need(ramp, "speed").get<double>()};
    for (const auto& h : need(j, "highway")) {
      HighwayAgent a{need(h, "y0").get<double>(), need(h, "speed").get<double>(), std::nullopt,
                     LaneChangeDirection::kTowardMedian};
      if (h.contains("lane_change_t")) {
        a.lane_change_t = h["lane_change_t"].get<double>();
        const auto dir = h.value("lane_change_direction", std::string("toward_median"));
        if (dir == "toward_shoulder") {
          a.lane_change_direction = LaneChangeDirection::kTowardShoulder;
        } else if (dir != "toward_median") {
          throw Error(ErrorCode::kInvalidConfig, "unknown lane change direction '" + dir + "'");
        }
      }
      s.highway.push_back(a);
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("scenario script: ") + e.what());
  }
}

std::string ground_truth_to_json(const std::vector<GroundTruth>& truths, const std::vector<std::string>& files) {
  json arr = json::array();
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto& g = truths[i];
    json lead = json::array();
    for (const auto& [tau, v] : g.lead_times) lead.push_back({{"tau", tau}, {"lead_time", v}});
    json lcs = json::array();
    for (const auto& lc : g.lane_changes) {
      lcs.push_back({{"vehicle_id", to_int(lc.vehicle_id)},
                     {"t_lc", lc.t_lc},
                     {"from_lane", lc.from_lane},
                     {"to_lane", lc.to_lane},
                     {"direction", std::string(to_string(lc.direction))}});
    }
    json e = {{"merger_id", to_int(g.merger_id)},
              {"t_m", g.t_m},
              {"merge_y", g.merge_y},
              {"intended_pair", g.intended_pair ? json(to_int(*g.intended_pair)) : json(nullptr)},
              {"lead_times", lead},
              {"lane_changes", lcs},
              {"yielded", g.yielded}};
    if (i < files.size()) e["file"] = files[i];
    if (g.pass_first) {
      e["pass_first"] = {{"highway_passed_first", g.pass_first->highway_passed_first},
                         {"highway_cross_t", g.pass_first->highway_cross_t},
                         {"merger_cross_t", g.pass_first->merger_cross_t},
                         {"exact_tie", g.pass_first->exact_tie}};
    } else {
      e["pass_first"] = nullptr;
    }
    arr.push_back(e);
  }
  return arr.dump(2) + "\n";
}

}  // namespace mergelens
