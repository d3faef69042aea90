#include <cmath>

#include "doctest.h"
#include "mergelens/events.hpp"
#include "mergelens/ingest.hpp"
#include "mergelens/synth.hpp"
#include "support.hpp"

using namespace mergelens;
using namespace mergelens::test;

namespace {

// At t = 6 the highway agent is 100 m from the merge point at 20 m/s and the
// ramp agent 60 m at 15 m/s.
ScenarioScript constant_gap_script() {
  ScenarioScript s;
  s.road = synthetic_road();
  s.highway.push_back({200.0 - 100.0 - 20.0 * 6.0, 20.0, std::nullopt, LaneChangeDirection::kTowardMedian});
  s.ramp = {200.0 - 60.0 - 15.0 * 6.0, 15.0};
  s.duration = 13.0;
  return s;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("constant speeds keep the lead time at 1 s for every tau") {
    const auto [ds, truth] = generate(constant_gap_script());
    CHECK(truth.merger_id == vid(2));
    CHECK(truth.intended_pair == vid(1));
    CHECK(truth.t_m == doctest::Approx(10.0));
    REQUIRE(truth.lead_times.size() == 5);
    for (double tau = 1.0; tau <= 5.0; tau += 1.0) {
      // Closed form: (d_h - v_h tau) / v_h - (d_m - v_m tau) / v_m with the distances at t_m - tau.
      const double t = truth.t_m - tau;
      const double d_h = 200.0 - (-20.0 + 20.0 * t);
      const double d_m = 200.0 - (50.0 + 15.0 * t);
      CHECK(std::abs(truth.lead_time(tau) - (d_h / 20.0 - d_m / 15.0)) < 1e-9);
      CHECK(std::abs(truth.lead_time(tau) - 1.0) < 1e-9);
    }
    REQUIRE(truth.pass_first.has_value());
    CHECK_FALSE(truth.pass_first->highway_passed_first);
    CHECK(truth.lane_changes.empty());
    CHECK(validate(ds).clean());
  }

  TEST_CASE("no highway agents is infeasible") {
    auto s = constant_gap_script();
    s.highway.clear();
    CHECK(code_of([&] { generate(s); }) == ErrorCode::kInfeasibleScript);
  }

  TEST_CASE("agents closer than the minimum spacing are infeasible") {
    auto s = constant_gap_script();
    s.duration = 20.0;  // the faster highway agent catches the merged vehicle at t = 14
    CHECK(code_of([&] { generate(s); }) == ErrorCode::kInfeasibleScript);
  }

  TEST_CASE("a ramp agent that merges too late is infeasible") {
    auto s = constant_gap_script();
    s.ramp.y0 = -500.0;
    CHECK(code_of([&] { generate(s); }) == ErrorCode::kInfeasibleScript);
  }

  TEST_CASE("courtesy_always gives exactly one lane change before t_m") {
    auto s = constant_gap_script();
    s.policy = CourtesyPolicy::kCourtesyAlways;
    const auto [ds, truth] = generate(s);
    CHECK(truth.yielded);
    REQUIRE(truth.lane_changes.size() == 1);
    const auto& lc = truth.lane_changes[0];
    CHECK(lc.vehicle_id == vid(1));
    CHECK(lc.t_lc == doctest::Approx(truth.t_m - s.yield_lead));
    CHECK(lc.direction == LaneChangeDirection::kTowardMedian);
    const auto* hw = ds.find_track(vid(1), lc.t_lc);
    REQUIRE(hw != nullptr);
    CHECK(detect_lane_changes(*hw, truth.t_m - 5.0, truth.t_m, ds.road) == truth.lane_changes);
  }

  TEST_CASE("courtesy in conflict only yields inside the conflict zone") {
    auto s = constant_gap_script();
    s.policy = CourtesyPolicy::kCourtesyInConflict;
    CHECK(generate(s).second.yielded);  // |T| = 1
    s.highway[0].y0 -= 20.0 * 2.0;  // T = 3
    s.duration = 20.0;
    CHECK_FALSE(generate(s).second.yielded);
  }

  TEST_CASE("same seed gives the same corpus") {
    const auto a = generate_corpus(12, 99);
    const auto b = generate_corpus(12, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(dataset_to_csv(a[i].dataset) == dataset_to_csv(b[i].dataset));
      CHECK(script_to_json(a[i].script) == script_to_json(b[i].script));
    }
    CHECK(dataset_to_csv(generate_corpus(1, 100)[0].dataset) != dataset_to_csv(a[0].dataset));
  }

  TEST_CASE("stratified corpus of 100 has at least 20 per stratum") {
    const auto corpus = generate_corpus(100, 7);
    int low = 0, mid = 0, high = 0;
    for (const auto& s : corpus) {
      const double t = s.truth.lead_time(1.0);
      low += t < -2.0;
      mid += std::abs(t) <= 1.0;
      high += t > 2.0;
    }
    CHECK(low >= 20);
    CHECK(mid >= 20);
    CHECK(high >= 20);
  }

  TEST_CASE("zero-size corpus is rejected") {
    CHECK(code_of([] { generate_corpus(0, 1); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("scripts survive a JSON round trip") {
    for (const auto& s : generate_corpus(6, 5)) {
      const auto back = script_from_json(script_to_json(s.script));
      CHECK(script_to_json(back) == script_to_json(s.script));
      CHECK(dataset_to_csv(generate(back).first) == dataset_to_csv(s.dataset));
    }
  }
}
