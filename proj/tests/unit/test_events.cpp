#include "doctest.h"
#include "mergelens/events.hpp"
#include "support.hpp"

using namespace mergelens;
using namespace mergelens::test;

namespace {

// Ramp lane before t_switch, outer lane from then on.
VehicleTrack merger_track(std::int64_t id, double t_switch, double y0 = 20.0, double v = 15.0, std::size_t n = 201) {
  auto t = sampled(id, 0.0, 0.1, n, [=](double s) { return y0 + v * s; }, 7);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.time_at(i) >= t_switch - 1e-9) t.lanes[i] = 6;
  }
  return t;
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

TEST_SUITE("merge detection") {
  TEST_CASE("ramp to outer lane at 12.0 s gives one event at 12.0 s") {
    const Dataset ds = dataset_of(synthetic_road(), {merger_track(9, 12.0)});
    const auto events = detect_merges(ds);
    REQUIRE(events.size() == 1);
    CHECK(events[0].merger_id == vid(9));
    CHECK(events[0].t_m == doctest::Approx(12.0).epsilon(1e-9));
    CHECK(events[0].merge_y == doctest::Approx(20.0 + 15.0 * 12.0));
    CHECK_FALSE(events[0].highway_id.has_value());
  }

  TEST_CASE("oscillating back to the ramp within the persistence window gives nothing") {
    auto t = merger_track(9, 12.0);
    for (std::size_t i = 125; i < t.size(); ++i) t.lanes[i] = 7;  // 5 frames in the outer lane
    CHECK(detect_merges(dataset_of(synthetic_road(), {t})).empty());
  }

  TEST_CASE("exactly the persistence count confirms") {
    auto t = merger_track(9, 12.0, 20.0, 15.0, 130);  // samples 120..129 are outer
    CHECK(detect_merges(dataset_of(synthetic_road(), {t})).size() == 1);
    t.lanes.back() = 7;
    CHECK(detect_merges(dataset_of(synthetic_road(), {t})).empty());
  }

  TEST_CASE("moving further inward still counts as merged") {
    auto t = merger_track(9, 12.0);
    for (std::size_t i = 123; i < t.size(); ++i) t.lanes[i] = 5;
    CHECK(detect_merges(dataset_of(synthetic_road(), {t})).size() == 1);
  }

  TEST_CASE("mainline vehicles never produce events") {
    const auto hw = sampled(1, 0.0, 0.1, 100, [](double s) { return 20.0 * s; });
    CHECK(detect_merges(dataset_of(synthetic_road(), {hw})).empty());
  }
}

TEST_SUITE("pairing") {
  // Merger at y=100, 10 m/s at t=5 (TTA 10 s), entering the outer lane at t=10.
  Dataset pairing_scene(std::vector<VehicleTrack> candidates) {
    candidates.push_back(merger_track(50, 10.0, 50.0, 10.0, 151));
    return dataset_of(synthetic_road(), std::move(candidates));
  }

  MergeEvent detected(const Dataset& ds) {
    const auto events = detect_merges(ds);
    REQUIRE(events.size() == 1);
    return events[0];
  }

  TEST_CASE("smallest TTA gap wins") {
    // id 5 arrives 0.4 s after the merger, id 3 arrives 2.1 s after.
    const auto near = sampled(5, 0.0, 0.1, 151, [](double t) { return -8.0 + 20.0 * (t - 5.0); });
    const auto far = sampled(3, 0.0, 0.1, 151, [](double t) { return 79.0 + 10.0 * (t - 5.0); });
    const Dataset ds = pairing_scene({near, far});
    const auto e = pair_interacting_vehicle(ds, detected(ds));
    REQUIRE(e.highway_id.has_value());
    CHECK(*e.highway_id == vid(5));
    CHECK(e.pairing_score == doctest::Approx(0.4).epsilon(1e-9));
  }

  TEST_CASE("a single candidate is chosen") {
    const auto only = sampled(3, 0.0, 0.1, 151, [](double t) { return 79.0 + 10.0 * (t - 5.0); });
    const Dataset ds = pairing_scene({only});
    CHECK(pair_interacting_vehicle(ds, detected(ds)).highway_id == vid(3));
  }

  TEST_CASE("ties go to the lower id") {
    const auto a = sampled(8, 0.0, 0.1, 151, [](double t) { return 10.0 + 12.0 * t; });
    auto b = a;
    b.vehicle_id = vid(4);
    const Dataset ds = pairing_scene({a, b});
    CHECK(pair_interacting_vehicle(ds, detected(ds)).highway_id == vid(4));
  }

  TEST_CASE("vehicles outside the outer lane or already past are not candidates") {
    const auto inner = sampled(3, 0.0, 0.1, 151, [](double t) { return 79.0 + 10.0 * (t - 5.0); }, 5);
    const auto ahead = sampled(4, 0.0, 0.1, 151, [](double t) { return 160.0 + 10.0 * t; });
    const Dataset ds = pairing_scene({inner, ahead});
    CHECK(code_of([&] { pair_interacting_vehicle(ds, detected(ds)); }) == ErrorCode::kNoCandidate);
  }
}

TEST_SUITE("lane changes") {
  VehicleTrack lane_track(const std::vector<int>& lanes) {
    return with_lanes(sampled(1, 0.0, 0.1, lanes.size(), [](double t) { return 15.0 * t; }), lanes);
  }

  TEST_CASE("5,5,5,4,... gives one change toward the median") {
    std::vector<int> lanes{5, 5, 5};
    lanes.resize(20, 4);
    const auto t = lane_track(lanes);
    const auto lc = detect_lane_changes(t, 0.0, t.t_end(), synthetic_road());
    REQUIRE(lc.size() == 1);
    CHECK(lc[0].t_lc == doctest::Approx(0.3));
    CHECK(lc[0].from_lane == 5);
    CHECK(lc[0].to_lane == 4);
    CHECK(lc[0].direction == LaneChangeDirection::kTowardMedian);
  }

  TEST_CASE("flicker is ignored") {
    std::vector<int> lanes{5, 5, 5, 4};
    lanes.resize(20, 5);
    const auto t = lane_track(lanes);
    CHECK(detect_lane_changes(t, 0.0, t.t_end(), synthetic_road()).empty());
  }

  TEST_CASE("window is closed at both ends") {
    std::vector<int> lanes(5, 5);
    lanes.resize(30, 6);
    const auto t = lane_track(lanes);
    CHECK(detect_lane_changes(t, 0.5, 1.0, synthetic_road()).size() == 1);
    CHECK(detect_lane_changes(t, 0.0, 0.5, synthetic_road()).size() == 1);
    CHECK(detect_lane_changes(t, 0.6, 1.0, synthetic_road()).empty());
    CHECK(detect_lane_changes(t, 0.0, 0.4, synthetic_road()).empty());
    CHECK(detect_lane_changes(t, 0.0, 0.5, synthetic_road())[0].direction == LaneChangeDirection::kTowardShoulder);
  }

  TEST_CASE("a jump over two lanes is reported as two steps") {
    std::vector<int> lanes(5, 6);
    lanes.resize(30, 4);
    const auto lc = detect_lane_changes(lane_track(lanes), 0.0, 2.9, synthetic_road());
    REQUIRE(lc.size() == 2);
    CHECK(lc[0].to_lane == 5);
    CHECK(lc[1].from_lane == 5);
    CHECK(lc[1].to_lane == 4);
  }

  TEST_CASE("a truncated track confirms only when asked") {
    std::vector<int> lanes(25, 6);
    lanes.resize(30, 5);
    const auto t = lane_track(lanes);
    CHECK(detect_lane_changes(t, 0.0, t.t_end(), synthetic_road()).empty());
    CHECK(detect_lane_changes(t, 0.0, t.t_end(), synthetic_road(), kDefaultPersistenceFrames, true).size() == 1);
  }

  TEST_CASE("window outside the track is out of range") {
    const auto t = lane_track(std::vector<int>(20, 6));
    CHECK(code_of([&] { detect_lane_changes(t, 1.0, 5.0, synthetic_road()); }) == ErrorCode::kOutOfRange);
  }

  TEST_CASE("scripted courtesy change at 9.3 s") {
    ScenarioScript s;
    s.road = synthetic_road();
    s.highway.push_back({-100.0, 20.0, 9.3, LaneChangeDirection::kTowardMedian});
    s.ramp = {50.0, 15.0};
    const auto [ds, truth] = generate(s);
    const auto* hw = ds.find_track(vid(1), 9.3);
    REQUIRE(hw != nullptr);
    const auto lc = detect_lane_changes(*hw, 5.0, 12.0, ds.road);
    REQUIRE(lc.size() == 1);
    CHECK(lc[0].t_lc == doctest::Approx(9.3).epsilon(0.1 / 9.3));
    CHECK(lc[0].from_lane == 6);
    CHECK(lc[0].to_lane == 5);
  }
}

TEST_SUITE("pass first") {
  MergeEvent at150() {
    MergeEvent e;
    e.merger_id = vid(2);
    e.highway_id = vid(1);
    e.merge_y = 150.0;
    e.t_m = 14.0;
    return e;
  }

  VehicleTrack crossing_at(std::int64_t id, double t_cross) {
    return sampled(id, 0.0, 0.1, 250, [=](double t) { return 150.0 + 10.0 * (t - t_cross); });
  }

  TEST_CASE("highway first at 14.2 s against 15.0 s") {
    const auto o = pass_first_outcome(crossing_at(1, 14.2), crossing_at(2, 15.0), at150());
    CHECK(o.highway_passed_first);
    CHECK_FALSE(o.exact_tie);
    CHECK(o.highway_cross_t == doctest::Approx(14.2));
    CHECK(o.merger_cross_t == doctest::Approx(15.0));
  }

  TEST_CASE("merger first by 1.5 s") {
    const auto o = pass_first_outcome(crossing_at(1, 16.5), crossing_at(2, 15.0), at150());
    CHECK_FALSE(o.highway_passed_first);
  }

  TEST_CASE("interpolated times break ties within a frame") {
    const auto o = pass_first_outcome(crossing_at(1, 15.03), crossing_at(2, 15.07), at150());
    CHECK(o.highway_passed_first);
    CHECK_FALSE(o.exact_tie);
  }

  TEST_CASE("exact tie is flagged") {
    const auto o = pass_first_outcome(crossing_at(1, 15.0), crossing_at(2, 15.0), at150());
    CHECK(o.exact_tie);
    CHECK_FALSE(o.highway_passed_first);
  }

  TEST_CASE("a vehicle that never reaches the merge position") {
    const auto slow = sampled(1, 0.0, 0.1, 100, [](double) { return 10.0; });
    CHECK(code_of([&] { pass_first_outcome(slow, crossing_at(2, 15.0), at150()); }) == ErrorCode::kNeverCrosses);
    const Dataset ds = dataset_of(synthetic_road(), {slow, crossing_at(2, 15.0)});
    CHECK(code_of([&] { pass_first_outcome(ds, at150()); }) == ErrorCode::kNeverCrosses);
  }

  TEST_CASE("crossing time lands on a sample when the sample equals the target") {
    const auto t = sampled(1, 0.0, 0.1, 30, [](double s) { return 10.0 * s; });
    CHECK(crossing_time(t, 10.0) == doctest::Approx(1.0));
    CHECK(crossing_time(t, 0.0) == std::nullopt);  // starts on the target, never rises through it
    CHECK(crossing_time(t, 1000.0) == std::nullopt);
  }
}
