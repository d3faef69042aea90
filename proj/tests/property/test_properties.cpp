// Randomised invariants. Each property runs kCases generated cases from a fixed
// seed so failures reproduce; the failing case index is reported.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mergelens/kinematics.hpp"
#include "mergelens/metrics.hpp"
#include "mergelens/parallel.hpp"
#include "mergelens/pipeline.hpp"
#include "support.hpp"

using namespace mergelens;
using namespace mergelens::test;

namespace {

constexpr int kCases = 1000;

BinEdges random_edges(Gen& g) {
  if (g.coin()) return BinEdges::default_lead_time();
  const double w = 0.25 * static_cast<double>(g.integer(1, 4));
  const double hi = w * static_cast<double>(g.integer(4, 24));
  return BinEdges::uniform(-hi, hi, w);
}

double random_lead(Gen& g, const BinEdges& edges) {
  switch (g.integer(0, 3)) {
    case 0: return edges.edges()[static_cast<std::size_t>(g.integer(0, static_cast<std::int64_t>(edges.edges().size()) - 1))];
    case 1: return 0.0;
    default: return g.uniform(-8.0, 8.0);
  }
}

VehicleTrack random_path(Gen& g, std::int64_t id, double t0, std::size_t n) {
  const double y0 = g.uniform(-50, 50), v = g.uniform(0, 30), a = g.uniform(-2, 2);
  const double x0 = g.uniform(0, 20), wobble = g.uniform(0, 1);
  auto t = sampled(id, t0, 0.1, n, [=](double s) { return y0 + v * s + 0.5 * a * s * s; });
  for (std::size_t i = 0; i < n; ++i) t.xs[i] = x0 + wobble * std::sin(0.7 * static_cast<double>(i));
  return t;
}

}  // namespace

TEST_CASE("lead time is antisymmetric in the two agents") {
  Gen g(101);
  for (int c = 0; c < kCases; ++c) {
    CAPTURE(c);
    const double d_h = g.uniform(-100, 400), v_h = g.uniform(0.1, 40);
    const double d_m = g.uniform(-100, 400), v_m = g.uniform(0.1, 40);
    CHECK(compute_lead_time(d_h, v_h, d_m, v_m) == -compute_lead_time(d_m, v_m, d_h, v_h));
    CHECK(compute_lead_time(d_h, v_h, d_h, v_h) == 0.0);
  }
}

TEST_CASE("lead time from tracks is antisymmetric when the roles swap") {
  Gen g(102);
  const RoadConfig road = synthetic_road();
  for (int c = 0; c < kCases; ++c) {
    CAPTURE(c);
    const auto a = random_path(g, 1, 0.0, 60);
    const auto b = random_path(g, 2, 0.0, 60);
    const double t = 0.1 * static_cast<double>(g.integer(4, 55));
    const auto sa = kinematic_state(a, t, road);
    const auto sb = kinematic_state(b, t, road);
    if (!sa.valid || !sb.valid) continue;
    const double ab = compute_lead_time(sa.dist_to_merge, sa.speed_long, sb.dist_to_merge, sb.speed_long);
    const double ba = compute_lead_time(sb.dist_to_merge, sb.speed_long, sa.dist_to_merge, sa.speed_long);
    CHECK(ab == -ba);
    CHECK(ab == doctest::Approx(sa.time_to_arrival() - sb.time_to_arrival()));
  }
}

TEST_CASE("binning conserves every sample") {
  Gen g(103);
  for (int c = 0; c < kCases; ++c) {
    CAPTURE(c);
    const BinEdges edges = random_edges(g);
    const double tau = static_cast<double>(g.integer(1, 5));
    const auto n = static_cast<std::size_t>(g.integer(0, 60));
    std::vector<PassFirstSample> pf(n);
    std::vector<MergeEvent> events(n);
    std::vector<std::vector<LaneChangeEvent>> lcs(n);
    std::vector<LeadTimeSample> leads(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = pf[i];
      s.lead.tau = tau;
      s.lead.lead_time = random_lead(g, edges);
      s.lead.valid = g.integer(0, 9) > 0;
      if (!s.lead.valid) s.lead.invalid_reason = ErrorCode::kDegenerateSpeed;
      s.outcome.highway_passed_first = g.coin();
      s.outcome.exact_tie = g.integer(0, 19) == 0;
      leads[i] = s.lead;
      events[i].t_m = g.uniform(5, 20);
      for (auto k = g.integer(0, 2); k > 0; --k) {
        LaneChangeEvent lc;
        lc.t_lc = events[i].t_m - g.uniform(-1, 7);
        lcs[i].push_back(lc);
      }
    }
    const double hw = *std::upper_bound(edges.edges().begin(), edges.edges().end(), 1e-9);
    const auto a = bin_pass_first(tau, pf, edges);
    const auto b = bin_lane_changes(tau, events, lcs, leads, edges);
    for (const auto* stat : {&a, &b}) {
      CHECK(stat->total() == n);
      CHECK(std::accumulate(stat->counts.begin(), stat->counts.end(), std::size_t{0}) == stat->binned());
      for (std::size_t k = 0; k < stat->counts.size(); ++k) CHECK(stat->successes[k] <= stat->counts[k]);
      const auto cs = conflict_summary(*stat, hw);
      CHECK(cs.conflict_count + cs.nonconflict_count == stat->binned());
      CHECK(cs.conflict_successes + cs.nonconflict_successes ==
            std::accumulate(stat->successes.begin(), stat->successes.end(), std::size_t{0}));
    }
    // Every valid lane-change sample is binned: lead time 0 is a legitimate value there.
    const auto valid = static_cast<std::size_t>(std::count_if(leads.begin(), leads.end(), [](auto& l) { return l.valid; }));
    CHECK(b.binned() == valid);
  }
}

TEST_CASE("each binned value lies inside its bin") {
  Gen g(104);
  for (int c = 0; c < kCases; ++c) {
    CAPTURE(c);
    const BinEdges edges = random_edges(g);
    const double v = random_lead(g, edges);
    const std::size_t b = edges.bin_of(v);
    CHECK(edges.lower(b) <= v);
    CHECK(v <= edges.upper(b));
    const double h = std::abs(edges.edges().front());
    if (std::abs(v) <= h) CHECK((edges.lower(b) >= -h && edges.upper(b) <= h));
  }
}

TEST_CASE("displacement errors are invariant under translation") {
  Gen g(105);
  for (int c = 0; c < kCases; ++c) {
    CAPTURE(c);
    const auto truth = random_path(g, 1, 0.0, 80);
    const auto start = static_cast<std::size_t>(g.integer(0, 40));
    const auto len = static_cast<std::size_t>(g.integer(1, 80 - static_cast<std::int64_t>(start)));
    VehicleTrack pred = random_path(g, 1, truth.time_at(start), len);
    const auto base = displacement_errors(pred, truth);

    const double dx = g.uniform(-1e3, 1e3), dy = g.uniform(-1e3, 1e3);
    VehicleTrack tp = pred, tt = truth;
    for (auto& x : tp.xs) x += dx;
    for (auto& y : tp.ys) y += dy;
    for (auto& x : tt.xs) x += dx;
    for (auto& y : tt.ys) y += dy;
    const auto moved = displacement_errors(tp, tt);
    CHECK(moved.ade == doctest::Approx(base.ade).epsilon(1e-6));
    CHECK(moved.fde == doctest::Approx(base.fde).epsilon(1e-6));
    REQUIRE(moved.per_step_rmse.size() == base.per_step_rmse.size());
    for (std::size_t k = 0; k < base.per_step_rmse.size(); ++k) {
      CHECK(moved.per_step_rmse[k] == doctest::Approx(base.per_step_rmse[k]).epsilon(1e-6));
    }
    CHECK(displacement_errors(truth, truth).fde == 0.0);
  }
}

TEST_CASE("parallel_for matches the sequential loop") {
  Gen g(106);
  for (int c = 0; c < kCases; ++c) {
    CAPTURE(c);
    const auto n = static_cast<std::size_t>(g.integer(0, 200));
    const auto jobs = static_cast<unsigned>(g.integer(1, 8));
    std::vector<double> input(n);
    for (auto& v : input) v = g.uniform(-1, 1);
    std::vector<double> seq(n), par(n);
    for (std::size_t i = 0; i < n; ++i) seq[i] = std::sin(input[i]) * static_cast<double>(i);
    parallel_for(n, jobs, [&](std::size_t i) { par[i] = std::sin(input[i]) * static_cast<double>(i); });
    CHECK(seq == par);
  }
}

TEST_CASE("analysis is deterministic under parallelism") {
  CorpusRanges ranges;
  ranges.policy = CourtesyPolicy::kCourtesyInConflict;
  ranges.courtesy_probability = 0.5;
  const auto corpus = generate_corpus(24, 2024, ranges);
  std::vector<Dataset> all;
  for (const auto& s : corpus) all.push_back(s.dataset);

  Gen g(107);
  for (int c = 0; c < kCases; ++c) {
    CAPTURE(c);
    std::vector<Dataset> pick;
    for (auto k = g.integer(1, 4); k > 0; --k) pick.push_back(all[static_cast<std::size_t>(g.integer(0, 23))]);
    AnalysisConfig seq, par;
    par.jobs = static_cast<unsigned>(g.integer(2, 8));
    const auto a = analyze(pick, seq);
    const auto b = analyze(pick, par);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].event.merger_id == b.events[i].event.merger_id);
      CHECK(a.events[i].dataset == b.events[i].dataset);
    }
    for (std::size_t k = 0; k < a.taus.size(); ++k) {
      CHECK(a.taus[k].pass_first == b.taus[k].pass_first);
      CHECK(a.taus[k].lane_changes == b.taus[k].lane_changes);
      CHECK(a.taus[k].lane_change_conflict == b.taus[k].lane_change_conflict);
    }
  }
}
