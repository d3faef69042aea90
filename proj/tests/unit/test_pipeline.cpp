#include "doctest.h"
#include "mergelens/pipeline.hpp"
#include "support.hpp"

using namespace mergelens;
using namespace mergelens::test;

namespace {

std::vector<Dataset> datasets_of(const std::vector<Scenario>& corpus) {
  std::vector<Dataset> out;
  for (const auto& s : corpus) out.push_back(s.dataset);
  return out;
}

void check_same(const std::vector<TauResult>& a, const std::vector<TauResult>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].pass_first == b[k].pass_first);
    CHECK(a[k].lane_changes == b[k].lane_changes);
    CHECK(a[k].pass_first_conflict == b[k].pass_first_conflict);
    CHECK(a[k].lane_change_conflict == b[k].lane_change_conflict);
  }
}

CorpusRanges courtesy_ranges() {
  CorpusRanges r;
  r.policy = CourtesyPolicy::kCourtesyInConflict;
  r.courtesy_probability = 1.0;
  return r;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("every synthetic event is detected, paired and measured") {
    const auto corpus = generate_corpus(9, 21);
    const auto ds = datasets_of(corpus);
    const auto res = analyze(ds, AnalysisConfig{});
    REQUIRE(res.events.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& r = res.events[i];
      const auto& gt = corpus[i].truth;
      CHECK(r.dataset == i);
      CHECK(r.pairing_excluded.empty());
      CHECK(r.event.highway_id == gt.intended_pair);
      REQUIRE(r.per_tau.size() == 5);
      for (const auto& o : r.per_tau) {
        REQUIRE(o.lead.has_value());
        CHECK(o.lead->lead_time == doctest::Approx(gt.lead_time(o.tau)).epsilon(1e-9));
        REQUIRE(o.pass_first.has_value());
        CHECK(o.pass_first->highway_passed_first == gt.pass_first->highway_passed_first);
        REQUIRE(o.lane_changes.has_value());
        CHECK(o.lane_changes->empty());
      }
    }
    for (const auto& t : res.taus) CHECK(t.pass_first.binned() == corpus.size());
  }

  TEST_CASE("result does not depend on the number of jobs") {
    const auto ds = datasets_of(generate_corpus(12, 4, courtesy_ranges()));
    AnalysisConfig one, four;
    four.jobs = 4;
    check_same(analyze(ds, one).taus, analyze(ds, four).taus);
  }

  TEST_CASE("courtesy corpus puts every yield in the conflict zone") {
    const auto ds = datasets_of(generate_corpus(15, 8, courtesy_ranges()));
    const auto res = analyze(ds, AnalysisConfig{});
    for (const auto& t : res.taus) {
      CHECK(t.lane_change_conflict.conflict_freq() == 1.0);
      CHECK(t.lane_change_conflict.nonconflict_freq() == 0.0);
    }
  }

  TEST_CASE("an unpaired merge is excluded with its reason") {
    const auto corpus = generate_corpus(1, 2);
    Dataset ds = corpus[0].dataset;
    ds.tracks.erase(*corpus[0].truth.intended_pair);
    for (auto it = ds.tracks.begin(); it != ds.tracks.end();) {
      it = it->first == corpus[0].truth.merger_id ? std::next(it) : ds.tracks.erase(it);
    }
    const auto res = analyze(std::span<const Dataset>(&ds, 1), AnalysisConfig{});
    REQUIRE(res.events.size() == 1);
    CHECK(res.events[0].pairing_excluded == "NoCandidate");
    CHECK(res.taus[0].pass_first.binned() == 0);
    CHECK(res.taus[0].pass_first.excluded_total() == 1);
  }

  TEST_CASE("invalid configurations") {
    AnalysisConfig cfg;
    cfg.taus.clear();
    CHECK_THROWS_AS(cfg.check(), Error);
    cfg = AnalysisConfig{};
    cfg.taus = {0.0};
    CHECK_THROWS_AS(cfg.check(), Error);
    cfg = AnalysisConfig{};
    cfg.conflict_halfwidth = 0.3;
    CHECK_THROWS_AS(cfg.check(), Error);
  }
}

TEST_SUITE("predictor evaluation") {
  TEST_CASE("requests carry the focus first and neighbours by id") {
    const auto corpus = generate_corpus(3, 17);
    for (const auto& s : corpus) {
      const auto focus = *s.truth.intended_pair;
      const auto req = build_request(s.dataset, focus, s.truth.t_m - 2.0, PredictionConfig{}, 5);
      REQUIRE(!req.history.empty());
      CHECK(req.history[0].vehicle_id == focus);
      CHECK(req.history[0].samples.size() == 30);
      CHECK(req.history[0].samples.back().t == doctest::Approx(s.truth.t_m - 2.0));
      for (std::size_t i = 2; i < req.history.size(); ++i) {
        CHECK(to_int(req.history[i - 1].vehicle_id) < to_int(req.history[i].vehicle_id));
      }
      CHECK_THROWS_AS(build_request(s.dataset, focus, 1.0, PredictionConfig{}, 5), Error);
    }
  }

  TEST_CASE("replay reproduces the observed statistics") {
    const auto ds = datasets_of(generate_corpus(12, 31, courtesy_ranges()));
    const AnalysisConfig cfg;
    const auto res = analyze(ds, cfg);
    const auto cmp = evaluate_predictor(ds, res.events, *make_replay_source(), cfg, PredictionConfig{});
    check_same(cmp.observed, cmp.predicted);
    CHECK(cmp.failures.empty());
    for (const auto& d : cmp.displacement) CHECK(d.ade == 0.0);
  }

  TEST_CASE("constant velocity is exact on an inert constant-velocity corpus") {
    const auto ds = datasets_of(generate_corpus(12, 13));
    const AnalysisConfig cfg;
    const auto res = analyze(ds, cfg);
    const auto cmp = evaluate_predictor(ds, res.events, *make_baseline_source(BaselineKind::kConstantVelocity), cfg,
                                        PredictionConfig{});
    check_same(cmp.observed, cmp.predicted);
    for (const auto& d : cmp.displacement) CHECK(d.ade == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("constant velocity misses courtesy lane changes") {
    const auto ds = datasets_of(generate_corpus(15, 8, courtesy_ranges()));
    const AnalysisConfig cfg;
    const auto res = analyze(ds, cfg);
    const auto cmp = evaluate_predictor(ds, res.events, *make_baseline_source(BaselineKind::kConstantVelocity), cfg,
                                        PredictionConfig{});
    for (std::size_t k = 0; k < cmp.observed.size(); ++k) {
      const auto o = cmp.observed[k].lane_change_conflict.conflict_freq();
      const auto p = cmp.predicted[k].lane_change_conflict.conflict_freq();
      REQUIRE(o.has_value());
      REQUIRE(p.has_value());
      CHECK(*o - *p > 0.0);
    }
  }

  TEST_CASE("frozen predictor never crosses") {
    const auto ds = datasets_of(generate_corpus(6, 3));
    const AnalysisConfig cfg;
    const auto res = analyze(ds, cfg);
    const auto cmp = evaluate_predictor(ds, res.events, *make_frozen_source(), cfg, PredictionConfig{});
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) {
      // Only a crossing still ahead at t_m - tau is lost; earlier ones are recorded history.
      std::size_t ahead = 0;
      for (const auto& r : res.events) {
        ahead += r.per_tau[k].pass_first->highway_cross_t > r.event.t_m - cfg.taus[k];
      }
      const auto& st = cmp.predicted[k].pass_first;
      CHECK(ahead > 0);
      CHECK(st.excluded.count("NeverCrosses") == 1);
      CHECK(st.excluded.at("NeverCrosses") == ahead);
      CHECK(st.binned() == res.events.size() - ahead);
    }
  }

  TEST_CASE("a predictor that always fails is a predictor error") {
    struct Failing final : PredictorSource {
      std::string name() const override { return "failing"; }
      std::unique_ptr<Predictor> open(const Dataset&) const override {
        struct P final : Predictor {
          PredictionResponse predict(const PredictionRequest&, const Dataset&) override {
            throw Error(ErrorCode::kTimeout, "nope");
          }
        };
        return std::make_unique<P>();
      }
    };
    const auto ds = datasets_of(generate_corpus(3, 3));
    const AnalysisConfig cfg;
    const auto res = analyze(ds, cfg);
    try {
      evaluate_predictor(ds, res.events, Failing{}, cfg, PredictionConfig{});
      FAIL("expected PredictorError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kPredictorError);
    }
  }
}
