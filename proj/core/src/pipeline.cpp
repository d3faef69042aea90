#include "mergelens/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>

#include "mergelens/error.hpp"
#include "mergelens/parallel.hpp"

namespace mergelens {

std::string_view to_string(LaneChangeScope scope) noexcept {
  return scope == LaneChangeScope::kPaired ? "paired" : "neighborhood";
}

LaneChangeScope parse_lane_change_scope(std::string_view text) {
  if (text == "paired") return LaneChangeScope::kPaired;
  if (text == "neighborhood") return LaneChangeScope::kNeighborhood;
  throw Error(ErrorCode::kInvalidConfig, "unknown lane change scope '" + std::string(text) + "'");
}

void AnalysisConfig::check() const {
  if (taus.empty()) throw Error(ErrorCode::kInvalidConfig, "taus must not be empty");
  for (double t : taus) {
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCode::kInvalidConfig, "taus must be positive");
  }
  if (!(pairing_lookback > 0.0)) throw Error(ErrorCode::kInvalidConfig, "pairing look-back must be positive");
  // Validates the half-width against the edges.
  BinnedStatistic probe;
  probe.edges = edges;
  probe.counts.assign(edges.bin_count(), 0);
  probe.successes.assign(edges.bin_count(), 0);
  conflict_summary(probe, conflict_halfwidth);
}

namespace {

constexpr int kUnknownLane = std::numeric_limits<int>::min();

std::string reason(const Error& e) { return std::string(to_string(e.code())); }

std::vector<LaneChangeEvent> neighborhood_lane_changes(const Dataset& ds, const MergeEvent& e, double tau,
                                                       const AnalysisConfig& cfg) {
  const double t_a = e.t_m - tau;
  const VehicleTrack* merger = ds.find_track(e.merger_id, t_a);
  if (!merger) throw Error(ErrorCode::kOutOfRange, "merger not recorded at the window start");
  const double mx = merger->x_at(t_a), my = merger->y_at(t_a);
  std::vector<LaneChangeEvent> out;
  for (const auto& [id, segments] : ds.tracks) {
    if (id == e.merger_id) continue;
    const VehicleTrack* seg = ds.find_track(id, t_a);
    if (!seg || !seg->covers(e.t_m)) continue;
    if (!ds.road.is_mainline_at_or_inside_outer(seg->lane_at(t_a))) continue;
    if (std::hypot(seg->x_at(t_a) - mx, seg->y_at(t_a) - my) > ds.road.neighborhood_radius) continue;
    auto lcs = detect_lane_changes(*seg, t_a, e.t_m, ds.road, cfg.persistence);
    out.insert(out.end(), lcs.begin(), lcs.end());
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t_lc < b.t_lc; });
  return out;
}

EventRecord observe(const Dataset& ds, std::size_t dataset_index, const MergeEvent& detected,
                    const AnalysisConfig& cfg) {
  EventRecord rec;
  rec.dataset = dataset_index;
  rec.event = detected;
  try {
    rec.event = pair_interacting_vehicle(ds, detected, cfg.pairing_lookback, cfg.kinematics);
  } catch (const Error& err) {
    rec.pairing_excluded = reason(err);
  }
  const MergeEvent& e = rec.event;

  std::optional<PassFirstOutcome> pass;
  std::string pass_reason;
  if (e.highway_id) {
    try {
      pass = pass_first_outcome(ds, e);
    } catch (const Error& err) {
      pass_reason = reason(err);
    }
  }

  for (double tau : cfg.taus) {
    TauObservation obs;
    obs.tau = tau;
    if (!e.highway_id) {
      obs.lead_excluded = obs.pass_first_excluded = obs.lane_changes_excluded = rec.pairing_excluded;
      rec.per_tau.push_back(std::move(obs));
      continue;
    }
    try {
      obs.lead = lead_time_at(e, tau, ds, cfg.kinematics);
    } catch (const Error& err) {
      obs.lead_excluded = reason(err);
    }
    obs.pass_first = pass;
    obs.pass_first_excluded = pass_reason;
    try {
      if (cfg.lane_change_scope == LaneChangeScope::kPaired) {
        const VehicleTrack* hw = ds.find_track(*e.highway_id, e.t_m - tau);
        if (!hw || !hw->covers(e.t_m)) throw Error(ErrorCode::kOutOfRange, "window not covered");
        obs.lane_changes = detect_lane_changes(*hw, e.t_m - tau, e.t_m, ds.road, cfg.persistence);
      } else {
        obs.lane_changes = neighborhood_lane_changes(ds, e, tau, cfg);
      }
    } catch (const Error& err) {
      obs.lane_changes_excluded = reason(err);
    }
    rec.per_tau.push_back(std::move(obs));
  }
  return rec;
}

}  // namespace

TauResult aggregate(std::span<const EventRecord> events, std::size_t tau_index, const AnalysisConfig& cfg) {
  const double tau = cfg.taus.at(tau_index);
  std::vector<PassFirstSample> pass_samples;
  std::vector<MergeEvent> lc_events;
  std::vector<std::vector<LaneChangeEvent>> lc_lists;
  std::vector<LeadTimeSample> lc_samples;
  std::map<std::string, std::size_t> pass_excluded, lc_excluded;

  for (const auto& rec : events) {
    const TauObservation& obs = rec.per_tau.at(tau_index);
    if (!obs.lead) {
      ++pass_excluded[obs.lead_excluded];
      ++lc_excluded[obs.lead_excluded];
      continue;
    }
    const bool valid = obs.lead->valid;
    if (!valid || obs.pass_first) {
      pass_samples.push_back({*obs.lead, obs.pass_first.value_or(PassFirstOutcome{})});
    } else {
      ++pass_excluded[obs.pass_first_excluded];
    }
    if (!valid || obs.lane_changes) {
      lc_events.push_back(rec.event);
      lc_lists.push_back(obs.lane_changes.value_or(std::vector<LaneChangeEvent>{}));
      lc_samples.push_back(*obs.lead);
    } else {
      ++lc_excluded[obs.lane_changes_excluded];
    }
  }

  TauResult r;
  r.tau = tau;
  r.pass_first = bin_pass_first(tau, pass_samples, cfg.edges);
  r.lane_changes = bin_lane_changes(tau, lc_events, lc_lists, lc_samples, cfg.edges);
  for (const auto& [k, n] : pass_excluded) r.pass_first.exclude(k, n);
  for (const auto& [k, n] : lc_excluded) r.lane_changes.exclude(k, n);
  r.pass_first_conflict = conflict_summary(r.pass_first, cfg.conflict_halfwidth);
  r.lane_change_conflict = conflict_summary(r.lane_changes, cfg.conflict_halfwidth);
  return r;
}

AnalysisResult analyze(std::span<const Dataset> datasets, const AnalysisConfig& config) {
  config.check();
  std::vector<std::vector<MergeEvent>> detected(datasets.size());
  parallel_for(datasets.size(), config.jobs,
               [&](std::size_t i) { detected[i] = detect_merges(datasets[i], config.persistence); });

  std::vector<std::pair<std::size_t, const MergeEvent*>> units;
  for (std::size_t d = 0; d < detected.size(); ++d) {
    for (const auto& e : detected[d]) units.emplace_back(d, &e);
  }

  AnalysisResult result;
  result.events.resize(units.size());
  parallel_for(units.size(), config.jobs, [&](std::size_t i) {
    const auto [d, e] = units[i];
    result.events[i] = observe(datasets[d], d, *e, config);
  });
  for (std::size_t k = 0; k < config.taus.size(); ++k) result.taus.push_back(aggregate(result.events, k, config));
  return result;
}

PredictionRequest build_request(const Dataset& ds, VehicleId focus, double t_s, const PredictionConfig& prediction,
                                std::uint64_t request_id) {
  const VehicleTrack* track = ds.find_track(focus, t_s);
  std::size_t idx = 0;
  if (!track || !track->on_grid(t_s, idx)) {
    throw Error(ErrorCode::kInsufficientHistory,
                "vehicle " + std::to_string(to_int(focus)) + " not recorded at t=" + std::to_string(t_s));
  }
  const double dt = track->dt;
  const auto n = static_cast<std::size_t>(std::max(1L, std::lround(prediction.history_len / dt)));
  if (idx + 1 < n) {
    throw Error(ErrorCode::kInsufficientHistory,
                "vehicle " + std::to_string(to_int(focus)) + " has less than " +
                    std::to_string(prediction.history_len) + " s of history at t=" + std::to_string(t_s));
  }
  const double t_first = t_s - static_cast<double>(n - 1) * dt;

  PredictionRequest req;
  req.request_id = request_id;
  req.dt = dt;
  req.history_len = prediction.history_len;
  req.horizon = prediction.horizon;
  req.focus_id = focus;

  auto window = [&](const VehicleTrack& seg, std::size_t first) {
    VehicleHistory h;
    h.vehicle_id = seg.vehicle_id;
    for (std::size_t k = 0; k < n; ++k) {
      h.samples.push_back({seg.time_at(first + k), seg.xs[first + k], seg.ys[first + k], seg.lanes[first + k]});
    }
    return h;
  };
  req.history.push_back(window(*track, idx + 1 - n));

  const double fx = track->xs[idx], fy = track->ys[idx];
  for (const auto& [id, segments] : ds.tracks) {
    if (id == focus) continue;
    const VehicleTrack* seg = ds.find_track(id, t_first);
    std::size_t first = 0, last = 0;
    if (!seg || !seg->on_grid(t_first, first) || !seg->on_grid(t_s, last) || last - first + 1 != n) continue;
    if (std::hypot(seg->xs[last] - fx, seg->ys[last] - fy) > ds.road.neighborhood_radius) continue;
    req.history.push_back(window(*seg, first));
  }
  return req;
}

namespace {

// Recorded samples up to and including index `last`, then `future` one frame
// apart. Lanes of the future come from the lateral position.
VehicleTrack stitch(const VehicleTrack& seg, std::size_t last, const std::vector<Point2>& future,
                    const RoadConfig& road) {
  VehicleTrack t;
  t.vehicle_id = seg.vehicle_id;
  t.first_frame = seg.first_frame;
  t.t0 = seg.t0;
  t.dt = seg.dt;
  t.xs.assign(seg.xs.begin(), seg.xs.begin() + static_cast<std::ptrdiff_t>(last + 1));
  t.ys.assign(seg.ys.begin(), seg.ys.begin() + static_cast<std::ptrdiff_t>(last + 1));
  t.lanes.assign(seg.lanes.begin(), seg.lanes.begin() + static_cast<std::ptrdiff_t>(last + 1));
  for (const auto& p : future) {
    t.xs.push_back(p.x);
    t.ys.push_back(p.y);
    t.lanes.push_back(road.lane_at(p.x).value_or(kUnknownLane));
  }
  return t;
}

std::vector<Point2> recorded_future(const VehicleTrack& seg, std::size_t last, std::size_t n) {
  std::vector<Point2> out;
  out.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) out.push_back({seg.xs[last + k], seg.ys[last + k]});
  return out;
}

VehicleTrack future_track(const VehicleTrack& seg, std::size_t last, const std::vector<Point2>& pts) {
  VehicleTrack t;
  t.vehicle_id = seg.vehicle_id;
  t.first_frame = seg.first_frame + static_cast<std::int64_t>(last + 1);
  t.t0 = seg.time_at(last + 1);
  t.dt = seg.dt;
  for (const auto& p : pts) {
    t.xs.push_back(p.x);
    t.ys.push_back(p.y);
    t.lanes.push_back(0);
  }
  return t;
}

// Hands out predictor instances so each worker reuses one across units.
// Per-scene sources key instances by dataset; units arrive in dataset order,
// so idle instances of earlier datasets are released.
class PredictorPool {
 public:
  PredictorPool(const PredictorSource& source, std::span<const Dataset> datasets)
      : source_(source), datasets_(datasets) {}

  std::unique_ptr<Predictor> acquire(std::size_t dataset) {
    const std::size_t key = source_.per_scene() ? dataset : 0;
    {
      std::lock_guard lock(mutex_);
      idle_.erase(idle_.begin(), idle_.lower_bound(key));
      auto it = idle_.find(key);
      if (it != idle_.end() && !it->second.empty()) {
        auto p = std::move(it->second.back());
        it->second.pop_back();
        return p;
      }
    }
    return source_.open(datasets_[dataset]);
  }

  void release(std::size_t dataset, std::unique_ptr<Predictor> p) {
    if (!p) return;
    const std::size_t key = source_.per_scene() ? dataset : 0;
    std::lock_guard lock(mutex_);
    idle_[key].push_back(std::move(p));
  }

 private:
  const PredictorSource& source_;
  std::span<const Dataset> datasets_;
  std::mutex mutex_;
  std::map<std::size_t, std::vector<std::unique_ptr<Predictor>>> idle_;
};

struct ArmPair {
  TauObservation observed;
  TauObservation predicted;
  std::optional<VehicleTrack> predicted_future;
  const VehicleTrack* truth = nullptr;
  std::optional<std::string> failure;
  std::string failure_message;
  bool requested = false;
};

void exclude_both(ArmPair& arms, const std::string& why) {
  arms.observed.pass_first.reset();
  arms.predicted.pass_first.reset();
  arms.observed.lane_changes.reset();
  arms.predicted.lane_changes.reset();
  arms.observed.pass_first_excluded = arms.predicted.pass_first_excluded = why;
  arms.observed.lane_changes_excluded = arms.predicted.lane_changes_excluded = why;
}

void measure(TauObservation& obs, const VehicleTrack& highway, const VehicleTrack& merger, const MergeEvent& e,
             double t_s, const RoadConfig& road, std::size_t persistence) {
  try {
    obs.pass_first = pass_first_outcome(highway, merger, e);
  } catch (const Error& err) {
    obs.pass_first_excluded = reason(err);
  }
  try {
    obs.lane_changes = detect_lane_changes(highway, t_s, e.t_m, road, persistence, true);
  } catch (const Error& err) {
    obs.lane_changes_excluded = reason(err);
  }
}

}  // namespace

ComparisonResult evaluate_predictor(std::span<const Dataset> datasets, std::span<const EventRecord> events,
                                    const PredictorSource& source, const AnalysisConfig& config,
                                    const PredictionConfig& prediction) {
  config.check();
  if (!(prediction.history_len > 0.0) || !(prediction.horizon > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "history length and horizon must be positive");
  }
  const std::size_t n_tau = config.taus.size();
  std::vector<std::vector<ArmPair>> work(events.size());
  PredictorPool pool(source, datasets);

  parallel_for(events.size(), config.jobs, [&](std::size_t i) {
    const EventRecord& rec = events[i];
    const Dataset& ds = datasets[rec.dataset];
    const MergeEvent& e = rec.event;
    auto& slots = work[i];
    slots.resize(n_tau);
    std::unique_ptr<Predictor> predictor;

    for (std::size_t k = 0; k < n_tau; ++k) {
      ArmPair& arms = slots[k];
      arms.observed = rec.per_tau.at(k);
      arms.predicted = arms.observed;
      if (!arms.observed.lead || !arms.observed.lead->valid) continue;
      exclude_both(arms, "");

      const double tau = config.taus[k];
      const double t_s = e.t_m - tau;
      const VehicleTrack* hw = ds.find_track(*e.highway_id, t_s);
      const VehicleTrack* mg = ds.find_track(e.merger_id, t_s);
      std::size_t hw_idx = 0, mg_idx = 0;
      if (!hw || !mg || !hw->on_grid(t_s, hw_idx) || !mg->on_grid(t_s, mg_idx)) {
        exclude_both(arms, std::string(to_string(ErrorCode::kMisalignedSampling)));
        continue;
      }

      const std::uint64_t base_id = (static_cast<std::uint64_t>(i) * n_tau + k) * 2 + 1;
      std::vector<PredictionRequest> reqs;
      try {
        reqs.push_back(build_request(ds, *e.highway_id, t_s, prediction, base_id));
        if (prediction.predict_merger) reqs.push_back(build_request(ds, e.merger_id, t_s, prediction, base_id + 1));
      } catch (const Error& err) {
        exclude_both(arms, reason(err));
        continue;
      }
      const std::size_t n_future = reqs.front().expected_points();
      if (hw_idx + n_future >= hw->size() || mg_idx + n_future >= mg->size()) {
        exclude_both(arms, "ShortFuture");
        continue;
      }

      std::vector<PredictionResponse> resps;
      arms.requested = true;
      try {
        if (!predictor) predictor = pool.acquire(rec.dataset);
        for (const auto& r : reqs) resps.push_back(predictor->predict(r, ds));
        for (std::size_t q = 0; q < reqs.size(); ++q) check_response(reqs[q], resps[q]);
      } catch (const Error& err) {
        arms.failure = reason(err);
        arms.failure_message = err.what();
        exclude_both(arms, *arms.failure);
        continue;
      } catch (const std::exception& err) {
        arms.failure = std::string(to_string(ErrorCode::kPredictorError));
        arms.failure_message = err.what();
        exclude_both(arms, *arms.failure);
        continue;
      }

      const auto hw_obs_future = recorded_future(*hw, hw_idx, n_future);
      const auto mg_obs_future = recorded_future(*mg, mg_idx, n_future);
      const VehicleTrack hw_obs = stitch(*hw, hw_idx, hw_obs_future, ds.road);
      const VehicleTrack mg_obs = stitch(*mg, mg_idx, mg_obs_future, ds.road);
      const VehicleTrack hw_pred = stitch(*hw, hw_idx, resps[0].points, ds.road);
      const VehicleTrack mg_pred =
          prediction.predict_merger ? stitch(*mg, mg_idx, resps[1].points, ds.road) : mg_obs;

      arms.observed.pass_first_excluded = arms.observed.lane_changes_excluded = "";
      arms.predicted.pass_first_excluded = arms.predicted.lane_changes_excluded = "";
      measure(arms.observed, hw_obs, mg_obs, e, t_s, ds.road, config.persistence);
      measure(arms.predicted, hw_pred, mg_pred, e, t_s, ds.road, config.persistence);
      arms.predicted_future = future_track(*hw, hw_idx, resps[0].points);
      arms.truth = hw;
    }
    pool.release(rec.dataset, std::move(predictor));
  });

  ComparisonResult result;
  std::vector<EventRecord> observed(events.begin(), events.end());
  std::vector<EventRecord> predicted(events.begin(), events.end());
  constexpr std::size_t kMaxMessages = 20;
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (std::size_t k = 0; k < n_tau; ++k) {
      ArmPair& arms = work[i][k];
      observed[i].per_tau[k] = arms.observed;
      predicted[i].per_tau[k] = arms.predicted;
      if (arms.requested) ++result.requests;
      if (arms.failure) {
        ++result.failures[*arms.failure];
        if (result.failure_messages.size() < kMaxMessages) result.failure_messages.push_back(arms.failure_message);
      }
    }
  }
  std::size_t failed = 0;
  for (const auto& [k, n] : result.failures) failed += n;
  if (result.requests > 0 && failed == result.requests) {
    throw Error(ErrorCode::kPredictorError,
                "every prediction request failed; first error: " + result.failure_messages.front());
  }

  for (std::size_t k = 0; k < n_tau; ++k) {
    result.observed.push_back(aggregate(observed, k, config));
    result.predicted.push_back(aggregate(predicted, k, config));
    std::vector<TrajectoryPair> pairs;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const ArmPair& arms = work[i][k];
      if (arms.predicted_future) pairs.push_back({&*arms.predicted_future, arms.truth});
    }
    DisplacementErrors de;
    if (!pairs.empty()) {
      de = displacement_errors(pairs);
    } else {
      de.horizon = prediction.horizon;
    }
    result.displacement.push_back(std::move(de));
  }
  return result;
}

}  // namespace mergelens
