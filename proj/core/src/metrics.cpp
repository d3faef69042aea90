#include "mergelens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mergelens {

namespace {

constexpr double kTauEps = 1e-9;
constexpr double kEdgeEps = 1e-9;

void check_tau(double expected, double actual) {
  if (std::abs(expected - actual) > kTauEps) {
    throw Error(ErrorCode::kMixedTau, "sample at tau=" + std::to_string(actual) +
                                          " in statistic for tau=" + std::to_string(expected));
  }
}

BinnedStatistic empty_statistic(double tau, const BinEdges& edges) {
  BinnedStatistic stat;
  stat.tau = tau;
  stat.edges = edges;
  stat.counts.assign(edges.bin_count(), 0);
  stat.successes.assign(edges.bin_count(), 0);
  return stat;
}

}  // namespace

BinEdges::BinEdges(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.empty()) throw Error(ErrorCode::kInvalidArgument, "bin edges must not be empty");
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (!std::isfinite(edges_[i]) || (i > 0 && !(edges_[i] > edges_[i - 1]))) {
      throw Error(ErrorCode::kInvalidArgument, "bin edges must be finite and strictly increasing");
    }
  }
}

BinEdges BinEdges::uniform(double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) {
    throw Error(ErrorCode::kInvalidArgument, "uniform bins need hi > lo and width > 0");
  }
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / width));
  std::vector<double> e;
  e.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    double v = lo + static_cast<double>(i) * width;
    if (std::abs(v) < 1e-12) v = 0.0;
    e.push_back(v);
  }
  return BinEdges(std::move(e));
}

BinEdges BinEdges::default_lead_time() { return uniform(-5.0, 5.0, 0.5); }

std::size_t BinEdges::bin_of(double value) const noexcept {
  if (value > 0.0) {
    return static_cast<std::size_t>(std::lower_bound(edges_.begin(), edges_.end(), value) - edges_.begin());
  }
  return static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), value) - edges_.begin());
}

double BinEdges::lower(std::size_t bin) const noexcept {
  return bin == 0 ? -std::numeric_limits<double>::infinity() : edges_[bin - 1];
}

double BinEdges::upper(std::size_t bin) const noexcept {
  return bin >= edges_.size() ? std::numeric_limits<double>::infinity() : edges_[bin];
}

std::optional<double> BinnedStatistic::frequency(std::size_t bin) const noexcept {
  if (bin >= counts.size() || counts[bin] == 0) return std::nullopt;
  return static_cast<double>(successes[bin]) / static_cast<double>(counts[bin]);
}

std::size_t BinnedStatistic::binned() const noexcept {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::size_t BinnedStatistic::excluded_total() const noexcept {
  std::size_t n = 0;
  for (const auto& [reason, c] : excluded) n += c;
  return n;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) noexcept {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> ConflictSummary::conflict_freq() const noexcept {
  return ratio(conflict_successes, conflict_count);
}

std::optional<double> ConflictSummary::nonconflict_freq() const noexcept {
  return ratio(nonconflict_successes, nonconflict_count);
}

BinnedStatistic bin_pass_first(double tau, std::span<const PassFirstSample> samples, const BinEdges& edges) {
  BinnedStatistic stat = empty_statistic(tau, edges);
  for (const auto& s : samples) check_tau(tau, s.lead.tau);
  for (const auto& s : samples) {
    if (!s.lead.valid) {
      stat.exclude(std::string(to_string(s.lead.invalid_reason.value_or(ErrorCode::kDegenerateSpeed))));
      continue;
    }
    if (s.outcome.exact_tie) {
      stat.exclude("Tie");
      continue;
    }
    if (s.lead.lead_time == 0.0) {
      stat.exclude("NoLeader");
      continue;
    }
    const bool highway_leads = s.lead.lead_time < 0.0;
    const bool success = highway_leads == s.outcome.highway_passed_first;
    const auto bin = edges.bin_of(s.lead.lead_time);
    ++stat.counts[bin];
    if (success) ++stat.successes[bin];
  }
  return stat;
}

BinnedStatistic bin_lane_changes(double tau, std::span<const MergeEvent> events,
                                 std::span<const std::vector<LaneChangeEvent>> lane_changes,
                                 std::span<const LeadTimeSample> samples, const BinEdges& edges) {
  if (events.size() != lane_changes.size() || events.size() != samples.size()) {
    throw Error(ErrorCode::kInvalidArgument, "events, lane changes and samples differ in length");
  }
  BinnedStatistic stat = empty_statistic(tau, edges);
  for (const auto& s : samples) check_tau(tau, s.tau);
  const double eps = 1e-9;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& s = samples[i];
    if (!s.valid) {
      stat.exclude(std::string(to_string(s.invalid_reason.value_or(ErrorCode::kDegenerateSpeed))));
      continue;
    }
    const double lo = events[i].t_m - tau;
    const double hi = events[i].t_m;
    const bool any = std::any_of(lane_changes[i].begin(), lane_changes[i].end(), [&](const LaneChangeEvent& lc) {
      return lc.t_lc >= lo - eps && lc.t_lc <= hi + eps;
    });
    const auto bin = edges.bin_of(s.lead_time);
    ++stat.counts[bin];
    if (any) ++stat.successes[bin];
  }
  return stat;
}

ConflictSummary conflict_summary(const BinnedStatistic& stat, double conflict_halfwidth) {
  const auto& e = stat.edges.edges();
  auto is_edge = [&](double v) {
    return std::any_of(e.begin(), e.end(), [v](double x) { return std::abs(x - v) <= kEdgeEps; });
  };
  if (!(conflict_halfwidth > 0.0) || !is_edge(-conflict_halfwidth) || !is_edge(conflict_halfwidth)) {
    throw Error(ErrorCode::kMisalignedEdges,
                "conflict half-width " + std::to_string(conflict_halfwidth) + " is not on the bin edges");
  }
  ConflictSummary out;
  out.tau = stat.tau;
  out.conflict_halfwidth = conflict_halfwidth;
  for (std::size_t b = 0; b < stat.counts.size(); ++b) {
    const bool inside = stat.edges.lower(b) >= -conflict_halfwidth - kEdgeEps &&
                        stat.edges.upper(b) <= conflict_halfwidth + kEdgeEps;
    (inside ? out.conflict_count : out.nonconflict_count) += stat.counts[b];
    (inside ? out.conflict_successes : out.nonconflict_successes) += stat.successes[b];
  }
  return out;
}

namespace {

std::size_t aligned_start(const VehicleTrack& predicted, const VehicleTrack& truth) {
  std::size_t start = 0;
  if (std::abs(predicted.dt - truth.dt) > 1e-9 * truth.dt || !truth.on_grid(predicted.t0, start) ||
      predicted.size() == 0 || start + predicted.size() > truth.size()) {
    throw Error(ErrorCode::kMisalignedSampling,
                "prediction of vehicle " + std::to_string(to_int(predicted.vehicle_id)) +
                    " does not lie on the truth sampling grid");
  }
  return start;
}

}  // namespace

DisplacementErrors displacement_errors(const VehicleTrack& predicted, const VehicleTrack& truth) {
  const TrajectoryPair pair{&predicted, &truth};
  return displacement_errors(std::span<const TrajectoryPair>(&pair, 1));
}

DisplacementErrors displacement_errors(std::span<const TrajectoryPair> pairs) {
  DisplacementErrors out;
  if (pairs.empty()) return out;
  const std::size_t steps = pairs.front().predicted->size();
  std::vector<double> sq(steps, 0.0);
  double sum = 0.0;
  double final_sum = 0.0;
  for (const auto& p : pairs) {
    if (p.predicted->size() != steps) {
      throw Error(ErrorCode::kMisalignedSampling, "predictions in a batch differ in length");
    }
    const std::size_t start = aligned_start(*p.predicted, *p.truth);
    for (std::size_t k = 0; k < steps; ++k) {
      const double e = std::hypot(p.predicted->xs[k] - p.truth->xs[start + k],
                                  p.predicted->ys[k] - p.truth->ys[start + k]);
      sq[k] += e * e;
      sum += e;
      if (k + 1 == steps) final_sum += e;
    }
  }
  const double n = static_cast<double>(pairs.size());
  out.pairs = pairs.size();
  out.horizon = static_cast<double>(steps) * pairs.front().predicted->dt;
  out.per_step_rmse.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) out.per_step_rmse[k] = std::sqrt(sq[k] / n);
  out.ade = sum / (n * static_cast<double>(steps));
  out.fde = final_sum / n;
  return out;
}

}  // namespace mergelens
