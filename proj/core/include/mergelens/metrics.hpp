#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mergelens/events.hpp"
#include "mergelens/kinematics.hpp"
#include "mergelens/track.hpp"

namespace mergelens {

/// Bin edges over the lead-time axis, with open-ended bins below the first and
/// above the last edge. A value lying exactly on an edge belongs to the bin on
/// the side nearer zero (0 itself goes to the bin above), so the bins inside
/// [-h, h] hold exactly the values with |value| <= h.
class BinEdges {
 public:
  BinEdges() = default;
  explicit BinEdges(std::vector<double> edges);

  static BinEdges uniform(double lo, double hi, double width);
  /// [-5, 5] s in 0.5 s steps.
  static BinEdges default_lead_time();

  const std::vector<double>& edges() const noexcept { return edges_; }
  std::size_t bin_count() const noexcept { return edges_.size() + 1; }
  std::size_t bin_of(double value) const noexcept;
  /// Bounds of bin i; the outer bins use -inf / +inf.
  double lower(std::size_t bin) const noexcept;
  double upper(std::size_t bin) const noexcept;

  friend bool operator==(const BinEdges&, const BinEdges&) = default;

 private:
  std::vector<double> edges_;
};

/// Outcome frequencies binned over the lead time at one look-back window.
struct BinnedStatistic {
  double tau = 0.0;
  BinEdges edges;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> successes;
  std::map<std::string, std::size_t> excluded;  // reason -> events left out of the bins

  std::optional<double> frequency(std::size_t bin) const noexcept;
  std::size_t binned() const noexcept;
  std::size_t excluded_total() const noexcept;
  std::size_t total() const noexcept { return binned() + excluded_total(); }
  void exclude(const std::string& reason, std::size_t n = 1) { excluded[reason] += n; }

  friend bool operator==(const BinnedStatistic&, const BinnedStatistic&) = default;
};

struct ConflictSummary {
  double tau = 0.0;
  double conflict_halfwidth = 1.0;
  std::size_t conflict_count = 0;
  std::size_t conflict_successes = 0;
  std::size_t nonconflict_count = 0;
  std::size_t nonconflict_successes = 0;

  std::optional<double> conflict_freq() const noexcept;
  std::optional<double> nonconflict_freq() const noexcept;

  friend bool operator==(const ConflictSummary&, const ConflictSummary&) = default;
};

struct PassFirstSample {
  LeadTimeSample lead;
  PassFirstOutcome outcome;
};

/// Success means the agent that led by time-to-arrival crossed first: the
/// highway vehicle when lead_time < 0, the merger when lead_time > 0. Invalid
/// samples, exact ties and lead_time == 0 are excluded and counted.
/// Throws Error(kMixedTau) if any sample was taken at another tau.
BinnedStatistic bin_pass_first(double tau, std::span<const PassFirstSample> samples, const BinEdges& edges);

/// Success means at least one lane change with t_lc in [t_m - tau, t_m].
/// `lane_changes[i]` and `samples[i]` belong to `events[i]`.
/// Throws Error(kMixedTau) or Error(kInvalidArgument) on mismatched inputs.
BinnedStatistic bin_lane_changes(double tau, std::span<const MergeEvent> events,
                                 std::span<const std::vector<LaneChangeEvent>> lane_changes,
                                 std::span<const LeadTimeSample> samples, const BinEdges& edges);

/// Aggregates the bins inside |T| <= halfwidth against those outside.
/// Throws Error(kMisalignedEdges) unless both -halfwidth and +halfwidth are edges.
ConflictSummary conflict_summary(const BinnedStatistic& stat, double conflict_halfwidth);

struct DisplacementErrors {
  double horizon = 0.0;
  std::size_t pairs = 0;
  std::vector<double> per_step_rmse;
  double ade = 0.0;
  double fde = 0.0;
};

struct TrajectoryPair {
  const VehicleTrack* predicted;
  const VehicleTrack* truth;
};

/// Euclidean displacement per step over (x, y). `predicted` must share dt with
/// `truth`, start on a truth sample and end inside it.
/// Throws Error(kMisalignedSampling) otherwise.
DisplacementErrors displacement_errors(const VehicleTrack& predicted, const VehicleTrack& truth);
/// Batch form: all predictions must have the same length. RMSE is taken per
/// step across pairs; ADE averages every step of every pair; FDE averages the
/// final steps.
DisplacementErrors displacement_errors(std::span<const TrajectoryPair> pairs);

}  // namespace mergelens
