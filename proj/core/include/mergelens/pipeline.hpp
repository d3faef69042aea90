#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mergelens/events.hpp"
#include "mergelens/kinematics.hpp"
#include "mergelens/metrics.hpp"
#include "mergelens/predictors.hpp"
#include "mergelens/track.hpp"

namespace mergelens {

enum class LaneChangeScope {
  kPaired,        // lane changes of the paired highway vehicle
  kNeighborhood,  // any mainline vehicle within neighborhood_radius of the merger
};

std::string_view to_string(LaneChangeScope scope) noexcept;
LaneChangeScope parse_lane_change_scope(std::string_view text);

struct AnalysisConfig {
  std::vector<double> taus{1.0, 2.0, 3.0, 4.0, 5.0};
  BinEdges edges = BinEdges::default_lead_time();
  double conflict_halfwidth = 1.0;
  KinematicsConfig kinematics;
  std::size_t persistence = kDefaultPersistenceFrames;
  double pairing_lookback = 5.0;
  LaneChangeScope lane_change_scope = LaneChangeScope::kPaired;
  unsigned jobs = 1;

  /// Throws Error(kInvalidConfig) for empty or non-positive taus and
  /// Error(kMisalignedEdges) when the conflict half-width is not on the edges.
  void check() const;
};

/// What was observed for one event at one look-back window. An empty optional
/// means the quantity could not be determined; the matching reason says why.
struct TauObservation {
  double tau = 0.0;
  std::optional<LeadTimeSample> lead;
  std::optional<PassFirstOutcome> pass_first;
  std::optional<std::vector<LaneChangeEvent>> lane_changes;
  std::string lead_excluded;
  std::string pass_first_excluded;
  std::string lane_changes_excluded;
};

struct EventRecord {
  std::size_t dataset = 0;
  MergeEvent event;
  std::string pairing_excluded;  // empty when paired
  std::vector<TauObservation> per_tau;  // parallel to AnalysisConfig::taus
};

struct TauResult {
  double tau = 0.0;
  BinnedStatistic pass_first;
  BinnedStatistic lane_changes;
  ConflictSummary pass_first_conflict;
  ConflictSummary lane_change_conflict;
};

struct AnalysisResult {
  std::vector<EventRecord> events;  // ordered by dataset, then merger id
  std::vector<TauResult> taus;
};

/// Detects, pairs and measures every merge in `datasets`, then bins the
/// outcomes per tau. Events are processed concurrently; the result does not
/// depend on `jobs`.
AnalysisResult analyze(std::span<const Dataset> datasets, const AnalysisConfig& config);

/// Bins per-event observations for the tau at `tau_index`.
TauResult aggregate(std::span<const EventRecord> events, std::size_t tau_index, const AnalysisConfig& config);

struct PredictionConfig {
  double history_len = 3.0;
  double horizon = 5.0;
  bool predict_merger = false;
};

struct ComparisonResult {
  std::vector<TauResult> observed;
  std::vector<TauResult> predicted;
  std::vector<DisplacementErrors> displacement;  // per tau, highway vehicle futures
  std::size_t requests = 0;
  std::map<std::string, std::size_t> failures;  // error code -> failed requests
  std::vector<std::string> failure_messages;    // first few, for diagnostics
};

/// Issues a prediction at t_m - tau from the preceding history for every paired
/// event and tau, then measures both phenomena on the observed and on the
/// predicted continuation of the same history. Both arms see recorded history
/// up to t_m - tau followed by a horizon-long future whose lanes come from the
/// lateral position, so a predictor returning the recorded future reproduces
/// the observed arm exactly. The lead time axis is the observed one in both
/// arms. A failed prediction removes the (event, tau) pair from both arms.
///
/// Throws Error(kPredictorError) only if every request failed.
ComparisonResult evaluate_predictor(std::span<const Dataset> datasets, std::span<const EventRecord> events,
                                    const PredictorSource& source, const AnalysisConfig& config,
                                    const PredictionConfig& prediction);

/// Request for `focus` at time `t_s`: the last round(history_len / dt) samples
/// of the focus vehicle and of every neighbour within the road's
/// neighborhood_radius whose track covers the same window.
/// Throws Error(kInsufficientHistory) when the focus track does not cover it.
PredictionRequest build_request(const Dataset& ds, VehicleId focus, double t_s, const PredictionConfig& prediction,
                                std::uint64_t request_id);

}  // namespace mergelens
