#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mergelens/track.hpp"

namespace mergelens {

struct HistorySample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  int lane = 0;

  friend bool operator==(const HistorySample&, const HistorySample&) = default;
};

struct VehicleHistory {
  VehicleId vehicle_id{};
  std::vector<HistorySample> samples;

  friend bool operator==(const VehicleHistory&, const VehicleHistory&) = default;
};

struct PredictionRequest {
  std::uint64_t request_id = 0;
  double dt = 0.1;
  double history_len = 3.0;
  double horizon = 5.0;
  VehicleId focus_id{};
  std::vector<VehicleHistory> history;  // focus first, then neighbours by id

  std::size_t expected_points() const noexcept;
  const VehicleHistory* focus() const noexcept;

  friend bool operator==(const PredictionRequest&, const PredictionRequest&) = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct PredictionResponse {
  std::uint64_t request_id = 0;
  std::vector<Point2> points;  // at t_last + k * dt, k = 1..expected_points()

  friend bool operator==(const PredictionResponse&, const PredictionResponse&) = default;
};

/// Throws Error(kProtocolViolation) unless `resp` answers `req` with exactly
/// round(horizon / dt) finite points.
void check_response(const PredictionRequest& req, const PredictionResponse& resp);

/// Extrapolates the focus vehicle longitudinally at the speed it averaged over
/// the last 0.5 s of history; the lateral position is held.
/// Throws Error(kTooLittleHistory) with fewer than two focus samples.
PredictionResponse predict_constant_velocity(const PredictionRequest& req);

/// Second-order longitudinal extrapolation from a least-squares quadratic fit
/// over the whole focus history. Speed never goes below zero: a decelerating
/// vehicle stops and holds position. Lateral position is held.
/// Throws Error(kTooLittleHistory) with fewer than three focus samples.
PredictionResponse predict_constant_acceleration(const PredictionRequest& req);

/// A trajectory predictor. One instance is only ever used by one thread.
class Predictor {
 public:
  virtual ~Predictor() = default;
  /// `scene` is the recording the request was cut from; most predictors ignore it.
  virtual PredictionResponse predict(const PredictionRequest& req, const Dataset& scene) = 0;
};

/// Creates predictor instances for worker threads. open() may be called
/// concurrently.
class PredictorSource {
 public:
  virtual ~PredictorSource() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Predictor> open(const Dataset& scene) const = 0;
  /// When true a fresh instance is needed for every scene.
  virtual bool per_scene() const { return false; }
};

enum class BaselineKind { kConstantVelocity, kConstantAcceleration };

std::unique_ptr<PredictorSource> make_baseline_source(BaselineKind kind);

/// Answers with the recorded future of the focus vehicle.
/// Requests whose future is not fully recorded fail with Error(kPredictorError).
std::unique_ptr<PredictorSource> make_replay_source();

/// Recorded future of `req.focus_id` in `scene` after the last history sample.
PredictionResponse replay_from(const Dataset& scene, const PredictionRequest& req);

/// Zero-motion predictor; holds the last observed position.
std::unique_ptr<PredictorSource> make_frozen_source();

}  // namespace mergelens
