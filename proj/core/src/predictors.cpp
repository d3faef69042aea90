#include "mergelens/predictors.hpp"

#include <array>
#include <cmath>

#include "mergelens/error.hpp"

namespace mergelens {

std::size_t PredictionRequest::expected_points() const noexcept {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

const VehicleHistory* PredictionRequest::focus() const noexcept {
  for (const auto& h : history) {
    if (h.vehicle_id == focus_id) return &h;
  }
  return nullptr;
}

void check_response(const PredictionRequest& req, const PredictionResponse& resp) {
  if (resp.request_id != req.request_id) {
    throw Error(ErrorCode::kProtocolViolation, "response id " + std::to_string(resp.request_id) +
                                                   " does not match request " + std::to_string(req.request_id));
  }
  if (resp.points.size() != req.expected_points()) {
    throw Error(ErrorCode::kProtocolViolation, "response has " + std::to_string(resp.points.size()) +
                                                   " points, expected " + std::to_string(req.expected_points()));
  }
  for (const auto& p : resp.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::kProtocolViolation, "response contains non-finite coordinates");
    }
  }
}

namespace {

const std::vector<HistorySample>& focus_samples(const PredictionRequest& req, std::size_t at_least) {
  const VehicleHistory* focus = req.focus();
  if (!focus || focus->samples.size() < at_least) {
    throw Error(ErrorCode::kTooLittleHistory, "focus vehicle " + std::to_string(to_int(req.focus_id)) +
                                                  " needs at least " + std::to_string(at_least) +
                                                  " history samples");
  }
  return focus->samples;
}

// Position after time s under v(s) = max(0, v0 + a s).
double travelled(double v0, double a, double s) {
  if (a == 0.0) return v0 > 0.0 ? v0 * s : 0.0;
  const double t_zero = -v0 / a;  // where v0 + a s crosses zero
  if (v0 >= 0.0) {
    if (a > 0.0 || s <= t_zero) return v0 * s + 0.5 * a * s * s;
    return v0 * t_zero + 0.5 * a * t_zero * t_zero;
  }
  if (a < 0.0 || s <= t_zero) return 0.0;
  const double r = s - t_zero;
  return 0.5 * a * r * r;
}

// Least-squares fit of y = c0 + c1 s + c2 s^2.
std::array<double, 3> fit_quadratic(const std::vector<HistorySample>& h, double t_ref) {
  std::array<double, 5> m{};  // sums of s^k
  std::array<double, 3> r{};  // sums of y s^k
  for (const auto& p : h) {
    const double s = p.t - t_ref;
    double sk = 1.0;
    for (std::size_t k = 0; k < 5; ++k) {
      m[k] += sk;
      if (k < 3) r[k] += p.y * sk;
      sk *= s;
    }
  }
  std::array<std::array<double, 4>, 3> a{{{m[0], m[1], m[2], r[0]},
                                          {m[1], m[2], m[3], r[1]},
                                          {m[2], m[3], m[4], r[2]}}};
  for (std::size_t col = 0; col < 3; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < 3; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    std::swap(a[col], a[pivot]);
    if (std::abs(a[col][col]) < 1e-300) {
      throw Error(ErrorCode::kTooLittleHistory, "history times are degenerate");
    }
    for (std::size_t row = 0; row < 3; ++row) {
      if (row == col) continue;
      const double f = a[row][col] / a[col][col];
      for (std::size_t k = col; k < 4; ++k) a[row][k] -= f * a[col][k];
    }
  }
  return {a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
}

}  // namespace

PredictionResponse predict_constant_velocity(const PredictionRequest& req) {
  const auto& h = focus_samples(req, 2);
  const std::size_t window = static_cast<std::size_t>(std::max<long>(1, std::lround(0.5 / req.dt)));
  const std::size_t k = std::min(window, h.size() - 1);
  const auto& last = h.back();
  const auto& first = h[h.size() - 1 - k];
  const double v = (last.y - first.y) / (last.t - first.t);

  PredictionResponse resp;
  resp.request_id = req.request_id;
  const std::size_t n = req.expected_points();
  resp.points.reserve(n);
  for (std::size_t j = 1; j <= n; ++j) {
    resp.points.push_back({last.x, last.y + v * static_cast<double>(j) * req.dt});
  }
  return resp;
}

PredictionResponse predict_constant_acceleration(const PredictionRequest& req) {
  const auto& h = focus_samples(req, 3);
  const auto& last = h.back();
  const auto c = fit_quadratic(h, last.t);
  const double v0 = c[1];
  const double a = 2.0 * c[2];

  PredictionResponse resp;
  resp.request_id = req.request_id;
  const std::size_t n = req.expected_points();
  resp.points.reserve(n);
  for (std::size_t j = 1; j <= n; ++j) {
    resp.points.push_back({last.x, last.y + travelled(v0, a, static_cast<double>(j) * req.dt)});
  }
  return resp;
}

PredictionResponse replay_from(const Dataset& scene, const PredictionRequest& req) {
  const VehicleHistory* focus = req.focus();
  if (!focus || focus->samples.empty()) {
    throw Error(ErrorCode::kPredictorError, "request has no focus history");
  }
  const double t_last = focus->samples.back().t;
  const VehicleTrack* track = scene.find_track(req.focus_id, t_last);
  std::size_t idx = 0;
  if (!track || !track->on_grid(t_last, idx)) {
    throw Error(ErrorCode::kPredictorError, "focus vehicle not recorded at t=" + std::to_string(t_last));
  }
  const std::size_t n = req.expected_points();
  if (idx + n >= track->size()) {
    throw Error(ErrorCode::kPredictorError, "recorded future of vehicle " + std::to_string(to_int(req.focus_id)) +
                                                " shorter than the horizon");
  }
  PredictionResponse resp;
  resp.request_id = req.request_id;
  resp.points.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) resp.points.push_back({track->xs[idx + k], track->ys[idx + k]});
  return resp;
}

namespace {

template <typename Fn>
class FunctionPredictor final : public Predictor {
 public:
  explicit FunctionPredictor(Fn fn) : fn_(std::move(fn)) {}
  PredictionResponse predict(const PredictionRequest& req, const Dataset& scene) override {
    return fn_(req, scene);
  }

 private:
  Fn fn_;
};

template <typename Fn>
class FunctionSource final : public PredictorSource {
 public:
  FunctionSource(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  std::unique_ptr<Predictor> open(const Dataset&) const override {
    return std::make_unique<FunctionPredictor<Fn>>(fn_);
  }

 private:
  std::string name_;
  Fn fn_;
};

template <typename Fn>
std::unique_ptr<PredictorSource> function_source(std::string name, Fn fn) {
  return std::make_unique<FunctionSource<Fn>>(std::move(name), std::move(fn));
}

}  // namespace

std::unique_ptr<PredictorSource> make_baseline_source(BaselineKind kind) {
  if (kind == BaselineKind::kConstantVelocity) {
    return function_source("constant_velocity", [](const PredictionRequest& r, const Dataset&) {
      return predict_constant_velocity(r);
    });
  }
  return function_source("constant_acceleration", [](const PredictionRequest& r, const Dataset&) {
    return predict_constant_acceleration(r);
  });
}

std::unique_ptr<PredictorSource> make_replay_source() {
  return function_source("replay", [](const PredictionRequest& r, const Dataset& scene) {
    return replay_from(scene, r);
  });
}

std::unique_ptr<PredictorSource> make_frozen_source() {
  return function_source("frozen", [](const PredictionRequest& r, const Dataset&) {
    const auto& h = focus_samples(r, 1);
    PredictionResponse resp;
    resp.request_id = r.request_id;
    resp.points.assign(r.expected_points(), Point2{h.back().x, h.back().y});
    return resp;
  });
}

}  // namespace mergelens
