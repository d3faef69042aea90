#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "mergelens/road_config.hpp"
#include "mergelens/synth.hpp"
#include "mergelens/track.hpp"

namespace mergelens::test {

inline VehicleId vid(std::int64_t v) { return VehicleId{v}; }

/// Track sampled from y(t) on t = t0 + i*dt, constant lane and x.
inline VehicleTrack sampled(std::int64_t id, double t0, double dt, std::size_t n, const std::function<double(double)>& y,
                            int lane = 6, double x = 0.0) {
  VehicleTrack t;
  t.vehicle_id = VehicleId{id};
  t.t0 = t0;
  t.dt = dt;
  t.first_frame = static_cast<std::int64_t>(std::llround(t0 / dt)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    t.ys.push_back(y(t.time_at(i)));
    t.xs.push_back(x);
    t.lanes.push_back(lane);
  }
  return t;
}

inline VehicleTrack with_lanes(VehicleTrack t, const std::vector<int>& lanes) {
  t.lanes = lanes;
  t.xs.resize(lanes.size());
  t.ys.resize(lanes.size(), t.ys.empty() ? 0.0 : t.ys.back());
  return t;
}

inline Dataset dataset_of(const RoadConfig& road, std::vector<VehicleTrack> tracks) {
  Dataset ds;
  ds.road = road;
  for (auto& t : tracks) ds.tracks[t.vehicle_id].push_back(std::move(t));
  return ds;
}

/// Deterministic case generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * std::generate_canonical<double, 53>(rng_); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mergelens-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

}  // namespace mergelens::test
