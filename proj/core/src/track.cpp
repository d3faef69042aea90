#include "mergelens/track.hpp"

#include <algorithm>
#include <cmath>

#include "mergelens/error.hpp"

namespace mergelens {

namespace {
constexpr double kGridEps = 1e-6;
}

bool VehicleTrack::on_grid(double t, std::size_t& index) const noexcept {
  double pos = position_of(t);
  double r = std::round(pos);
  if (std::abs(pos - r) > kGridEps || r < 0.0 || r > static_cast<double>(size() - 1)) return false;
  index = static_cast<std::size_t>(r);
  return true;
}

bool VehicleTrack::covers(double t) const noexcept {
  if (size() == 0) return false;
  double pos = position_of(t);
  return pos >= -kGridEps && pos <= static_cast<double>(size() - 1) + kGridEps;
}

int VehicleTrack::lane_at(double t) const noexcept {
  double pos = std::clamp(position_of(t), 0.0, static_cast<double>(size() - 1));
  return lanes[static_cast<std::size_t>(std::lround(pos))];
}

namespace {

double interpolate(const std::vector<double>& v, double pos) noexcept {
  double last = static_cast<double>(v.size() - 1);
  pos = std::clamp(pos, 0.0, last);
  double r = std::round(pos);
  if (std::abs(pos - r) <= kGridEps) return v[static_cast<std::size_t>(r)];
  auto i = static_cast<std::size_t>(std::floor(pos));
  double f = pos - static_cast<double>(i);
  return v[i] + f * (v[i + 1] - v[i]);
}

}  // namespace

double VehicleTrack::y_at(double t) const noexcept { return interpolate(ys, position_of(t)); }
double VehicleTrack::x_at(double t) const noexcept { return interpolate(xs, position_of(t)); }

void VehicleTrack::check() const {
  auto fail = [this](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument,
                "track of vehicle " + std::to_string(to_int(vehicle_id)) + ": " + what);
  };
  if (ys.size() < 2) fail("needs at least two samples");
  if (xs.size() != ys.size() || lanes.size() != ys.size()) fail("xs, ys, lanes differ in length");
  if (!speeds.empty() && speeds.size() != ys.size()) fail("speeds differ in length");
  if (!(dt > 0.0)) fail("dt must be > 0");
}

std::string to_string(SplitTag tag) {
  if (tag == SplitTag::kAll) return "all";
  std::string out;
  auto add = [&](SplitTag member, const char* name) {
    if (!includes(tag, member)) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(SplitTag::kTrain, "train");
  add(SplitTag::kValidation, "validation");
  add(SplitTag::kTest, "test");
  return out;
}

SplitTag parse_split_tag(std::string_view text) {
  unsigned bits = 0;
  while (!text.empty()) {
    auto plus = text.find('+');
    auto part = text.substr(0, plus);
    if (part == "train") {
      bits |= static_cast<unsigned>(SplitTag::kTrain);
    } else if (part == "validation" || part == "val") {
      bits |= static_cast<unsigned>(SplitTag::kValidation);
    } else if (part == "test") {
      bits |= static_cast<unsigned>(SplitTag::kTest);
    } else if (part == "all") {
      bits |= static_cast<unsigned>(SplitTag::kAll);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown split '" + std::string(part) + "'");
    }
    if (plus == std::string_view::npos) break;
    text.remove_prefix(plus + 1);
  }
  if (bits == 0) throw Error(ErrorCode::kInvalidArgument, "empty split selection");
  return static_cast<SplitTag>(bits);
}

std::size_t Dataset::segment_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [id, segs] : tracks) n += segs.size();
  return n;
}

const VehicleTrack* Dataset::find_track(VehicleId id, double t) const noexcept {
  auto it = tracks.find(id);
  if (it == tracks.end()) return nullptr;
  for (const auto& seg : it->second) {
    if (seg.covers(t)) return &seg;
  }
  return nullptr;
}

}  // namespace mergelens
