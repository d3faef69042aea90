#include "mergelens/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "mergelens/error.hpp"
#include "mergelens/parallel.hpp"

namespace mergelens {

namespace {

constexpr std::size_t kMaxReportedLines = 20;

struct RawRecord {
  std::int64_t vehicle_id;
  std::int64_t frame_id;
  std::int64_t timestamp_ms;
  double local_x;
  double local_y;
  int lane_id;
  double speed;  // NaN when the corpus has no speed column

  auto key() const noexcept { return std::tie(vehicle_id, frame_id, timestamp_ms, local_x, local_y, lane_id); }
  bool same_content(const RawRecord& o) const noexcept {
    return timestamp_ms == o.timestamp_ms && local_x == o.local_x && local_y == o.local_y &&
           lane_id == o.lane_id && (speed == o.speed || (std::isnan(speed) && std::isnan(o.speed)));
  }
};

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T& value) noexcept {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return false;
  if constexpr (std::is_floating_point_v<T>) return std::isfinite(value);
  return true;
}

// Integers in some exports carry a trailing ".0"; accept integral floats.
bool parse_integer(std::string_view s, std::int64_t& value) noexcept {
  if (parse_number(s, value)) return true;
  double d = 0.0;
  if (!parse_number(s, d) || d != std::floor(d) || std::abs(d) > 9.0e15) return false;
  value = static_cast<std::int64_t>(d);
  return true;
}

struct ColumnIndex {
  std::size_t vehicle_id, frame_id, timestamp, local_x, local_y, lane_id;
  std::optional<std::size_t> speed;
  std::size_t max_index;
};

ColumnIndex resolve_columns(std::string_view header_line, const ColumnMap& columns) {
  std::vector<std::string_view> header;
  split_fields(header_line, header);
  if (!header.empty() && header.front().starts_with("\xEF\xBB\xBF")) {
    header.front().remove_prefix(3);
  }
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), std::string_view(name));
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto need = [&](const std::string& name, const char* field) {
    auto idx = find(name);
    if (!idx) {
      throw Error(ErrorCode::kMissingColumn,
                  "header has no column '" + name + "' (mapped to field " + field + ")");
    }
    return *idx;
  };
  ColumnIndex ci{};
  ci.vehicle_id = need(columns.vehicle_id, "vehicle_id");
  ci.frame_id = need(columns.frame_id, "frame_id");
  ci.timestamp = need(columns.timestamp, "timestamp");
  ci.local_x = need(columns.local_x, "local_x");
  ci.local_y = need(columns.local_y, "local_y");
  ci.lane_id = need(columns.lane_id, "lane_id");
  if (!columns.speed.empty()) ci.speed = find(columns.speed);
  ci.max_index = std::max({ci.vehicle_id, ci.frame_id, ci.timestamp, ci.local_x, ci.local_y,
                           ci.lane_id, ci.speed.value_or(0)});
  return ci;
}

void add_segment(std::vector<VehicleTrack>& segments, VehicleTrack&& seg, ParseReport& report) {
  if (seg.size() < 2) {
    ++report.short_segments_dropped;
    return;
  }
  segments.push_back(std::move(seg));
}

}  // namespace

ColumnMap ColumnMap::from_header_map(const std::map<std::string, std::string>& header_to_field) {
  ColumnMap m;
  for (const auto& [header, field] : header_to_field) {
    if (field == "vehicle_id") m.vehicle_id = header;
    else if (field == "frame_id") m.frame_id = header;
    else if (field == "timestamp") m.timestamp = header;
    else if (field == "local_x") m.local_x = header;
    else if (field == "local_y") m.local_y = header;
    else if (field == "lane_id") m.lane_id = header;
    else if (field == "speed") m.speed = header;
    else throw Error(ErrorCode::kInvalidConfig, "unknown record field '" + field + "'");
  }
  return m;
}

ColumnMap load_column_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open column map " + path.string());
  try {
    auto j = nlohmann::json::parse(in);
    return ColumnMap::from_header_map(j.get<std::map<std::string, std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
}

Dataset parse_dataset(std::string_view source, const ColumnMap& columns, const RoadConfig& road) {
  road.check();
  ParseReport report;

  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < source.size()) {
      auto nl = source.find('\n', pos);
      if (nl == std::string_view::npos) nl = source.size();
      line = source.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw Error(ErrorCode::kEmptyInput, "input has no header row");
  const ColumnIndex ci = resolve_columns(line, columns);

  std::vector<RawRecord> records;
  records.reserve(source.size() / 64);
  std::vector<std::string_view> fields;
  while (next_line(line)) {
    ++report.rows;
    split_fields(line, fields);
    RawRecord r{};
    std::int64_t lane = 0;
    bool ok = fields.size() > ci.max_index && parse_integer(fields[ci.vehicle_id], r.vehicle_id) &&
              parse_integer(fields[ci.frame_id], r.frame_id) &&
              parse_integer(fields[ci.timestamp], r.timestamp_ms) &&
              parse_number(fields[ci.local_x], r.local_x) &&
              parse_number(fields[ci.local_y], r.local_y) && parse_integer(fields[ci.lane_id], lane);
    r.lane_id = static_cast<int>(lane);
    r.speed = std::numeric_limits<double>::quiet_NaN();
    if (ok && ci.speed) ok = parse_number(fields[*ci.speed], r.speed);
    if (!ok) {
      ++report.malformed_rows;
      if (report.malformed_lines.size() < kMaxReportedLines) report.malformed_lines.push_back(line_no);
      continue;
    }
    records.push_back(r);
  }
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "input has no well-formed data rows");

  std::sort(records.begin(), records.end(),
            [](const RawRecord& a, const RawRecord& b) { return a.key() < b.key(); });

  Dataset ds;
  ds.road = road;
  ds.epoch_ms = std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
                  return a.timestamp_ms < b.timestamp_ms;
                })->timestamp_ms;
  const bool with_speed = ci.speed.has_value();
  const double dt = road.frame_interval;

  std::size_t i = 0;
  while (i < records.size()) {
    const auto vid = records[i].vehicle_id;
    std::vector<VehicleTrack> segments;
    VehicleTrack seg;
    const RawRecord* prev = nullptr;
    for (; i < records.size() && records[i].vehicle_id == vid; ++i) {
      const RawRecord& r = records[i];
      if (prev && r.frame_id == prev->frame_id) {
        if (!r.same_content(*prev)) {
          throw Error(ErrorCode::kNonMonotonicFrames,
                      "vehicle " + std::to_string(vid) + " has conflicting records for frame " +
                          std::to_string(r.frame_id));
        }
        ++report.duplicate_rows;
        ++report.duplicates_by_vehicle[VehicleId{vid}];
        continue;
      }
      if (prev && r.timestamp_ms < prev->timestamp_ms) {
        throw Error(ErrorCode::kNonMonotonicFrames,
                    "vehicle " + std::to_string(vid) + " goes back in time at frame " +
                        std::to_string(r.frame_id));
      }
      if (prev && r.frame_id != prev->frame_id + 1) {
        add_segment(segments, std::move(seg), report);
        seg = VehicleTrack{};
      }
      if (seg.ys.empty()) {
        seg.vehicle_id = VehicleId{vid};
        seg.first_frame = r.frame_id;
        seg.t0 = static_cast<double>(r.timestamp_ms - ds.epoch_ms) / 1000.0;
        seg.dt = dt;
      }
      seg.xs.push_back(r.local_x);
      seg.ys.push_back(r.local_y);
      seg.lanes.push_back(r.lane_id);
      if (with_speed) seg.speeds.push_back(r.speed);
      prev = &r;
    }
    add_segment(segments, std::move(seg), report);
    if (!segments.empty()) ds.tracks.emplace(VehicleId{vid}, std::move(segments));
  }
  ds.parse_report = std::move(report);
  return normalize_units(std::move(ds));
}

Dataset parse_dataset(std::istream& source, const ColumnMap& columns, const RoadConfig& road) {
  std::string text{std::istreambuf_iterator<char>(source), std::istreambuf_iterator<char>()};
  return parse_dataset(std::string_view(text), columns, road);
}

Dataset load_dataset(const std::filesystem::path& path, const ColumnMap& columns,
                     const RoadConfig& road) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    Dataset ds = parse_dataset(in, columns, road);
    ds.source = path.string();
    return ds;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::vector<Dataset> load_datasets(const std::vector<std::filesystem::path>& paths,
                                   const ColumnMap& columns, const RoadConfig& road, unsigned jobs) {
  std::vector<Dataset> out(paths.size());
  parallel_for(paths.size(), jobs, [&](std::size_t i) { out[i] = load_dataset(paths[i], columns, road); });
  return out;
}

Dataset normalize_units(Dataset ds) {
  if (ds.road.unit_system == UnitSystem::kMeters) return ds;
  const double k = ds.road.unit_scale();
  for (auto& [id, segments] : ds.tracks) {
    for (auto& seg : segments) {
      for (auto& x : seg.xs) x *= k;
      for (auto& y : seg.ys) y *= k;
      for (auto& v : seg.speeds) v *= k;
    }
  }
  ds.road.unit_system = UnitSystem::kMeters;
  return ds;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

std::string dataset_to_csv(const Dataset& ds) {
  bool all_speeds = ds.vehicle_count() > 0;
  for (const auto& [id, segs] : ds.tracks) {
    for (const auto& s : segs) all_speeds = all_speeds && !s.speeds.empty();
  }
  const double to_file = 1.0 / ds.road.unit_scale();
  std::string out = "Vehicle_ID,Frame_ID,Global_Time,Local_X,Local_Y,Lane_ID";
  out += all_speeds ? ",v_Vel\n" : "\n";
  for (const auto& [id, segs] : ds.tracks) {
    for (const auto& s : segs) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(to_int(id));
        out += ',';
        out += std::to_string(s.first_frame + static_cast<std::int64_t>(i));
        out += ',';
        out += std::to_string(ds.epoch_ms + std::llround(s.time_at(i) * 1000.0));
        out += ',';
        append_double(out, s.xs[i] * to_file);
        out += ',';
        append_double(out, s.ys[i] * to_file);
        out += ',';
        out += std::to_string(s.lanes[i]);
        if (all_speeds) {
          out += ',';
          append_double(out, s.speeds[i] * to_file);
        }
        out += '\n';
      }
    }
  }
  return out;
}

void write_dataset(std::ostream& out, const Dataset& ds) { out << dataset_to_csv(ds); }

Dataset select_split(const Dataset& ds, SplitTag splits, SplitFractions fractions) {
  Dataset out;
  out.road = ds.road;
  out.epoch_ms = ds.epoch_ms;
  out.source = ds.source;
  out.parse_report = ds.parse_report;
  out.split = splits;
  if (ds.tracks.empty()) return out;
  const auto max_id = static_cast<double>(to_int(ds.tracks.rbegin()->first));
  const auto train_upper = std::llround(fractions.train * max_id);
  const auto val_upper = std::llround((fractions.train + fractions.validation) * max_id);
  for (const auto& [id, segs] : ds.tracks) {
    const auto v = to_int(id);
    SplitTag tag = v <= train_upper ? SplitTag::kTrain
                   : v <= val_upper ? SplitTag::kValidation
                                    : SplitTag::kTest;
    if (includes(splits, tag)) out.tracks.emplace(id, segs);
  }
  return out;
}

std::size_t ValidationReport::total_defects() const noexcept {
  std::size_t n = 0;
  for (const auto& [id, d] : defects) n += d.total();
  return n;
}

ValidationReport validate(const Dataset& ds) {
  ValidationReport report;
  report.vehicles = ds.vehicle_count();
  report.malformed_rows = ds.parse_report.malformed_rows;
  report.short_segments_dropped = ds.parse_report.short_segments_dropped;
  const double lo = ds.road.lane_boundaries.empty() ? 0.0 : ds.road.lane_boundaries.front();
  const double hi = ds.road.lane_boundaries.empty() ? 0.0 : ds.road.lane_boundaries.back();

  for (const auto& [id, segs] : ds.tracks) {
    VehicleDefects d;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto& seg = segs[s];
      ++report.segments;
      report.samples += seg.size();
      if (s > 0) {
        const auto& prev = segs[s - 1];
        ++d.gaps;
        auto prev_last = prev.first_frame + static_cast<std::int64_t>(prev.size()) - 1;
        d.missing_frames += static_cast<std::size_t>(std::max<std::int64_t>(0, seg.first_frame - prev_last - 1));
      }
      for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg.xs[i] < lo || seg.xs[i] > hi) ++d.out_of_bounds_samples;
        if (!ds.road.lane_index(seg.lanes[i])) ++d.unknown_lane_samples;
      }
    }
    if (auto it = ds.parse_report.duplicates_by_vehicle.find(id);
        it != ds.parse_report.duplicates_by_vehicle.end()) {
      d.duplicate_frames = it->second;
    }
    if (d.total() > 0) report.defects.emplace(id, d);
  }
  return report;
}

std::string validation_report_to_json(const ValidationReport& report) {
  nlohmann::json j;
  j["vehicles"] = report.vehicles;
  j["segments"] = report.segments;
  j["samples"] = report.samples;
  j["malformed_rows"] = report.malformed_rows;
  j["short_segments_dropped"] = report.short_segments_dropped;
  j["total_defects"] = report.total_defects();
  auto& per = j["defects"] = nlohmann::json::array();
  for (const auto& [id, d] : report.defects) {
    per.push_back({{"vehicle_id", to_int(id)},
                   {"gaps", d.gaps},
                   {"missing_frames", d.missing_frames},
                   {"duplicate_frames", d.duplicate_frames},
                   {"out_of_bounds_samples", d.out_of_bounds_samples},
                   {"unknown_lane_samples", d.unknown_lane_samples}});
  }
  return j.dump(2) + "\n";
}

}  // namespace mergelens
