#include "mergelens/wire_protocol.hpp"

#include <initializer_list>

#include "json.hpp"
#include "mergelens/error.hpp"

namespace mergelens::wire {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorCode::kProtocolViolation, what); }

void only_keys(const json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) violation("unexpected member '" + key + "'");
  }
}

const json& member(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) violation(std::string("missing member '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = member(j, key);
  if (!v.is_number()) violation(std::string("member '") + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t unsigned_id(const json& v, const char* key) {
  if (!v.is_number_unsigned()) violation(std::string("member '") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::int64_t signed_id(const json& v, const char* key) {
  if (!v.is_number_integer()) violation(std::string("member '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::vector<double> number_array(const json& j, const char* key) {
  const json& v = member(j, key);
  if (!v.is_array()) violation(std::string("member '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) violation(std::string("member '") + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

json encode_request(const PredictionRequest& r) {
  json history = json::array();
  for (const auto& h : r.history) {
    json t = json::array(), x = json::array(), y = json::array(), lane = json::array();
    for (const auto& s : h.samples) {
      t.push_back(s.t);
      x.push_back(s.x);
      y.push_back(s.y);
      lane.push_back(s.lane);
    }
    history.push_back({{"vehicle_id", to_int(h.vehicle_id)}, {"t", t}, {"x", x}, {"y", y}, {"lane", lane}});
  }
  return {{"type", "request"},       {"request_id", r.request_id}, {"dt", r.dt},
          {"history_len", r.history_len}, {"horizon", r.horizon},       {"focus_id", to_int(r.focus_id)},
          {"history", history}};
}

PredictionRequest decode_request(const json& j) {
  only_keys(j, {"type", "request_id", "dt", "history_len", "horizon", "focus_id", "history"});
  PredictionRequest r;
  r.request_id = unsigned_id(member(j, "request_id"), "request_id");
  r.dt = number(j, "dt");
  r.history_len = number(j, "history_len");
  r.horizon = number(j, "horizon");
  r.focus_id = VehicleId{signed_id(member(j, "focus_id"), "focus_id")};
  if (!(r.dt > 0.0) || !(r.horizon > 0.0) || !(r.history_len > 0.0)) {
    violation("dt, history_len and horizon must be positive");
  }
  const json& history = member(j, "history");
  if (!history.is_array()) violation("member 'history' must be an array");
  for (const auto& h : history) {
    if (!h.is_object()) violation("history entries must be objects");
    only_keys(h, {"vehicle_id", "t", "x", "y", "lane"});
    VehicleHistory vh;
    vh.vehicle_id = VehicleId{signed_id(member(h, "vehicle_id"), "vehicle_id")};
    auto t = number_array(h, "t");
    auto x = number_array(h, "x");
    auto y = number_array(h, "y");
    const json& lane = member(h, "lane");
    if (!lane.is_array()) violation("member 'lane' must be an array");
    if (x.size() != t.size() || y.size() != t.size() || lane.size() != t.size()) {
      violation("history arrays of vehicle " + std::to_string(to_int(vh.vehicle_id)) + " differ in length");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      vh.samples.push_back({t[i], x[i], y[i], static_cast<int>(signed_id(lane[i], "lane"))});
    }
    r.history.push_back(std::move(vh));
  }
  return r;
}

}  // namespace

std::string encode(const Record& record) {
  json j = std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Hello>) {
          return {{"type", "hello"},
                  {"protocol_version", r.protocol_version},
                  {"dt", r.dt},
                  {"history_len", r.history_len},
                  {"horizon", r.horizon}};
        } else if constexpr (std::is_same_v<T, Ready>) {
          return {{"type", "ready"}};
        } else if constexpr (std::is_same_v<T, Bye>) {
          return {{"type", "bye"}};
        } else if constexpr (std::is_same_v<T, PredictionRequest>) {
          return encode_request(r);
        } else if constexpr (std::is_same_v<T, PredictionResponse>) {
          json points = json::array();
          for (const auto& p : r.points) points.push_back({p.x, p.y});
          return {{"type", "response"}, {"request_id", r.request_id}, {"points", points}};
        } else {
          json e = {{"type", "error"}, {"message", r.message}};
          if (r.request_id) e["request_id"] = *r.request_id;
          return e;
        }
      },
      record);
  return j.dump();
}

Record decode(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  json j;
  try {
    j = json::parse(line.begin(), line.end());
  } catch (const json::parse_error&) {
    violation("not a JSON record: '" + std::string(line.substr(0, 80)) + "'");
  }
  if (!j.is_object()) violation("record must be a JSON object");
  const json& type = member(j, "type");
  if (!type.is_string()) violation("member 'type' must be a string");
  const auto& t = type.get_ref<const std::string&>();

  if (t == "hello") {
    only_keys(j, {"type", "protocol_version", "dt", "history_len", "horizon"});
    Hello h;
    h.protocol_version = static_cast<int>(signed_id(member(j, "protocol_version"), "protocol_version"));
    h.dt = number(j, "dt");
    h.history_len = number(j, "history_len");
    h.horizon = number(j, "horizon");
    return h;
  }
  if (t == "ready") {
    only_keys(j, {"type"});
    return Ready{};
  }
  if (t == "bye") {
    only_keys(j, {"type"});
    return Bye{};
  }
  if (t == "request") return decode_request(j);
  if (t == "response") {
    only_keys(j, {"type", "request_id", "points"});
    PredictionResponse r;
    r.request_id = unsigned_id(member(j, "request_id"), "request_id");
    const json& points = member(j, "points");
    if (!points.is_array()) violation("member 'points' must be an array");
    r.points.reserve(points.size());
    for (const auto& p : points) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        violation("points must be [x, y] number pairs");
      }
      r.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return r;
  }
  if (t == "error") {
    only_keys(j, {"type", "request_id", "message"});
    ErrorRecord e;
    const json& msg = member(j, "message");
    if (!msg.is_string()) violation("member 'message' must be a string");
    e.message = msg.get<std::string>();
    if (j.contains("request_id")) e.request_id = unsigned_id(j["request_id"], "request_id");
    return e;
  }
  violation("unknown record type '" + t + "'");
}

}  // namespace mergelens::wire
