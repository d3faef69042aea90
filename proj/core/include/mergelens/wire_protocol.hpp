#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "mergelens/predictors.hpp"

namespace mergelens::wire {

// Newline-delimited JSON records exchanged with an external predictor over its
// standard input and output. Every record is an object with a "type" member:
//
//   client -> server   {"type":"hello","protocol_version":1,"dt":..,"history_len":..,"horizon":..}
//   server -> client   {"type":"ready"}
//   client -> server   {"type":"request","request_id":..,"dt":..,"history_len":..,"horizon":..,
//                       "focus_id":..,"history":[{"vehicle_id":..,"t":[..],"x":[..],"y":[..],
//                       "lane":[..]}, ...]}
//   server -> client   {"type":"response","request_id":..,"points":[[x,y], ...]}
//   server -> client   {"type":"error","request_id":..,"message":".."}   (request_id optional)
//   client -> server   {"type":"bye"}
//
// Units are meters and seconds.

inline constexpr int kProtocolVersion = 1;

struct Hello {
  int protocol_version = kProtocolVersion;
  double dt = 0.1;
  double history_len = 3.0;
  double horizon = 5.0;

  friend bool operator==(const Hello&, const Hello&) = default;
};

struct Ready {
  friend bool operator==(const Ready&, const Ready&) = default;
};

struct Bye {
  friend bool operator==(const Bye&, const Bye&) = default;
};

struct ErrorRecord {
  std::optional<std::uint64_t> request_id;
  std::string message;

  friend bool operator==(const ErrorRecord&, const ErrorRecord&) = default;
};

using Record = std::variant<Hello, Ready, PredictionRequest, PredictionResponse, ErrorRecord, Bye>;

/// One line of JSON, without the trailing newline. Doubles are written with
/// round-trip precision.
std::string encode(const Record& record);

/// Throws Error(kProtocolViolation) if `line` is not a well-formed record.
Record decode(std::string_view line);

}  // namespace mergelens::wire
