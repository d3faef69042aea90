#include "doctest.h"
#include "mergelens/wire_protocol.hpp"
#include "support.hpp"

using namespace mergelens;
using namespace mergelens::test;

namespace {

PredictionRequest sample_request() {
  PredictionRequest r;
  r.request_id = 123456789012ULL;
  r.dt = 0.1;
  r.history_len = 3.0;
  r.horizon = 5.0;
  r.focus_id = vid(17);
  r.history.push_back({vid(17), {{0.1, 1.0 / 3.0, 200.125, 6}, {0.2, 0.1 + 0.2, 201.5, 7}}});
  r.history.push_back({vid(4), {}});
  return r;
}

void expect_violation(std::string_view line) {
  try {
    wire::decode(line);
    FAIL("expected ProtocolViolation for " << line);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProtocolViolation);
  }
}

}  // namespace

TEST_SUITE("wire protocol") {
  TEST_CASE("every record type round-trips") {
    const std::vector<wire::Record> records{
        wire::Hello{1, 0.1, 3.0, 5.0},
        wire::Ready{},
        sample_request(),
        PredictionResponse{9, {{1.0 / 7.0, -2.5}, {1e-300, 1e300}}},
        wire::ErrorRecord{5, "boom"},
        wire::ErrorRecord{std::nullopt, "refused"},
        wire::Bye{},
    };
    for (const auto& r : records) {
      const std::string line = wire::encode(r);
      CHECK(line.find('\n') == std::string::npos);
      CHECK(wire::decode(line) == r);
    }
  }

  TEST_CASE("decodes hand-written records") {
    const auto rec = wire::decode(R"({"type":"response","request_id":3,"points":[[1,2],[3.5,4]]})");
    const auto* resp = std::get_if<PredictionResponse>(&rec);
    REQUIRE(resp != nullptr);
    CHECK(resp->request_id == 3);
    CHECK(resp->points == std::vector<Point2>{{1, 2}, {3.5, 4}});
    CHECK(std::holds_alternative<wire::Ready>(wire::decode(R"({"type":"ready"})")));
  }

  TEST_CASE("malformed lines are protocol violations") {
    expect_violation("");
    expect_violation("not json");
    expect_violation("[1,2]");
    expect_violation(R"({"type":"teleport"})");
    expect_violation(R"({"request_id":1})");
    expect_violation(R"({"type":"response","request_id":-1,"points":[]})");
    expect_violation(R"({"type":"response","request_id":1,"points":[[1]]})");
    expect_violation(R"({"type":"response","request_id":1,"points":[[1,"a"]]})");
    expect_violation(R"({"type":"response","request_id":1,"points":[[0,NaN]]})");
    expect_violation(R"({"type":"hello","protocol_version":1,"dt":0.1,"history_len":3})");
    expect_violation(R"({"type":"ready","extra":1})");
  }
}
