#include <cstdlib>

#include "doctest.h"
#include "mergelens/external_predictor.hpp"
#include "mergelens/ingest.hpp"
#include "mergelens/pipeline.hpp"
#include "support.hpp"

using namespace mergelens;
using namespace mergelens::test;

namespace {

std::string fake(const std::string& mode) { return std::string("'") + FAKE_PREDICTOR + "' " + mode; }

PredictionRequest linear_request(std::uint64_t id, double speed = 10.0) {
  PredictionRequest r;
  r.request_id = id;
  r.focus_id = vid(1);
  VehicleHistory h{vid(1), {}};
  for (int i = 0; i <= 30; ++i) h.samples.push_back({0.1 * i, 2.0, speed * 0.1 * i, 6});
  r.history.push_back(h);
  return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_SUITE("external channel") {
  TEST_CASE("well-behaved server answers in order") {
    ExternalChannel ch(fake("echo"), wire::Hello{});
    for (std::uint64_t id = 1; id <= 3; ++id) {
      const auto req = linear_request(id, 5.0 * static_cast<double>(id));
      CHECK(run_external(req, ch) == predict_constant_velocity(req));
    }
    CHECK(ch.alive());
  }

  TEST_CASE("out-of-order responses are matched by id") {
    ExternalChannel ch(fake("reverse 4"), wire::Hello{});
    std::vector<PredictionRequest> reqs;
    for (std::uint64_t id = 10; id < 14; ++id) reqs.push_back(linear_request(id, static_cast<double>(id)));
    const auto resps = ch.run_batch(reqs);
    REQUIRE(resps.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(resps[i] == predict_constant_velocity(reqs[i]));
  }

  TEST_CASE("49 points instead of 50") {
    ExternalChannel ch(fake("short"), wire::Hello{});
    CHECK(code_of([&] { ch.run(linear_request(1)); }) == ErrorCode::kProtocolViolation);
  }

  TEST_CASE("non-finite coordinates") {
    ExternalChannel ch(fake("nan"), wire::Hello{});
    CHECK(code_of([&] { ch.run(linear_request(1)); }) == ErrorCode::kProtocolViolation);
  }

  TEST_CASE("a line that is not a record") {
    ExternalChannel ch(fake("garbage"), wire::Hello{});
    CHECK(code_of([&] { ch.run(linear_request(1)); }) == ErrorCode::kProtocolViolation);
  }

  TEST_CASE("a response for a request never sent") {
    ExternalChannel ch(fake("unknown_id"), wire::Hello{});
    CHECK(code_of([&] { ch.run(linear_request(1)); }) == ErrorCode::kProtocolViolation);
  }

  TEST_CASE("child exits mid-conversation") {
    ExternalChannel ch(fake("crash"), wire::Hello{});
    CHECK(code_of([&] { ch.run(linear_request(1)); }) == ErrorCode::kChildExited);
    CHECK_FALSE(ch.alive());
    CHECK(code_of([&] { ch.run(linear_request(2)); }) == ErrorCode::kChildExited);
  }

  TEST_CASE("slow server times out") {
    ExternalChannel ch(fake("slow"), wire::Hello{}, ChannelOptions{0.3});
    CHECK(code_of([&] { ch.run(linear_request(1)); }) == ErrorCode::kTimeout);
    CHECK_FALSE(ch.alive());
  }

  TEST_CASE("silent handshake times out") {
    CHECK(code_of([] { ExternalChannel ch(fake("silent_hello"), wire::Hello{}, ChannelOptions{0.3}); }) ==
          ErrorCode::kTimeout);
  }

  TEST_CASE("refused handshake is a predictor error") {
    CHECK(code_of([] { ExternalChannel ch(fake("refuse"), wire::Hello{}); }) == ErrorCode::kPredictorError);
  }

  TEST_CASE("per-request errors leave the channel usable") {
    ExternalChannel ch(fake("error"), wire::Hello{});
    CHECK(code_of([&] { ch.run(linear_request(1)); }) == ErrorCode::kPredictorError);
    CHECK(ch.alive());
    CHECK(code_of([&] { ch.run(linear_request(2)); }) == ErrorCode::kPredictorError);
  }

  TEST_CASE("a command that does not exist") {
    CHECK(code_of([] { ExternalChannel ch("/nonexistent/predictor-binary", wire::Hello{}); }) ==
          ErrorCode::kChildExited);
  }

  TEST_CASE("external source restarts a dead process") {
    auto src = make_external_source(fake("echo"), wire::Hello{});
    const Dataset ds;
    auto p = src->open(ds);
    const auto req = linear_request(4);
    CHECK(p->predict(req, ds) == predict_constant_velocity(req));
    CHECK(p->predict(linear_request(5), ds).request_id == 5);
  }
}

TEST_SUITE("replay server") {
  TEST_CASE("answers with the recorded future") {
    const auto corpus = generate_corpus(1, 3);
    const Dataset& ds = corpus[0].dataset;
    TempDir dir("replay");
    write_file(dir / "road.json", road_config_to_text(ds.road));
    write_file(dir / "scene.csv", dataset_to_csv(ds));
    const std::string cmd = std::string("'") + REPLAY_SERVER + "' --road '" + (dir / "road.json").string() +
                            "' --input '" + (dir / "scene.csv").string() + "'";
    ExternalChannel ch(cmd, wire::Hello{});
    const auto& truth = corpus[0].truth;
    const auto req = build_request(ds, *truth.intended_pair, truth.t_m - 3.0, PredictionConfig{}, 11);
    CHECK(ch.run(req) == replay_from(ds, req));
  }

  TEST_CASE("refuses a mismatched history length and stays alive") {
    const auto corpus = generate_corpus(1, 3);
    TempDir dir("replay");
    write_file(dir / "road.json", road_config_to_text(corpus[0].dataset.road));
    write_file(dir / "scene.csv", dataset_to_csv(corpus[0].dataset));
    const std::string server = std::string("'") + REPLAY_SERVER + "' --history 2 --road '" +
                               (dir / "road.json").string() + "' --input '" + (dir / "scene.csv").string() + "'";
    CHECK(code_of([&] { ExternalChannel ch(server, wire::Hello{}); }) == ErrorCode::kPredictorError);

    // Second hello on the same process with matching values is accepted.
    write_file(dir / "in.ndjson", wire::encode(wire::Hello{1, 0.1, 3.0, 5.0}) + "\n" +
                                      wire::encode(wire::Hello{1, 0.1, 2.0, 5.0}) + "\n" + wire::encode(wire::Bye{}) +
                                      "\n");
    const std::string cmd = server + " < '" + (dir / "in.ndjson").string() + "' > '" + (dir / "out.ndjson").string() + "'";
    REQUIRE(std::system(cmd.c_str()) == 0);
    const std::string out = read_file(dir / "out.ndjson");
    const auto nl = out.find('\n');
    REQUIRE(nl != std::string::npos);
    CHECK(std::holds_alternative<wire::ErrorRecord>(wire::decode(out.substr(0, nl))));
    CHECK(std::holds_alternative<wire::Ready>(wire::decode(out.substr(nl + 1, out.find('\n', nl + 1) - nl - 1))));
  }
}
