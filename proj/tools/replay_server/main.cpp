// Serves recorded futures over the predictor wire protocol on stdin/stdout.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mergelens/error.hpp"
#include "mergelens/ingest.hpp"
#include "mergelens/wire_protocol.hpp"

using namespace mergelens;

namespace {

void emit(const wire::Record& r) {
  std::cout << wire::encode(r) << '\n' << std::flush;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replay predictor: answers requests with the recorded future", "mergelens-replay-server"};
  std::string road_path, input, columns_path;
  std::optional<double> history, horizon;
  app.add_option("--road", road_path, "Road configuration file")->required();
  app.add_option("--input", input, "Trajectory table to replay")->required();
  app.add_option("--columns", columns_path, "Column map file");
  app.add_option("--history", history, "Refuse handshakes with another history length");
  app.add_option("--horizon", horizon, "Refuse handshakes with another horizon");
  CLI11_PARSE(app, argc, argv);

  Dataset ds;
  try {
    const ColumnMap columns = columns_path.empty() ? ColumnMap{} : load_column_map(columns_path);
    ds = load_dataset(input, columns, load_road_config(road_path));
  } catch (const Error& e) {
    std::cerr << "mergelens-replay-server: " << e.what() << '\n';
    return 2;
  }

  bool ready = false;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    wire::Record rec;
    try {
      rec = wire::decode(line);
    } catch (const Error& e) {
      emit(wire::ErrorRecord{std::nullopt, e.detail()});
      continue;
    }
    if (auto* h = std::get_if<wire::Hello>(&rec)) {
      std::string why;
      if (h->protocol_version != wire::kProtocolVersion) why = "unsupported protocol version";
      else if (!close(h->dt, ds.road.frame_interval)) why = "dt does not match the recording";
      else if (history && !close(h->history_len, *history)) why = "history length mismatch";
      else if (horizon && !close(h->horizon, *horizon)) why = "horizon mismatch";
      if (why.empty()) {
        ready = true;
        emit(wire::Ready{});
      } else {
        emit(wire::ErrorRecord{std::nullopt, why});
      }
    } else if (auto* req = std::get_if<PredictionRequest>(&rec)) {
      if (!ready) {
        emit(wire::ErrorRecord{req->request_id, "request before a successful handshake"});
        continue;
      }
      try {
        emit(replay_from(ds, *req));
      } catch (const Error& e) {
        emit(wire::ErrorRecord{req->request_id, e.detail()});
      }
    } else if (std::holds_alternative<wire::Bye>(rec)) {
      return 0;
    } else {
      emit(wire::ErrorRecord{std::nullopt, "unexpected record"});
    }
  }
  return 0;
}
