#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <sys/types.h>
#include <vector>

#include "mergelens/predictors.hpp"
#include "mergelens/wire_protocol.hpp"

namespace mergelens {

struct ChannelOptions {
  double timeout_s = 10.0;
};

/// A child process speaking the wire protocol on its stdin/stdout. The child's
/// stderr is inherited. The channel is strictly sequential and must not be
/// shared between threads.
class ExternalChannel {
 public:
  /// Starts `command` through /bin/sh and completes the handshake.
  /// Throws Error(kPredictorError) if the server refuses the handshake,
  /// kProtocolViolation, kTimeout or kChildExited.
  ExternalChannel(const std::string& command, const wire::Hello& hello, ChannelOptions options = {});
  ~ExternalChannel();

  ExternalChannel(const ExternalChannel&) = delete;
  ExternalChannel& operator=(const ExternalChannel&) = delete;

  /// Sends one request and waits for the response carrying its id. Responses to
  /// other outstanding requests that arrive first are kept for later.
  PredictionResponse run(const PredictionRequest& req);

  /// Sends every request before collecting responses, matching them by id.
  /// Results follow the order of `reqs`. A failed request throws.
  std::vector<PredictionResponse> run_batch(std::span<const PredictionRequest> reqs);

  const wire::Hello& hello() const noexcept { return hello_; }
  bool alive() const noexcept { return pid_ > 0 && !dead_; }

 private:
  void send_line(const std::string& line);
  std::string read_line();
  void pump_input(int timeout_ms);
  wire::Record await(std::uint64_t id);
  PredictionResponse finish(const PredictionRequest& req, wire::Record record);
  void shutdown() noexcept;

  wire::Hello hello_;
  ChannelOptions options_;
  pid_t pid_ = -1;
  int fd_ = -1;
  bool dead_ = false;
  std::string inbox_;
  std::map<std::uint64_t, wire::Record> pending_;
  std::set<std::uint64_t> outstanding_;
  std::set<std::uint64_t> abandoned_;
};

/// run_external: the request/response exchange over an attached channel.
PredictionResponse run_external(const PredictionRequest& req, ExternalChannel& channel);

/// Source launching `command` per worker thread. A "{input}" placeholder in the
/// command is replaced with the scene's source path, and then every scene gets
/// its own process.
std::unique_ptr<PredictorSource> make_external_source(std::string command, wire::Hello hello,
                                                      ChannelOptions options = {});

}  // namespace mergelens
