#include "mergelens/external_predictor.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "mergelens/error.hpp"

namespace mergelens {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(left);
}

Clock::time_point deadline_after(double seconds) {
  return Clock::now() + std::chrono::microseconds(static_cast<long long>(seconds * 1e6));
}

}  // namespace

ExternalChannel::ExternalChannel(const std::string& command, const wire::Hello& hello, ChannelOptions options)
    : hello_(hello), options_(options) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw Error(ErrorCode::kIo, std::string("socketpair: ") + std::strerror(errno));
  }
  pid_ = ::fork();
  if (pid_ < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw Error(ErrorCode::kIo, std::string("fork: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  fd_ = sv[0];
  ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);

  try {
    send_line(wire::encode(hello_));
    auto reply = wire::decode(read_line());
    if (auto* e = std::get_if<wire::ErrorRecord>(&reply)) {
      throw Error(ErrorCode::kPredictorError, "handshake refused: " + e->message);
    }
    if (!std::holds_alternative<wire::Ready>(reply)) {
      throw Error(ErrorCode::kProtocolViolation, "expected a ready record after hello");
    }
  } catch (...) {
    dead_ = true;
    shutdown();
    throw;
  }
}

ExternalChannel::~ExternalChannel() { shutdown(); }

void ExternalChannel::shutdown() noexcept {
  if (pid_ <= 0) return;
  if (!dead_) {
    try {
      send_line(wire::encode(wire::Bye{}));
    } catch (...) {
    }
  }
  ::shutdown(fd_, SHUT_WR);
  int status = 0;
  bool reaped = false;
  const auto deadline = deadline_after(2.0);
  while (!reaped && Clock::now() < deadline) {
    pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_ || r < 0) {
      reaped = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!reaped) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
  ::close(fd_);
  fd_ = -1;
  pid_ = -1;
  dead_ = true;
}

void ExternalChannel::pump_input(int timeout_ms) {
  pollfd p{fd_, POLLIN, 0};
  int n = ::poll(&p, 1, timeout_ms);
  if (n < 0 && errno != EINTR) throw Error(ErrorCode::kIo, std::string("poll: ") + std::strerror(errno));
  if (n <= 0) return;
  char buf[65536];
  for (;;) {
    ssize_t got = ::recv(fd_, buf, sizeof(buf), 0);
    if (got > 0) {
      inbox_.append(buf, static_cast<std::size_t>(got));
      continue;
    }
    if (got == 0) {
      dead_ = true;
      throw Error(ErrorCode::kChildExited, "predictor process closed its output");
    }
    if (errno == EAGAIN || errno == EWOULDBLOCK) return;
    if (errno == EINTR) continue;
    dead_ = true;
    throw Error(ErrorCode::kChildExited, std::string("recv: ") + std::strerror(errno));
  }
}

void ExternalChannel::send_line(const std::string& line) {
  if (dead_) throw Error(ErrorCode::kChildExited, "predictor process is gone");
  std::string data = line + "\n";
  std::size_t sent = 0;
  const auto deadline = deadline_after(options_.timeout_s);
  while (sent < data.size()) {
    ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n > 0) {
      sent += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
      dead_ = true;
      throw Error(ErrorCode::kChildExited, std::string("send: ") + std::strerror(errno));
    }
    // Peer is not reading; drain its output so it can make progress.
    pollfd p{fd_, POLLOUT | POLLIN, 0};
    int ready = ::poll(&p, 1, remaining_ms(deadline));
    if (ready == 0) {
      dead_ = true;
      throw Error(ErrorCode::kTimeout, "predictor stopped reading requests");
    }
    if (p.revents & POLLIN) pump_input(0);
  }
}

std::string ExternalChannel::read_line() {
  const auto deadline = deadline_after(options_.timeout_s);
  for (;;) {
    auto nl = inbox_.find('\n');
    if (nl != std::string::npos) {
      std::string line = inbox_.substr(0, nl);
      inbox_.erase(0, nl + 1);
      return line;
    }
    if (dead_) throw Error(ErrorCode::kChildExited, "predictor process is gone");
    const int left = remaining_ms(deadline);
    if (left == 0) {
      dead_ = true;
      throw Error(ErrorCode::kTimeout, "no response within " + std::to_string(options_.timeout_s) + " s");
    }
    pump_input(left);
  }
}

wire::Record ExternalChannel::await(std::uint64_t id) {
  if (auto it = pending_.find(id); it != pending_.end()) {
    auto rec = std::move(it->second);
    pending_.erase(it);
    return rec;
  }
  for (;;) {
    auto rec = wire::decode(read_line());
    std::optional<std::uint64_t> rid;
    if (auto* r = std::get_if<PredictionResponse>(&rec)) {
      rid = r->request_id;
    } else if (auto* e = std::get_if<wire::ErrorRecord>(&rec)) {
      if (!e->request_id) throw Error(ErrorCode::kPredictorError, e->message);
      rid = e->request_id;
    } else {
      throw Error(ErrorCode::kProtocolViolation, "unexpected record while awaiting a response");
    }
    if (*rid == id) return rec;
    if (abandoned_.erase(*rid)) continue;
    if (!outstanding_.count(*rid)) {
      throw Error(ErrorCode::kProtocolViolation, "response for unknown request " + std::to_string(*rid));
    }
    pending_.emplace(*rid, std::move(rec));
  }
}

PredictionResponse ExternalChannel::finish(const PredictionRequest& req, wire::Record record) {
  outstanding_.erase(req.request_id);
  if (auto* e = std::get_if<wire::ErrorRecord>(&record)) {
    throw Error(ErrorCode::kPredictorError, "request " + std::to_string(req.request_id) + ": " + e->message);
  }
  auto resp = std::get<PredictionResponse>(std::move(record));
  check_response(req, resp);
  return resp;
}

PredictionResponse ExternalChannel::run(const PredictionRequest& req) {
  try {
    send_line(wire::encode(req));
    outstanding_.insert(req.request_id);
    return finish(req, await(req.request_id));
  } catch (...) {
    if (outstanding_.erase(req.request_id)) abandoned_.insert(req.request_id);
    throw;
  }
}

std::vector<PredictionResponse> ExternalChannel::run_batch(std::span<const PredictionRequest> reqs) {
  for (const auto& r : reqs) {
    send_line(wire::encode(r));
    outstanding_.insert(r.request_id);
  }
  std::vector<PredictionResponse> out;
  out.reserve(reqs.size());
  std::size_t i = 0;
  try {
    for (; i < reqs.size(); ++i) out.push_back(finish(reqs[i], await(reqs[i].request_id)));
  } catch (...) {
    for (; i < reqs.size(); ++i) {
      if (outstanding_.erase(reqs[i].request_id)) abandoned_.insert(reqs[i].request_id);
    }
    throw;
  }
  return out;
}

PredictionResponse run_external(const PredictionRequest& req, ExternalChannel& channel) {
  return channel.run(req);
}

namespace {

constexpr std::string_view kInputPlaceholder = "{input}";

class ExternalPredictor final : public Predictor {
 public:
  ExternalPredictor(std::string command, wire::Hello hello, ChannelOptions options)
      : command_(std::move(command)), hello_(hello), options_(options) {}

  PredictionResponse predict(const PredictionRequest& req, const Dataset&) override {
    if (!channel_ || !channel_->alive()) {
      channel_.reset();
      channel_ = std::make_unique<ExternalChannel>(command_, hello_, options_);
    }
    return channel_->run(req);
  }

 private:
  std::string command_;
  wire::Hello hello_;
  ChannelOptions options_;
  std::unique_ptr<ExternalChannel> channel_;
};

class ExternalSource final : public PredictorSource {
 public:
  ExternalSource(std::string command, wire::Hello hello, ChannelOptions options)
      : command_(std::move(command)), hello_(hello), options_(options) {}

  std::string name() const override { return "external"; }
  bool per_scene() const override { return command_.find(kInputPlaceholder) != std::string::npos; }

  std::unique_ptr<Predictor> open(const Dataset& scene) const override {
    std::string cmd = command_;
    for (auto pos = cmd.find(kInputPlaceholder); pos != std::string::npos;
         pos = cmd.find(kInputPlaceholder, pos)) {
      cmd.replace(pos, kInputPlaceholder.size(), "'" + scene.source + "'");
      pos += scene.source.size() + 2;
    }
    return std::make_unique<ExternalPredictor>(std::move(cmd), hello_, options_);
  }

 private:
  std::string command_;
  wire::Hello hello_;
  ChannelOptions options_;
};

}  // namespace

std::unique_ptr<PredictorSource> make_external_source(std::string command, wire::Hello hello,
                                                      ChannelOptions options) {
  return std::make_unique<ExternalSource>(std::move(command), hello, options);
}

}  // namespace mergelens
