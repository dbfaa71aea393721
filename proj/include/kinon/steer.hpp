#ifndef KINON_STEER_HPP
#define KINON_STEER_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kinon/config.hpp"
#include "kinon/simulation.hpp"

namespace kinon::steer {

/// Wire schema version carried in every reply.
inline constexpr int kProtocolVersion = 1;

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// One live simulation driven by commands. All mutation happens under the
/// session mutex, and the background runner only takes it between cycles,
/// so commands always land on cycle boundaries.
class Session {
public:
  Session(std::string id, RunConfig config);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const noexcept { return id_; }

  nlohmann::json start();
  nlohmann::json pause();
  nlohmann::json step(std::int64_t n);
  nlohmann::json set_params(const ParamPatch& patch);
  nlohmann::json subscribe(std::int64_t stride);
  nlohmann::json frame(double scale);
  nlohmann::json series(std::int64_t since);
  nlohmann::json snapshot();
  void close();

  /// Drains queued stream events of one subscriber, waiting up to `wait`
  /// for the first one. Throws std::out_of_range for unknown subscribers.
  std::vector<nlohmann::json> poll(std::uint64_t subscriber, std::chrono::milliseconds wait);

  bool has_subscriber(std::uint64_t subscriber) const;
  std::int64_t cycle() const;
  bool running() const;

private:
  struct Subscriber {
    std::int64_t stride = 1;
    std::deque<nlohmann::json> queue;
  };

  static constexpr std::size_t kMaxQueued = 4096;

  void advance();  // one cycle; caller holds mu_
  void run_loop(std::stop_token stop);
  nlohmann::json reply(const char* type) const;  // caller holds mu_
  ModelParams effective_params() const;          // latest, including pending

  std::string id_;
  RunConfig config_;
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  Simulation sim_;
  bool running_ = false;
  bool closed_ = false;
  std::uint64_t next_subscriber_ = 1;
  std::map<std::uint64_t, Subscriber> subscribers_;
  std::jthread runner_;
};

/// Routes protocol messages to sessions.
///
/// Requests are JSON objects with a `type` field (Create, Start, Pause, Step,
/// SetParams, Subscribe, GetFrame, GetSeries, Snapshot, Close) and, except for
/// Create, a `session` id. An optional `id` is echoed back. Failures come
/// back as {"type": "error", "error": {"code", "message", "fields"}}.
class SessionManager {
public:
  nlohmann::json handle(const nlohmann::json& request);
  /// Same as handle() on raw text; malformed JSON yields an error reply.
  std::string handle_text(const std::string& text);

  std::shared_ptr<Session> find(const std::string& id) const;
  std::size_t session_count() const;

private:
  mutable std::mutex mu_;
  std::uint64_t next_id_ = 1;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

nlohmann::json error_reply(const std::string& code, const std::string& message,
                           const std::vector<std::pair<std::string, std::string>>& fields = {});

}  // namespace kinon::steer

#endif  // KINON_STEER_HPP
