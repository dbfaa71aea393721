#include "kinon/steer.hpp"

#include <openssl/evp.h>

#include <stdexcept>

#include "kinon/errors.hpp"
#include "kinon/image.hpp"
#include "kinon/persist.hpp"
#include "kinon/runner.hpp"

namespace kinon::steer {

using nlohmann::json;

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length must be a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("base64: malformed input");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the bytes produced by '=' padding
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

json error_reply(const std::string& code, const std::string& message,
                 const std::vector<std::pair<std::string, std::string>>& fields) {
  json f = json::array();
  for (const auto& [path, msg] : fields) f.push_back({{"path", path}, {"message", msg}});
  return {{"type", "error"},
          {"version", kProtocolVersion},
          {"error", {{"code", code}, {"message", message}, {"fields", f}}}};
}

Session::Session(std::string id, RunConfig config)
    : id_(std::move(id)), config_(std::move(config)), sim_(make_simulation(config_)) {
  runner_ = std::jthread([this](std::stop_token stop) { run_loop(stop); });
}

Session::~Session() { close(); }

void Session::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
    running_ = false;
  }
  runner_.request_stop();
  cv_.notify_all();
  if (runner_.joinable() && runner_.get_id() != std::this_thread::get_id()) runner_.join();
}

void Session::run_loop(std::stop_token stop) {
  std::unique_lock lock(mu_);
  while (!stop.stop_requested()) {
    if (!cv_.wait(lock, stop, [this] { return running_ && !closed_; })) break;
    advance();
    if (sim_.cycle() >= config_.schedule.max_cycles) running_ = false;
    // let queued commands in at the cycle boundary
    lock.unlock();
    std::this_thread::yield();
    lock.lock();
  }
}

void Session::advance() {
  const MacroRecord& rec = sim_.step();
  const std::int64_t c = sim_.cycle();
  std::optional<std::string> pgm;
  for (auto& [sid, sub] : subscribers_) {
    if (c % sub.stride != 0) continue;
    if (!pgm) pgm = base64_encode(encode_pgm(render_frame(sim_.snapshot(config_.render.storage_only), config_.render.scale)));
    sub.queue.push_back({{"type", "frame"},
                         {"version", kProtocolVersion},
                         {"session", id_},
                         {"subscriber", sid},
                         {"cycle", c},
                         {"width", config_.topology.width},
                         {"height", config_.topology.height},
                         {"pgm", *pgm},
                         {"Ke", rec.exchange},
                         {"Kt", rec.turnover}});
    if (sub.queue.size() > kMaxQueued) sub.queue.pop_front();
  }
  cv_.notify_all();
}

json Session::reply(const char* type) const {
  return {{"type", type},
          {"version", kProtocolVersion},
          {"session", id_},
          {"cycle", sim_.cycle()},
          {"state", running_ ? "running" : "paused"}};
}

ModelParams Session::effective_params() const {
  return sim_.pending().empty() ? sim_.params() : sim_.pending().rbegin()->second;
}

json Session::start() {
  std::lock_guard lock(mu_);
  if (sim_.cycle() < config_.schedule.max_cycles) running_ = true;
  cv_.notify_all();
  return reply("started");
}

json Session::pause() {
  std::lock_guard lock(mu_);
  running_ = false;
  return reply("paused");
}

json Session::step(std::int64_t n) {
  if (n < 0) throw ValidationError("n", "must be >= 0");
  std::lock_guard lock(mu_);
  running_ = false;
  for (std::int64_t i = 0; i < n; ++i) advance();
  json r = reply("stepped");
  r["advanced"] = n;
  return r;
}

json Session::set_params(const ParamPatch& patch) {
  std::lock_guard lock(mu_);
  const ModelParams next = patch.apply(effective_params());
  try {
    next.validate(sim_.omega());
  } catch (const ValidationError& e) {
    throw e.nested("params");
  }
  const std::int64_t apply_cycle = sim_.cycle() + 1;
  sim_.schedule(apply_cycle, next);
  json r = reply("params_queued");
  r["apply_cycle"] = apply_cycle;
  r["params"] = to_json(next);
  return r;
}

json Session::subscribe(std::int64_t stride) {
  if (stride < 1) throw ValidationError("stride", "must be >= 1");
  std::lock_guard lock(mu_);
  const std::uint64_t sid = next_subscriber_++;
  subscribers_[sid].stride = stride;
  json r = reply("subscribed");
  r["subscriber"] = sid;
  r["stride"] = stride;
  return r;
}

json Session::frame(double scale) {
  if (!(scale > 0.0)) throw ValidationError("scale", "must be > 0");
  std::lock_guard lock(mu_);
  json r = reply("frame");
  r["width"] = config_.topology.width;
  r["height"] = config_.topology.height;
  r["pgm"] = base64_encode(encode_pgm(render_frame(sim_.snapshot(config_.render.storage_only), scale)));
  const auto& recs = sim_.series().records;
  r["Ke"] = recs.empty() ? 0.0 : recs.back().exchange;
  r["Kt"] = recs.empty() ? 0.0 : recs.back().turnover;
  return r;
}

json Session::series(std::int64_t since) {
  std::lock_guard lock(mu_);
  json records = json::array();
  for (const auto& rec : sim_.series().records)
    if (rec.cycle > since)
      records.push_back({{"cycle", rec.cycle}, {"Ke", rec.exchange}, {"Kt", rec.turnover}, {"drift", rec.drift}});
  json r = reply("series");
  r["records"] = std::move(records);
  return r;
}

json Session::snapshot() {
  std::lock_guard lock(mu_);
  json r = reply("snapshot");
  r["format"] = "KINSNAP1";
  r["data"] = base64_encode(encode_state(config_.topology, sim_.state(), sim_.cycle(), sim_.omega()));
  return r;
}

std::vector<json> Session::poll(std::uint64_t subscriber, std::chrono::milliseconds wait) {
  std::unique_lock lock(mu_);
  auto it = subscribers_.find(subscriber);
  if (it == subscribers_.end()) throw std::out_of_range("unknown subscriber");
  cv_.wait_for(lock, wait, [&] { return !it->second.queue.empty() || closed_; });
  std::vector<json> out(it->second.queue.begin(), it->second.queue.end());
  it->second.queue.clear();
  return out;
}

bool Session::has_subscriber(std::uint64_t subscriber) const {
  std::lock_guard lock(mu_);
  return subscribers_.contains(subscriber);
}

std::int64_t Session::cycle() const {
  std::lock_guard lock(mu_);
  return sim_.cycle();
}

bool Session::running() const {
  std::lock_guard lock(mu_);
  return running_;
}

namespace {

std::int64_t integer_field(const json& req, const char* key, std::int64_t fallback) {
  auto it = req.find(key);
  if (it == req.end()) return fallback;
  if (!it->is_number_integer()) throw ValidationError(key, "expected an integer");
  return it->get<std::int64_t>();
}

double number_field(const json& req, const char* key, double fallback) {
  auto it = req.find(key);
  if (it == req.end()) return fallback;
  if (!it->is_number()) throw ValidationError(key, "expected a number");
  return it->get<double>();
}

}  // namespace

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t SessionManager::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

json SessionManager::handle(const json& request) {
  json out;
  try {
    if (!request.is_object() || !request.contains("type") || !request["type"].is_string())
      return error_reply("bad_request", "request must be an object with a string 'type'");
    const std::string type = request["type"].get<std::string>();

    if (type == "Create") {
      if (!request.contains("config")) return error_reply("bad_request", "Create needs a 'config' object");
      RunConfig config;
      try {
        config = config_from_json(request["config"]);
      } catch (const ValidationError& e) {
        const auto err = e.nested("config");
        return error_reply("invalid_config", err.what(), {{err.path(), err.reason()}});
      }
      std::string id;
      {
        std::lock_guard lock(mu_);
        id = "s" + std::to_string(next_id_++);
      }
      auto session = std::make_shared<Session>(id, std::move(config));
      {
        std::lock_guard lock(mu_);
        sessions_[id] = session;
      }
      out = session->pause();
      out["type"] = "created";
    } else {
      if (!request.contains("session") || !request["session"].is_string())
        return error_reply("bad_request", "missing 'session'");
      const std::string sid = request["session"].get<std::string>();
      auto session = find(sid);
      if (!session) return error_reply("unknown_session", "no session '" + sid + "'");

      if (type == "Start") {
        out = session->start();
      } else if (type == "Pause") {
        out = session->pause();
      } else if (type == "Step") {
        out = session->step(integer_field(request, "n", 1));
      } else if (type == "SetParams") {
        if (!request.contains("params")) return error_reply("bad_request", "SetParams needs 'params'");
        out = session->set_params(patch_from_json(request["params"], "params"));
      } else if (type == "Subscribe") {
        out = session->subscribe(integer_field(request, "stride", 1));
      } else if (type == "GetFrame") {
        out = session->frame(number_field(request, "scale", 1.0));
      } else if (type == "GetSeries") {
        out = session->series(integer_field(request, "since", 0));
      } else if (type == "Snapshot") {
        out = session->snapshot();
      } else if (type == "Close") {
        {
          std::lock_guard lock(mu_);
          sessions_.erase(sid);
        }
        session->close();
        out = {{"type", "closed"}, {"version", kProtocolVersion}, {"session", sid}};
      } else {
        return error_reply("bad_request", "unknown message type '" + type + "'");
      }
    }
  } catch (const ValidationError& e) {
    out = error_reply("invalid_params", e.what(), {{e.path(), e.reason()}});
  } catch (const std::exception& e) {
    out = error_reply("internal", e.what());
  }
  if (request.is_object() && request.contains("id")) out["id"] = request["id"];
  return out;
}

std::string SessionManager::handle_text(const std::string& text) {
  json request;
  try {
    request = json::parse(text);
  } catch (const json::parse_error& e) {
    return error_reply("bad_request", std::string("malformed JSON: ") + e.what()).dump();
  }
  return handle(request).dump();
}

}  // namespace kinon::steer
