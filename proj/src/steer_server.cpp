#include "kinon/steer_server.hpp"

#include <httplib.h>

#include <atomic>
#include <stdexcept>

namespace kinon::steer {

struct Server::Impl {
  SessionManager& sessions;
  httplib::Server http;
  std::atomic<bool> stopping{false};

  explicit Impl(SessionManager& s) : sessions(s) {}
};

namespace {

void reply_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

Server::Server(SessionManager& sessions) : impl_(std::make_unique<Impl>(sessions)) {
  auto& http = impl_->http;
  Impl* impl = impl_.get();

  http.Post("/api", [impl](const httplib::Request& req, httplib::Response& res) {
    res.set_content(impl->sessions.handle_text(req.body), "application/json");
  });

  http.Get("/health", [impl](const httplib::Request&, httplib::Response& res) {
    reply_json(res, {{"version", kProtocolVersion}, {"sessions", impl->sessions.session_count()}});
  });

  http.Get("/events", [impl](const httplib::Request& req, httplib::Response& res) {
    const std::string sid = req.get_param_value("session");
    auto session = impl->sessions.find(sid);
    if (!session) {
      reply_json(res, error_reply("unknown_session", "no session '" + sid + "'"), 404);
      return;
    }
    std::uint64_t subscriber = 0;
    try {
      subscriber = std::stoull(req.get_param_value("subscriber"));
      if (!session->has_subscriber(subscriber)) throw std::out_of_range("subscriber");
    } catch (const std::exception&) {
      reply_json(res, error_reply("bad_request", "unknown or missing subscriber", {{"subscriber", "not subscribed"}}), 400);
      return;
    }
    std::weak_ptr<Session> weak = session;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [impl, weak, subscriber](std::size_t, httplib::DataSink& sink) {
          auto live = weak.lock();
          if (!live || impl->stopping) {
            sink.done();
            return true;
          }
          std::vector<nlohmann::json> events;
          try {
            events = live->poll(subscriber, std::chrono::milliseconds(250));
          } catch (const std::out_of_range&) {
            sink.done();
            return true;
          }
          for (const auto& ev : events) {
            const std::string line = "data: " + ev.dump() + "\n\n";
            if (!sink.write(line.data(), line.size())) return false;
          }
          if (events.empty()) {
            static const std::string ping = ": keep-alive\n\n";
            if (!sink.write(ping.data(), ping.size())) return false;
          }
          return true;
        });
  });
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  if (!impl_->http.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() {
  impl_->stopping = true;
  impl_->http.stop();
}

}  // namespace kinon::steer
