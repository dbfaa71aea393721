#ifndef KINON_STEER_SERVER_HPP
#define KINON_STEER_SERVER_HPP

#include <memory>
#include <string>

#include "kinon/steer.hpp"

namespace kinon::steer {

/// HTTP transport for SessionManager, meant for localhost.
///
///   POST /api                                   one JSON message in, one reply out
///   GET  /events?session=<id>&subscriber=<n>    text/event-stream of frame events
///   GET  /health                                {"version": 1, "sessions": n}
class Server {
public:
  explicit Server(SessionManager& sessions);
  ~Server();

  /// Binds to host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kinon::steer

#endif  // KINON_STEER_SERVER_HPP
