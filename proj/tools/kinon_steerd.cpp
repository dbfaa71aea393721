#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kinon/steer.hpp"
#include "kinon/steer_server.hpp"

namespace {
kinon::steer::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinon steering service"};
  std::string host = "127.0.0.1";
  int port = 8765;
  app.add_option("--host", host, "listen address");
  app.add_option("-p,--port", port, "listen port (0: any free port)")->check(CLI::Range(0, 65535));
  CLI11_PARSE(app, argc, argv);

  kinon::steer::SessionManager sessions;
  kinon::steer::Server server(sessions);
  int bound = 0;
  try {
    bound = server.bind(host, port);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  if (bound < 0) {
    std::cerr << "cannot bind " << host << "\n";
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  server.listen();
  return 0;
}
