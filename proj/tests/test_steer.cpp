#include <doctest.h>

#include <thread>

#include "kinon/image.hpp"
#include "kinon/persist.hpp"
#include "kinon/runner.hpp"
#include "kinon/steer.hpp"
#include "kinon/steer_server.hpp"

// after Eigen: resolv.h defines a _res macro
#include <httplib.h>

using namespace kinon;
using namespace kinon::steer;
using nlohmann::json;

namespace {

json small_config(double kappa, std::int64_t max_cycles) {
  return {{"topology", {{"degree", 4}, {"width", 24}, {"height", 24}, {"boundary", "periodic"}}},
          {"omega", 288},
          {"params", {{"kappa", kappa}, {"lambda", 0.5}, {"eta", 0.1}, {"theta", 0.01}}},
          {"schedule", {{"max_cycles", max_cycles}}}};
}

std::string create(SessionManager& m, const json& config) {
  const json r = m.handle({{"type", "Create"}, {"config", config}});
  REQUIRE(r["type"] == "created");
  return r["session"].get<std::string>();
}

json send(SessionManager& m, const std::string& sid, json msg) {
  msg["session"] = sid;
  return m.handle(msg);
}

void wait_paused(SessionManager& m, const std::string& sid) {
  auto s = m.find(sid);
  REQUIRE(s);
  for (int i = 0; i < 6000 && s->running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  REQUIRE_FALSE(s->running());
}

StoredState snapshot_state(SessionManager& m, const std::string& sid) {
  const json r = send(m, sid, {{"type", "Snapshot"}});
  REQUIRE(r["format"] == "KINSNAP1");
  return decode_state(base64_decode(r["data"].get<std::string>()));
}

Simulation batch(json config, std::int64_t change_cycle, double kappa, std::int64_t cycles) {
  config["schedule"]["changes"] = json::array({{{"cycle", change_cycle}, {"params", {{"kappa", kappa}}}}});
  Simulation sim = make_simulation(config_from_json(config));
  for (std::int64_t c = 0; c < cycles; ++c) sim.step();
  return sim;
}

}  // namespace

TEST_CASE("base64") {
  CHECK(base64_encode({}) == "");
  CHECK(base64_encode({'f'}) == "Zg==");
  CHECK(base64_encode({'f', 'o'}) == "Zm8=");
  CHECK(base64_encode({'f', 'o', 'o'}) == "Zm9v");
  for (std::size_t n = 0; n < 40; ++n) {
    std::vector<std::uint8_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>(i * 37 + 11);
    CHECK(base64_decode(base64_encode(v)) == v);
  }
  CHECK_THROWS(base64_decode("abc"));
}

TEST_CASE("new session shows the singularity") {
  SessionManager m;
  const std::string sid = create(m, {{"params", {{"kappa", 8}, {"lambda", 0.8}, {"theta", 0.3}, {"eta", 0.4}}}});
  const json f = send(m, sid, {{"type", "GetFrame"}});
  CHECK(f["cycle"] == 0);
  CHECK(f["version"] == kProtocolVersion);
  const GreyImage img = decode_pgm(base64_decode(f["pgm"].get<std::string>()));
  CHECK(img.cols() == 64);
  CHECK((img != 0).count() == 1);
  CHECK(img(32, 32) == 255);
  send(m, sid, {{"type", "Close"}});
  CHECK(m.session_count() == 0);
}

TEST_CASE("step counts cycles") {
  SessionManager m;
  const std::string sid = create(m, small_config(3, 1000));
  CHECK(send(m, sid, {{"type", "Pause"}})["state"] == "paused");
  const json s = send(m, sid, {{"type", "Step"}, {"n", 5}});
  CHECK(s["cycle"] == 5);
  CHECK(s["state"] == "paused");
  const json series = send(m, sid, {{"type", "GetSeries"}});
  REQUIRE(series["records"].size() == 5);
  CHECK(series["records"][4]["cycle"] == 5);
  CHECK(send(m, sid, {{"type", "GetSeries"}, {"since", 3}})["records"].size() == 2);

  const json zero = send(m, sid, {{"type", "Step"}, {"n", 0}, {"id", 42}});
  CHECK(zero["type"] == "stepped");
  CHECK(zero["cycle"] == 5);
  CHECK(zero["id"] == 42);
}

TEST_CASE("protocol errors") {
  SessionManager m;
  const std::string sid = create(m, small_config(3, 100));
  auto code = [](const json& r) { return r["type"] == "error" ? r["error"]["code"].get<std::string>() : ""; };

  CHECK(code(m.handle({{"type", "Start"}, {"session", "nope"}})) == "unknown_session");
  CHECK(code(m.handle({{"type", "Launch"}, {"session", sid}})) == "bad_request");
  CHECK(code(m.handle(json::array())) == "bad_request");
  CHECK(code(json::parse(m.handle_text("{oops"))) == "bad_request");
  CHECK(code(send(m, sid, {{"type", "Step"}, {"n", -1}})) == "invalid_params");
  CHECK(code(send(m, sid, {{"type", "Subscribe"}, {"stride", 0}})) == "invalid_params");

  const json bad = send(m, sid, {{"type", "SetParams"}, {"params", {{"theta", 50}, {"kappa", 2}}}});
  CHECK(code(bad) == "invalid_params");
  CHECK(bad["error"]["fields"][0]["path"] == "params.theta");
  CHECK(code(send(m, sid, {{"type", "SetParams"}, {"params", {{"speed", 2}}}})) == "invalid_params");

  const json cfg = m.handle({{"type", "Create"}, {"config", {{"omega", -1}}}});
  CHECK(code(cfg) == "invalid_config");
  CHECK(cfg["error"]["fields"][0]["path"] == "config.omega");

  send(m, sid, {{"type", "Close"}});
  CHECK(code(send(m, sid, {{"type", "GetFrame"}})) == "unknown_session");
}

TEST_CASE("steered session matches a batch schedule") {
  SessionManager m;
  const json config = small_config(3, 100);
  const std::string sid = create(m, config);
  send(m, sid, {{"type", "Start"}});
  wait_paused(m, sid);  // the runner stops at max_cycles
  CHECK(m.find(sid)->cycle() == 100);

  const json ack = send(m, sid, {{"type", "SetParams"}, {"params", {{"kappa", 4}}}});
  REQUIRE(ack["type"] == "params_queued");
  CHECK(ack["apply_cycle"] == 101);
  send(m, sid, {{"type", "Step"}, {"n", 100}});

  const StoredState steered = snapshot_state(m, sid);
  const Simulation ref = batch(config, 101, 4, 200);
  CHECK(steered.cycle == 200);
  CHECK(identical(steered.state, ref.state()));

  const json frame = send(m, sid, {{"type", "GetFrame"}});
  CHECK(base64_decode(frame["pgm"].get<std::string>()) == encode_pgm(render_frame(ref.snapshot())));

  const Simulation untouched = batch(config, 1000, 4, 200);
  CHECK_FALSE(identical(steered.state, untouched.state()));
  const json series = send(m, sid, {{"type", "GetSeries"}, {"since", 100}});
  CHECK(series["records"][0]["Ke"].get<double>() == ref.series().records[100].exchange);
  CHECK(series["records"][5]["Kt"].get<double>() != untouched.series().records[105].turnover);
}

TEST_CASE("changes sent while running land on a cycle boundary") {
  SessionManager m;
  const json config = small_config(3, 400);
  const std::string sid = create(m, config);
  send(m, sid, {{"type", "Start"}});
  auto s = m.find(sid);
  while (s->cycle() < 20) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  const json ack = send(m, sid, {{"type", "SetParams"}, {"params", {{"kappa", 5}}}});
  const std::int64_t apply = ack["apply_cycle"].get<std::int64_t>();
  CHECK(apply > 20);
  CHECK(ack["params"]["kappa"] == 5.0);
  wait_paused(m, sid);
  const StoredState steered = snapshot_state(m, sid);
  CHECK(steered.cycle == 400);
  CHECK(identical(steered.state, batch(config, apply, 5, 400).state()));
}

TEST_CASE("subscribers get strided frames in order") {
  SessionManager m;
  const json config = small_config(3, 1000);
  const std::string sid = create(m, config);
  const json sub = send(m, sid, {{"type", "Subscribe"}, {"stride", 10}});
  const auto subscriber = sub["subscriber"].get<std::uint64_t>();
  send(m, sid, {{"type", "Step"}, {"n", 35}});

  const auto events = m.find(sid)->poll(subscriber, std::chrono::milliseconds(100));
  REQUIRE(events.size() == 3);
  Simulation ref = make_simulation(config_from_json(config));
  std::int64_t last = 0;
  for (const auto& ev : events) {
    CHECK(ev["type"] == "frame");
    const std::int64_t c = ev["cycle"].get<std::int64_t>();
    CHECK(c > last);
    CHECK(c % 10 == 0);
    last = c;
    while (ref.cycle() < c) ref.step();
    CHECK(base64_decode(ev["pgm"].get<std::string>()) == encode_pgm(render_frame(ref.snapshot())));
    CHECK(ev["Ke"].get<double>() == ref.series().records.back().exchange);
    CHECK(ev["Kt"].get<double>() == ref.series().records.back().turnover);
  }
  CHECK(m.find(sid)->poll(subscriber, std::chrono::milliseconds(1)).empty());
  CHECK_THROWS_AS(m.find(sid)->poll(subscriber + 7, std::chrono::milliseconds(1)), std::out_of_range);
}

TEST_CASE("sessions run independently") {
  SessionManager m;
  const std::string a = create(m, small_config(3, 60));
  const std::string b = create(m, small_config(6, 60));
  send(m, a, {{"type", "Start"}});
  send(m, b, {{"type", "Start"}});
  wait_paused(m, a);
  wait_paused(m, b);
  const StoredState sa = snapshot_state(m, a), sb = snapshot_state(m, b);
  CHECK(identical(sa.state, batch(small_config(3, 60), 1000, 3, 60).state()));
  CHECK(identical(sb.state, batch(small_config(6, 60), 1000, 6, 60).state()));
}

TEST_CASE("http transport") {
  SessionManager m;
  Server server(m);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(5, 0);
  auto post = [&](const json& msg) {
    auto res = client.Post("/api", msg.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    return json::parse(res->body);
  };
  const json created = post({{"type", "Create"}, {"config", small_config(3, 1000)}});
  const std::string sid = created["session"];
  const auto subscriber = post({{"type", "Subscribe"}, {"session", sid}, {"stride", 2}})["subscriber"].get<int>();
  CHECK(post({{"type", "Step"}, {"session", sid}, {"n", 6}})["cycle"] == 6);

  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(json::parse(health->body)["sessions"] == 1);

  std::string stream;
  httplib::Client events("127.0.0.1", port);
  events.set_read_timeout(5, 0);
  auto res = events.Get("/events?session=" + sid + "&subscriber=" + std::to_string(subscriber),
                        [&](const char* data, std::size_t len) {
                          stream.append(data, len);
                          return std::count(stream.begin(), stream.end(), '\n') < 6;
                        });
  std::vector<std::int64_t> cycles;
  std::size_t pos = 0;
  while ((pos = stream.find("data: ", pos)) != std::string::npos) {
    const std::size_t end = stream.find("\n\n", pos);
    cycles.push_back(json::parse(stream.substr(pos + 6, end - pos - 6))["cycle"].get<std::int64_t>());
    pos = end;
  }
  CHECK(cycles == std::vector<std::int64_t>{2, 4, 6});

  auto missing = client.Get("/events?session=zzz&subscriber=1");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  t.join();
}
