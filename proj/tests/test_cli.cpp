#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "kinon/cli.hpp"
#include "kinon/errors.hpp"
#include "kinon/image.hpp"
#include "kinon/persist.hpp"
#include "kinon/runner.hpp"

using namespace kinon;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("kinon_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int rc = cli_main(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

const char* kStasisConfig = R"({
  "topology": {"degree": 4, "width": 32, "height": 32, "boundary": "periodic"},
  "omega": 512,
  "params": {"kappa": 3, "lambda": 1, "theta": 2},
  "schedule": {"max_cycles": 2000}
})";

}  // namespace

TEST_CASE("run stops at stasis and writes the artifact tree") {
  TempDir dir("cli_run");
  write(dir.path / "c.json", kStasisConfig);
  std::string out;
  REQUIRE(cli({"run", (dir.path / "c.json").string(), "-o", (dir.path / "out").string(), "--until-stasis", "--frames",
               "10"},
              &out) == kExitOk);
  const auto summary = nlohmann::json::parse(slurp(dir.path / "out" / "summary.json"));
  REQUIRE(!summary["stasis_cycle"].is_null());
  CHECK(summary["cycles"].get<int>() < 2000);
  CHECK(summary["max_drift"].get<double>() <= 1e-9);
  for (const char* f : {"config.json", "series.csv", "final.state", "manifest.json", "overlay.png"})
    CHECK(fs::exists(dir.path / "out" / f));
  CHECK(fs::exists(dir.path / "out" / "frames" / "frame_000010.pgm"));
  CHECK(fs::exists(dir.path / "out" / "contours" / "contours_000020.json"));

  const auto series = read_series((dir.path / "out" / "series.csv").string());
  CHECK(series.size() == summary["cycles"].get<std::size_t>());

  const auto manifest = nlohmann::json::parse(slurp(dir.path / "out" / "manifest.json"));
  CHECK(manifest["config_sha256"] == sha256_hex(slurp(dir.path / "out" / "config.json")));
  CHECK(manifest.contains("engine_version"));

  SUBCASE("analyze recovers the classification") {
    std::string report;
    REQUIRE(cli({"analyze", (dir.path / "out" / "series.csv").string()}, &report) == kExitOk);
    const auto j = nlohmann::json::parse(report);
    CHECK(j["regime"] == "stasis");
    CHECK(j["stasis_cycle"] == summary["stasis_cycle"]);
  }
  SUBCASE("render of the stored state equals the final frame") {
    const std::string last = "frame_" + [&] {
      char b[16];
      std::snprintf(b, sizeof b, "%06d", summary["cycles"].get<int>());
      return std::string(b);
    }();
    REQUIRE(cli({"render", (dir.path / "out" / "final.state").string(), "-o", (dir.path / "r.pgm").string()}) ==
            kExitOk);
    CHECK(slurp(dir.path / "r.pgm") == slurp(dir.path / "out" / "frames" / (last + ".pgm")));
    REQUIRE(cli({"render", (dir.path / "out" / "final.state").string(), "-o", (dir.path / "r.png").string()}) ==
            kExitOk);
    CHECK(slurp(dir.path / "r.png") == slurp(dir.path / "out" / "frames" / (last + ".png")));
  }
}

TEST_CASE("zero-cycle schedule writes only the initial frame") {
  TempDir dir("cli_zero");
  write(dir.path / "c.json", R"({"schedule": {"max_cycles": 0}})");
  REQUIRE(cli({"run", (dir.path / "c.json").string(), "-o", (dir.path / "out").string()}) == kExitOk);
  std::vector<std::string> frames;
  for (const auto& e : fs::directory_iterator(dir.path / "out" / "frames")) frames.push_back(e.path().filename());
  std::sort(frames.begin(), frames.end());
  CHECK(frames == std::vector<std::string>{"frame_000000.pgm", "frame_000000.png"});
  CHECK(slurp(dir.path / "out" / "series.csv") == "cycle,Ke,Kt,drift\n");
  const GreyImage img = decode_pgm(read_file((dir.path / "out" / "frames" / "frame_000000.pgm").string()));
  CHECK((img != 0).count() == 1);
}

TEST_CASE("repeated runs give identical trees") {
  TempDir dir("cli_repeat");
  write(dir.path / "c.json", R"({"topology": {"degree": 8, "width": 24, "height": 20, "boundary": "bordered"},
    "omega": 240, "params": {"kappa": 4, "lambda": 0.8, "eta": 0.2, "theta": 0.05, "psi": {"kind": "log1p"}},
    "schedule": {"max_cycles": 120, "frame_stride": 30, "changes": [{"cycle": 60, "params": {"kappa": 6}}]}})");
  const std::string c = (dir.path / "c.json").string();
  REQUIRE(cli({"run", c, "-o", (dir.path / "a").string()}) == kExitOk);
  REQUIRE(cli({"run", c, "-o", (dir.path / "b").string(), "--parallel"}) == kExitOk);
  const auto a = tree(dir.path / "a"), b = tree(dir.path / "b");
  CHECK(a.size() > 10);
  CHECK(a == b);
}

TEST_CASE("exit codes") {
  TempDir dir("cli_exit");
  write(dir.path / "bad.json", R"({"omega": 100, "params": {"theta": 100}})");
  std::string err;
  CHECK(cli({"run", (dir.path / "bad.json").string(), "-o", (dir.path / "o").string()}, nullptr, &err) ==
        kExitValidation);
  CHECK(err.find("params.theta") != std::string::npos);
  CHECK(cli({"run", (dir.path / "missing.json").string(), "-o", (dir.path / "o").string()}) == kExitValidation);
  CHECK(cli({"frobnicate"}) == kExitValidation);
  CHECK(cli({"run"}) == kExitValidation);

  write(dir.path / "audit.json", R"({"topology": {"degree": 4, "width": 10, "height": 10, "boundary": "periodic"},
    "omega": 1000, "params": {"kappa": 3, "lambda": 0.5, "eta": 0.1, "theta": 0.01},
    "schedule": {"max_cycles": 100}, "analysis": {"audit_tolerance": 1e-300}})");
  CHECK(cli({"run", (dir.path / "audit.json").string(), "-o", (dir.path / "a").string()}, nullptr, &err) ==
        kExitAudit);
  CHECK(err.find("conservation audit failed") != std::string::npos);
  CHECK(fs::exists(dir.path / "a" / "summary.json"));

  write(dir.path / "broken.csv", "cycle,Ke,Kt,drift\n1,2\n");
  CHECK(cli({"analyze", (dir.path / "broken.csv").string()}) == kExitValidation);
  write(dir.path / "broken.state", "KINSNAP1");
  CHECK(cli({"render", (dir.path / "broken.state").string(), "-o", (dir.path / "x.pgm").string()}) == kExitValidation);
}

TEST_CASE("analyze classes") {
  TempDir dir("cli_analyze");
  std::string zeros = "cycle,Ke,Kt,drift\n", flat = zeros;
  for (int c = 0; c < 30; ++c) {
    zeros += std::to_string(c) + ",0,0,0\n";
    flat += std::to_string(c + 1) + ",0.3,0.3,0\n";
  }
  write(dir.path / "z.csv", zeros);
  write(dir.path / "f.csv", flat);
  std::string out;
  REQUIRE(cli({"analyze", (dir.path / "z.csv").string()}, &out) == kExitOk);
  CHECK(nlohmann::json::parse(out)["stasis_cycle"] == 0);
  REQUIRE(cli({"analyze", (dir.path / "f.csv").string()}, &out) == kExitOk);
  CHECK(nlohmann::json::parse(out)["regime"] == "coherent-equilibrium");
}

TEST_CASE("sweep") {
  TempDir dir("cli_sweep");
  write(dir.path / "plan.json", R"({
    "base": {"topology": {"degree": 4, "width": 16, "height": 16, "boundary": "periodic"}, "omega": 128,
             "params": {"lambda": 1, "theta": 0.5}, "schedule": {"max_cycles": 60}},
    "axes": [{"path": "params.kappa", "values": [2, 3, 4]}, {"path": "params.eta", "values": [0.0, 0.25]}]})");
  const std::string plan = (dir.path / "plan.json").string();
  std::string out;
  REQUIRE(cli({"sweep", plan, "-o", (dir.path / "one").string(), "--parallel", "1"}, &out) == kExitOk);
  CHECK(nlohmann::json::parse(out)["runs"] == 6);
  REQUIRE(cli({"sweep", plan, "-o", (dir.path / "four").string(), "--parallel", "4"}) == kExitOk);
  CHECK(tree(dir.path / "one") == tree(dir.path / "four"));

  const std::string index = slurp(dir.path / "one" / "index.csv");
  CHECK(index.rfind("run,params.kappa,params.eta,status,stasis_cycle,final_Ke,support_area,components\n", 0) == 0);
  CHECK(std::count(index.begin(), index.end(), '\n') == 7);
  CHECK(index.find("\n1,2,0.25,ok,") != std::string::npos);
  const auto cfg = nlohmann::json::parse(slurp(dir.path / "one" / "run_00005" / "config.json"));
  CHECK(cfg["params"]["kappa"] == 4.0);
  CHECK(cfg["params"]["eta"] == 0.25);

  SUBCASE("a failing combination is recorded and sets the exit code") {
    write(dir.path / "bad.json", R"({"base": {"omega": 128, "schedule": {"max_cycles": 5}},
      "axes": [{"path": "params.theta", "values": [0.5, 100]}]})");
    REQUIRE(cli({"sweep", (dir.path / "bad.json").string(), "-o", (dir.path / "bad").string()}) == kExitValidation);
    const std::string idx = slurp(dir.path / "bad" / "index.csv");
    CHECK(idx.find("\n0,0.5,ok,") != std::string::npos);
    CHECK(idx.find("\n1,100,validation_error") != std::string::npos);
  }
  SUBCASE("plan validation") {
    write(dir.path / "empty.json", R"({"base": {}, "axes": []})");
    CHECK(cli({"sweep", (dir.path / "empty.json").string(), "-o", (dir.path / "e").string()}) == kExitValidation);
    write(dir.path / "nopath.json", R"({"base": {}, "axes": [{"path": "params.nope", "values": [1]}]})");
    CHECK(cli({"sweep", (dir.path / "nopath.json").string(), "-o", (dir.path / "e").string()}) == kExitValidation);
    std::string big = R"({"base": {}, "axes": [)";
    for (int a = 0; a < 6; ++a)
      big += std::string(a ? "," : "") + R"({"path": "params.kappa", "values": [1,2,3,4,5,6,7,8,9,10]})";
    big += "]}";
    CHECK_THROWS_AS(parse_sweep_plan(big), ValidationError);
  }
}
