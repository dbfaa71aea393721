#include "kinon/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "kinon/analysis.hpp"
#include "kinon/errors.hpp"
#include "kinon/image.hpp"
#include "kinon/persist.hpp"
#include "kinon/runner.hpp"
#include "kinon/version.hpp"

namespace kinon {

namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::ordered_json opt_json(const std::optional<std::int64_t>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

struct RunArgs {
  std::string config;
  std::string out;
  bool until_stasis = false;
  std::optional<std::int64_t> frames;
  std::optional<std::int64_t> contours;
  bool parallel = false;
};

struct SweepArgs {
  std::string plan;
  std::string out;
  int parallel = 1;
  bool until_stasis = false;
};

struct RenderArgs {
  std::string state;
  std::string out;
  double scale = 1.0;
  bool storage_only = false;
};

struct AnalyzeArgs {
  std::string series;
  double tolerance = kStasisTolerance;
  int window = kStasisWindow;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  RunConfig config = load_config(a.config);
  RunFlags flags;
  flags.until_stasis = a.until_stasis;
  flags.frame_stride = a.frames;
  flags.contour_stride = a.contours;
  flags.parallel = a.parallel;
  const RunSummary summary = run_config(config, a.out, flags);
  out << summary.to_json().dump(2) << "\n";
  return kExitOk;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const SweepPlan plan = parse_sweep_plan(read_text(a.plan));
  RunFlags flags;
  flags.until_stasis = a.until_stasis;
  const SweepResult result = run_sweep(plan, a.out, a.parallel, flags);
  nlohmann::ordered_json j;
  j["runs"] = result.runs;
  j["failures"] = result.failures;
  j["index"] = (fs::path(a.out) / "index.csv").string();
  out << j.dump(2) << "\n";
  return result.exit_code;
}

int cmd_render(const RenderArgs& a, std::ostream& out) {
  const StoredState stored = decode_state(read_file(a.state));
  const Network net = build_grid(stored.geometry.lattice, stored.geometry.width, stored.geometry.height,
                                 stored.geometry.boundary);
  const FieldSnapshot snap = make_snapshot(net, stored.state, stored.cycle, stored.omega, a.storage_only);
  const GreyImage img = render_frame(snap, a.scale);
  const std::string ext = fs::path(a.out).extension().string();
  if (ext == ".png")
    write_file(a.out, encode_png(img));
  else if (ext == ".pgm")
    write_file(a.out, encode_pgm(img));
  else
    throw ValidationError("--out", "extension must be .pgm or .png");
  out << a.out << "\n";
  return kExitOk;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto records = read_series(a.series);
  const RegimeReport report = detect_stasis(records, a.tolerance, a.window);
  double max_drift = 0.0;
  for (const auto& r : records) max_drift = std::max(max_drift, r.drift);
  nlohmann::ordered_json j;
  j["records"] = records.size();
  j["regime"] = report.stasis() ? "stasis" : report.coherent_equilibrium() ? "coherent-equilibrium" : "transient";
  j["stasis_cycle"] = opt_json(report.stasis_cycle);
  j["coherent_cycle"] = opt_json(report.coherent_cycle);
  j["max_drift"] = max_drift;
  if (!records.empty()) {
    j["final_Ke"] = records.back().exchange;
    j["final_Kt"] = records.back().turnover;
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kinon network simulator"};
  app.set_version_flag("--version", std::string(kEngineVersion));
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a config and write its artifact tree");
  run_cmd->add_option("config", run.config, "config JSON")->required();
  run_cmd->add_option("-o,--out", run.out, "output directory")->required();
  run_cmd->add_flag("--until-stasis", run.until_stasis, "stop once stasis is detected");
  run_cmd->add_option("--frames", run.frames, "frame stride (0: first and last only)")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--contours", run.contours, "contour stride (0: none)")->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("--parallel", run.parallel, "evaluate collisions on all cores");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run every combination of a sweep plan");
  sweep_cmd->add_option("plan", sweep.plan, "sweep plan JSON")->required();
  sweep_cmd->add_option("-o,--out", sweep.out, "output directory")->required();
  sweep_cmd->add_option("-j,--parallel", sweep.parallel, "concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--until-stasis", sweep.until_stasis, "stop each run at stasis");

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "render a stored state to PGM or PNG");
  render_cmd->add_option("state", render.state, "state file (final.state)")->required();
  render_cmd->add_option("-o,--out", render.out, "image path, .pgm or .png")->required();
  render_cmd->add_option("--scale", render.scale, "intensity scale")->check(CLI::PositiveNumber);
  render_cmd->add_flag("--storage-only", render.storage_only, "render storage instead of total mass");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "classify the regime of a series CSV");
  analyze_cmd->add_option("series", analyze.series, "series.csv")->required();
  analyze_cmd->add_option("--tolerance", analyze.tolerance, "stasis tolerance")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--window", analyze.window, "stasis window")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*sweep_cmd) return cmd_sweep(sweep, out);
    if (*render_cmd) return cmd_render(render, out);
    return cmd_analyze(analyze, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const AuditFailure& e) {
    err << "audit failure: " << e.what() << "\n";
    return kExitAudit;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace kinon
