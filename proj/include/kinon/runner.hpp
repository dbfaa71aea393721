#ifndef KINON_RUNNER_HPP
#define KINON_RUNNER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinon/config.hpp"
#include "kinon/simulation.hpp"

namespace kinon {

/// Process exit codes of the batch commands.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitAudit = 2 };

struct RunFlags {
  bool until_stasis = false;                  // or schedule.stop_on_stasis
  std::optional<std::int64_t> frame_stride;   // overrides the config
  std::optional<std::int64_t> contour_stride;
  bool parallel = false;                      // within-cycle parallelism
};

struct RunSummary {
  std::int64_t cycles = 0;
  std::optional<std::int64_t> stasis_cycle;
  std::optional<std::int64_t> coherent_cycle;
  double max_drift = 0.0;
  double final_exchange = 0.0;
  double final_turnover = 0.0;
  std::size_t support_area = 0;
  std::size_t components = 0;
  double contour_level = 0.0;
  std::string config_sha256;

  nlohmann::ordered_json to_json() const;
};

/// Builds the network, singularity state and simulation described by a
/// config, with every scheduled parameter change queued.
Simulation make_simulation(const RunConfig& config, bool parallel = false);

std::string sha256_hex(const std::string& data);

/// Runs a config and writes its artifact tree under `out`:
///   config.json, series.csv, final.state, summary.json, overlay.png,
///   frames/<prefix>_<cycle>.pgm (+ .png), contours/contours_<cycle>.json,
///   manifest.json (engine version, config hash, sha256 of every file).
/// Throws AuditFailure (after writing what it has) when the conservation
/// drift exceeds analysis.audit_tolerance.
RunSummary run_config(const RunConfig& config, const std::filesystem::path& out, const RunFlags& flags = {});

struct SweepAxis {
  std::string path;  // dotted config path, e.g. "params.kappa"
  std::vector<nlohmann::json> values;
};

struct SweepPlan {
  RunConfig base;
  std::vector<SweepAxis> axes;

  std::size_t run_count() const noexcept;
};

inline constexpr std::size_t kMaxSweepRuns = 100000;

SweepPlan parse_sweep_plan(std::string_view text);
/// Config of run `index` in row-major order over the axes (last axis fastest).
RunConfig sweep_config(const SweepPlan& plan, std::size_t index);

struct SweepResult {
  std::size_t runs = 0;
  std::size_t failures = 0;
  int exit_code = kExitOk;
};

/// One subtree run_<index> per combination plus index.csv. Runs execute on
/// up to `parallel` worker threads; outputs do not depend on it.
SweepResult run_sweep(const SweepPlan& plan, const std::filesystem::path& out, int parallel = 1,
                      const RunFlags& flags = {});

}  // namespace kinon

#endif  // KINON_RUNNER_HPP
