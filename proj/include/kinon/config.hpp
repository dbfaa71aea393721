#ifndef KINON_CONFIG_HPP
#define KINON_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kinon/core.hpp"
#include "kinon/network.hpp"

namespace kinon {

/// Subset of ModelParams to overwrite; unset fields keep their value.
struct ParamPatch {
  std::optional<double> kappa;
  std::optional<double> lambda;
  std::optional<double> eta;
  std::optional<double> theta;
  std::optional<PsiSpec> psi;

  ModelParams apply(ModelParams base) const;
  bool empty() const noexcept { return !kappa && !lambda && !eta && !theta && !psi; }

  bool operator==(const ParamPatch&) const = default;
};

struct ScheduledChange {
  std::int64_t cycle = 1;  // first cycle that runs with the patched params
  ParamPatch params;

  bool operator==(const ScheduledChange&) const = default;
};

struct Schedule {
  std::int64_t max_cycles = 1000;
  std::int64_t frame_stride = 0;     // 0: initial and final frame only
  std::int64_t contour_stride = 20;  // 0: no contour snapshots
  bool stop_on_stasis = false;
  std::vector<ScheduledChange> changes;

  bool operator==(const Schedule&) const = default;
};

struct RenderOptions {
  double scale = 1.0;  // intensity = 255 * clamp(v * scale, 0, 1)
  bool storage_only = false;
  bool png = true;  // PNG copies next to the PGM frames
  std::string prefix = "frame";
  std::optional<double> contour_level;  // default: omega / N
  int zoom = 4;                         // pixel replication of the overlay image

  bool operator==(const RenderOptions&) const = default;
};

struct AnalysisOptions {
  double stasis_tolerance = 1e-9;
  int stasis_window = 20;
  double audit_tolerance = 1e-9;  // max relative conservation drift

  bool operator==(const AnalysisOptions&) const = default;
};

struct SeedPosition {
  int x = 0;
  int y = 0;

  bool operator==(const SeedPosition&) const = default;
};

struct RunConfig {
  GridGeometry topology{Lattice::d4, 64, 64, Boundary::periodic};
  double omega = 2048.0;
  std::optional<SeedPosition> seed;  // default: grid center (w/2, h/2)
  ModelParams params = [] {
    ModelParams p;
    p.kappa = 3.0;
    return p;
  }();
  Schedule schedule;
  RenderOptions render;
  AnalysisOptions analysis;

  /// Seed node index, resolving the default.
  std::size_t seed_index() const noexcept;
  SeedPosition seed_position() const noexcept;
  /// Full validation; throws ValidationError carrying the field path.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

nlohmann::ordered_json to_json(const RunConfig& config);
nlohmann::ordered_json to_json(const ModelParams& params);
nlohmann::ordered_json to_json(const ParamPatch& patch);

/// Strict readers: unknown fields and wrong types are rejected with the path
/// of the offending field. `path` prefixes reported paths.
RunConfig config_from_json(const nlohmann::json& doc);
ParamPatch patch_from_json(const nlohmann::json& doc, const std::string& path = "params");

RunConfig parse_config(std::string_view text);
/// Canonical text: every field written, fixed key order, 2-space indent.
std::string serialize_config(const RunConfig& config);

RunConfig load_config(const std::string& path);

}  // namespace kinon

#endif  // KINON_CONFIG_HPP
