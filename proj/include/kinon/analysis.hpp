#ifndef KINON_ANALYSIS_HPP
#define KINON_ANALYSIS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "kinon/engine.hpp"
#include "kinon/network.hpp"

namespace kinon {

struct MacroRecord {
  std::int64_t cycle = 0;
  double exchange = 0.0;  // K_e
  double turnover = 0.0;  // K_t
  double drift = 0.0;     // |total mass - omega| / omega

  bool operator==(const MacroRecord&) const = default;
};

/// Per-cycle macrodynamic indices, one record per completed cycle.
struct MacroSeries {
  std::vector<MacroRecord> records;
  std::optional<std::int64_t> stasis_cycle;
  std::optional<std::int64_t> border_hit_cycle;

  double max_drift() const noexcept;
};

/// K_e = sum of all output buffers / omega, at the post-collision instant.
double exchange_rate(const NetworkState& state, double omega);

/// K_t = (sum_i |dS_i| + sum_ij |I_ij - O_ij|) / (2 omega). `previous` is the
/// resting state one cycle earlier; throws std::invalid_argument if the two
/// states belong to differently sized networks.
double turnover_rate(const NetworkState& previous, const NetworkState& current, double omega);

double conservation_drift(double mass_total, double omega) noexcept;

/// Converts engine totals into a series record.
MacroRecord make_record(std::int64_t cycle, const CycleStats& stats, double omega) noexcept;

inline constexpr double kStasisTolerance = 1e-9;
inline constexpr int kStasisWindow = 20;

struct RegimeReport {
  /// First cycle from which K_e and K_t stay <= tolerance for a full window.
  std::optional<std::int64_t> stasis_cycle;
  /// Indices frozen at a constant, not-all-zero value through the end of the
  /// series for at least a window.
  std::optional<std::int64_t> coherent_cycle;

  bool stasis() const noexcept { return stasis_cycle.has_value(); }
  bool coherent_equilibrium() const noexcept { return !stasis() && coherent_cycle.has_value(); }
};

/// A series shorter than the window counts as one whole window.
RegimeReport detect_stasis(const std::vector<MacroRecord>& series, double tolerance = kStasisTolerance,
                           int window = kStasisWindow);

/// The eight symmetries of the square, as maps on centered coordinates.
enum class Symmetry : int { identity, rot90, rot180, rot270, flip_x, flip_y, transpose, anti_transpose };
inline constexpr std::array<Symmetry, 8> kSquareSymmetries{
    Symmetry::identity, Symmetry::rot90,  Symmetry::rot180,    Symmetry::rot270,
    Symmetry::flip_x,   Symmetry::flip_y, Symmetry::transpose, Symmetry::anti_transpose};

/// Maximum over the symmetries that fit the field's shape of
/// sum_i |v_i - v_sigma(i)| / total. Symmetries act about (cx, cy); with
/// `periodic` the image wraps, otherwise the center must be the grid center.
/// Non-square fields only use the symmetries of the rectangle; 1-row fields
/// only the mirror.
double dihedral_asymmetry(const Field& field, double total, double cx, double cy, bool periodic);
double dihedral_asymmetry(const FieldSnapshot& snapshot);

struct ShapeMetrics {
  std::size_t support_area = 0;   // nodes with v >= level
  std::size_t components = 0;     // connected under the network's links
  double asymmetry = 0.0;
};

/// Components are counted over `network` links, so periodic grids wrap and
/// d8 grids use 8-connectivity.
ShapeMetrics shape_metrics(const FieldSnapshot& snapshot, const Network& network, double level);

/// Number of connected groups of nodes with v >= level.
std::size_t count_components(const Network& network, const Eigen::ArrayXd& values, double level);

}  // namespace kinon

#endif  // KINON_ANALYSIS_HPP
