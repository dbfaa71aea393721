#include "kinon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kinon/errors.hpp"
#include "kinon/summation.hpp"

namespace kinon {

namespace {

void require_omega(double omega) {
  if (!(std::isfinite(omega) && omega > 0.0)) throw ValidationError("omega", "must be finite and > 0");
}

// Maps doubled coordinates (relative to the doubled center) under g.
std::pair<long, long> apply(Symmetry g, long dx, long dy) noexcept {
  switch (g) {
    case Symmetry::identity: return {dx, dy};
    case Symmetry::rot90: return {-dy, dx};
    case Symmetry::rot180: return {-dx, -dy};
    case Symmetry::rot270: return {dy, -dx};
    case Symmetry::flip_x: return {-dx, dy};
    case Symmetry::flip_y: return {dx, -dy};
    case Symmetry::transpose: return {dy, dx};
    case Symmetry::anti_transpose: return {-dy, -dx};
  }
  return {dx, dy};
}

bool fits(Symmetry g, Eigen::Index rows, Eigen::Index cols) noexcept {
  if (rows == 1) return g == Symmetry::identity || g == Symmetry::flip_x;
  if (rows != cols)
    return g == Symmetry::identity || g == Symmetry::rot180 || g == Symmetry::flip_x || g == Symmetry::flip_y;
  return true;
}

long wrap(long v, long n) noexcept { return ((v % n) + n) % n; }

}  // namespace

double MacroSeries::max_drift() const noexcept {
  double m = 0.0;
  for (const auto& r : records) m = std::max(m, r.drift);
  return m;
}

double exchange_rate(const NetworkState& state, double omega) {
  require_omega(omega);
  return output_total(state) / omega;
}

double turnover_rate(const NetworkState& previous, const NetworkState& current, double omega) {
  require_omega(omega);
  if (previous.storage.size() != current.storage.size() || previous.outputs.size() != current.outputs.size() ||
      current.inflow.size() != current.outputs.size())
    throw std::invalid_argument("turnover_rate: states belong to different networks");
  return turnover_total(previous.storage, current) / (2.0 * omega);
}

double conservation_drift(double mass_total, double omega) noexcept { return std::abs(mass_total - omega) / omega; }

MacroRecord make_record(std::int64_t cycle, const CycleStats& stats, double omega) noexcept {
  return MacroRecord{cycle, stats.output_total / omega, stats.turnover_total / (2.0 * omega),
                     conservation_drift(stats.mass_total, omega)};
}

RegimeReport detect_stasis(const std::vector<MacroRecord>& series, double tolerance, int window) {
  if (!(tolerance > 0.0)) throw ValidationError("tolerance", "must be > 0");
  if (window < 1) throw ValidationError("window", "must be >= 1");
  RegimeReport report;
  if (series.empty()) return report;

  const std::size_t need = std::min(series.size(), static_cast<std::size_t>(window));
  std::size_t run = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& r = series[i];
    run = (r.exchange <= tolerance && r.turnover <= tolerance) ? run + 1 : 0;
    if (run >= need) {
      report.stasis_cycle = series[i + 1 - run].cycle;
      return report;
    }
  }

  // Terminal plateau: walk back while both indices stay within tolerance of
  // the final values.
  const auto& last = series.back();
  std::size_t start = series.size() - 1;
  while (start > 0 && std::abs(series[start - 1].exchange - last.exchange) <= tolerance &&
         std::abs(series[start - 1].turnover - last.turnover) <= tolerance)
    --start;
  if (series.size() - start >= need) report.coherent_cycle = series[start].cycle;
  return report;
}

double dihedral_asymmetry(const Field& field, double total, double cx, double cy, bool periodic) {
  const Eigen::Index rows = field.rows();
  const Eigen::Index cols = field.cols();
  if (rows == 0 || cols == 0 || !(total > 0.0)) return 0.0;
  const long ccx = std::lround(2.0 * cx);
  const long ccy = std::lround(2.0 * cy);
  if (!periodic && (ccx != cols - 1 || ccy != rows - 1))
    throw std::invalid_argument("dihedral_asymmetry: bordered fields must be centered on the grid center");

  double worst = 0.0;
  for (Symmetry g : kSquareSymmetries) {
    if (g == Symmetry::identity || !fits(g, rows, cols)) continue;
    CompensatedSum diff;
    for (Eigen::Index y = 0; y < rows; ++y) {
      for (Eigen::Index x = 0; x < cols; ++x) {
        auto [dx, dy] = apply(g, 2 * x - ccx, 2 * y - ccy);
        long mx = (dx + ccx) / 2;
        long my = (dy + ccy) / 2;
        if (periodic) {
          mx = wrap(mx, cols);
          my = wrap(my, rows);
        }
        diff.add(std::abs(field(y, x) - field(my, mx)));
      }
    }
    worst = std::max(worst, diff.value() / total);
  }
  return worst;
}

double dihedral_asymmetry(const FieldSnapshot& snapshot) {
  const double total = snapshot.omega > 0.0 ? snapshot.omega : snapshot.mass.sum();
  return dihedral_asymmetry(snapshot.mass, total, 0.5 * (snapshot.width() - 1), 0.5 * (snapshot.height() - 1), false);
}

std::size_t count_components(const Network& network, const Eigen::ArrayXd& values, double level) {
  const std::size_t n = network.node_count();
  if (static_cast<std::size_t>(values.size()) != n) throw std::invalid_argument("count_components: size mismatch");
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack;
  std::size_t components = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s] || values[static_cast<Eigen::Index>(s)] < level) continue;
    ++components;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t l = network.first_link(i); l < network.first_link(i) + network.degree(i); ++l) {
        const std::size_t t = network.target(l);
        if (!seen[t] && values[static_cast<Eigen::Index>(t)] >= level) {
          seen[t] = 1;
          stack.push_back(t);
        }
      }
    }
  }
  return components;
}

ShapeMetrics shape_metrics(const FieldSnapshot& snapshot, const Network& network, double level) {
  if (!(level > 0.0)) throw ValidationError("level", "must be > 0");
  const Eigen::ArrayXd values = Eigen::Map<const Eigen::ArrayXd>(snapshot.mass.data(), snapshot.mass.size());
  ShapeMetrics m;
  m.support_area = static_cast<std::size_t>((values >= level).count());
  m.components = count_components(network, values, level);
  m.asymmetry = dihedral_asymmetry(snapshot);
  return m;
}

}  // namespace kinon
