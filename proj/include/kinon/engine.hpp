#ifndef KINON_ENGINE_HPP
#define KINON_ENGINE_HPP

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>

#include "kinon/core.hpp"
#include "kinon/network.hpp"

namespace kinon {

/// Row-major (y, x) field over a grid, one value per node.
using Field = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Flat per-network state at the resting instant of a cycle, i.e. after
/// collision and before propagation. Node arrays have node_count() entries,
/// link arrays link_count(); link l belongs to node source(l).
struct NetworkState {
  Eigen::ArrayXd storage;            // S_o
  Eigen::ArrayXd outputs;            // O, filled by the last collision
  Eigen::ArrayXd inflow;             // I consumed by the last collision
  Eigen::ArrayXd storage_potential;  // A[0]
  Eigen::ArrayXd link_potential;     // A[1..k]

  NetworkState() = default;
  explicit NetworkState(const Network& network);

  bool matches(const Network& network) const noexcept;
  KinonRef node(const Network& network, std::size_t i) noexcept;
};

/// Exact (bitwise) equality of every buffer.
bool identical(const NetworkState& a, const NetworkState& b) noexcept;

/// All of omega in the storage of one node; everything else zero.
NetworkState init_singularity(const Network& network, double omega, std::size_t position);

/// v_i = S_o,i + sum_j O_ij
Eigen::ArrayXd node_mass(const Network& network, const NetworkState& state);
/// Compensated total of storage and output buffers.
double total_mass(const NetworkState& state) noexcept;
/// Compensated sum of all output buffers.
double output_total(const NetworkState& state) noexcept;
/// sum_i |S_o,i(cur) - S_o,i(prev)| + sum_ij |I_ij - O_ij| of `cur`.
double turnover_total(const Eigen::ArrayXd& previous_storage, const NetworkState& current) noexcept;

/// inflow := P(outputs), outputs := 0. Each inflow slot has exactly one
/// writer (its reciprocal link), so this is a permutation of the buffers.
void propagate(const Network& network, NetworkState& state);

struct StepOptions {
  bool parallel = false;
  /// Node evaluation order for the collision phase; empty means 0..n-1.
  /// Results never depend on it.
  std::span<const std::size_t> order = {};
};

/// Collides every node against its current inflow.
void collide_all(const Network& network, NetworkState& state, const ModelParams& params,
                 const StepOptions& options = {});

struct CycleStats {
  double output_total = 0.0;    // numerator of the exchange rate
  double turnover_total = 0.0;  // numerator of the turnover rate (before the 1/2)
  double mass_total = 0.0;
};

/// One synchronous cycle: propagate, then collide every node.
CycleStats step(const Network& network, NetworkState& state, const ModelParams& params,
                const StepOptions& options = {});

/// Per-node mass as a grid-shaped field (1 x N for non-grid networks).
struct FieldSnapshot {
  Field mass;
  std::int64_t cycle = 0;
  double omega = 0.0;

  int width() const noexcept { return static_cast<int>(mass.cols()); }
  int height() const noexcept { return static_cast<int>(mass.rows()); }
};

FieldSnapshot make_snapshot(const Network& network, const NetworkState& state, std::int64_t cycle,
                            double omega, bool storage_only = false);

}  // namespace kinon

#endif  // KINON_ENGINE_HPP
