#ifndef KINON_SIMULATION_HPP
#define KINON_SIMULATION_HPP

#include <cstdint>
#include <map>

#include "kinon/analysis.hpp"
#include "kinon/core.hpp"
#include "kinon/engine.hpp"
#include "kinon/network.hpp"

namespace kinon {

/// A network, its state and the running index series.
///
/// Parameter changes are only ever applied between cycles: `schedule(c, p)`
/// makes cycle `c` (and later ones) run with `p`.
class Simulation {
public:
  Simulation(Network network, NetworkState initial, ModelParams params, double omega, bool parallel = false);

  const Network& network() const noexcept { return network_; }
  const NetworkState& state() const noexcept { return state_; }
  const ModelParams& params() const noexcept { return params_; }
  double omega() const noexcept { return omega_; }
  /// Number of completed cycles.
  std::int64_t cycle() const noexcept { return cycle_; }
  const MacroSeries& series() const noexcept { return series_; }
  MacroSeries& series() noexcept { return series_; }

  void set_parallel(bool on) noexcept { parallel_ = on; }

  /// Queues `params` for the cycle numbered `cycle` (>= cycle() + 1).
  void schedule(std::int64_t cycle, const ModelParams& params);
  /// Pending changes keyed by the cycle they apply to.
  const std::map<std::int64_t, ModelParams>& pending() const noexcept { return pending_; }

  /// Runs one cycle and appends its record.
  const MacroRecord& step();

  FieldSnapshot snapshot(bool storage_only = false) const;

private:
  Network network_;
  NetworkState state_;
  ModelParams params_;
  double omega_;
  bool parallel_;
  std::int64_t cycle_ = 0;
  MacroSeries series_;
  std::map<std::int64_t, ModelParams> pending_;
};

}  // namespace kinon

#endif  // KINON_SIMULATION_HPP
