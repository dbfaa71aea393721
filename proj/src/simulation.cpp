#include "kinon/simulation.hpp"

#include <stdexcept>
#include <string>

#include "kinon/errors.hpp"

namespace kinon {

Simulation::Simulation(Network network, NetworkState initial, ModelParams params, double omega, bool parallel)
    : network_(std::move(network)),
      state_(std::move(initial)),
      params_(params),
      omega_(omega),
      parallel_(parallel) {
  if (!(std::isfinite(omega_) && omega_ > 0.0)) throw ValidationError("omega", "must be finite and > 0");
  params_.validate(omega_);
  if (!state_.matches(network_)) throw std::invalid_argument("Simulation: state does not match network");
  if (network_.max_degree() > kMaxDegree) throw ValidationError("network", "node degree exceeds 8");
  if (!validate_balanced(network_).valid()) throw ValidationError("network", "not a balanced reciprocal digraph");
}

void Simulation::schedule(std::int64_t cycle, const ModelParams& params) {
  if (cycle <= cycle_) throw std::invalid_argument("Simulation::schedule: cycle " + std::to_string(cycle) + " already started");
  params.validate(omega_);
  pending_[cycle] = params;
}

const MacroRecord& Simulation::step() {
  const std::int64_t next = cycle_ + 1;
  if (auto it = pending_.find(next); it != pending_.end()) {
    params_ = it->second;
    pending_.erase(it);
  }
  const CycleStats stats = kinon::step(network_, state_, params_, StepOptions{parallel_});
  cycle_ = next;
  series_.records.push_back(make_record(cycle_, stats, omega_));
  return series_.records.back();
}

FieldSnapshot Simulation::snapshot(bool storage_only) const {
  return make_snapshot(network_, state_, cycle_, omega_, storage_only);
}

}  // namespace kinon
