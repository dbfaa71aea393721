#include "kinon/engine.hpp"

#include <cassert>
#include <cstring>
#include <stdexcept>

#include "kinon/errors.hpp"

namespace kinon {

namespace {

bool same_bits(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) noexcept {
  return a.size() == b.size() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

void collide_node(const Network& network, NetworkState& state, const ModelParams& params, std::size_t i) {
  collide(state.node(network, i), params);
}

}  // namespace

NetworkState::NetworkState(const Network& network)
    : storage(Eigen::ArrayXd::Zero(network.node_count())),
      outputs(Eigen::ArrayXd::Zero(network.link_count())),
      inflow(Eigen::ArrayXd::Zero(network.link_count())),
      storage_potential(Eigen::ArrayXd::Zero(network.node_count())),
      link_potential(Eigen::ArrayXd::Zero(network.link_count())) {}

bool NetworkState::matches(const Network& network) const noexcept {
  const auto n = static_cast<Eigen::Index>(network.node_count());
  const auto l = static_cast<Eigen::Index>(network.link_count());
  return storage.size() == n && storage_potential.size() == n && outputs.size() == l && inflow.size() == l &&
         link_potential.size() == l;
}

KinonRef NetworkState::node(const Network& network, std::size_t i) noexcept {
  const auto first = static_cast<Eigen::Index>(network.first_link(i));
  const auto k = network.degree(i);
  return KinonRef{storage[static_cast<Eigen::Index>(i)],
                  std::span<const double>(inflow.data() + first, k),
                  std::span<double>(outputs.data() + first, k),
                  storage_potential[static_cast<Eigen::Index>(i)],
                  std::span<double>(link_potential.data() + first, k)};
}

bool identical(const NetworkState& a, const NetworkState& b) noexcept {
  return same_bits(a.storage, b.storage) && same_bits(a.outputs, b.outputs) && same_bits(a.inflow, b.inflow) &&
         same_bits(a.storage_potential, b.storage_potential) && same_bits(a.link_potential, b.link_potential);
}

NetworkState init_singularity(const Network& network, double omega, std::size_t position) {
  if (!(std::isfinite(omega) && omega > 0.0)) throw ValidationError("omega", "must be finite and > 0");
  if (position >= network.node_count()) throw ValidationError("seed", "position outside the network");
  NetworkState state(network);
  state.storage[static_cast<Eigen::Index>(position)] = omega;
  return state;
}

Eigen::ArrayXd node_mass(const Network& network, const NetworkState& state) {
  Eigen::ArrayXd mass(static_cast<Eigen::Index>(network.node_count()));
  for (std::size_t i = 0; i < network.node_count(); ++i) {
    CompensatedSum s;
    s.add(state.storage[static_cast<Eigen::Index>(i)]);
    const std::size_t first = network.first_link(i);
    for (std::size_t l = first; l < first + network.degree(i); ++l) s.add(state.outputs[static_cast<Eigen::Index>(l)]);
    mass[static_cast<Eigen::Index>(i)] = s.value();
  }
  return mass;
}

double total_mass(const NetworkState& state) noexcept {
  CompensatedSum s;
  for (double v : state.storage) s.add(v);
  for (double v : state.outputs) s.add(v);
  return s.value();
}

double output_total(const NetworkState& state) noexcept {
  CompensatedSum s;
  for (double v : state.outputs) s.add(v);
  return s.value();
}

double turnover_total(const Eigen::ArrayXd& previous_storage, const NetworkState& current) noexcept {
  assert(previous_storage.size() == current.storage.size());
  CompensatedSum s;
  for (Eigen::Index i = 0; i < current.storage.size(); ++i) s.add(std::abs(current.storage[i] - previous_storage[i]));
  for (Eigen::Index l = 0; l < current.outputs.size(); ++l) s.add(std::abs(current.inflow[l] - current.outputs[l]));
  return s.value();
}

void propagate(const Network& network, NetworkState& state) {
  assert(state.matches(network));
  const auto links = static_cast<std::ptrdiff_t>(network.link_count());
  const auto recip = network.reciprocals();
  for (std::ptrdiff_t l = 0; l < links; ++l) state.inflow[l] = state.outputs[static_cast<Eigen::Index>(recip[l])];
  state.outputs.setZero();
}

void collide_all(const Network& network, NetworkState& state, const ModelParams& params, const StepOptions& options) {
  assert(state.matches(network));
  const auto n = static_cast<std::ptrdiff_t>(network.node_count());
  if (!options.order.empty()) {
    if (options.order.size() != network.node_count()) throw std::invalid_argument("collide_all: order must cover every node");
    for (std::size_t i : options.order) collide_node(network, state, params, i);
    return;
  }
#pragma omp parallel for schedule(static) if (options.parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) collide_node(network, state, params, static_cast<std::size_t>(i));
}

CycleStats step(const Network& network, NetworkState& state, const ModelParams& params, const StepOptions& options) {
  const Eigen::ArrayXd previous_storage = state.storage;
  propagate(network, state);
  collide_all(network, state, params, options);

  CycleStats stats;
  stats.output_total = output_total(state);
  stats.turnover_total = turnover_total(previous_storage, state);
  stats.mass_total = total_mass(state);
  return stats;
}

FieldSnapshot make_snapshot(const Network& network, const NetworkState& state, std::int64_t cycle, double omega,
                            bool storage_only) {
  const Eigen::ArrayXd values = storage_only ? state.storage : node_mass(network, state);
  int width = static_cast<int>(network.node_count());
  int height = 1;
  if (const auto& g = network.geometry()) {
    width = g->width;
    height = g->height;
  }
  FieldSnapshot snap;
  snap.mass = Eigen::Map<const Field>(values.data(), height, width);
  snap.cycle = cycle;
  snap.omega = omega;
  return snap;
}

}  // namespace kinon
