#include "kinon/core.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "kinon/errors.hpp"

namespace kinon {

PsiSpec PsiSpec::power(double gamma) {
  PsiSpec spec{Kind::power, gamma};
  spec.validate();
  return spec;
}

void PsiSpec::validate() const {
  if (kind == Kind::power && !(std::isfinite(gamma) && gamma > 0.0))
    throw ValidationError("gamma", "power exponent must be finite and > 0");
}

double PsiSpec::operator()(double x) const noexcept {
  switch (kind) {
    case Kind::identity:
      return x;
    case Kind::log1p:
      return std::log1p(x);
    case Kind::power:
      return x > 0.0 ? std::pow(x, gamma) : 0.0;
  }
  return x;
}

namespace {

void require_unit(double v, const char* name) {
  if (!(std::isfinite(v) && v >= 0.0 && v <= 1.0))
    throw ValidationError(name, "must lie in [0, 1]");
}

}  // namespace

void ModelParams::validate() const {
  if (!(std::isfinite(kappa) && kappa >= 0.0)) throw ValidationError("kappa", "must be finite and >= 0");
  require_unit(lambda, "lambda");
  require_unit(eta, "eta");
  if (!(std::isfinite(theta) && theta >= 0.0)) throw ValidationError("theta", "must be finite and >= 0");
  try {
    psi.validate();
  } catch (const ValidationError& e) {
    throw e.nested("psi");
  }
}

void ModelParams::validate(double omega) const {
  validate();
  if (theta > kThetaOmegaFraction * omega)
    throw ValidationError("theta", "must not exceed omega / 100");
}

double kinetic_map(double rank, double kappa) noexcept {
  return std::max(0.0, 1.0 - kappa * rank);
}

double leaky_update(double potential, double observed, double lambda) noexcept {
  return lambda * potential + observed;
}

double psi_eval(const PsiSpec& spec, double x) noexcept { return spec(x); }

void encode(KinonRef node, const ModelParams& params, CollisionTrace& trace) noexcept {
  const std::size_t k = node.degree();
  assert(k <= kMaxDegree);
  assert(node.outputs.size() == k && node.link_potentials.size() == k);
  trace.channels = k + 1;

  std::array<double, kMaxChannels> held{};
  held[0] = node.storage;
  std::copy(node.inputs.begin(), node.inputs.end(), held.begin() + 1);
  trace.gathered = multiset_sum({held.data(), k + 1});

  node.storage_potential = leaky_update(node.storage_potential, node.storage, params.lambda);
  trace.percepts[0] = params.psi(node.storage_potential);
  for (std::size_t j = 0; j < k; ++j) {
    node.link_potentials[j] = leaky_update(node.link_potentials[j], node.inputs[j], params.lambda);
    trace.percepts[j + 1] = params.psi(node.link_potentials[j]);
  }

  trace.measured_total = multiset_sum({trace.percepts.data(), k + 1});
  const double total = trace.measured_total;
  for (std::size_t m = 0; m <= k; ++m)
    trace.ranks[m] = total > 0.0 ? trace.percepts[m] / total : 0.0;
}

void modulate(CollisionTrace& trace, double kappa) noexcept {
  for (std::size_t m = 0; m < trace.channels; ++m)
    trace.rates[m] = kinetic_map(trace.ranks[m], kappa);
}

void decode(KinonRef node, const ModelParams& params, CollisionTrace& trace) noexcept {
  const std::size_t k = node.degree();
  assert(trace.channels == k + 1);

  trace.shunted = params.eta * trace.gathered;
  trace.distributed = trace.gathered - trace.shunted;

  const double rate_total = multiset_sum(trace.rate_span());
  for (std::size_t j = 0; j < k; ++j) {
    const double raw = rate_total > 0.0 ? trace.rates[j + 1] * trace.distributed / rate_total : 0.0;
    trace.raw_outputs[j] = raw;
    // truncated mass stays in storage
    node.outputs[j] = raw >= params.theta ? raw : 0.0;
  }

  const double sent = multiset_sum(node.outputs);
  // rounding can push the remainder a few ulp below zero
  node.storage = std::max(0.0, trace.gathered - sent);
}

CollisionTrace collide(KinonRef node, const ModelParams& params) noexcept {
  CollisionTrace trace;
  encode(node, params, trace);
  modulate(trace, params.kappa);
  decode(node, params, trace);
  return trace;
}

KinonState::KinonState(std::size_t degree)
    : inputs(degree, 0.0), outputs(degree, 0.0), potentials(degree + 1, 0.0) {}

double KinonState::mass() const noexcept {
  CompensatedSum s;
  s.add(storage);
  for (double o : outputs) s.add(o);
  return s.value();
}

KinonRef KinonState::ref() noexcept {
  assert(outputs.size() == inputs.size() && potentials.size() == inputs.size() + 1);
  return KinonRef{storage, inputs, outputs, potentials[0], std::span<double>(potentials).subspan(1)};
}

CollisionTrace encode(KinonState& state, const ModelParams& params) {
  CollisionTrace trace;
  encode(state.ref(), params, trace);
  return trace;
}

void decode(KinonState& state, const ModelParams& params, CollisionTrace& trace) {
  decode(state.ref(), params, trace);
  std::fill(state.inputs.begin(), state.inputs.end(), 0.0);
}

CollisionTrace collide(KinonState& state, const ModelParams& params) {
  CollisionTrace trace = collide(state.ref(), params);
  std::fill(state.inputs.begin(), state.inputs.end(), 0.0);
  return trace;
}

}  // namespace kinon
