#ifndef KINON_CORE_HPP
#define KINON_CORE_HPP

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "kinon/summation.hpp"

namespace kinon {

/// Largest link count of any supported lattice (d8).
inline constexpr std::size_t kMaxDegree = kMaxChannels - 1;

/// Monotone measurement map applied to channel potentials before ranking.
struct PsiSpec {
  enum class Kind { identity, log1p, power };

  Kind kind = Kind::identity;
  double gamma = 1.0;  // exponent, power kind only

  static PsiSpec identity() noexcept { return {}; }
  static PsiSpec log1p() noexcept { return {Kind::log1p, 1.0}; }
  /// Throws ValidationError unless gamma > 0 and finite.
  static PsiSpec power(double gamma);

  void validate() const;
  double operator()(double x) const noexcept;

  bool operator==(const PsiSpec&) const = default;
};

/// Tunable quadruple {kappa, lambda, eta, theta} plus the psi map.
/// Defaults reproduce the basic (unfiltered) kinon.
struct ModelParams {
  double kappa = 0.0;   // kinetic map slope
  double lambda = 0.0;  // potential retention
  double eta = 0.0;     // shunted share of gathered mass
  double theta = 0.0;   // output truncation threshold, quantity units
  PsiSpec psi;

  /// Range checks that do not depend on the network total.
  void validate() const;
  /// Also enforces theta <= omega / 100.
  void validate(double omega) const;

  bool operator==(const ModelParams&) const = default;
};

/// Upper bound of theta relative to the network total.
inline constexpr double kThetaOmegaFraction = 0.01;

/// y = max(0, 1 - kappa * x)
double kinetic_map(double rank, double kappa) noexcept;

/// Leaky integrator: A' = lambda * A + x.
double leaky_update(double potential, double observed, double lambda) noexcept;

double psi_eval(const PsiSpec& spec, double x) noexcept;

/// Intermediate values of one collision. Channel 0 is storage, 1..k are links.
struct CollisionTrace {
  std::size_t channels = 0;                       // k + 1
  double gathered = 0.0;                          // S_i
  std::array<double, kMaxChannels> percepts{};    // psi(A')
  double measured_total = 0.0;                    // sum of percepts
  std::array<double, kMaxChannels> ranks{};
  std::array<double, kMaxChannels> rates{};
  double shunted = 0.0;                           // S_eta
  double distributed = 0.0;                       // S_delta
  std::array<double, kMaxDegree> raw_outputs{};   // before theta truncation

  std::size_t degree() const noexcept { return channels - 1; }
  std::span<const double> rank_span() const noexcept { return {ranks.data(), channels}; }
  std::span<const double> rate_span() const noexcept { return {rates.data(), channels}; }
};

/// Non-owning view of one node's buffers; the engine points these into its
/// flat per-network arrays.
struct KinonRef {
  double& storage;                     // S_o
  std::span<const double> inputs;      // I[1..k]
  std::span<double> outputs;           // O[1..k]
  double& storage_potential;           // A[0]
  std::span<double> link_potentials;   // A[1..k]

  std::size_t degree() const noexcept { return inputs.size(); }
};

/// Gathers S_i, advances the potentials and computes ranks.
void encode(KinonRef node, const ModelParams& params, CollisionTrace& trace) noexcept;

/// rates[m] = kinetic_map(ranks[m], kappa) for every channel, storage included.
void modulate(CollisionTrace& trace, double kappa) noexcept;

/// Shunts, scatters and truncates S_i into outputs; the remainder is stored.
void decode(KinonRef node, const ModelParams& params, CollisionTrace& trace) noexcept;

/// encode -> modulate -> decode. Leaves `node.inputs` untouched; callers own
/// the consumed-input buffer.
CollisionTrace collide(KinonRef node, const ModelParams& params) noexcept;

/// Owning single-node state, for standalone use and tests.
struct KinonState {
  std::vector<double> inputs;
  std::vector<double> outputs;
  double storage = 0.0;
  std::vector<double> potentials;  // A[0] storage channel, A[1..k] links

  KinonState() = default;
  explicit KinonState(std::size_t degree);

  std::size_t degree() const noexcept { return inputs.size(); }
  /// S_o + sum(O); meaningful once inputs have been consumed.
  double mass() const noexcept;
  KinonRef ref() noexcept;

  bool operator==(const KinonState&) const = default;
};

CollisionTrace encode(KinonState& state, const ModelParams& params);
/// Decodes and clears the inputs.
void decode(KinonState& state, const ModelParams& params, CollisionTrace& trace);
/// Full collision; inputs are zero afterwards.
CollisionTrace collide(KinonState& state, const ModelParams& params);

}  // namespace kinon

#endif  // KINON_CORE_HPP
