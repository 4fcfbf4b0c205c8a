#ifndef MFPMP_VALIDATION_HPP
#define MFPMP_VALIDATION_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "json.hpp"
#include "mfpmp/models.hpp"
#include "mfpmp/spectral.hpp"
#include "mfpmp/time_grid.hpp"

namespace mfpmp {

/// Phases of N identical oscillators.
struct ParticleEnsemble {
  std::vector<double> phases;

  std::size_t size() const noexcept { return phases.size(); }
};

/// Particle i at the (i - 1/2)/N quantile of ρ₀, i = 1..N, on [0, 2π).
/// ρ₀ must be a normalized, strictly positive density.
ParticleEnsemble stratified_sample(const FourierField& rho0, std::size_t n);

/// Observer for simulate_particles, called after each full step k = 0..K
/// (k = 0 is the initial state).
using ParticleObserver = std::function<void(std::size_t k, const ParticleEnsemble&)>;

/// RK4 with step τ on ẋ_i = u₁ + u₂ (1/N) Σ_j sin(x_j - x_i - α), the sum
/// including j = i, evaluated through the order parameter in O(N).
ParticleEnsemble simulate_particles(const ParticleEnsemble& initial, const ControlSignal& u, double alpha,
                                    const TimeGrid& grid, const ParticleObserver& observer = {});

/// (1/N) Σ e^{i n x_i}.
cplx empirical_moment(const ParticleEnsemble& ensemble, int n);

/// (1/N) Σ (1 - cos(x_i - x₀)).
double particle_sync_cost(const ParticleEnsemble& ensemble, double x0);

struct ParticleReport {
  std::size_t particles = 0;
  double moment_discrepancy = 0.0;  ///< max over t ∈ {0, T/2, T}, n ∈ {1, 2}
  double meanfield_cost = 0.0;
  double particle_cost = 0.0;
  double cost_gap = 0.0;
};

/// Replays u through the mean-field solver and the particle system. The
/// model must be the Kuramoto field with the synchronization cost.
ParticleReport meanfield_vs_particles(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                                      const TimeGrid& grid, std::size_t n_particles);

inline const std::vector<double> kDefaultSlopeLambdas{1e-3, 2e-3, 4e-3, 8e-3};

struct SlopeReport {
  std::vector<double> lambdas;
  std::vector<double> actual;     ///< 𝓘[u^λ] - 𝓘[u]
  std::vector<double> predicted;  ///< -λ ⟨ū - u, d⟩
  std::vector<double> ratio;      ///< actual / predicted, NaN when predicted = 0
  double directional = 0.0;       ///< ⟨ū - u, d⟩
  double residual_order = 0.0;    ///< least-squares slope of log|actual - predicted| against log λ
  double max_ratio_deviation = 0.0;
};

/// Compares the first-order decrement predicted by the adjoint with forward
/// solves along u^λ = u + λ(ū - u).
SlopeReport increment_slope_check(const FourierField& rho0, const ControlSignal& u, const ControlSignal& ubar,
                                  const ModelSpec& model, const TimeGrid& grid,
                                  const std::vector<double>& lambdas = kDefaultSlopeLambdas);

struct LocalAdjointReport {
  double max_error = 0.0;  ///< max over full steps and grid points
  double max_reference = 0.0;
  std::size_t times_checked = 0;
};

/// For u = (u₁(t), 0) the adjoint is known along characteristics:
/// ζ_t(x) = -sin(x + s(t) - x₀) ρ_t(x) with s(t) = ∫_t^T u₁. Throws
/// std::invalid_argument when u₂ is not identically zero.
LocalAdjointReport local_adjoint_check(const ControlSignal& u, const FourierField& rho0, double x0,
                                       const TimeGrid& grid);

void to_json(nlohmann::json& j, const ParticleReport& r);
void to_json(nlohmann::json& j, const SlopeReport& r);
void to_json(nlohmann::json& j, const LocalAdjointReport& r);

}  // namespace mfpmp

#endif  // MFPMP_VALIDATION_HPP
