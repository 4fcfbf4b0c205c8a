#ifndef MFPMP_ADJOINT_HPP
#define MFPMP_ADJOINT_HPP

#include <cstddef>
#include <functional>

#include "mfpmp/forward.hpp"
#include "mfpmp/models.hpp"
#include "mfpmp/spectral.hpp"

namespace mfpmp {

/// Coefficients b̂_n of the adjoint density ζ_t. Same layout as a density but
/// signed and without a mass constraint.
using AdjointField = FourierField;

/// ζ_T = -D_μℓ(μ_T)·ρ_T.
AdjointField terminal_adjoint(const FourierField& mu_T, const ModelSpec& model);

/// db̂/dt of the adjoint balance law; throws ConstraintError when u ∉ U.
AdjointField rhs_adjoint(double t, const AdjointField& b, const FourierField& a, const ControlVector& u,
                         const ModelSpec& model);

/// Called at every half-step node in decreasing order h = 2K, ..., 0.
using BackwardObserver =
    std::function<void(std::size_t half_index, const FourierField& mu, const AdjointField& zeta)>;

/// Backward RK4 with step -τ from the terminal condition. Substeps read the
/// stored forward state at the interval midpoint; co-states at midpoints are
/// recovered by cubic Hermite interpolation from both interval ends.
Trajectory integrate_backward(const Trajectory& traj, const ControlSignal& u, const ModelSpec& model);

/// Same, starting from explicit terminal data instead of the cost.
Trajectory integrate_backward(const Trajectory& traj, const AdjointField& terminal, const ControlSignal& u,
                              const ModelSpec& model);

/// Streaming variants: nothing is stored, the observer sees every node.
void sweep_backward(const Trajectory& traj, const ControlSignal& u, const ModelSpec& model,
                    const BackwardObserver& observer);
void sweep_backward(const CheckpointedTrajectory& traj, const ControlSignal& u, const ModelSpec& model,
                    const BackwardObserver& observer);

}  // namespace mfpmp

#endif  // MFPMP_ADJOINT_HPP
