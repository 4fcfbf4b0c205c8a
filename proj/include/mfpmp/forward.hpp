#ifndef MFPMP_FORWARD_HPP
#define MFPMP_FORWARD_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfpmp/models.hpp"
#include "mfpmp/spectral.hpp"
#include "mfpmp/time_grid.hpp"

namespace mfpmp {

/// Coefficient magnitude above which a solve is declared divergent.
inline constexpr double kDivergenceThreshold = 1e6;

/// Fourier snapshots at every half-step node t_h = h·τ/2 of a grid.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(TimeGrid grid, std::vector<FourierField> snapshots);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return snapshots_.size(); }
  int n_modes() const noexcept { return snapshots_.front().n_modes(); }

  const FourierField& at_half(std::size_t h) const { return snapshots_.at(h); }
  const FourierField& at_step(std::size_t k) const { return snapshots_.at(2 * k); }
  const FourierField& initial() const { return snapshots_.front(); }
  const FourierField& terminal() const { return snapshots_.back(); }

  const std::vector<FourierField>& snapshots() const noexcept { return snapshots_; }

 private:
  TimeGrid grid_;
  std::vector<FourierField> snapshots_;
};

/// Forward history that keeps only every `stride`-th full-step state and
/// recomputes the half-step states of a window on demand. Recomputation
/// repeats the original arithmetic, so recovered states are bit-identical.
class CheckpointedTrajectory {
 public:
  CheckpointedTrajectory(TimeGrid grid, std::size_t stride, std::vector<FourierField> checkpoints,
                         ControlSignal control, ModelSpec model);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t windows() const noexcept { return checkpoints_.size(); }
  const FourierField& terminal() const noexcept { return terminal_; }
  int n_modes() const noexcept { return terminal_.n_modes(); }

  /// First half-step index covered by window w.
  std::size_t window_begin(std::size_t w) const noexcept { return 2 * w * stride_; }

  /// Half-step states of window w, indices window_begin(w) .. 2·min((w+1)·stride, K).
  std::vector<FourierField> window(std::size_t w) const;

  void set_terminal(FourierField terminal) { terminal_ = std::move(terminal); }

 private:
  TimeGrid grid_;
  std::size_t stride_;
  std::vector<FourierField> checkpoints_;
  ControlSignal control_;
  ModelSpec model_;
  FourierField terminal_;
};

/// dâ/dt of the continuity equation; throws ConstraintError when u ∉ U.
FourierField rhs_continuity(double t, const FourierField& a, const ControlVector& u, const ModelSpec& model);

/// Classical RK4 at step τ/2 (two substeps per control interval), storing
/// every half-step node. Throws DivergenceError when any |â_n| exceeds
/// kDivergenceThreshold.
Trajectory integrate_forward(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                             const TimeGrid& grid);

/// Same arithmetic as integrate_forward, keeping only the terminal state.
FourierField integrate_forward_terminal(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                                        const TimeGrid& grid);

/// Called at every half-step node h = 0, ..., 2K in increasing order.
using ForwardObserver = std::function<void(std::size_t half_index, const FourierField& mu)>;

/// Streaming variant: same arithmetic, nothing stored.
FourierField integrate_forward_terminal(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                                        const TimeGrid& grid, const ForwardObserver& observer);

CheckpointedTrajectory integrate_forward_checkpointed(const FourierField& rho0, const ControlSignal& u,
                                                      const ModelSpec& model, const TimeGrid& grid,
                                                      std::size_t stride);

/// Minimum of the reconstructed density over all snapshots, on a grid of
/// `oversample`·N points. Negative values are reported as is.
double density_min(const Trajectory& traj, std::size_t oversample = 1);
double density_min(const FourierField& field, std::size_t oversample = 1);

/// Largest |â_0(t) - â_0(0)| over the trajectory.
double mass_drift(const Trajectory& traj);

struct FieldSnapshot {
  double t = 0.0;
  FourierField field;
};

/// Writes rows `t,x,value` on the natural grid of each snapshot.
void write_field_csv(std::ostream& os, std::span<const FieldSnapshot> snapshots);

/// Same, for the full-step state nearest to each requested time.
void write_field_csv(std::ostream& os, const Trajectory& traj, std::span<const double> times);

void validate_control(const ControlSignal& u, const ModelSpec& model, const TimeGrid& grid);

namespace detail {

/// Fixed-step RK4 workspace for a coefficient ODE.
class Rk4Workspace {
 public:
  explicit Rk4Workspace(int n_modes);

  template <class Rhs>
  void step(FourierField& state, double t, double h, Rhs&& rhs) {
    rhs(t, state, k1_);
    axpy(state, 0.5 * h, k1_, stage_);
    rhs(t + 0.5 * h, stage_, k2_);
    axpy(state, 0.5 * h, k2_, stage_);
    rhs(t + 0.5 * h, stage_, k3_);
    axpy(state, h, k3_, stage_);
    rhs(t + h, stage_, k4_);
    combine(state, h);
  }

 private:
  static void axpy(const FourierField& x, double a, const FourierField& y, FourierField& out);
  void combine(FourierField& state, double h);

  FourierField k1_, k2_, k3_, k4_, stage_;
};

void check_divergence(const FourierField& state, double t, const char* what);

}  // namespace detail

}  // namespace mfpmp

#endif  // MFPMP_FORWARD_HPP
