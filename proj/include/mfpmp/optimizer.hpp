#ifndef MFPMP_OPTIMIZER_HPP
#define MFPMP_OPTIMIZER_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "mfpmp/forward.hpp"
#include "mfpmp/models.hpp"
#include "mfpmp/time_grid.hpp"

namespace mfpmp {

/// d_j(t) = ∫ V^j_t(x, μ_t) ζ_t(x) dx at every half-step node.
///
/// Controls are constant on each interval, so the descent direction uses the
/// interval mean of d (Simpson's rule over the two ends and the midpoint).
class SwitchingFunction {
 public:
  SwitchingFunction(TimeGrid grid, std::size_t dim);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> at_half(std::size_t h) noexcept { return {nodal_.data() + h * dim_, dim_}; }
  std::span<const double> at_half(std::size_t h) const noexcept { return {nodal_.data() + h * dim_, dim_}; }

  /// (1/τ) ∫_{t_k}^{t_{k+1}} d(t) dt by Simpson's rule.
  ControlVector interval_mean(std::size_t k) const;

  /// Interval means as a piecewise-constant signal.
  ControlSignal as_signal() const;

 private:
  TimeGrid grid_;
  std::size_t dim_;
  std::vector<double> nodal_;
};

struct DescentConfig {
  double c = 0.01;             ///< Armijo constant in (0, 1)
  double theta = 0.5;          ///< backtracking ratio in (0, 1)
  double lambda_tol = 1e-2;    ///< stop once an accepted step is below this
  std::size_t j_max = 40;      ///< largest backtracking exponent tried
  std::size_t k_max = 500;     ///< outer iteration cap
  double eps_tol = 1e-8;       ///< stop once the non-extremality falls below this
  std::size_t checkpoint_stride = 0;  ///< 0 stores the full forward trajectory

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const DescentConfig&) const = default;
};

struct IterationRecord {
  std::size_t k = 0;
  double cost = 0.0;             ///< I[u^k]
  double non_extremality = 0.0;  ///< E[u^k]
  double lambda = 0.0;           ///< accepted step (0 when none)
  std::size_t backtrack_count = 0;
  double accepted_cost = 0.0;    ///< I[u^{k+1}]
  double wall_time = 0.0;        ///< seconds spent in this iteration
};

enum class DescentStatus {
  stationary,           ///< E below eps_tol
  step_tolerance,       ///< accepted λ below lambda_tol
  iteration_limit,
  line_search_failure,  ///< no θ^j with j <= j_max passed the Armijo test
};

std::string_view to_string(DescentStatus status);

struct DescentResult {
  ControlSignal control;
  std::vector<IterationRecord> history;
  DescentStatus status = DescentStatus::iteration_limit;
  double final_cost = 0.0;
  double final_non_extremality = 0.0;  ///< E at the returned control
};

struct BacktrackResult {
  double lambda = 0.0;
  double new_cost = 0.0;
  std::size_t j = 0;
  bool failed = false;
};

using CostEvaluator = std::function<double(const ControlSignal&)>;

/// Assembles d from stored forward and adjoint trajectories.
SwitchingFunction switching_function(const Trajectory& traj, const Trajectory& cotraj, const ModelSpec& model);

/// Forward solve, backward sweep and switching function in one pass; only the
/// forward history is kept (fully or through checkpoints).
struct Linearization {
  double cost = 0.0;
  SwitchingFunction switching;
};
Linearization linearize(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                        const TimeGrid& grid, std::size_t checkpoint_stride = 0);

/// Intervalwise maximizer of υ·d̄_k over U; keeps `current` where d̄_k vanishes.
ControlSignal target_control(const SwitchingFunction& d, const AdmissibleSet& set, const ControlSignal& current);

/// ⟨ū - u, d̄⟩ by the rectangle rule on the control intervals.
double non_extremality(const ControlSignal& u, const ControlSignal& ubar, const SwitchingFunction& d);

/// Largest θ^j, j <= j_max, with I[u + θ^j(ū - u)] - I[u] <= -c θ^j E.
BacktrackResult backtracking_step(const ControlSignal& u, const ControlSignal& ubar, double non_extremality,
                                  double cost_u, const DescentConfig& cfg, const AdmissibleSet& set,
                                  const CostEvaluator& evaluator);

/// I[u] from a forward-only solve.
double evaluate_cost(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                     const TimeGrid& grid);

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Descent with backtracking: forward, backward, target control, Armijo
/// search, convex update, until one of the stopping rules fires.
DescentResult run_descent(const FourierField& rho0, const ControlSignal& u0, const ModelSpec& model,
                          const TimeGrid& grid, const DescentConfig& cfg, const IterationCallback& on_iteration = {});

/// Wall times are left out so the file is reproducible byte for byte.
void write_convergence_csv(std::ostream& os, const std::vector<IterationRecord>& history);
void write_control_csv(std::ostream& os, const ControlSignal& u);

}  // namespace mfpmp

#endif  // MFPMP_OPTIMIZER_HPP
