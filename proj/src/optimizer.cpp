#include "mfpmp/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mfpmp/adjoint.hpp"

namespace mfpmp {

SwitchingFunction::SwitchingFunction(TimeGrid grid, std::size_t dim)
    : grid_(grid), dim_(dim), nodal_(grid.half_nodes() * dim, 0.0) {}

ControlVector SwitchingFunction::interval_mean(std::size_t k) const {
  ControlVector mean(dim_);
  const auto left = at_half(2 * k);
  const auto mid = at_half(2 * k + 1);
  const auto right = at_half(2 * k + 2);
  for (std::size_t j = 0; j < dim_; ++j) mean[j] = (left[j] + 4.0 * mid[j] + right[j]) / 6.0;
  return mean;
}

ControlSignal SwitchingFunction::as_signal() const {
  ControlSignal s(grid_, dim_);
  for (std::size_t k = 0; k < grid_.steps(); ++k) {
    const ControlVector m = interval_mean(k);
    std::copy(m.begin(), m.end(), s.at(k).begin());
  }
  return s;
}

void DescentConfig::validate() const {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("descent.c must lie in (0, 1)");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("descent.theta must lie in (0, 1)");
  if (!(lambda_tol >= 0.0) || !std::isfinite(lambda_tol)) throw std::invalid_argument("descent.lambda_tol must be >= 0");
  if (!(eps_tol >= 0.0) || !std::isfinite(eps_tol)) throw std::invalid_argument("descent.eps_tol must be >= 0");
  if (k_max == 0) throw std::invalid_argument("descent.k_max must be positive");
}

std::string_view to_string(DescentStatus status) {
  switch (status) {
    case DescentStatus::stationary: return "stationary";
    case DescentStatus::step_tolerance: return "step_tolerance";
    case DescentStatus::iteration_limit: return "iteration_limit";
    case DescentStatus::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

SwitchingFunction switching_function(const Trajectory& traj, const Trajectory& cotraj, const ModelSpec& model) {
  if (!(traj.grid() == cotraj.grid()) || traj.size() != cotraj.size()) {
    throw std::invalid_argument("switching_function: trajectories live on different grids");
  }
  SwitchingFunction d(traj.grid(), model.control_dim());
  for (std::size_t h = 0; h < traj.size(); ++h) {
    model.field->switching(traj.grid().time_at_half(h), traj.at_half(h), cotraj.at_half(h), d.at_half(h));
  }
  return d;
}

Linearization linearize(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                        const TimeGrid& grid, std::size_t checkpoint_stride) {
  Linearization lin{0.0, SwitchingFunction(grid, model.control_dim())};
  auto observe = [&](std::size_t h, const FourierField& mu, const FourierField& zeta) {
    model.field->switching(grid.time_at_half(h), mu, zeta, lin.switching.at_half(h));
  };
  if (checkpoint_stride == 0) {
    const Trajectory traj = integrate_forward(rho0, u, model, grid);
    lin.cost = model.cost->value(traj.terminal());
    sweep_backward(traj, u, model, observe);
  } else {
    const CheckpointedTrajectory traj = integrate_forward_checkpointed(rho0, u, model, grid, checkpoint_stride);
    lin.cost = model.cost->value(traj.terminal());
    sweep_backward(traj, u, model, observe);
  }
  return lin;
}

ControlSignal target_control(const SwitchingFunction& d, const AdmissibleSet& set, const ControlSignal& current) {
  if (!(d.grid() == current.grid()) || d.dim() != current.dim()) {
    throw std::invalid_argument("target_control: grid mismatch");
  }
  ControlSignal ubar(d.grid(), d.dim());
  for (std::size_t k = 0; k < d.grid().steps(); ++k) {
    const ControlVector mean = d.interval_mean(k);
    set.maximize_linear(mean, current.at(k), ubar.at(k));
  }
  return ubar;
}

double non_extremality(const ControlSignal& u, const ControlSignal& ubar, const SwitchingFunction& d) {
  if (!(u.grid() == ubar.grid()) || !(u.grid() == d.grid()) || u.dim() != d.dim() || ubar.dim() != d.dim()) {
    throw std::invalid_argument("non_extremality: grid mismatch");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < u.intervals(); ++k) {
    const ControlVector mean = d.interval_mean(k);
    const auto uk = u.at(k);
    const auto bk = ubar.at(k);
    for (std::size_t j = 0; j < d.dim(); ++j) sum += (bk[j] - uk[j]) * mean[j];
  }
  return u.grid().tau() * sum;
}

namespace {

ControlSignal weak_variation(const ControlSignal& u, const ControlSignal& ubar, double lambda,
                             const AdmissibleSet& set) {
  ControlSignal v = u.interpolate(ubar, lambda);
  // Convex combinations stay in U; this only removes rounding excursions.
  for (std::size_t k = 0; k < v.intervals(); ++k) set.project(v.at(k));
  return v;
}

}  // namespace

BacktrackResult backtracking_step(const ControlSignal& u, const ControlSignal& ubar, double non_extremality,
                                  double cost_u, const DescentConfig& cfg, const AdmissibleSet& set,
                                  const CostEvaluator& evaluator) {
  if (!(non_extremality > 0.0)) {
    throw std::invalid_argument("backtracking_step: non-extremality must be positive");
  }
  double lambda = 1.0;
  for (std::size_t j = 0; j <= cfg.j_max; ++j, lambda *= cfg.theta) {
    const double trial = evaluator(weak_variation(u, ubar, lambda, set));
    if (trial - cost_u <= -cfg.c * lambda * non_extremality) return {lambda, trial, j, false};
  }
  return {0.0, cost_u, cfg.j_max, true};
}

double evaluate_cost(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                     const TimeGrid& grid) {
  return model.cost->value(integrate_forward_terminal(rho0, u, model, grid));
}

DescentResult run_descent(const FourierField& rho0, const ControlSignal& u0, const ModelSpec& model,
                          const TimeGrid& grid, const DescentConfig& cfg, const IterationCallback& on_iteration) {
  cfg.validate();
  validate_control(u0, model, grid);
  using clock = std::chrono::steady_clock;

  DescentResult result;
  result.control = u0;
  const CostEvaluator evaluator = [&](const ControlSignal& v) { return evaluate_cost(rho0, v, model, grid); };

  for (std::size_t k = 0;; ++k) {
    const auto start = clock::now();
    const Linearization lin = linearize(rho0, result.control, model, grid, cfg.checkpoint_stride);
    const ControlSignal ubar = target_control(lin.switching, model.admissible, result.control);
    const double e = non_extremality(result.control, ubar, lin.switching);
    result.final_cost = lin.cost;
    result.final_non_extremality = e;

    if (e < cfg.eps_tol || !(e > 0.0)) {
      result.status = DescentStatus::stationary;
      break;
    }
    if (k == cfg.k_max) {
      result.status = DescentStatus::iteration_limit;
      break;
    }

    const BacktrackResult step =
        backtracking_step(result.control, ubar, e, lin.cost, cfg, model.admissible, evaluator);
    if (step.failed) {
      result.status = DescentStatus::line_search_failure;
      break;
    }

    result.control = weak_variation(result.control, ubar, step.lambda, model.admissible);
    IterationRecord rec;
    rec.k = k;
    rec.cost = lin.cost;
    rec.non_extremality = e;
    rec.lambda = step.lambda;
    rec.backtrack_count = step.j;
    rec.accepted_cost = step.new_cost;
    rec.wall_time = std::chrono::duration<double>(clock::now() - start).count();
    result.history.push_back(rec);
    result.final_cost = step.new_cost;
    if (on_iteration) on_iteration(rec);

    if (step.lambda < cfg.lambda_tol) {
      // E at the returned control, for reporting.
      const Linearization last = linearize(rho0, result.control, model, grid, cfg.checkpoint_stride);
      const ControlSignal last_target = target_control(last.switching, model.admissible, result.control);
      result.final_cost = last.cost;
      result.final_non_extremality = non_extremality(result.control, last_target, last.switching);
      result.status = DescentStatus::step_tolerance;
      break;
    }
  }
  return result;
}

void write_convergence_csv(std::ostream& os, const std::vector<IterationRecord>& history) {
  os << "k,cost,non_extremality,lambda,backtrack_count,accepted_cost\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%zu,%.17g\n", r.k, r.cost, r.non_extremality,
                  r.lambda, r.backtrack_count, r.accepted_cost);
    os << buf;
  }
}

void write_control_csv(std::ostream& os, const ControlSignal& u) {
  os << "t";
  for (std::size_t j = 0; j < u.dim(); ++j) os << ",u" << (j + 1);
  os << '\n';
  char buf[64];
  for (std::size_t k = 0; k < u.intervals(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", u.grid().time_at_step(k));
    os << buf;
    for (double v : u.at(k)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace mfpmp
