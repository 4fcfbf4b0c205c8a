#include "mfpmp/forward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mfpmp/errors.hpp"

namespace mfpmp {

namespace detail {

Rk4Workspace::Rk4Workspace(int n_modes)
    : k1_(n_modes), k2_(n_modes), k3_(n_modes), k4_(n_modes), stage_(n_modes) {}

void Rk4Workspace::axpy(const FourierField& x, double a, const FourierField& y, FourierField& out) {
  auto xs = x.data();
  auto ys = y.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = xs[i] + a * ys[i];
}

void Rk4Workspace::combine(FourierField& state, double h) {
  auto s = state.data();
  auto a = k1_.data();
  auto b = k2_.data();
  auto c = k3_.data();
  auto d = k4_.data();
  const double w = h / 6.0;
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
}

void check_divergence(const FourierField& state, double t, const char* what) {
  for (const auto& c : state.data()) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || std::abs(c) > kDivergenceThreshold) {
      throw DivergenceError(std::string(what) + ": coefficient magnitude exceeded " +
                            std::to_string(kDivergenceThreshold) + " at t = " + std::to_string(t) +
                            " (time step too large?)");
    }
  }
}

}  // namespace detail

namespace {

// Integrates steps [first, last) from `state` (the state at t_first), calling
// sink(h, state) after every half step.
template <class Sink>
void advance(FourierField& state, const ControlSignal& u, const ModelSpec& model, const TimeGrid& grid,
             std::size_t first, std::size_t last, Sink&& sink) {
  detail::Rk4Workspace rk(state.n_modes());
  const ControlledField& field = *model.field;
  const double h = 0.5 * grid.tau();
  for (std::size_t k = first; k < last; ++k) {
    const auto uk = u.at(k);
    auto rhs = [&](double t, const FourierField& a, FourierField& out) { field.continuity_rhs(t, a, uk, out); };
    for (std::size_t sub = 0; sub < 2; ++sub) {
      const std::size_t half = 2 * k + sub;
      const double t = grid.time_at_half(half);
      rk.step(state, t, h, rhs);
      detail::check_divergence(state, t + h, "forward solve");
      sink(half + 1, state);
    }
  }
}

}  // namespace

Trajectory::Trajectory(TimeGrid grid, std::vector<FourierField> snapshots)
    : grid_(grid), snapshots_(std::move(snapshots)) {
  if (snapshots_.size() != grid_.half_nodes()) {
    throw std::invalid_argument("Trajectory: snapshot count does not match the half-step grid");
  }
}

void validate_control(const ControlSignal& u, const ModelSpec& model, const TimeGrid& grid) {
  if (!(u.grid() == grid)) throw std::invalid_argument("control signal is defined on a different time grid");
  if (u.dim() != model.control_dim()) throw std::invalid_argument("control dimension does not match the model");
  for (std::size_t k = 0; k < u.intervals(); ++k) {
    if (!model.admissible.contains(u.at(k))) {
      throw ConstraintError("control outside the admissible set on interval " + std::to_string(k));
    }
  }
}

FourierField rhs_continuity(double t, const FourierField& a, const ControlVector& u, const ModelSpec& model) {
  if (!model.admissible.contains(u)) throw ConstraintError("rhs_continuity: control outside the admissible set");
  FourierField out(a.n_modes());
  model.field->continuity_rhs(t, a, u, out);
  return out;
}

Trajectory integrate_forward(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                             const TimeGrid& grid) {
  require_normalized(rho0);
  validate_control(u, model, grid);
  std::vector<FourierField> snaps;
  snaps.reserve(grid.half_nodes());
  snaps.push_back(rho0);
  FourierField state = rho0;
  advance(state, u, model, grid, 0, grid.steps(), [&](std::size_t, const FourierField& s) { snaps.push_back(s); });
  return Trajectory(grid, std::move(snaps));
}

FourierField integrate_forward_terminal(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                                        const TimeGrid& grid) {
  require_normalized(rho0);
  validate_control(u, model, grid);
  FourierField state = rho0;
  advance(state, u, model, grid, 0, grid.steps(), [](std::size_t, const FourierField&) {});
  return state;
}

FourierField integrate_forward_terminal(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                                        const TimeGrid& grid, const ForwardObserver& observer) {
  require_normalized(rho0);
  validate_control(u, model, grid);
  FourierField state = rho0;
  observer(0, state);
  advance(state, u, model, grid, 0, grid.steps(), observer);
  return state;
}

CheckpointedTrajectory::CheckpointedTrajectory(TimeGrid grid, std::size_t stride,
                                               std::vector<FourierField> checkpoints, ControlSignal control,
                                               ModelSpec model)
    : grid_(grid),
      stride_(stride),
      checkpoints_(std::move(checkpoints)),
      control_(std::move(control)),
      model_(std::move(model)) {}

std::vector<FourierField> CheckpointedTrajectory::window(std::size_t w) const {
  const std::size_t first = w * stride_;
  const std::size_t last = std::min(first + stride_, grid_.steps());
  std::vector<FourierField> states;
  states.reserve(2 * (last - first) + 1);
  FourierField state = checkpoints_.at(w);
  states.push_back(state);
  advance(state, control_, model_, grid_, first, last, [&](std::size_t, const FourierField& s) { states.push_back(s); });
  return states;
}

CheckpointedTrajectory integrate_forward_checkpointed(const FourierField& rho0, const ControlSignal& u,
                                                      const ModelSpec& model, const TimeGrid& grid,
                                                      std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("checkpoint stride must be positive");
  require_normalized(rho0);
  validate_control(u, model, grid);
  std::vector<FourierField> checkpoints;
  checkpoints.push_back(rho0);
  FourierField state = rho0;
  advance(state, u, model, grid, 0, grid.steps(), [&](std::size_t half, const FourierField& s) {
    if (half % (2 * stride) == 0 && half < 2 * grid.steps()) checkpoints.push_back(s);
  });
  CheckpointedTrajectory traj(grid, stride, std::move(checkpoints), u, model);
  traj.set_terminal(std::move(state));
  return traj;
}

double density_min(const FourierField& field, std::size_t oversample) {
  if (oversample == 0) throw std::invalid_argument("density_min: oversample must be positive");
  const RealGridField values = to_physical(field, static_cast<std::size_t>(field.n_modes()) * oversample);
  return *std::min_element(values.values.begin(), values.values.end());
}

double density_min(const Trajectory& traj, std::size_t oversample) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& snap : traj.snapshots()) m = std::min(m, density_min(snap, oversample));
  return m;
}

double mass_drift(const Trajectory& traj) {
  const cplx mass0 = traj.initial()[0];
  double drift = 0.0;
  for (const auto& snap : traj.snapshots()) drift = std::max(drift, std::abs(snap[0] - mass0));
  return drift;
}

void write_field_csv(std::ostream& os, std::span<const FieldSnapshot> snapshots) {
  os << "t,x,value\n";
  char buf[96];
  for (const FieldSnapshot& snap : snapshots) {
    const RealGridField values = to_physical(snap.field);
    for (std::size_t j = 0; j < values.n_points(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", snap.t, RealGridField::node(j, values.n_points()),
                    values.values[j]);
      os << buf;
    }
  }
}

void write_field_csv(std::ostream& os, const Trajectory& traj, std::span<const double> times) {
  std::vector<FieldSnapshot> snaps;
  for (double t : times) {
    const std::size_t k = traj.grid().nearest_step(t);
    snaps.push_back({traj.grid().time_at_step(k), traj.at_step(k)});
  }
  write_field_csv(os, snaps);
}

}  // namespace mfpmp
