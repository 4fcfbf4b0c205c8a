#include "mfpmp/adjoint.hpp"

#include <stdexcept>
#include <vector>

#include "mfpmp/errors.hpp"

namespace mfpmp {

namespace {

// `forward(h)` returns the forward state at half-step node h (by reference or
// by value); it is queried with non-increasing h.
template <class ForwardAt>
void sweep(const TimeGrid& grid, const AdjointField& terminal, ForwardAt&& forward, const ControlSignal& u,
           const ModelSpec& model, const BackwardObserver& observer) {
  validate_control(u, model, grid);
  const ControlledField& field = *model.field;
  const double tau = grid.tau();
  const std::size_t steps = grid.steps();
  const int n_modes = terminal.n_modes();

  FourierField k1(n_modes), k2(n_modes), k3(n_modes), k4(n_modes), stage(n_modes), slope_left(n_modes);
  AdjointField b = terminal;
  observer(2 * steps, forward(2 * steps), b);

  auto axpy = [](const FourierField& x, double a, const FourierField& y, FourierField& out) {
    auto xs = x.data();
    auto ys = y.data();
    auto os = out.data();
    for (std::size_t i = 0; i < xs.size(); ++i) os[i] = xs[i] + a * ys[i];
  };

  for (std::size_t kk = steps; kk-- > 0;) {
    const auto uk = u.at(kk);
    const double t_right = grid.time_at_step(kk + 1);
    const double t_mid = grid.time_at_half(2 * kk + 1);
    const double t_left = grid.time_at_step(kk);
    const FourierField& a_right = forward(2 * kk + 2);
    const FourierField& a_mid = forward(2 * kk + 1);

    const AdjointField b_right = b;
    field.adjoint_rhs(t_right, b, a_right, uk, k1);
    axpy(b, -0.5 * tau, k1, stage);
    field.adjoint_rhs(t_mid, stage, a_mid, uk, k2);
    axpy(b, -0.5 * tau, k2, stage);
    field.adjoint_rhs(t_mid, stage, a_mid, uk, k3);
    axpy(b, -tau, k3, stage);
    const FourierField& a_left = forward(2 * kk);
    field.adjoint_rhs(t_left, stage, a_left, uk, k4);

    auto bs = b.data();
    {
      auto s1 = k1.data();
      auto s2 = k2.data();
      auto s3 = k3.data();
      auto s4 = k4.data();
      const double w = -tau / 6.0;
      for (std::size_t i = 0; i < bs.size(); ++i) bs[i] += w * (s1[i] + 2.0 * s2[i] + 2.0 * s3[i] + s4[i]);
    }
    detail::check_divergence(b, t_left, "adjoint solve");

    // Cubic Hermite midpoint: (y0 + y1)/2 + τ/8 (y0' - y1').
    field.adjoint_rhs(t_left, b, a_left, uk, slope_left);
    AdjointField mid(n_modes);
    {
      auto ms = mid.data();
      auto rs = b_right.data();
      auto f0 = slope_left.data();
      auto f1 = k1.data();
      for (std::size_t i = 0; i < ms.size(); ++i) ms[i] = 0.5 * (bs[i] + rs[i]) + 0.125 * tau * (f0[i] - f1[i]);
    }
    observer(2 * kk + 1, a_mid, mid);
    observer(2 * kk, a_left, b);
  }
}

Trajectory collect(const Trajectory& traj, const AdjointField& terminal, const ControlSignal& u,
                   const ModelSpec& model) {
  if (terminal.n_modes() != traj.n_modes()) throw std::invalid_argument("integrate_backward: mode count mismatch");
  std::vector<FourierField> snaps(traj.size());
  sweep(
      traj.grid(), terminal, [&](std::size_t h) -> const FourierField& { return traj.at_half(h); }, u, model,
      [&](std::size_t h, const FourierField&, const AdjointField& zeta) { snaps[h] = zeta; });
  return Trajectory(traj.grid(), std::move(snaps));
}

}  // namespace

AdjointField terminal_adjoint(const FourierField& mu_T, const ModelSpec& model) {
  return model.cost->terminal_adjoint(mu_T);
}

AdjointField rhs_adjoint(double t, const AdjointField& b, const FourierField& a, const ControlVector& u,
                         const ModelSpec& model) {
  if (!model.admissible.contains(u)) throw ConstraintError("rhs_adjoint: control outside the admissible set");
  AdjointField out(b.n_modes());
  model.field->adjoint_rhs(t, b, a, u, out);
  return out;
}

Trajectory integrate_backward(const Trajectory& traj, const ControlSignal& u, const ModelSpec& model) {
  return collect(traj, terminal_adjoint(traj.terminal(), model), u, model);
}

Trajectory integrate_backward(const Trajectory& traj, const AdjointField& terminal, const ControlSignal& u,
                              const ModelSpec& model) {
  return collect(traj, terminal, u, model);
}

void sweep_backward(const Trajectory& traj, const ControlSignal& u, const ModelSpec& model,
                    const BackwardObserver& observer) {
  sweep(
      traj.grid(), terminal_adjoint(traj.terminal(), model),
      [&](std::size_t h) -> const FourierField& { return traj.at_half(h); }, u, model, observer);
}

void sweep_backward(const CheckpointedTrajectory& traj, const ControlSignal& u, const ModelSpec& model,
                    const BackwardObserver& observer) {
  std::size_t loaded = traj.windows();
  std::vector<FourierField> states;
  // Returns a copy: one backward step may straddle two windows.
  auto forward = [&](std::size_t h) -> FourierField {
    // Backward access is monotone, so each window is rebuilt once.
    std::size_t w = h / (2 * traj.stride());
    if (w >= traj.windows()) w = traj.windows() - 1;
    if (w != loaded) {
      states = traj.window(w);
      loaded = w;
    }
    return states.at(h - traj.window_begin(w));
  };
  sweep(traj.grid(), terminal_adjoint(traj.terminal(), model), forward, u, model, observer);
}

}  // namespace mfpmp
