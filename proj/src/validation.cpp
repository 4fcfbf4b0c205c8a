#include "mfpmp/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mfpmp/adjoint.hpp"
#include "mfpmp/errors.hpp"
#include "mfpmp/forward.hpp"
#include "mfpmp/optimizer.hpp"

namespace mfpmp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Mode {
  int n;
  cplx c;
};

std::vector<Mode> nonzero_modes(const FourierField& rho) {
  std::vector<Mode> modes;
  for (int n = -rho.max_index(); n <= rho.max_index(); ++n) {
    if (n != 0 && rho[n] != cplx{}) modes.push_back({n, rho[n]});
  }
  return modes;
}

// ∫_0^x ρ and ρ(x) from the coefficients.
void cdf_and_density(const std::vector<Mode>& modes, double a0, double x, double& cdf, double& dens) {
  cplx acc_cdf{a0 * x, 0.0};
  cplx acc_dens{a0, 0.0};
  for (const Mode& m : modes) {
    const cplx e = std::polar(1.0, m.n * x);
    acc_dens += m.c * e;
    acc_cdf += m.c * (e - 1.0) / cplx{0.0, static_cast<double>(m.n)};
  }
  cdf = acc_cdf.real();
  dens = acc_dens.real();
}

}  // namespace

ParticleEnsemble stratified_sample(const FourierField& rho0, std::size_t n) {
  if (n == 0) throw std::invalid_argument("stratified_sample: particle count must be positive");
  require_normalized(rho0);
  const RealGridField grid_values = to_physical(rho0, 4 * static_cast<std::size_t>(rho0.size()));
  if (*std::min_element(grid_values.values.begin(), grid_values.values.end()) <= 0.0) {
    throw std::invalid_argument("stratified_sample: density must be strictly positive");
  }

  const std::vector<Mode> modes = nonzero_modes(rho0);
  const double a0 = rho0[0].real();
  ParticleEnsemble ens;
  ens.phases.resize(n);
  double lo = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    double a = lo;
    double b = kTwoPi;
    double x = std::clamp(kTwoPi * q, a, b);
    for (int it = 0; it < 100; ++it) {
      double f = 0.0;
      double dens = 0.0;
      cdf_and_density(modes, a0, x, f, dens);
      f -= q;
      if (f > 0.0) b = x;
      else a = x;
      if (std::abs(f) <= 1e-15 || b - a <= 4.0 * std::numeric_limits<double>::epsilon() * kTwoPi) break;
      double next = x - f / dens;
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      x = next;
    }
    ens.phases[i] = x;
    lo = x;
  }
  return ens;
}

ParticleEnsemble simulate_particles(const ParticleEnsemble& initial, const ControlSignal& u, double alpha,
                                    const TimeGrid& grid, const ParticleObserver& observer) {
  if (initial.size() == 0) throw std::invalid_argument("simulate_particles: empty ensemble");
  if (!(u.grid() == grid) || u.dim() != 2) throw std::invalid_argument("simulate_particles: control does not match grid");
  for (double x : initial.phases) {
    if (!std::isfinite(x)) throw std::invalid_argument("simulate_particles: non-finite phase");
  }

  const std::size_t n = initial.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double ca = std::cos(alpha);
  const double sa = std::sin(alpha);
  std::vector<double> c(n), s(n);

  auto velocity = [&](const std::vector<double>& x, double u1, double u2, std::vector<double>& out) {
    double zr = 0.0;
    double zi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = std::cos(x[i]);
      s[i] = std::sin(x[i]);
      zr += c[i];
      zi += s[i];
    }
    zr *= inv_n;
    zi *= inv_n;
    // Im(e^{-i(x+α)} Z)
    for (std::size_t i = 0; i < n; ++i) {
      const double cxa = c[i] * ca - s[i] * sa;
      const double sxa = s[i] * ca + c[i] * sa;
      out[i] = u1 + u2 * (cxa * zi - sxa * zr);
    }
  };

  ParticleEnsemble state = initial;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  const double tau = grid.tau();
  if (observer) observer(0, state);
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double u1 = u.at(k)[0];
    const double u2 = u.at(k)[1];
    auto& x = state.phases;
    velocity(x, u1, u2, k1);
    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * tau * k1[i];
    velocity(stage, u1, u2, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * tau * k2[i];
    velocity(stage, u1, u2, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + tau * k3[i];
    velocity(stage, u1, u2, k4);
    const double bound = kDivergenceThreshold * tau;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = tau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(dx) || std::abs(dx) > bound) {
        throw DivergenceError("particle solve diverged at t = " + std::to_string(grid.time_at_step(k)));
      }
      x[i] += dx;
    }
    if (observer) observer(k + 1, state);
  }
  return state;
}

cplx empirical_moment(const ParticleEnsemble& ensemble, int n) {
  if (ensemble.size() == 0) return {};
  cplx sum{};
  for (double x : ensemble.phases) sum += std::polar(1.0, n * x);
  return sum / static_cast<double>(ensemble.size());
}

double particle_sync_cost(const ParticleEnsemble& ensemble, double x0) {
  double sum = 0.0;
  for (double x : ensemble.phases) sum += 1.0 - std::cos(x - x0);
  return sum / static_cast<double>(ensemble.size());
}

ParticleReport meanfield_vs_particles(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                                      const TimeGrid& grid, std::size_t n_particles) {
  const auto* field = dynamic_cast<const KuramotoField*>(model.field.get());
  const auto* cost = dynamic_cast<const SyncCost*>(model.cost.get());
  if (field == nullptr || cost == nullptr) {
    throw std::invalid_argument("meanfield_vs_particles: requires the Kuramoto field with the synchronization cost");
  }

  const Trajectory traj = integrate_forward(rho0, u, model, grid);
  const std::size_t checks[] = {0, grid.nearest_step(0.5 * grid.horizon()), grid.steps()};

  ParticleReport report;
  report.particles = n_particles;
  auto observe = [&](std::size_t k, const ParticleEnsemble& ens) {
    if (std::find(std::begin(checks), std::end(checks), k) == std::end(checks)) return;
    const FourierField& a = traj.at_step(k);
    for (int n : {1, 2}) {
      const double gap = std::abs(empirical_moment(ens, n) - kTwoPi * std::conj(a.at(n)));
      report.moment_discrepancy = std::max(report.moment_discrepancy, gap);
    }
  };
  const ParticleEnsemble final_state =
      simulate_particles(stratified_sample(rho0, n_particles), u, field->alpha(), grid, observe);

  report.meanfield_cost = cost->value(traj.terminal());
  report.particle_cost = particle_sync_cost(final_state, cost->x0());
  report.cost_gap = std::abs(report.meanfield_cost - report.particle_cost);
  return report;
}

SlopeReport increment_slope_check(const FourierField& rho0, const ControlSignal& u, const ControlSignal& ubar,
                                  const ModelSpec& model, const TimeGrid& grid, const std::vector<double>& lambdas) {
  for (double lam : lambdas) {
    if (!(lam > 0.0 && lam <= 0.1)) throw std::invalid_argument("increment_slope_check: λ must lie in (0, 0.1]");
  }
  validate_control(u, model, grid);
  validate_control(ubar, model, grid);

  const Linearization lin = linearize(rho0, u, model, grid);
  SlopeReport r;
  r.lambdas = lambdas;
  r.directional = non_extremality(u, ubar, lin.switching);

  std::vector<double> log_l, log_res;
  for (double lam : lambdas) {
    ControlSignal v = u.interpolate(ubar, lam);
    for (std::size_t k = 0; k < v.intervals(); ++k) model.admissible.project(v.at(k));
    const double actual = evaluate_cost(rho0, v, model, grid) - lin.cost;
    const double predicted = -lam * r.directional;
    r.actual.push_back(actual);
    r.predicted.push_back(predicted);
    const double ratio = predicted != 0.0 ? actual / predicted : kNaN;
    r.ratio.push_back(ratio);
    if (std::isfinite(ratio)) r.max_ratio_deviation = std::max(r.max_ratio_deviation, std::abs(ratio - 1.0));
    const double res = std::abs(actual - predicted);
    if (res > 0.0) {
      log_l.push_back(std::log(lam));
      log_res.push_back(std::log(res));
    }
  }

  if (log_l.size() >= 2) {
    const double m = static_cast<double>(log_l.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_l.size(); ++i) {
      sx += log_l[i];
      sy += log_res[i];
      sxx += log_l[i] * log_l[i];
      sxy += log_l[i] * log_res[i];
    }
    r.residual_order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  } else {
    r.residual_order = kNaN;
  }
  if (r.directional == 0.0) r.max_ratio_deviation = kNaN;
  return r;
}

LocalAdjointReport local_adjoint_check(const ControlSignal& u, const FourierField& rho0, double x0,
                                       const TimeGrid& grid) {
  if (!(u.grid() == grid) || u.dim() != 2) throw std::invalid_argument("local_adjoint_check: control does not match grid");
  double umax = 0.0;
  for (std::size_t k = 0; k < u.intervals(); ++k) {
    if (u.at(k)[1] != 0.0) throw std::invalid_argument("local_adjoint_check: u₂ must vanish identically");
    umax = std::max(umax, std::abs(u.at(k)[0]));
  }
  const ModelSpec model =
      make_kuramoto_model({0.0, x0, std::max(umax, 1.0)}, AdmissibleSet::box({-umax, 0.0}, {umax, 0.0}));

  const Trajectory traj = integrate_forward(rho0, u, model, grid);
  const Trajectory cotraj = integrate_backward(traj, u, model);

  const std::size_t steps = grid.steps();
  std::vector<double> tail(steps + 1, 0.0);  // s(t_k) = ∫_{t_k}^T u₁
  for (std::size_t k = steps; k-- > 0;) tail[k] = tail[k + 1] + grid.tau() * u.at(k)[0];

  const std::size_t points = 2 * static_cast<std::size_t>(rho0.size());
  LocalAdjointReport r;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double shift = tail[0] - tail[k];  // ∫_0^{t_k} u₁
    const RealGridField rho_t = to_physical(translate(rho0, shift), points);
    const RealGridField zeta = to_physical(cotraj.at_step(k), points);
    for (std::size_t j = 0; j < points; ++j) {
      const double x = RealGridField::node(j, points);
      const double ref = -std::sin(x + tail[k] - x0) * rho_t.values[j];
      r.max_error = std::max(r.max_error, std::abs(zeta.values[j] - ref));
      r.max_reference = std::max(r.max_reference, std::abs(ref));
    }
    ++r.times_checked;
  }
  return r;
}

void to_json(nlohmann::json& j, const ParticleReport& r) {
  j = nlohmann::json{{"particles", r.particles},
                     {"moment_discrepancy", r.moment_discrepancy},
                     {"meanfield_cost", r.meanfield_cost},
                     {"particle_cost", r.particle_cost},
                     {"cost_gap", r.cost_gap}};
}

void to_json(nlohmann::json& j, const SlopeReport& r) {
  j = nlohmann::json{{"lambdas", r.lambdas},
                     {"actual", r.actual},
                     {"predicted", r.predicted},
                     {"ratio", r.ratio},
                     {"directional", r.directional},
                     {"residual_order", r.residual_order},
                     {"max_ratio_deviation", r.max_ratio_deviation}};
}

void to_json(nlohmann::json& j, const LocalAdjointReport& r) {
  j = nlohmann::json{
      {"max_error", r.max_error}, {"max_reference", r.max_reference}, {"times_checked", r.times_checked}};
}

}  // namespace mfpmp
