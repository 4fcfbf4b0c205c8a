#include <cmath>

#include "doctest.h"
#include "mfpmp/adjoint.hpp"
#include "mfpmp/forward.hpp"
#include "mfpmp/optimizer.hpp"
#include "oracles.hpp"

using namespace mfpmp;
using oracle::pi;

namespace {

const double kSqrt2 = std::sqrt(2.0);

FourierField uniform(int n_modes) {
  FourierField f(n_modes);
  f[0] = 1.0 / (2 * pi);
  return f;
}

ControlSignal wiggly(const TimeGrid& grid) {
  return ControlSignal::sample(grid, 2, [](double t) {
    return ControlVector{0.7 * std::sin(2.0 * t), 0.8 + 0.3 * std::cos(5.0 * t)};
  });
}

}  // namespace

TEST_SUITE("adjoint") {

TEST_CASE("terminal condition for a uniform state") {
  for (double x0 : {0.0, 1.0, pi}) {
    const ModelSpec model = make_kuramoto_model({0.0, x0, kSqrt2});
    const AdjointField b = terminal_adjoint(uniform(16), model);
    const cplx b1 = cplx{0, 1} * std::polar(1.0, -x0) / (4 * pi);
    CHECK(std::abs(b[1] - b1) < 1e-16);
    CHECK(std::abs(b[-1] - std::conj(b1)) < 1e-16);
    CHECK(std::abs(b[0]) < 1e-17);
    for (double x : {0.3, 2.2}) CHECK(std::abs(oracle::series(b, x) + std::sin(x - x0) / (2 * pi)) < 1e-16);

    const AdjointField shifted = terminal_adjoint(uniform(16), make_kuramoto_model({0.0, x0 + pi, kSqrt2}));
    CHECK(oracle::max_diff(shifted, cplx{-1.0} * b) < 1e-16);
  }
}

TEST_CASE("terminal condition mean mode") {
  const double x0 = 0.7;
  FourierField mu(16);
  mu[1] = {0.02, 0.05};
  mu[-1] = std::conj(mu[1]);
  const AdjointField b = terminal_adjoint(mu, make_kuramoto_model({0.0, x0, kSqrt2}));
  const cplx expected = cplx{0, 0.5} * (mu[-1] * std::polar(1.0, -x0) - mu[1] * std::polar(1.0, x0));
  CHECK(std::abs(b[0] - expected) < 1e-17);
  CHECK(std::abs(b[0].imag()) < 1e-17);
}

TEST_CASE("adjoint rhs examples") {
  const ModelSpec model = make_kuramoto_model({0.5, 1.0, kSqrt2});
  const FourierField a = oracle::random_density(32, 10, 1);
  const AdjointField b = oracle::random_field(32, 10, 2, 0.1);
  const AdjointField rot = rhs_adjoint(0.0, b, a, {0.9, 0.0}, model);
  for (int n = -16; n <= 16; ++n) CHECK(std::abs(rot.at(n) - cplx{0, -n * 0.9} * b.at(n)) < 1e-16);
  CHECK(rot[0] == cplx{});
  CHECK(rhs_adjoint(0.0, AdjointField(32), a, {0.4, 1.0}, model).max_abs() == 0.0);
  CHECK(rhs_adjoint(0.0, b, a, {0.4, 1.0}, model).hermitian_defect() < 1e-17);
  // stretch and nonlocal sources cancel in the mean, as translation invariance requires
  const AdjointField full = rhs_adjoint(0.0, b, a, {0.4, 1.0}, model);
  CHECK(std::abs(full[0]) < 1e-17);
  CHECK(std::abs(full[1]) > 1e-4);
}

TEST_CASE("adjoint mean is the translation sensitivity") {
  const TimeGrid grid(2.0, 1e-2);
  const ModelSpec model = make_kuramoto_model({0.6, 1.3, kSqrt2});
  const ControlSignal u = wiggly(grid);
  const FourierField rho0 = oracle::random_density(32, 6, 10);
  const Trajectory co = integrate_backward(integrate_forward(rho0, u, model, grid), u, model);
  for (const auto& z : co.snapshots()) CHECK(std::abs(z[0] - co.terminal()[0]) < 1e-15);
  const double eps = 1e-5;
  const double fd = (evaluate_cost(translate(rho0, eps), u, model, grid) -
                     evaluate_cost(translate(rho0, -eps), u, model, grid)) /
                    (2 * eps);
  CHECK(fd == doctest::Approx(-2 * pi * co.initial()[0].real()).epsilon(1e-7));
}

TEST_CASE("backward transport matches characteristics") {
  const TimeGrid grid(1.0, 1e-3);
  const double c = 1.1, x0 = 2.0;
  const ModelSpec model = make_kuramoto_model({0.0, x0, kSqrt2});
  const ControlSignal u = ControlSignal::sample(grid, 2, [&](double) { return ControlVector{c, 0.0}; });
  const Trajectory traj = integrate_forward(uniform(32), u, model, grid);
  const Trajectory co = integrate_backward(traj, u, model);
  double err = 0.0;
  for (std::size_t k = 0; k <= grid.steps(); ++k) {
    const double t = grid.time_at_step(k);
    FourierField exact(32);
    exact[1] = cplx{0, 1} * std::polar(1.0, -x0 + c * (1.0 - t)) / (4 * pi);
    exact[-1] = std::conj(exact[1]);
    err = std::max(err, oracle::max_diff(co.at_step(k), exact));
  }
  CHECK(err < 1e-8);
}

TEST_CASE("zero terminal data stays zero") {
  const TimeGrid grid(1.0, 1e-2);
  const ModelSpec model = make_kuramoto_model({0.3, pi, kSqrt2});
  const ControlSignal u = wiggly(grid);
  const Trajectory traj = integrate_forward(oracle::random_density(32, 8, 3), u, model, grid);
  const Trajectory co = integrate_backward(traj, AdjointField(32), u, model);
  for (const auto& s : co.snapshots()) CHECK(s.max_abs() == 0.0);
}

TEST_CASE("superposition in the terminal data") {
  const TimeGrid grid(2.0, 1e-2);
  const ModelSpec model = make_kuramoto_model({0.4, pi, kSqrt2});
  const ControlSignal u = wiggly(grid);
  const Trajectory traj = integrate_forward(oracle::random_density(32, 10, 4), u, model, grid);
  const AdjointField b1 = oracle::random_field(32, 10, 5, 0.1);
  const AdjointField b2 = oracle::random_field(32, 10, 6, 0.1);
  const Trajectory z1 = integrate_backward(traj, b1, u, model);
  const Trajectory z2 = integrate_backward(traj, b2, u, model);
  const Trajectory z = integrate_backward(traj, b1 - cplx{2.5} * b2, u, model);
  double err = 0.0, defect = 0.0;
  for (std::size_t h = 0; h < z.size(); ++h) {
    err = std::max(err, oracle::max_diff(z.at_half(h), z1.at_half(h) - cplx{2.5} * z2.at_half(h)));
    defect = std::max(defect, z.at_half(h).hermitian_defect());
  }
  CHECK(err < 1e-10);
  CHECK(defect < 1e-15);
}

TEST_CASE("adjoint gives the sensitivity to an initial displacement") {
  // ρ0 pushed forward by x ↦ x + εw(x); dI/dε = -∫ w ζ_0 dx.
  const TimeGrid grid(2.0, 5e-3);
  const ModelSpec model = make_kuramoto_model({0.6, 1.3, kSqrt2});
  const ControlSignal u = wiggly(grid);
  const FourierField rho0 = oracle::random_density(32, 6, 7);
  const Trajectory traj = integrate_forward(rho0, u, model, grid);
  const Trajectory co = integrate_backward(traj, u, model);

  FourierField w(32);
  w[0] = 0.3;
  w[1] = {0.2, -0.1};
  w[-1] = std::conj(w[1]);
  const FourierField drho = cplx{-1.0} * derivative(multiply(w, rho0));
  const double eps = 1e-5;
  const double fd = (evaluate_cost(rho0 + cplx{eps} * drho, u, model, grid) -
                     evaluate_cost(rho0 - cplx{eps} * drho, u, model, grid)) /
                    (2 * eps);
  const double predicted = -pairing(w, co.initial());
  CHECK(std::abs(predicted) > 1e-3);
  CHECK(fd == doctest::Approx(predicted).epsilon(1e-6));
}

TEST_CASE("checkpointed backward sweep is bit-identical") {
  const TimeGrid grid(1.0, 1e-2);
  const ModelSpec model = make_kuramoto_model({0.3, pi, kSqrt2});
  const ControlSignal u = wiggly(grid);
  const FourierField rho0 = oracle::random_density(32, 8, 8);
  const Trajectory traj = integrate_forward(rho0, u, model, grid);
  std::vector<FourierField> full(traj.size()), part(traj.size());
  sweep_backward(traj, u, model, [&](std::size_t h, const FourierField&, const AdjointField& z) { full[h] = z; });
  const CheckpointedTrajectory cp = integrate_forward_checkpointed(rho0, u, model, grid, 13);
  sweep_backward(cp, u, model, [&](std::size_t h, const FourierField& mu, const AdjointField& z) {
    part[h] = z;
    CHECK(mu == traj.at_half(h));
  });
  for (std::size_t h = 0; h < full.size(); ++h) CHECK(full[h] == part[h]);
  const Trajectory co = integrate_backward(traj, u, model);
  for (std::size_t h = 0; h < full.size(); ++h) CHECK(full[h] == co.at_half(h));
}

TEST_CASE("generic adjoint route agrees with the printed system") {
  const TimeGrid grid(1.0, 1e-2);
  const KuramotoParams params{0.5, 2.0, kSqrt2};
  const ModelSpec fast = make_kuramoto_model(params);
  ModelSpec generic = fast;
  generic.field = std::make_shared<ConvolutionField>(KuramotoField(params.alpha).as_convolution_field(32));
  const ControlSignal u = wiggly(grid);
  const FourierField rho0 = oracle::random_density(32, 8, 9);
  const Trajectory t1 = integrate_forward(rho0, u, fast, grid);
  const Trajectory t2 = integrate_forward(rho0, u, generic, grid);
  CHECK(oracle::max_diff(t1.terminal(), t2.terminal()) < 1e-13);
  const Trajectory c1 = integrate_backward(t1, u, fast);
  const Trajectory c2 = integrate_backward(t2, u, generic);
  CHECK(oracle::max_diff(c1.initial(), c2.initial()) < 1e-12);
}

}  // TEST_SUITE
