// One PASS/FAIL line per acceptance criterion. Set MFPMP_SLOW=1 to add the
// full-resolution run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfpmp/adjoint.hpp"
#include "mfpmp/config.hpp"
#include "mfpmp/forward.hpp"
#include "mfpmp/optimizer.hpp"
#include "mfpmp/runner.hpp"
#include "mfpmp/validation.hpp"
#include "oracles.hpp"

using namespace mfpmp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const double kSqrt2 = std::sqrt(2.0);
int failures = 0;

void report(const char* id, bool pass, const std::string& what) {
  if (!pass) ++failures;
  std::printf("%s  %-3s %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CsvRow {
  double k, cost, e, lambda, j, accepted;
};

std::vector<CsvRow> read_convergence(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    CsvRow r{};
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &r.k, &r.cost, &r.e, &r.lambda, &r.j, &r.accepted) == 6) {
      rows.push_back(r);
    }
  }
  return rows;
}

// Largest violation of cost monotonicity and of the accepted Armijo inequality.
std::pair<double, double> armijo_violation(const std::vector<CsvRow>& rows, double c) {
  double mono = 0.0, armijo = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    mono = std::max(mono, rows[i].accepted - rows[i].cost);
    if (i + 1 < rows.size()) mono = std::max(mono, rows[i + 1].cost - rows[i].cost);
    armijo = std::max(armijo, c * rows[i].lambda * rows[i].e - (rows[i].cost - rows[i].accepted));
  }
  return {mono, armijo};
}

FourierField mass_checked_terminal(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                                   const TimeGrid& grid, double& worst) {
  const double a0 = 1.0 / kTwoPi;
  return integrate_forward_terminal(rho0, u, model, grid, [&](std::size_t, const FourierField& mu) {
    worst = std::max(worst, std::abs(mu.at(0) - cplx{a0}));
  });
}

ControlSignal resample(const ControlSignal& u, const TimeGrid& grid) {
  return ControlSignal::sample(grid, u.dim(), [&](double t) {
    const auto k = std::min(static_cast<std::size_t>(std::floor(t / u.grid().tau() + 1e-9)), u.intervals() - 1);
    const auto v = u.at(k);
    return ControlVector(v.begin(), v.end());
  });
}

ControlSignal read_control(const fs::path& p, const TimeGrid& grid) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  ControlSignal u(grid, 2);
  for (std::size_t k = 0; k < grid.steps() && std::getline(in, line); ++k) {
    double t, a, b;
    std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &a, &b);
    u.at(k)[0] = a;
    u.at(k)[1] = b;
  }
  return u;
}

}  // namespace

int main() {
  const fs::path root = fs::current_path() / "acceptance_out";
  fs::remove_all(root);

  // ---- 1: fig1 preset at desk resolution
  RunConfig fig1 = parse_config_json(json{{"preset", "fig1"}});
  fig1.command = Command::optimize;
  fig1.output_dir = (root / "fig1").string();
  const auto t0 = std::chrono::steady_clock::now();
  const RunOutcome run1 = run(fig1);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (run1.exit_code != 0) {
    report("1", false, "fig1 optimize aborted: " + run1.message);
    std::printf("%d criterion line(s) failed\n", failures);
    return 1;
  }
  const double initial_cost = run1.summary.at("initial_cost").get<double>();
  const double final_cost = run1.summary.at("final_cost").get<double>();
  report("1", std::abs(initial_cost - 1.0) <= 1e-2 && final_cost <= 2e-2 && seconds <= 300.0,
         fmt("fig1 N=256 tau=5e-3: I[u0]=%.6f (|.-1|<=1e-2), final I=%.4e (<=2e-2), %.1f s (<=300 s)", initial_cost,
             final_cost, seconds) +
             ", stop " + run1.summary.at("status").get<std::string>());

  const char* slow = std::getenv("MFPMP_SLOW");
  if (slow != nullptr && std::string(slow) == "1") {
    RunConfig full = parse_config_json(json{{"preset", "fig1-full"}});
    full.command = Command::optimize;
    full.output_dir = (root / "fig1_full").string();
    const RunOutcome rp = run(full);
    const double fc = rp.exit_code == 0 ? rp.summary.at("final_cost").get<double>() : NAN;
    report("1p", rp.exit_code == 0 && fc <= 1.2e-2,
           fmt("fig1-full N=2048 tau=1e-3: final I=%.4e (<=1.2e-2)", fc));
  } else {
    std::printf("SKIP  1p  fig1-full resolution (set MFPMP_SLOW=1)\n");
  }

  // ---- 2: monotonicity and accepted Armijo steps in every optimize run
  {
    RunConfig other = parse_config_json(json{{"preset", "fig1"}},
                                        {"grid.n_modes=64", R"(initial_control={"constant": [0.3, -0.4]})",
                                         "model.alpha=0.5", "descent.k_max=20"});
    other.command = Command::optimize;
    other.output_dir = (root / "alpha").string();
    const RunOutcome run2 = run(other);
    double mono = 0.0, armijo = 0.0;
    std::size_t records = 0;
    for (const auto& [dir, c] : {std::pair{root / "fig1", fig1.descent.c}, std::pair{root / "alpha", other.descent.c}}) {
      const auto rows = read_convergence(dir / "convergence.csv");
      records += rows.size();
      const auto [m, a] = armijo_violation(rows, c);
      mono = std::max(mono, m);
      armijo = std::max(armijo, a);
    }
    report("2", run2.exit_code == 0 && records > 0 && mono <= 0.0 && armijo <= 1e-12,
           fmt("%g iterations over 2 runs: max cost increase %.2e (<=0), max Armijo shortfall %.2e (<=1e-12)",
               static_cast<double>(records), mono, armijo));
  }

  const FourierField rho0 = fig1.initial_density();
  const ModelSpec model = fig1.model_spec();
  const TimeGrid grid = fig1.grid();
  const ControlSignal u0 = fig1.initial_control();
  const ControlSignal u_opt = read_control(root / "fig1" / "control_final.csv", grid);

  // ---- 3: mass conservation
  {
    double worst = 0.0;
    mass_checked_terminal(rho0, u0, model, grid, worst);
    mass_checked_terminal(rho0, u_opt, model, grid, worst);
    const TimeGrid fine(6.0, 1e-3);
    mass_checked_terminal(rho0, resample(u_opt, fine), model, fine, worst);
    report("3", worst < 1e-13, fmt("max |a0(t) - 1/(2pi)| = %.2e over 3 fig1 forward solves (<1e-13)", worst));
  }

  // ---- 4: rotation oracle, forward and adjoint
  {
    const TimeGrid g(6.0, 1e-3);
    const ControlSignal u = ControlSignal::sample(g, 2, [](double t) { return ControlVector{kSqrt2 * std::sin(2 * kPi * t / 3), 0.0}; });
    std::vector<double> shift(g.steps() + 1, 0.0);
    for (std::size_t k = 0; k < g.steps(); ++k) shift[k + 1] = shift[k] + g.tau() * u.at(k)[0];
    const Trajectory traj = integrate_forward(rho0, u, model, g);
    const Trajectory co = integrate_backward(traj, u, model);
    const AdjointField bT = terminal_adjoint(traj.terminal(), model);
    double fwd = 0.0, adj = 0.0;
    for (std::size_t k = 0; k <= g.steps(); ++k) {
      fwd = std::max(fwd, oracle::max_diff(traj.at_step(k), oracle::rotated(rho0, shift[k])));
      adj = std::max(adj, oracle::max_diff(co.at_step(k), oracle::rotated(bT, shift[k] - shift.back())));
    }
    report("4", fwd < 1e-8 && adj < 1e-8,
           fmt("u2=0, u1=sqrt2 sin(2pi t/3), tau=1e-3: forward %.2e, adjoint %.2e (<1e-8)", fwd, adj));
  }

  // ---- 5: local-case adjoint
  {
    const TimeGrid g(6.0, 1e-3);
    const ControlSignal c = ControlSignal::sample(g, 2, [](double) { return ControlVector{0.7, 0.0}; });
    const ControlSignal s =
        ControlSignal::sample(g, 2, [](double t) { return ControlVector{0.7 * std::sin(2 * kPi * t / 6.0), 0.0}; });
    const LocalAdjointReport rc = local_adjoint_check(c, rho0, fig1.model.x0, g);
    const LocalAdjointReport rs = local_adjoint_check(s, rho0, fig1.model.x0, g);
    report("5", rc.max_error < 1e-6 && rs.max_error < 1e-6,
           fmt("N=256 tau=1e-3: constant u1 %.2e, sinusoidal u1 %.2e (<1e-6)", rc.max_error, rs.max_error));
  }

  // ---- 6: increment-formula slope, three control pairs
  {
    const auto target_of = [&](const ControlSignal& u) {
      return target_control(linearize(rho0, u, model, grid).switching, model.admissible, u);
    };
    // Random smooth feasible controls: three harmonics, |u| <= 1.2.
    const auto random_smooth = [&](unsigned seed) {
      std::mt19937 gen(seed);
      std::uniform_real_distribution<double> uni(-1.0, 1.0);
      std::vector<double> c(12);
      for (double& v : c) v = uni(gen);
      return ControlSignal::sample(grid, 2, [c](double t) {
        ControlVector u{0.0, 0.0};
        for (int m = 1; m <= 3; ++m) {
          const double w = 2 * kPi * m * t / 6.0;
          for (int j = 0; j < 2; ++j) u[j] += c[4 * (m - 1) + 2 * j] * std::cos(w) + c[4 * (m - 1) + 2 * j + 1] * std::sin(w);
        }
        const double r = std::hypot(u[0], u[1]);
        if (r > 1.2) u[0] *= 1.2 / r, u[1] *= 1.2 / r;
        return u;
      });
    };
    const ControlSignal ua = random_smooth(1), ub = random_smooth(2);
    struct Pair {
      const char* name;
      ControlSignal u, ubar;
    };
    const std::vector<Pair> pairs{{"fig1 u0/target", u0, target_of(u0)},
                                  {"random#1/target", ua, target_of(ua)},
                                  {"random#2/target", ub, target_of(ub)}};
    bool ok = true;
    std::string detail;
    for (const auto& p : pairs) {
      const SlopeReport r = increment_slope_check(rho0, p.u, p.ubar, model, grid, kDefaultSlopeLambdas);
      ok = ok && r.max_ratio_deviation <= 0.05 && r.residual_order >= 1.8;
      detail += std::string(" [") + p.name + ": " +
                fmt("|ratio-1|<=%.2e order=%.2f]", r.max_ratio_deviation, r.residual_order);
    }
    report("6", ok, "lambda in {1e-3..8e-3}, need |ratio-1|<=0.05 and order>=1.8:" + detail);
  }

  // ---- 7: particle oracle
  {
    std::vector<double> disc;
    double gap = NAN;
    for (std::size_t n : {1000u, 10000u, 100000u}) {
      const ParticleReport r = meanfield_vs_particles(rho0, u_opt, model, grid, n);
      disc.push_back(r.moment_discrepancy);
      if (n == 10000) gap = r.cost_gap;
    }
    const bool monotone = disc[1] < disc[0] && disc[2] < disc[1];
    report("7", gap <= 0.02 && monotone,
           fmt("optimized control: cost gap %.2e at N=1e4 (<=0.02); moment discrepancy %.2e, %.2e, %.2e",
               gap, disc[0], disc[1], disc[2]) +
               (monotone ? " (decreasing)" : " (not strictly decreasing)"));
  }

  // ---- 8: RK4 order
  {
    FourierField f(64);
    f[0] = 1.0 / kTwoPi;
    for (int n = 1; n <= 16; ++n) {
      f[n] = 0.01 * std::polar(1.0, 0.3 * n);
      f[-n] = std::conj(f[n]);
    }
    std::vector<double> taus{4e-3, 2e-3, 1e-3}, errs;
    for (double tau : taus) {
      const TimeGrid g(1.0, tau);
      const ControlSignal u = ControlSignal::sample(g, 2, [](double) { return ControlVector{kSqrt2, 0.0}; });
      errs.push_back(oracle::max_diff(integrate_forward_terminal(f, u, model, g), oracle::rotated(f, kSqrt2)));
    }
    const double order = oracle::fitted_order(taus, errs);
    report("8", order >= 3.7,
           fmt("rotation errors %.2e, %.2e, %.2e: fitted order %.3f (>=3.7)", errs[0], errs[1], errs[2], order));
  }

  // ---- 9: property suites
  {
    // Replays the descent iterates and checks every forward and adjoint state.
    double min_e = 1e300, defect = 0.0, superposition = 0.0;
    ControlSignal u = u0;
    for (std::size_t k = 0; k < 50; ++k) {
      const Trajectory traj = integrate_forward(rho0, u, model, grid);
      const Trajectory co = integrate_backward(traj, u, model);
      for (std::size_t h = 0; h < traj.size(); ++h) {
        defect = std::max({defect, traj.at_half(h).hermitian_defect(), co.at_half(h).hermitian_defect()});
      }
      const SwitchingFunction d = switching_function(traj, co, model);
      const ControlSignal ubar = target_control(d, model.admissible, u);
      const double e = non_extremality(u, ubar, d);
      min_e = std::min(min_e, e);
      if (k == 0) {
        const AdjointField b1 = oracle::random_field(256, 20, 1, 0.05);
        const AdjointField b2 = oracle::random_field(256, 20, 2, 0.05);
        const Trajectory z1 = integrate_backward(traj, b1, u, model);
        const Trajectory z2 = integrate_backward(traj, b2, u, model);
        const Trajectory z = integrate_backward(traj, b1 + cplx{-1.7} * b2, u, model);
        for (std::size_t h = 0; h < z.size(); ++h) {
          superposition = std::max(superposition, oracle::max_diff(z.at_half(h), z1.at_half(h) + cplx{-1.7} * z2.at_half(h)));
        }
      }
      if (e < fig1.descent.eps_tol) break;
      const BacktrackResult step = backtracking_step(u, ubar, e, model.cost->value(traj.terminal()), fig1.descent,
                                                     model.admissible, [&](const ControlSignal& v) {
                                                       return evaluate_cost(rho0, v, model, grid);
                                                     });
      if (step.failed) break;
      u = u.interpolate(ubar, step.lambda);
      for (std::size_t i = 0; i < u.intervals(); ++i) model.admissible.project(u.at(i));
      if (step.lambda < fig1.descent.lambda_tol) break;
    }
    const bool replay_same = u == u_opt;

    RunConfig again = fig1;
    again.output_dir = (root / "fig1_repeat").string();
    const RunOutcome rr = run(again);
    json a = json::parse(slurp(root / "fig1" / "summary.json"));
    json b = json::parse(slurp(root / "fig1_repeat" / "summary.json"));
    a.erase("timing");
    b.erase("timing");
    const bool deterministic = rr.exit_code == 0 && a == b &&
                               slurp(root / "fig1" / "convergence.csv") == slurp(root / "fig1_repeat" / "convergence.csv");

    report("9", min_e >= -1e-12 && superposition <= 1e-10 && defect <= 1e-14 && deterministic && replay_same,
           fmt("min E %.2e (>=-1e-12), superposition %.2e (<=1e-10), Hermitian defect %.2e (<=1e-14)", min_e,
               superposition, defect) +
               ", summary.json " + (deterministic ? "identical" : "DIFFERS") + " across runs" +
               (replay_same ? "" : ", replayed iterates differ from the runner"));
  }

  std::printf("%d criterion line(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
