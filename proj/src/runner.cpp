#include "mfpmp/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <system_error>

#include "mfpmp/adjoint.hpp"
#include "mfpmp/forward.hpp"
#include "mfpmp/optimizer.hpp"
#include "mfpmp/validation.hpp"

namespace mfpmp {

using nlohmann::json;

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config:
    case ErrorCategory::constraint: return 2;
    case ErrorCategory::divergence:
    case ErrorCategory::symmetry: return 3;
    case ErrorCategory::line_search: return 4;
    case ErrorCategory::validation: return 5;
    case ErrorCategory::io: return 1;
  }
  return 1;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point start) { return std::chrono::duration<double>(clock::now() - start).count(); }

template <class Writer>
std::string render(Writer&& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::set<std::size_t> snapshot_steps(const RunConfig& cfg, const TimeGrid& grid) {
  std::set<std::size_t> steps;
  for (double t : cfg.snapshot_times) steps.insert(grid.nearest_step(t));
  return steps;
}

struct ForwardPass {
  double terminal_cost = 0.0;
  double density_min = 0.0;
  double mass_drift = 0.0;
  double hermitian_defect = 0.0;
  std::vector<FieldSnapshot> snapshots;
};

ForwardPass forward_pass(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                         const TimeGrid& grid, const std::set<std::size_t>& steps) {
  ForwardPass pass;
  pass.density_min = std::numeric_limits<double>::infinity();
  const cplx mass0 = rho0[0];
  const FourierField terminal = integrate_forward_terminal(rho0, u, model, grid, [&](std::size_t h, const FourierField& mu) {
    pass.hermitian_defect = std::max(pass.hermitian_defect, mu.hermitian_defect());
    pass.mass_drift = std::max(pass.mass_drift, std::abs(mu[0] - mass0));
    pass.density_min = std::min(pass.density_min, density_min(mu));
    if (h % 2 == 0 && steps.contains(h / 2)) pass.snapshots.push_back({grid.time_at_half(h), mu});
  });
  pass.terminal_cost = model.cost->value(terminal);
  return pass;
}

struct AdjointPass {
  SwitchingFunction switching;
  double hermitian_defect = 0.0;
  std::vector<FieldSnapshot> snapshots;
};

AdjointPass adjoint_pass(const FourierField& rho0, const ControlSignal& u, const ModelSpec& model,
                         const TimeGrid& grid, std::size_t stride, const std::set<std::size_t>& steps) {
  AdjointPass pass{SwitchingFunction(grid, model.control_dim()), 0.0, {}};
  auto observe = [&](std::size_t h, const FourierField& mu, const AdjointField& zeta) {
    model.field->switching(grid.time_at_half(h), mu, zeta, pass.switching.at_half(h));
    pass.hermitian_defect = std::max(pass.hermitian_defect, zeta.hermitian_defect());
    if (h % 2 == 0 && steps.contains(h / 2)) pass.snapshots.push_back({grid.time_at_half(h), zeta});
  };
  if (stride == 0) {
    sweep_backward(integrate_forward(rho0, u, model, grid), u, model, observe);
  } else {
    sweep_backward(integrate_forward_checkpointed(rho0, u, model, grid, stride), u, model, observe);
  }
  std::reverse(pass.snapshots.begin(), pass.snapshots.end());
  return pass;
}

json forward_summary(const ForwardPass& f) {
  return json{{"terminal_cost", f.terminal_cost},
              {"density_min", f.density_min},
              {"mass_drift", f.mass_drift},
              {"max_hermitian_defect", f.hermitian_defect}};
}

class Session {
 public:
  explicit Session(const RunConfig& cfg)
      : cfg_(cfg),
        dir_(cfg.output_dir),
        grid_(cfg.grid()),
        model_(cfg.model_spec()),
        rho0_(cfg.initial_density()),
        u0_(cfg.initial_control()),
        steps_(snapshot_steps(cfg, grid_)) {}

  RunOutcome execute() {
    const auto start = clock::now();
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    std::filesystem::remove(dir_ / "error.json", ec);
    write("config.json", dump(to_json(cfg_)));

    summary_ = json{{"command", to_string(cfg_.command)},
                    {"grid", {{"T", grid_.horizon()}, {"tau", grid_.tau()}, {"n_modes", rho0_.n_modes()}}}};
    RunOutcome outcome;
    switch (cfg_.command) {
      case Command::solve_forward: solve_forward(); break;
      case Command::solve_adjoint: solve_adjoint(); break;
      case Command::optimize: outcome = optimize_command(); break;
      case Command::validate: outcome = validate_command(); break;
    }
    timing_["total_seconds"] = seconds_since(start);
    summary_["timing"] = timing_;
    write("summary.json", dump(summary_));
    outcome.summary = summary_;
    return outcome;
  }

 private:
  void write(const std::string& name, std::string_view content) { write_file_atomic(dir_ / name, content); }

  void write_density(const ForwardPass& f) {
    write("density.csv", render([&](std::ostream& os) { write_field_csv(os, f.snapshots); }));
  }

  void solve_forward() {
    const auto t0 = clock::now();
    const ForwardPass f = forward_pass(rho0_, u0_, model_, grid_, steps_);
    timing_["forward_seconds"] = seconds_since(t0);
    write_density(f);
    write("control_final.csv", render([&](std::ostream& os) { write_control_csv(os, u0_); }));
    summary_["status"] = "ok";
    summary_["forward"] = forward_summary(f);
  }

  void solve_adjoint() {
    const auto t0 = clock::now();
    const ForwardPass f = forward_pass(rho0_, u0_, model_, grid_, steps_);
    const AdjointPass a = adjoint_pass(rho0_, u0_, model_, grid_, cfg_.descent.checkpoint_stride, steps_);
    timing_["solve_seconds"] = seconds_since(t0);
    write_density(f);
    write("adjoint.csv", render([&](std::ostream& os) { write_field_csv(os, a.snapshots); }));
    write("control_final.csv", render([&](std::ostream& os) { write_control_csv(os, u0_); }));
    const ControlSignal ubar = target_control(a.switching, model_.admissible, u0_);
    summary_["status"] = "ok";
    summary_["forward"] = forward_summary(f);
    summary_["non_extremality"] = non_extremality(u0_, ubar, a.switching);
    summary_["adjoint_max_hermitian_defect"] = a.hermitian_defect;
  }

  // Runs the descent and writes its artifacts; returns the final control.
  ControlSignal descend(DescentResult& result) {
    const auto t0 = clock::now();
    result = run_descent(rho0_, u0_, model_, grid_, cfg_.descent, [](const IterationRecord& r) {
      std::fprintf(stderr, "iter %zu  cost %.6e  E %.3e  lambda %.4g  j %zu\n", r.k, r.cost, r.non_extremality,
                   r.lambda, r.backtrack_count);
    });
    timing_["descent_seconds"] = seconds_since(t0);
    json iteration_times = json::array();
    for (const auto& r : result.history) iteration_times.push_back(r.wall_time);
    timing_["iteration_seconds"] = iteration_times;

    write("convergence.csv", render([&](std::ostream& os) { write_convergence_csv(os, result.history); }));
    write("control_final.csv", render([&](std::ostream& os) { write_control_csv(os, result.control); }));

    const ForwardPass f = forward_pass(rho0_, result.control, model_, grid_, steps_);
    write_density(f);
    if (cfg_.adjoint_snapshots) {
      const AdjointPass a = adjoint_pass(rho0_, result.control, model_, grid_, cfg_.descent.checkpoint_stride, steps_);
      write("adjoint.csv", render([&](std::ostream& os) { write_field_csv(os, a.snapshots); }));
      summary_["adjoint_max_hermitian_defect"] = a.hermitian_defect;
    }

    const double initial_cost =
        result.history.empty() ? result.final_cost : result.history.front().cost;
    summary_["status"] = to_string(result.status);
    summary_["initial_cost"] = initial_cost;
    summary_["final_cost"] = result.final_cost;
    summary_["non_extremality"] = result.final_non_extremality;
    summary_["iterations"] = result.history.size();
    summary_["forward"] = forward_summary(f);
    return result.control;
  }

  RunOutcome optimize_command() {
    DescentResult result;
    descend(result);
    RunOutcome out;
    if (result.status == DescentStatus::line_search_failure) {
      out.exit_code = exit_code(ErrorCategory::line_search);
      out.category = std::string(to_string(ErrorCategory::line_search));
      out.message = "no admissible step within j_max backtracking steps";
    }
    return out;
  }

  RunOutcome validate_command() {
    const ValidateSettings& s = cfg_.validate;
    ControlSignal replay = u0_;
    if (s.replay_optimized) {
      DescentResult result;
      replay = descend(result);
    } else {
      write("control_final.csv", render([&](std::ostream& os) { write_control_csv(os, u0_); }));
      const ForwardPass f = forward_pass(rho0_, u0_, model_, grid_, steps_);
      write_density(f);
      summary_["status"] = "ok";
      summary_["forward"] = forward_summary(f);
    }

    const auto t0 = clock::now();
    json report;

    json sweep = json::array();
    bool monotone = true;
    double previous = std::numeric_limits<double>::infinity();
    json replay_report;
    for (std::size_t n : s.particle_counts) {
      const ParticleReport r = meanfield_vs_particles(rho0_, replay, model_, grid_, n);
      sweep.push_back(r);
      monotone = monotone && r.moment_discrepancy < previous;
      previous = r.moment_discrepancy;
      if (n == s.replay_particles) replay_report = r;
    }
    if (replay_report.is_null()) replay_report = meanfield_vs_particles(rho0_, replay, model_, grid_, s.replay_particles);
    const bool cost_ok = replay_report.at("cost_gap").get<double>() <= s.cost_tolerance;
    report["particles"] = {{"sweep", sweep},
                           {"discrepancy_monotone", monotone},
                           {"replay", replay_report},
                           {"cost_tolerance", s.cost_tolerance},
                           {"passed", monotone && cost_ok}};

    const Linearization lin = linearize(rho0_, u0_, model_, grid_, cfg_.descent.checkpoint_stride);
    const ControlSignal ubar = target_control(lin.switching, model_.admissible, u0_);
    const SlopeReport slope = increment_slope_check(rho0_, u0_, ubar, model_, grid_, s.slope_lambdas);
    const bool slope_ok =
        slope.max_ratio_deviation <= s.ratio_tolerance && slope.residual_order >= s.min_residual_order;
    report["slope"] = slope;
    report["slope"]["ratio_tolerance"] = s.ratio_tolerance;
    report["slope"]["min_residual_order"] = s.min_residual_order;
    report["slope"]["passed"] = slope_ok;

    const TimeGrid local_grid(grid_.horizon(), s.local_tau);
    const double omega = kTwoPi / grid_.horizon();
    const ControlSignal constant = ControlSignal::sample(local_grid, 2, [&](double) { return ControlVector{s.local_u1, 0.0}; });
    const ControlSignal wave =
        ControlSignal::sample(local_grid, 2, [&](double t) { return ControlVector{s.local_u1 * std::sin(omega * t), 0.0}; });
    const LocalAdjointReport lc = local_adjoint_check(constant, rho0_, cfg_.model.x0, local_grid);
    const LocalAdjointReport lw = local_adjoint_check(wave, rho0_, cfg_.model.x0, local_grid);
    const bool local_ok = lc.max_error < s.local_tolerance && lw.max_error < s.local_tolerance;
    report["local_adjoint"] = {{"constant", lc}, {"sinusoidal", lw}, {"tolerance", s.local_tolerance}, {"passed", local_ok}};

    const bool passed = report["particles"]["passed"].get<bool>() && slope_ok && local_ok;
    report["passed"] = passed;
    timing_["validation_seconds"] = seconds_since(t0);
    write("validation.json", dump(report));
    summary_["validation_passed"] = passed;

    RunOutcome out;
    if (!passed) {
      out.exit_code = exit_code(ErrorCategory::validation);
      out.category = std::string(to_string(ErrorCategory::validation));
      out.message = "one or more validation tolerances failed; see validation.json";
    }
    return out;
  }

  const RunConfig& cfg_;
  std::filesystem::path dir_;
  TimeGrid grid_;
  ModelSpec model_;
  FourierField rho0_;
  ControlSignal u0_;
  std::set<std::size_t> steps_;
  json summary_;
  json timing_ = json::object();
};

void record_error(const RunConfig& cfg, const RunOutcome& outcome) {
  try {
    std::filesystem::create_directories(cfg.output_dir);
    write_file_atomic(std::filesystem::path(cfg.output_dir) / "error.json",
                      dump(json{{"category", outcome.category}, {"message", outcome.message}}));
  } catch (...) {
    // The exit code already carries the category.
  }
}

}  // namespace

RunOutcome run(const RunConfig& config) {
  RunOutcome outcome;
  try {
    outcome = Session(config).execute();
  } catch (const Error& e) {
    outcome.exit_code = exit_code(e.category());
    outcome.category = std::string(to_string(e.category()));
    outcome.message = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    outcome.exit_code = exit_code(ErrorCategory::io);
    outcome.category = std::string(to_string(ErrorCategory::io));
    outcome.message = e.what();
  } catch (const std::invalid_argument& e) {
    outcome.exit_code = exit_code(ErrorCategory::config);
    outcome.category = std::string(to_string(ErrorCategory::config));
    outcome.message = e.what();
  }
  if (outcome.exit_code != 0) record_error(config, outcome);
  return outcome;
}

}  // namespace mfpmp
