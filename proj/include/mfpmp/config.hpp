#ifndef MFPMP_CONFIG_HPP
#define MFPMP_CONFIG_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mfpmp/models.hpp"
#include "mfpmp/optimizer.hpp"
#include "mfpmp/spectral.hpp"
#include "mfpmp/time_grid.hpp"

namespace mfpmp {

enum class Command { solve_forward, solve_adjoint, optimize, validate };

std::string_view to_string(Command command);

/// Throws ConfigError for an unknown command name.
Command parse_command(std::string_view name);

struct ValidateSettings {
  std::vector<std::size_t> particle_counts{1000, 10000, 100000};
  std::size_t replay_particles = 10000;
  double cost_tolerance = 0.02;
  std::vector<double> slope_lambdas{1e-3, 2e-3, 4e-3, 8e-3};
  double ratio_tolerance = 0.05;
  double min_residual_order = 1.8;
  double local_tau = 1e-3;
  double local_u1 = 0.7;  ///< constant profile; the sinusoidal one is local_u1·sin(2πt/T)
  double local_tolerance = 1e-6;
  bool replay_optimized = true;  ///< replay the optimized control, else the initial one

  bool operator==(const ValidateSettings&) const = default;
};

/// A fully expanded run description. Presets are resolved at parse time, so
/// to_json(parse_config(...)) is self-contained.
struct RunConfig {
  Command command = Command::optimize;
  KuramotoParams model;
  double horizon = 6.0;
  double tau = 5e-3;
  int n_modes = 256;
  std::vector<cplx> density;                    ///< ρ̂_n for n = 0, 1, ..., M
  std::vector<ControlVector> control_table;    ///< one row per control interval
  DescentConfig descent;
  std::string output_dir = "out";
  std::vector<double> snapshot_times;
  bool adjoint_snapshots = false;
  ValidateSettings validate;

  TimeGrid grid() const { return TimeGrid(horizon, tau); }
  FourierField initial_density() const;
  ControlSignal initial_control() const;
  ModelSpec model_spec() const;

  bool operator==(const RunConfig&) const = default;
};

/// Named base documents: "fig1" (desk scale) and "fig1-full".
nlohmann::json preset_document(std::string_view name);

/// Applies `key.path=value` overrides (value parsed as JSON, else taken as a
/// string) and validates. A top-level "preset" key merges the named preset
/// underneath the document. Throws ConfigError naming the offending field.
RunConfig parse_config_json(nlohmann::json doc, const std::vector<std::string>& overrides = {});

/// Reads and parses a config file; parse errors carry line and column.
RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

nlohmann::json to_json(const RunConfig& config);

}  // namespace mfpmp

#endif  // MFPMP_CONFIG_HPP
