#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfpmp/config.hpp"
#include "mfpmp/runner.hpp"

namespace {

int report_error(const std::string& category, const std::string& message, int code) {
  const nlohmann::json err{{"error", {{"category", category}, {"message", message}, {"exit_code", code}}}};
  std::fprintf(stderr, "%s\n", err.dump().c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field optimal control by the maximum principle: solve, optimize, validate."};
  std::string command;
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;
  app.add_option("command", command, "solve-forward | solve-adjoint | optimize | validate")
      ->required()
      ->check(CLI::IsMember({"solve-forward", "solve-adjoint", "optimize", "validate"}));
  app.add_option("--config", config_path, "JSON run description")->required();
  app.add_option("--output", output_dir, "output directory (overrides output_dir)");
  app.add_option("--override", overrides, "key.path=value, value parsed as JSON")->take_all();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mfpmp::exit_code(mfpmp::ErrorCategory::config);
  }

  mfpmp::RunConfig cfg;
  try {
    cfg = mfpmp::parse_config(config_path, overrides);
    cfg.command = mfpmp::parse_command(command);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
  } catch (const mfpmp::Error& e) {
    return report_error(std::string(mfpmp::to_string(e.category())), e.what(), mfpmp::exit_code(e.category()));
  }

  const mfpmp::RunOutcome outcome = mfpmp::run(cfg);
  if (outcome.exit_code != 0) return report_error(outcome.category, outcome.message, outcome.exit_code);

  const nlohmann::json& s = outcome.summary;
  std::printf("%s: %s (output in %s)\n", command.c_str(), s.value("status", "ok").c_str(), cfg.output_dir.c_str());
  if (s.contains("final_cost")) {
    std::printf("cost %.6e -> %.6e after %zu iterations\n", s["initial_cost"].get<double>(),
                s["final_cost"].get<double>(), s["iterations"].get<std::size_t>());
  }
  return 0;
}
