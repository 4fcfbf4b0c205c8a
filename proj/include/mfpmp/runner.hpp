#ifndef MFPMP_RUNNER_HPP
#define MFPMP_RUNNER_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mfpmp/config.hpp"
#include "mfpmp/errors.hpp"

namespace mfpmp {

/// Process exit codes: 0 success, 2 config, 3 divergence, 4 line-search
/// failure, 5 validation failure, 1 io.
int exit_code(ErrorCategory category);

struct RunOutcome {
  int exit_code = 0;
  std::string category;  ///< empty on success
  std::string message;
  nlohmann::json summary;  ///< contents of summary.json (null if the run aborted)
};

/// Writes `content` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Executes config.command, writing every artifact into config.output_dir:
/// config.json (the expanded config), summary.json, control_final.csv,
/// density.csv, and depending on the command convergence.csv, adjoint.csv
/// and validation.json. Library errors are caught and mapped to exit codes;
/// the error is also recorded in error.json.
RunOutcome run(const RunConfig& config);

}  // namespace mfpmp

#endif  // MFPMP_RUNNER_HPP
