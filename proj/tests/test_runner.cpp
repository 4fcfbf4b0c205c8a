#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mfpmp/config.hpp"
#include "mfpmp/runner.hpp"

using namespace mfpmp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mfpmp_runner_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig small(Command command, const fs::path& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> o{"grid.T=1", "grid.tau=0.01", "grid.n_modes=32", "descent.k_max=4",
                             "snapshot_times=[0, 0.5, 1]"};
  o.insert(o.end(), extra.begin(), extra.end());
  RunConfig cfg = parse_config_json(json{{"preset", "fig1"}}, o);
  cfg.command = command;
  cfg.output_dir = dir.string();
  return cfg;
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("exit codes by category") {
  CHECK(exit_code(ErrorCategory::config) == 2);
  CHECK(exit_code(ErrorCategory::constraint) == 2);
  CHECK(exit_code(ErrorCategory::divergence) == 3);
  CHECK(exit_code(ErrorCategory::symmetry) == 3);
  CHECK(exit_code(ErrorCategory::line_search) == 4);
  CHECK(exit_code(ErrorCategory::validation) == 5);
  CHECK(exit_code(ErrorCategory::io) == 1);
}

TEST_CASE("zero control leaves the density snapshots unchanged") {
  const fs::path dir = scratch("still");
  const RunOutcome out =
      run(small(Command::solve_forward, dir, {R"(initial_control={"constant": [0, 0]})"}));
  REQUIRE(out.exit_code == 0);
  std::istringstream csv(slurp(dir / "density.csv"));
  std::string line;
  std::getline(csv, line);
  std::map<std::string, std::vector<std::string>> by_time;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    by_time[line.substr(0, comma)].push_back(line.substr(comma + 1));
  }
  REQUIRE(by_time.size() == 3);
  const auto& first = by_time.begin()->second;
  CHECK(first.size() == 32);
  for (const auto& [t, rows] : by_time) CHECK(rows == first);
  CHECK(out.summary.at("forward").at("mass_drift").get<double>() == 0.0);
  for (const char* f : {"config.json", "summary.json", "control_final.csv"}) CHECK(fs::exists(dir / f));
}

TEST_CASE("solve-adjoint writes the co-state") {
  const fs::path dir = scratch("adjoint");
  const RunOutcome out = run(small(Command::solve_adjoint, dir));
  REQUIRE(out.exit_code == 0);
  CHECK(fs::exists(dir / "adjoint.csv"));
  CHECK(out.summary.at("non_extremality").get<double>() > 0.0);
  CHECK(out.summary.at("adjoint_max_hermitian_defect").get<double>() < 1e-15);
}

TEST_CASE("optimize is deterministic apart from timing") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const RunOutcome ra = run(small(Command::optimize, a));
  const RunOutcome rb = run(small(Command::optimize, b));
  REQUIRE(ra.exit_code == 0);
  REQUIRE(rb.exit_code == 0);
  json sa = json::parse(slurp(a / "summary.json")), sb = json::parse(slurp(b / "summary.json"));
  CHECK(sa.contains("timing"));
  sa.erase("timing");
  sb.erase("timing");
  CHECK(sa == sb);
  for (const char* f : {"convergence.csv", "control_final.csv", "density.csv", "adjoint.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(sa.at("final_cost").get<double>() <= sa.at("initial_cost").get<double>());
}

TEST_CASE("config echo reruns to the same result") {
  const fs::path a = scratch("echo_a"), b = scratch("echo_b");
  REQUIRE(run(small(Command::solve_forward, a)).exit_code == 0);
  RunConfig again = parse_config(a / "config.json");
  again.output_dir = b.string();
  REQUIRE(run(again).exit_code == 0);
  CHECK(slurp(a / "density.csv") == slurp(b / "density.csv"));
}

TEST_CASE("line-search failure maps to exit code 4") {
  const fs::path dir = scratch("ls");
  const RunOutcome out = run(small(Command::optimize, dir, {"descent.c=0.999999", "descent.j_max=0"}));
  CHECK(out.exit_code == 4);
  CHECK(out.category == "line-search");
  CHECK(fs::exists(dir / "error.json"));
  CHECK(fs::exists(dir / "convergence.csv"));
}

TEST_CASE("unwritable output maps to an io error") {
  const fs::path blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  const RunOutcome out = run(small(Command::solve_forward, blocker / "sub"));
  CHECK(out.exit_code == 1);
  CHECK(out.category == "io");
  fs::remove(blocker);
}

TEST_CASE("atomic write replaces the file") {
  const fs::path dir = scratch("atomic");
  fs::create_directories(dir);
  write_file_atomic(dir / "f.txt", "one");
  write_file_atomic(dir / "f.txt", "two");
  CHECK(slurp(dir / "f.txt") == "two");
  CHECK_FALSE(fs::exists(dir / "f.txt.tmp"));
}

}  // TEST_SUITE
