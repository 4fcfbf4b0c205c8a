#include <cmath>
#include <fstream>

#include "doctest.h"
#include "mfpmp/config.hpp"
#include "mfpmp/errors.hpp"
#include "oracles.hpp"

using namespace mfpmp;
using nlohmann::json;
using oracle::pi;

namespace {

std::string config_error(const json& doc, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config_json(doc, overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("fig1 preset expands to the reference problem") {
  const RunConfig cfg = parse_config_json(json{{"preset", "fig1"}});
  CHECK(cfg.horizon == 6.0);
  CHECK(cfg.tau == 5e-3);
  CHECK(cfg.n_modes == 256);
  CHECK(cfg.model.alpha == 0.0);
  CHECK(cfg.model.x0 == doctest::Approx(pi));
  CHECK(cfg.model.radius == doctest::Approx(std::sqrt(2.0)));
  CHECK(cfg.descent.lambda_tol == 1e-2);
  CHECK(cfg.descent.c == 0.01);
  CHECK(cfg.descent.theta == 0.5);

  const FourierField rho = cfg.initial_density();
  const auto q = oracle::quadrature_coeffs(oracle::fig1_density, 3, 1024);
  for (int n = -3; n <= 3; ++n) CHECK(std::abs(rho.at(n) - q[static_cast<std::size_t>(n + 3)]) < 1e-15);

  const ControlSignal u = cfg.initial_control();
  REQUIRE(u.intervals() == 1200);
  for (std::size_t k : {0u, 37u, 600u, 1199u}) {
    const double t = 5e-3 * static_cast<double>(k);
    CHECK(u.at(k)[0] == doctest::Approx(std::sqrt(2.0) * std::sin(2 * pi * t)).epsilon(1e-14));
    CHECK(u.at(k)[1] == doctest::Approx(std::sqrt(2.0) * std::cos(2 * pi * t)).epsilon(1e-14));
  }

  const RunConfig full = parse_config_json(json{{"preset", "fig1-full"}});
  CHECK(full.tau == 1e-3);
  CHECK(full.n_modes == 2048);
}

TEST_CASE("expanded config round trips") {
  const RunConfig cfg = parse_config_json(json{{"preset", "fig1"}, {"grid", {{"n_modes", 64}}}});
  const RunConfig again = parse_config_json(to_json(cfg));
  CHECK(again == cfg);
  CHECK(to_json(again) == to_json(cfg));
}

TEST_CASE("overrides") {
  const RunConfig cfg =
      parse_config_json(json{{"preset", "fig1"}}, {"grid.n_modes=32", "descent.k_max=3", "output_dir=somewhere"});
  CHECK(cfg.n_modes == 32);
  CHECK(cfg.descent.k_max == 3);
  CHECK(cfg.output_dir == "somewhere");
  CHECK(config_error(json{{"preset", "fig1"}}, {"novalue"}).find("--override") != std::string::npos);
}

TEST_CASE("explicit density and control") {
  const json doc{{"grid", {{"T", 1.0}, {"tau", 0.25}, {"n_modes", 8}}},
                 {"initial_density", {{"coefficients", {{1.0 / (2 * pi), 0.0}, {0.0, -0.02}}}}},
                 {"initial_control", {{"constant", {0.5, -0.5}}}}};
  const RunConfig cfg = parse_config_json(doc);
  CHECK(cfg.initial_density()[-1] == cplx{0.0, 0.02});
  CHECK(cfg.control_table.size() == 4);
  CHECK(cfg.initial_control().at(3)[1] == -0.5);
}

TEST_CASE("field-level errors") {
  const json base{{"preset", "fig1"}};
  CHECK(config_error(json{{"preset", "fig1"}, {"grid", {{"tua", 1.0}}}}) == "grid.tua: unknown key");
  CHECK(config_error(json{{"preset", "fig1"}, {"descent", {{"theta", 1.5}}}}).find("theta") != std::string::npos);
  CHECK(config_error(json{{"preset", "fig1"}, {"grid", {{"tau", 7e-3}}}}).rfind("grid.tau", 0) == 0);
  CHECK(config_error(json{{"preset", "fig1"}, {"grid", {{"n_modes", 255}}}}).rfind("grid.n_modes", 0) == 0);
  CHECK(config_error(json{{"preset", "fig1"}, {"grid", {{"n_modes", -2}}}}).rfind("grid.n_modes", 0) == 0);
  CHECK(config_error(json{{"preset", "fig1"}, {"snapshot_times", {7.0}}}).rfind("snapshot_times", 0) == 0);
  CHECK(config_error(json{{"preset", "fig1"}, {"initial_control", {{"constant", {2.0, 0.0}}}}})
            .rfind("initial_control", 0) == 0);
  CHECK(config_error(json{{"preset", "fig1"}, {"initial_density", {{"coefficients", {{0.2, 0.0}}}}}})
            .rfind("initial_density", 0) == 0);
  CHECK(config_error(json{{"preset", "fig1"},
                          {"initial_density", {{"coefficients", {{1.0 / (2 * pi), 0.0}, {0.2, 0.0}}}}}})
            .rfind("initial_density", 0) == 0);
  CHECK(config_error(json{{"preset", "nope"}}).rfind("preset", 0) == 0);
  CHECK(config_error(json{{"preset", "fig1"}, {"model", {{"name", "vicsek"}}}}).rfind("model.name", 0) == 0);
  CHECK(config_error(json{{"preset", "fig1"}, {"validate", {{"slope_lambdas", {0.5}}}}})
            .rfind("validate.slope_lambdas", 0) == 0);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("command names") {
  CHECK(parse_command("solve-forward") == Command::solve_forward);
  CHECK(parse_command("validate") == Command::validate);
  CHECK(to_string(Command::solve_adjoint) == "solve-adjoint");
  CHECK_THROWS_AS(parse_command("run"), ConfigError);
}

}  // TEST_SUITE
