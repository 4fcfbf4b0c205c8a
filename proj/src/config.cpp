#include "mfpmp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mfpmp/errors.hpp"
#include "mfpmp/forward.hpp"

namespace mfpmp {

using nlohmann::json;

std::string_view to_string(Command command) {
  switch (command) {
    case Command::solve_forward: return "solve-forward";
    case Command::solve_adjoint: return "solve-adjoint";
    case Command::optimize: return "optimize";
    case Command::validate: return "validate";
  }
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (Command c : {Command::solve_forward, Command::solve_adjoint, Command::optimize, Command::validate}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("command: unknown command '" + std::string(name) + "'");
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Tracks which keys of an object were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) fail(field(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) fail(field(key), "must be finite");
    return x;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    return as_count(*v, field(key));
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) fail(field(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) fail(field(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_array()) fail(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        fail(field(key) + "[" + std::to_string(i) + "]", "expected a finite number");
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key, const std::vector<std::size_t>& fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_array()) fail(field(key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_count((*v)[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::string field(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.contains(it.key())) fail(field(it.key()), "unknown key");
    }
  }

  static std::size_t as_count(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    if (v.get<long long>() < 0) fail(where, "must be non-negative");
    return v.get<std::size_t>();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) fail(field, what);
}

std::vector<cplx> density_preset(const std::string& name) {
  if (name == "fig1") {
    // (2 + sin x + 0.8 cos 2x - 0.2 sin 2x) / (4π)
    const double s = 1.0 / (4.0 * kPi);
    return {cplx{2.0 * s, 0.0}, cplx{0.0, -0.5 * s}, cplx{0.4 * s, 0.1 * s}};
  }
  if (name == "uniform") return {cplx{1.0 / kTwoPi, 0.0}};
  fail("initial_density", "unknown preset '" + name + "'");
}

std::vector<ControlVector> control_preset(const std::string& name, const TimeGrid& grid) {
  std::vector<ControlVector> rows;
  rows.reserve(grid.steps());
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double t = grid.time_at_step(k);
    if (name == "fig1") {
      rows.push_back({std::sqrt(2.0) * std::sin(kTwoPi * t), std::sqrt(2.0) * std::cos(kTwoPi * t)});
    } else if (name == "zero") {
      rows.push_back({0.0, 0.0});
    } else {
      fail("initial_control", "unknown preset '" + name + "'");
    }
  }
  return rows;
}

std::vector<cplx> read_density(const json& v, int n_modes) {
  std::vector<cplx> coeffs;
  if (v.is_string()) {
    coeffs = density_preset(v.get<std::string>());
  } else {
    Reader r(v, "initial_density");
    const json* list = r.find("coefficients");
    r.finish();
    require(list != nullptr, "initial_density.coefficients", "missing");
    require(list->is_array() && !list->empty(), "initial_density.coefficients", "expected a non-empty array of [re, im] pairs");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const json& e = (*list)[i];
      const std::string where = "initial_density.coefficients[" + std::to_string(i) + "]";
      require(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(), where, "expected [re, im]");
      coeffs.emplace_back(e[0].get<double>(), e[1].get<double>());
      require(std::isfinite(coeffs.back().real()) && std::isfinite(coeffs.back().imag()), where, "must be finite");
    }
  }
  require(static_cast<int>(coeffs.size()) - 1 <= n_modes / 2, "initial_density.coefficients",
          "more modes than grid.n_modes / 2 + 1");
  require(coeffs[0].imag() == 0.0 && std::abs(coeffs[0].real() - 1.0 / kTwoPi) <= 1e-12,
          "initial_density.coefficients[0]", "must equal [1/(2π), 0] for a probability density");
  return coeffs;
}

std::vector<ControlVector> read_control(const json& v, const TimeGrid& grid) {
  if (v.is_string()) return control_preset(v.get<std::string>(), grid);
  Reader r(v, "initial_control");
  const json* constant = r.find("constant");
  const json* table = r.find("table");
  r.finish();
  require((constant == nullptr) != (table == nullptr), "initial_control", "give exactly one of 'constant' or 'table'");

  auto read_row = [](const json& e, const std::string& where) {
    require(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(), where, "expected [u1, u2]");
    ControlVector row{e[0].get<double>(), e[1].get<double>()};
    require(std::isfinite(row[0]) && std::isfinite(row[1]), where, "must be finite");
    return row;
  };
  if (constant != nullptr) return std::vector<ControlVector>(grid.steps(), read_row(*constant, "initial_control.constant"));

  require(table->is_array() && table->size() == grid.steps(), "initial_control.table",
          "expected one [u1, u2] row per control interval (" + std::to_string(grid.steps()) + ")");
  std::vector<ControlVector> rows;
  rows.reserve(table->size());
  for (std::size_t k = 0; k < table->size(); ++k) {
    rows.push_back(read_row((*table)[k], "initial_control.table[" + std::to_string(k) + "]"));
  }
  return rows;
}

void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) fail("--override", "expected key=value, got '" + spec + "'");
  const std::string key = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  std::string pointer;
  std::stringstream parts(key);
  for (std::string part; std::getline(parts, part, '.');) {
    if (part.empty()) fail("--override", "malformed key '" + key + "'");
    pointer += "/" + part;
  }
  try {
    doc[json::json_pointer(pointer)] = std::move(value);
  } catch (const json::exception& e) {
    fail(key, std::string("cannot apply override: ") + e.what());
  }
}

}  // namespace

FourierField RunConfig::initial_density() const {
  FourierField rho(n_modes);
  for (std::size_t n = 0; n < density.size(); ++n) {
    const int idx = static_cast<int>(n);
    rho[idx] = density[n];
    if (n > 0) rho[-idx] = std::conj(density[n]);
  }
  return rho;
}

ControlSignal RunConfig::initial_control() const {
  const ModelSpec spec = model_spec();
  ControlSignal u(grid(), 2);
  for (std::size_t k = 0; k < control_table.size(); ++k) {
    std::copy(control_table[k].begin(), control_table[k].end(), u.at(k).begin());
    spec.admissible.project(u.at(k));
  }
  return u;
}

ModelSpec RunConfig::model_spec() const { return make_kuramoto_model(model); }

json preset_document(std::string_view name) {
  json doc{{"model", {{"name", "kuramoto"}, {"alpha", 0.0}, {"x0", kPi}, {"radius", std::sqrt(2.0)}}},
           {"grid", {{"T", 6.0}, {"tau", 5e-3}, {"n_modes", 256}}},
           {"initial_density", "fig1"},
           {"initial_control", "fig1"},
           {"descent",
            {{"c", 0.01},
             {"theta", 0.5},
             {"lambda_tol", 1e-2},
             {"j_max", 40},
             {"k_max", 500},
             {"eps_tol", 1e-8},
             {"checkpoint_stride", 0}}},
           {"output_dir", "out/fig1"},
           {"snapshot_times", {0.0, 6.0}},
           {"adjoint_snapshots", true}};
  if (name == "fig1") return doc;
  if (name == "fig1-full") {
    doc["grid"]["tau"] = 1e-3;
    doc["grid"]["n_modes"] = 2048;
    doc["descent"]["checkpoint_stride"] = 100;
    doc["output_dir"] = "out/fig1_full";
    return doc;
  }
  fail("preset", "unknown preset '" + std::string(name) + "'");
}

RunConfig parse_config_json(json doc, const std::vector<std::string>& overrides) {
  if (!doc.is_object()) fail("config", "expected a JSON object");
  if (auto it = doc.find("preset"); it != doc.end()) {
    if (!it->is_string()) fail("preset", "expected a string");
    json base = preset_document(it->get<std::string>());
    doc.erase(it);
    base.merge_patch(doc);
    doc = std::move(base);
  }
  for (const std::string& o : overrides) apply_override(doc, o);

  RunConfig cfg;
  Reader top(doc, "");
  cfg.command = parse_command(top.string("command", std::string(to_string(cfg.command))));

  if (const json* m = top.find("model")) {
    Reader r(*m, "model");
    require(r.string("name", "kuramoto") == "kuramoto", "model.name", "only 'kuramoto' is supported");
    cfg.model.alpha = r.number("alpha", cfg.model.alpha);
    cfg.model.x0 = r.number("x0", cfg.model.x0);
    cfg.model.radius = r.number("radius", cfg.model.radius);
    r.finish();
    require(cfg.model.radius > 0.0, "model.radius", "must be positive");
  }

  if (const json* g = top.find("grid")) {
    Reader r(*g, "grid");
    cfg.horizon = r.number("T", cfg.horizon);
    cfg.tau = r.number("tau", cfg.tau);
    const std::size_t n = r.count("n_modes", static_cast<std::size_t>(cfg.n_modes));
    r.finish();
    require(cfg.horizon > 0.0, "grid.T", "must be positive");
    require(cfg.tau > 0.0, "grid.tau", "must be positive");
    require(n >= 4 && n % 2 == 0 && n <= (1u << 20), "grid.n_modes", "must be an even integer in [4, 2^20]");
    cfg.n_modes = static_cast<int>(n);
  }
  TimeGrid grid;
  try {
    grid = cfg.grid();
  } catch (const std::invalid_argument& e) {
    fail("grid.tau", e.what());
  }

  const json* density = top.find("initial_density");
  cfg.density = read_density(density != nullptr ? *density : json("fig1"), cfg.n_modes);
  {
    const FourierField rho = cfg.initial_density();
    require(density_min(rho, 4) >= -1e-12, "initial_density", "density is negative somewhere");
  }

  const json* control = top.find("initial_control");
  cfg.control_table = read_control(control != nullptr ? *control : json("fig1"), grid);
  {
    const AdmissibleSet set = cfg.model_spec().admissible;
    for (std::size_t k = 0; k < cfg.control_table.size(); ++k) {
      require(set.contains(cfg.control_table[k]), "initial_control[" + std::to_string(k) + "]",
              "outside the admissible set u₁² + u₂² <= radius²");
    }
  }

  if (const json* d = top.find("descent")) {
    Reader r(*d, "descent");
    cfg.descent.c = r.number("c", cfg.descent.c);
    cfg.descent.theta = r.number("theta", cfg.descent.theta);
    cfg.descent.lambda_tol = r.number("lambda_tol", cfg.descent.lambda_tol);
    cfg.descent.j_max = r.count("j_max", cfg.descent.j_max);
    cfg.descent.k_max = r.count("k_max", cfg.descent.k_max);
    cfg.descent.eps_tol = r.number("eps_tol", cfg.descent.eps_tol);
    cfg.descent.checkpoint_stride = r.count("checkpoint_stride", cfg.descent.checkpoint_stride);
    r.finish();
  }
  try {
    cfg.descent.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  cfg.output_dir = top.string("output_dir", cfg.output_dir);
  require(!cfg.output_dir.empty(), "output_dir", "must not be empty");
  cfg.snapshot_times = top.numbers("snapshot_times", cfg.snapshot_times);
  for (std::size_t i = 0; i < cfg.snapshot_times.size(); ++i) {
    const double t = cfg.snapshot_times[i];
    require(t >= 0.0 && t <= cfg.horizon, "snapshot_times[" + std::to_string(i) + "]", "must lie in [0, T]");
  }
  cfg.adjoint_snapshots = top.boolean("adjoint_snapshots", cfg.adjoint_snapshots);

  if (const json* v = top.find("validate")) {
    Reader r(*v, "validate");
    ValidateSettings& s = cfg.validate;
    s.particle_counts = r.counts("particle_counts", s.particle_counts);
    s.replay_particles = r.count("replay_particles", s.replay_particles);
    s.cost_tolerance = r.number("cost_tolerance", s.cost_tolerance);
    s.slope_lambdas = r.numbers("slope_lambdas", s.slope_lambdas);
    s.ratio_tolerance = r.number("ratio_tolerance", s.ratio_tolerance);
    s.min_residual_order = r.number("min_residual_order", s.min_residual_order);
    s.local_tau = r.number("local_tau", s.local_tau);
    s.local_u1 = r.number("local_u1", s.local_u1);
    s.local_tolerance = r.number("local_tolerance", s.local_tolerance);
    s.replay_optimized = r.boolean("replay_optimized", s.replay_optimized);
    r.finish();
  }
  {
    const ValidateSettings& s = cfg.validate;
    for (std::size_t i = 0; i < s.particle_counts.size(); ++i) {
      require(s.particle_counts[i] > 0, "validate.particle_counts[" + std::to_string(i) + "]", "must be positive");
    }
    require(s.replay_particles > 0, "validate.replay_particles", "must be positive");
    require(s.cost_tolerance > 0.0, "validate.cost_tolerance", "must be positive");
    require(!s.slope_lambdas.empty(), "validate.slope_lambdas", "must not be empty");
    for (std::size_t i = 0; i < s.slope_lambdas.size(); ++i) {
      require(s.slope_lambdas[i] > 0.0 && s.slope_lambdas[i] <= 0.1, "validate.slope_lambdas[" + std::to_string(i) + "]",
              "must lie in (0, 0.1]");
    }
    require(s.ratio_tolerance > 0.0, "validate.ratio_tolerance", "must be positive");
    require(s.local_tolerance > 0.0, "validate.local_tolerance", "must be positive");
    require(s.local_tau > 0.0, "validate.local_tau", "must be positive");
    try {
      (void)TimeGrid(cfg.horizon, s.local_tau);
    } catch (const std::invalid_argument& e) {
      fail("validate.local_tau", e.what());
    }
  }

  top.finish();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_config_json(std::move(doc), overrides);
}

json to_json(const RunConfig& cfg) {
  json density = json::array();
  for (const cplx& c : cfg.density) density.push_back({c.real(), c.imag()});
  json table = json::array();
  for (const ControlVector& row : cfg.control_table) table.push_back(row);
  const DescentConfig& d = cfg.descent;
  const ValidateSettings& v = cfg.validate;
  return json{{"command", to_string(cfg.command)},
              {"model", {{"name", "kuramoto"}, {"alpha", cfg.model.alpha}, {"x0", cfg.model.x0}, {"radius", cfg.model.radius}}},
              {"grid", {{"T", cfg.horizon}, {"tau", cfg.tau}, {"n_modes", cfg.n_modes}}},
              {"initial_density", {{"coefficients", density}}},
              {"initial_control", {{"table", table}}},
              {"descent",
               {{"c", d.c},
                {"theta", d.theta},
                {"lambda_tol", d.lambda_tol},
                {"j_max", d.j_max},
                {"k_max", d.k_max},
                {"eps_tol", d.eps_tol},
                {"checkpoint_stride", d.checkpoint_stride}}},
              {"output_dir", cfg.output_dir},
              {"snapshot_times", cfg.snapshot_times},
              {"adjoint_snapshots", cfg.adjoint_snapshots},
              {"validate",
               {{"particle_counts", v.particle_counts},
                {"replay_particles", v.replay_particles},
                {"cost_tolerance", v.cost_tolerance},
                {"slope_lambdas", v.slope_lambdas},
                {"ratio_tolerance", v.ratio_tolerance},
                {"min_residual_order", v.min_residual_order},
                {"local_tau", v.local_tau},
                {"local_u1", v.local_u1},
                {"local_tolerance", v.local_tolerance},
                {"replay_optimized", v.replay_optimized}}}};
}

}  // namespace mfpmp
