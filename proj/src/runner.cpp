#include "mts/runner.hpp"

#include "mts/expression.hpp"
#include "mts/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>

namespace mts {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// config values

std::string key_name(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double parse_number(const std::string& section, const std::string& key, const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(key_name(section, key) + ": expected a number, got '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& section, const std::string& key, const std::string& text) {
  double v = parse_number(section, key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ConfigError(key_name(section, key) + ": expected an integer, got '" + text + "'");
  }
  return static_cast<int>(v);
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw ConfigError(key_name(section, key) + ": expected true or false, got '" + text + "'");
}

std::string check_expression(const std::string& section, const std::string& key, const std::string& text) {
  try {
    Expression::parse(text);
  } catch (const ParseError& e) {
    throw ConfigError(key_name(section, key) + ": " + e.what());
  }
  return text;
}

std::string resolve(const std::string& base_dir, const std::string& file) {
  fs::path p(file);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

[[noreturn]] void unknown_key(const std::string& section, const std::string& key) {
  throw ConfigError("unknown key " + key_name(section, key));
}

// "name rest" -> rest, or empty when the section is not of that kind.
std::string section_suffix(const std::string& section, const std::string& kind) {
  if (section.size() <= kind.size() + 1 || section.compare(0, kind.size() + 1, kind + " ") != 0) return "";
  std::string rest = section.substr(kind.size() + 1);
  rest.erase(0, rest.find_first_not_of(' '));
  return rest;
}

CustomProblemSpec& custom_of(RunConfig& c) {
  if (!c.custom) c.custom.emplace();
  return *c.custom;
}

}  // namespace

RunConfig parse_run_config(std::istream& in, const std::string& base_dir, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source.empty() ? e.message() : source + ": " + e.message(), static_cast<int>(e.line()));
  }
  RunConfig c;
  c.source = source;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside of a section");
    for (const auto& [key, node] : body) {
      const std::string value = node.data();
      if (section == "problem") {
        if (key == "name") c.problem = value;
        else if (key == "variant") c.variant = value;
        else if (key == "fixtures") c.fixtures = fixture_size_from_string(value);
        else if (key == "method") c.method = constraint_method_from_string(value);
        else unknown_key(section, key);
      } else if (section == "coupling") {
        if (key == "dt") c.dt = parse_number(section, key, value);
        else if (key == "alpha") c.alpha = parse_number(section, key, value);
        else if (key == "t_end") c.t_end = parse_number(section, key, value);
        else if (key == "clip_negative") c.clip = parse_bool(section, key, value);
        else if (key == "newton_max_iters") c.newton_max_iters = parse_int(section, key, value);
        else if (key == "newton_abs_tol") c.newton_abs_tol = parse_number(section, key, value);
        else if (key == "newton_rel_tol") c.newton_rel_tol = parse_number(section, key, value);
        else unknown_key(section, key);
      } else if (std::string id = section_suffix(section, "subdomain"); !id.empty()) {
        int n = parse_int(section, "id", id);
        if (n < 1) throw ConfigError("subdomain ids start at 1, got [" + section + "]");
        auto& s = c.subdomains[n];
        if (key == "theta") s.theta = parse_number(section, key, value);
        else if (key == "dt") s.dt_sub = parse_number(section, key, value);
        else if (key == "formulation") s.formulation = formulation_from_string(value);
        else unknown_key(section, key);
      } else if (section == "output") {
        if (key == "directory") c.output.directory = value;
        else if (key == "snapshot_every") c.output.snapshot_every = parse_int(section, key, value);
        else if (key == "timeseries") c.output.timeseries = parse_bool(section, key, value);
        else unknown_key(section, key);
      } else if (section == "convergence") {
        if (key == "levels") c.convergence_levels = parse_int(section, key, value);
        else if (key == "substeps") {
          if (value == "fixed") c.convergence_fixed_substeps = true;
          else if (value == "scaled") c.convergence_fixed_substeps = false;
          else throw ConfigError(key_name(section, key) + ": expected fixed or scaled, got '" + value + "'");
        } else unknown_key(section, key);
      } else if (section == "mesh") {
        auto& m = custom_of(c);
        if (key == "file") m.mesh_file = resolve(base_dir, value);
        else if (key == "partition") m.partition_file = resolve(base_dir, value);
        else unknown_key(section, key);
      } else if (section == "coefficients") {
        auto& m = custom_of(c);
        if (key == "velocity_x") m.velocity_x = check_expression(section, key, value);
        else if (key == "velocity_y") m.velocity_y = check_expression(section, key, value);
        else if (key == "diffusivity") {
          m.diffusivity_xx = m.diffusivity_yy = check_expression(section, key, value);
          m.diffusivity_xy = "0";
        } else if (key == "diffusivity_xx") m.diffusivity_xx = check_expression(section, key, value);
        else if (key == "diffusivity_xy") m.diffusivity_xy = check_expression(section, key, value);
        else if (key == "diffusivity_yy") m.diffusivity_yy = check_expression(section, key, value);
        else if (key == "decay") m.decay = parse_number(section, key, value);
        else if (key == "source") m.source = check_expression(section, key, value);
        else unknown_key(section, key);
      } else if (section == "initial") {
        if (key == "value") custom_of(c).initial = check_expression(section, key, value);
        else unknown_key(section, key);
      } else if (section == "reference") {
        if (key == "value") custom_of(c).reference = check_expression(section, key, value);
        else unknown_key(section, key);
      } else if (std::string set = section_suffix(section, "dirichlet"); !set.empty()) {
        if (key == "value") custom_of(c).dirichlet[set] = check_expression(section, key, value);
        else unknown_key(section, key);
      } else if (std::string set = section_suffix(section, "neumann"); !set.empty()) {
        if (key == "flux") custom_of(c).neumann[set] = check_expression(section, key, value);
        else unknown_key(section, key);
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    }
  }
  if (c.custom) {
    if (!c.problem.empty() && c.problem != "custom") {
      throw ConfigError("problem '" + c.problem + "' is builtin; remove the custom problem sections");
    }
    c.problem = "custom";
    if (c.custom->mesh_file.empty()) throw ConfigError("custom problem needs [mesh] file");
  }
  if (c.problem.empty()) throw ConfigError("missing [problem] name");
  if (c.output.snapshot_every < 0) throw ConfigError("[output] snapshot_every must be >= 0");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  fs::path p(path);
  return parse_run_config(in, p.parent_path().string(), p.filename().string());
}

// ---------------------------------------------------------------------------
// problem preparation

namespace {

ScalarField field_of(const Expression& e) {
  return [e](const Point& p, double t) { return e(p, t); };
}

ProblemDefinition custom_problem(const RunConfig& config) {
  const CustomProblemSpec& s = *config.custom;
  ProblemDefinition p;
  p.name = "custom";
  p.mesh = load_mesh(s.mesh_file);
  if (s.partition_file.empty()) {
    p.partition.element_to_subdomain.assign(p.mesh.element_count(), 1);
    p.partition.subdomain_count = 1;
  } else {
    p.partition = load_partition(s.partition_file, p.mesh);
  }

  Expression vx = Expression::parse(s.velocity_x), vy = Expression::parse(s.velocity_y);
  if (!(vx.is_constant() && vx.evaluate(0, 0, 0) == 0.0 && vy.is_constant() && vy.evaluate(0, 0, 0) == 0.0)) {
    p.coefficients.velocity = [vx, vy](const Point& x, double t) { return Eigen::Vector2d(vx(x, t), vy(x, t)); };
    Expression dx = vx.derivative(Variable::x), dy = vy.derivative(Variable::y);
    if (p.mesh.dimension == 1) dy = Expression(0.0);
    p.coefficients.velocity_divergence = [dx, dy](const Point& x, double t) { return dx(x, t) + dy(x, t); };
    p.coefficients.time_varying = vx.depends_on(Variable::t) || vy.depends_on(Variable::t);
  }
  Expression dxx = Expression::parse(s.diffusivity_xx), dxy = Expression::parse(s.diffusivity_xy),
             dyy = Expression::parse(s.diffusivity_yy);
  for (const auto* e : {&dxx, &dxy, &dyy}) {
    if (e->depends_on(Variable::t)) throw ConfigError("[coefficients] diffusivity may not depend on t");
  }
  p.coefficients.diffusivity = [dxx, dxy, dyy](const Point& x) {
    Eigen::Matrix2d D;
    D << dxx(x, 0.0), dxy(x, 0.0), dxy(x, 0.0), dyy(x, 0.0);
    return D;
  };
  if (s.decay < 0.0) throw ConfigError("[coefficients] decay must be >= 0");
  p.coefficients.decay = s.decay;
  Expression f = Expression::parse(s.source);
  if (!(f.is_constant() && f.evaluate(0, 0, 0) == 0.0)) {
    p.coefficients.source = field_of(f);
    p.coefficients.source_time_varying = f.depends_on(Variable::t);
  }
  p.initial = field_of(Expression::parse(s.initial));

  for (const auto& [set, text] : s.dirichlet) {
    if (!p.mesh.boundary_sets.count(set)) throw ConfigError("[dirichlet " + set + "]: mesh has no set '" + set + "'");
    Expression value = Expression::parse(text);
    DirichletCondition d{set, field_of(value), nullptr, value.depends_on(Variable::t)};
    if (d.time_varying) d.rate = field_of(value.derivative(Variable::t));
    p.bc.dirichlet.push_back(std::move(d));
  }
  for (const auto& [set, text] : s.neumann) {
    if (!p.mesh.boundary_sets.count(set)) throw ConfigError("[neumann " + set + "]: mesh has no set '" + set + "'");
    Expression flux = Expression::parse(text);
    p.bc.neumann.push_back({set, field_of(flux), flux.depends_on(Variable::t)});
  }
  if (!s.reference.empty()) {
    p.reference = field_of(Expression::parse(s.reference));
    p.reference_kind = "exact";
  }

  for (int i = 1; i <= p.partition.subdomain_count; ++i) {
    auto it = config.subdomains.find(i);
    if (it == config.subdomains.end() || !it->second.theta || !it->second.dt_sub) {
      throw ConfigError("custom problem needs theta and dt in [subdomain " + std::to_string(i) + "]");
    }
    p.subdomains.push_back({*it->second.theta, *it->second.dt_sub, Formulation::galerkin});
  }
  if (!config.dt) throw ConfigError("custom problem needs [coupling] dt");
  if (!config.t_end) throw ConfigError("custom problem needs [coupling] t_end");
  return p;
}

void apply_overrides(ProblemDefinition& p, CouplingConfig& coupling, const RunConfig& c) {
  coupling = p.coupling;
  if (c.method) coupling.method = *c.method;
  if (c.dt) coupling.dt = *c.dt;
  if (c.alpha) coupling.alpha = *c.alpha;
  if (c.t_end) p.t_end = *c.t_end;
  if (c.clip) coupling.clip_negative = *c.clip;
  if (c.newton_max_iters) coupling.newton.max_iters = *c.newton_max_iters;
  if (c.newton_abs_tol) coupling.newton.abs_tol = *c.newton_abs_tol;
  if (c.newton_rel_tol) coupling.newton.rel_tol = *c.newton_rel_tol;
  for (const auto& [id, o] : c.subdomains) {
    if (id > p.subdomain_count()) {
      throw ConfigError("[subdomain " + std::to_string(id) + "]: problem '" + p.name + "' has " +
                        std::to_string(p.subdomain_count()) + " subdomains");
    }
    auto& s = p.subdomains[id - 1];
    if (o.theta) s.theta = *o.theta;
    if (o.dt_sub) s.dt_sub = *o.dt_sub;
    if (o.formulation) {
      if (p.is_lumped()) throw ConfigError("[subdomain " + std::to_string(id) + "]: formulation needs a mesh problem");
      s.formulation = *o.formulation;
    }
  }
  if (!(coupling.dt > 0.0)) throw ConfigError("system time-step dt must be positive");
  if (!(p.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (coupling.alpha < 0.0) throw ConfigError("alpha must be >= 0");
  for (int i = 0; i < p.subdomain_count(); ++i) {
    const auto& s = p.subdomains[i];
    const std::string where = "subdomain " + std::to_string(i + 1);
    if (!(s.theta >= 0.0 && s.theta <= 1.0)) throw ConfigError(where + ": theta must lie in [0, 1]");
    if (!(s.dt_sub > 0.0)) throw ConfigError(where + ": dt must be positive");
    subcycle_count(coupling.dt, s.dt_sub, i + 1);
  }
  coupling.n_steps = p.steps_for(coupling.dt);
  p.coupling = coupling;
}

}  // namespace

PreparedProblem prepare_problem(const RunConfig& config) {
  PreparedProblem out;
  if (config.problem == "custom") {
    if (!config.custom) throw ConfigError("problem 'custom' needs [mesh] file");
    out.single = custom_problem(config);
    apply_overrides(out.single, out.coupling, config);
    out.t_end = out.single.t_end;
  } else if (is_bimolecular(config.problem)) {
    if (!config.variant.empty()) throw ConfigError("'" + config.problem + "' has no variants");
    out.bimolecular = true;
    out.scenario = builtin_scenario(config.problem, config.fixtures);
    CouplingConfig g;
    apply_overrides(out.scenario.invariant_f, out.coupling, config);
    apply_overrides(out.scenario.invariant_g, g, config);
    out.t_end = out.scenario.invariant_f.t_end;
  } else {
    out.single = builtin_problem(config.problem, config.variant,
                                 config.method.value_or(ConstraintMethod::d_continuity), config.fixtures);
    apply_overrides(out.single, out.coupling, config);
    out.t_end = out.single.t_end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// run

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

struct Snapshot {
  int step = 0;
  double time = 0.0;
  Vector value;
  Vector jump;
};

struct Execution {
  AssembledProblem assembled;
  StabilityReport stability;
  std::vector<Snapshot> snapshots;
  SystemState final_state;
  double max_d_drift = 0.0, max_v_drift = 0.0, max_constraint_residual = 0.0;
  long newton_total = 0;
  double global_min = infinity, global_max = -infinity;
  std::optional<double> max_abs_error, max_lambda_error, final_l2_relative, steady_l2_relative;
};

bool is_snapshot_step(int step, int n_steps, int every) {
  return step == 0 || step == n_steps || (every > 0 && step % every == 0);
}

// Largest deviation of any subdomain copy from the exact solution.
double copy_error(const ProblemDefinition& p, const AssembledProblem& a, const std::vector<Vector>& d, double t) {
  double e = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (Eigen::Index k = 0; k < d[i].size(); ++k) {
      Point x = p.is_lumped() ? Point{0.0, 0.0} : p.mesh.nodes[a.dofs.subdomains[i].dof_to_node[k]];
      e = std::max(e, std::abs(d[i][k] - p.reference(x, t)));
    }
  }
  return e;
}

std::vector<std::string> timeseries_header(const ProblemDefinition& p) {
  std::vector<std::string> h = {"step", "time", "energy_q", "energy_u", "d_drift_inf", "v_drift_inf",
                                "constraint_residual", "newton_iterations", "min_value", "max_value"};
  if (p.reference_kind == "exact") h.push_back("max_abs_error");
  if (p.reference_lambda) h.push_back("lambda_error");
  return h;
}

// Advances one problem through n_steps, streaming the time series.
Execution execute(const ProblemDefinition& p, const CouplingConfig& coupling, const OutputSettings& output,
                  const std::string& timeseries_path) {
  Execution ex;
  ex.assembled = assemble_problem(p, coupling);
  const CoupledSystem& system = ex.assembled.system;
  validate(system, coupling);
  ex.stability = stability_report(system, coupling, false);

  std::optional<CsvWriter> csv;
  if (!timeseries_path.empty()) csv.emplace(timeseries_path, timeseries_header(p));

  Stepper stepper(system, coupling);
  SystemState state = initial_state(system, ex.assembled.d0);
  StepDiagnostics diag;
  const bool exact = p.reference_kind == "exact" && static_cast<bool>(p.reference);

  auto record = [&](const SystemState& s, const StepDiagnostics& d) {
    NodalField g = global_field(p, ex.assembled, s.d, s.time);
    ex.global_min = std::min(ex.global_min, g.value.minCoeff());
    ex.global_max = std::max(ex.global_max, g.value.maxCoeff());
    std::vector<double> row = {static_cast<double>(s.step),
                               s.time,
                               energy_q(system, s),
                               energy_u(system, s, coupling.alpha),
                               d.d_drift_inf,
                               d.v_drift_inf,
                               d.constraint_residual,
                               static_cast<double>(d.newton_iterations),
                               g.value.minCoeff(),
                               g.value.maxCoeff()};
    if (exact) {
      double e = copy_error(p, ex.assembled, s.d, s.time);
      ex.max_abs_error = std::max(ex.max_abs_error.value_or(0.0), e);
      row.push_back(e);
    }
    if (p.reference_lambda) {
      double e = s.lambda.size() ? (s.lambda - p.reference_lambda(s.time)).cwiseAbs().maxCoeff() : 0.0;
      ex.max_lambda_error = std::max(ex.max_lambda_error.value_or(0.0), e);
      row.push_back(e);
    }
    if (csv) csv->row(row);
    if (is_snapshot_step(s.step, coupling.n_steps, output.snapshot_every)) {
      ex.snapshots.push_back({s.step, s.time, std::move(g.value), std::move(g.jump)});
    }
  };

  {
    // Drift of the consistent initial state.
    StepDiagnostics d0;
    if (system.constraints.rows().size()) {
      d0.d_drift_inf = system.constraints.apply(state.d).cwiseAbs().maxCoeff();
      d0.v_drift_inf = system.constraints.apply(state.v).cwiseAbs().maxCoeff();
    }
    record(state, d0);
  }
  for (int n = 1; n <= coupling.n_steps; ++n) {
    diag = StepDiagnostics{};
    state = stepper.step(state, diag);
    ex.max_d_drift = std::max(ex.max_d_drift, diag.d_drift_inf);
    ex.max_v_drift = std::max(ex.max_v_drift, diag.v_drift_inf);
    ex.max_constraint_residual = std::max(ex.max_constraint_residual, diag.constraint_residual);
    ex.newton_total += diag.newton_iterations;
    record(state, diag);
  }
  ex.final_state = state;

  if (!p.is_lumped() && p.reference) {
    NodalField g = global_field(p, ex.assembled, state.d, state.time);
    double rel = l2_error(p.mesh, p.partition, g.value, p.reference, state.time).relative();
    if (exact) ex.final_l2_relative = rel;
    else if (p.reference_kind == "steady") ex.steady_l2_relative = rel;
  }
  return ex;
}

std::string snapshot_name(const ProblemDefinition& p, int step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snapshot_%06d.%s", step, p.mesh.dimension == 2 ? "vtk" : "csv");
  return buf;
}

std::vector<std::string> write_snapshots(const ProblemDefinition& p, const std::string& dir,
                                         const std::vector<Snapshot>& snaps,
                                         const std::function<std::vector<NamedField>(std::size_t)>& fields) {
  std::vector<std::string> names;
  if (p.is_lumped()) return names;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    std::string name = snapshot_name(p, snaps[k].step);
    std::string path = (fs::path(dir) / name).string();
    if (p.mesh.dimension == 2) {
      write_vtk(path, p.mesh, p.name + " t=" + format_number(snaps[k].time), fields(k));
    } else {
      write_profile_csv(path, p.mesh, fields(k));
    }
    names.push_back(name);
  }
  return names;
}

Json subdomain_json(const ProblemDefinition& p, const Execution& ex) {
  Json out = Json::array();
  for (int i = 0; i < ex.assembled.system.subdomain_count(); ++i) {
    const auto& s = ex.assembled.system.subdomains[i];
    Json j;
    j["id"] = i + 1;
    j["theta"] = s.theta;
    j["dt_sub"] = s.dt_sub;
    j["eta"] = s.eta;
    j["formulation"] = p.is_lumped() ? "lumped" : to_string(p.subdomains[i].formulation);
    j["dofs"] = s.size();
    out.push_back(j);
  }
  return out;
}

Json execution_json(const ProblemDefinition& p, const Execution& ex) {
  Json j;
  j["final_time"] = ex.final_state.time;
  j["subdomains"] = subdomain_json(p, ex);
  j["constraints"] = ex.assembled.system.constraints.rows().size();
  Json st;
  st["within_bounds"] = ex.stability.stable();
  st["alpha_max"] = number_or_null(ex.stability.alpha_max);
  st["verdicts"] = ex.stability.verdicts();
  j["stability"] = st;
  j["drift"] = {{"max_d_inf", ex.max_d_drift},
                {"max_v_inf", ex.max_v_drift},
                {"max_constraint_residual", ex.max_constraint_residual}};
  j["newton_iterations"] = ex.newton_total;
  const Snapshot& last = ex.snapshots.back();
  j["field"] = {{"final_min", last.value.minCoeff()},
                {"final_max", last.value.maxCoeff()},
                {"global_min", ex.global_min},
                {"global_max", ex.global_max},
                {"max_interface_jump", last.jump.size() ? last.jump.maxCoeff() : 0.0}};
  if (!p.reference_kind.empty()) {
    Json r;
    r["kind"] = p.reference_kind;
    if (ex.max_abs_error) r["max_abs_error"] = *ex.max_abs_error;
    if (ex.max_lambda_error) r["max_lambda_error"] = *ex.max_lambda_error;
    if (ex.final_l2_relative) r["final_l2_relative"] = *ex.final_l2_relative;
    if (ex.steady_l2_relative) r["steady_l2_relative"] = *ex.steady_l2_relative;
    j["reference"] = r;
  }
  return j;
}

std::vector<std::string> stability_warnings(const Execution& ex) {
  std::vector<std::string> w;
  if (ex.stability.stable()) return w;
  for (const auto& v : ex.stability.verdicts()) {
    if (v.find("VIOLATES") != std::string::npos || v.find("EXCEEDS") != std::string::npos) w.push_back(v);
  }
  return w;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace

RunOutcome cmd_run(const RunConfig& config, std::ostream& log) {
  PreparedProblem prep = prepare_problem(config);
  const std::string dir = config.output.directory;
  ensure_directory(dir);

  Json summary;
  summary["schema_version"] = 1;
  summary["config"] = config.source;
  summary["problem"] = config.problem;
  summary["variant"] = config.variant;
  summary["fixtures"] = config.fixtures == FixtureSize::full ? "full" : "reduced";
  summary["method"] = to_string(prep.coupling.method);
  summary["dt"] = prep.coupling.dt;
  summary["alpha"] = prep.coupling.alpha;
  summary["n_steps"] = prep.coupling.n_steps;
  summary["t_end"] = prep.t_end;
  summary["clip_negative"] = prep.coupling.clip_negative;

  RunOutcome outcome;
  if (std::abs(prep.coupling.n_steps * prep.coupling.dt - prep.t_end) > 1e-9 * prep.t_end) {
    outcome.warnings.push_back("t_end is not a multiple of dt; the run stops at " +
                               format_number(prep.coupling.n_steps * prep.coupling.dt));
  }
  log << "run " << config.problem << (config.variant.empty() ? "" : " " + config.variant) << ": "
      << prep.coupling.n_steps << " steps of dt = " << format_number(prep.coupling.dt) << " ("
      << to_string(prep.coupling.method) << ")\n";

  auto series = [&](const std::string& suffix) {
    return config.output.timeseries ? (fs::path(dir) / ("timeseries" + suffix + ".csv")).string() : std::string();
  };

  if (!prep.bimolecular) {
    Execution ex = execute(prep.single, prep.coupling, config.output, series(""));
    auto names = write_snapshots(prep.single, dir, ex.snapshots, [&](std::size_t k) {
      std::vector<NamedField> f = {{"c", ex.snapshots[k].value}, {"jump", ex.snapshots[k].jump}};
      if (prep.single.reference) {
        Vector r(prep.single.mesh.node_count());
        for (Eigen::Index n = 0; n < r.size(); ++n) r[n] = prep.single.reference(prep.single.mesh.nodes[n], ex.snapshots[k].time);
        f.emplace_back("reference", std::move(r));
      }
      return f;
    });
    Json body = execution_json(prep.single, ex);
    for (auto it = body.begin(); it != body.end(); ++it) summary[it.key()] = it.value();
    summary["outputs"] = {{"timeseries", config.output.timeseries ? "timeseries.csv" : ""}, {"snapshots", names}};
    outcome.max_d_drift = ex.max_d_drift;
    outcome.max_v_drift = ex.max_v_drift;
    outcome.max_abs_error = ex.max_abs_error;
    for (auto& w : stability_warnings(ex)) outcome.warnings.push_back(w);
    if (ex.max_abs_error) log << "max abs error vs exact: " << format_number(*ex.max_abs_error) << '\n';
    if (ex.steady_l2_relative) log << "relative L2 error vs steady: " << format_number(*ex.steady_l2_relative) << '\n';
    log << "final min " << format_number(ex.snapshots.back().value.minCoeff()) << ", max "
        << format_number(ex.snapshots.back().value.maxCoeff()) << '\n';
  } else {
    const auto& sc = prep.scenario;
    // The invariant solves are uncoupled and share nothing mutable.
    auto f = std::async(std::launch::async, [&] {
      return execute(sc.invariant_f, sc.invariant_f.coupling, config.output, series("_F"));
    });
    Execution g = execute(sc.invariant_g, sc.invariant_g.coupling, config.output, series("_G"));
    Execution fx = f.get();

    double min_a = infinity, min_b = infinity, min_c = infinity, max_ab = 0.0;
    std::vector<SpeciesFields> species;
    for (std::size_t k = 0; k < fx.snapshots.size(); ++k) {
      SpeciesFields s = recover_species(sc.stoichiometry, fx.snapshots[k].value, g.snapshots[k].value);
      min_a = std::min(min_a, s.a.minCoeff());
      min_b = std::min(min_b, s.b.minCoeff());
      min_c = std::min(min_c, s.c.minCoeff());
      max_ab = std::max(max_ab, s.a.cwiseProduct(s.b).cwiseAbs().maxCoeff());
      species.push_back(std::move(s));
    }
    auto names = write_snapshots(sc.invariant_f, dir, fx.snapshots, [&](std::size_t k) {
      return std::vector<NamedField>{{"c_F", fx.snapshots[k].value},
                                     {"c_G", g.snapshots[k].value},
                                     {"c_A", species[k].a},
                                     {"c_B", species[k].b},
                                     {"c_C", species[k].c}};
    });
    summary["stoichiometry"] = {{"n_a", sc.stoichiometry.n_a}, {"n_b", sc.stoichiometry.n_b}, {"n_c", sc.stoichiometry.n_c}};
    summary["invariants"] = {{"F", execution_json(sc.invariant_f, fx)}, {"G", execution_json(sc.invariant_g, g)}};
    summary["species"] = {{"min_a", min_a}, {"min_b", min_b}, {"min_c", min_c}, {"max_ab_product", max_ab}};
    summary["outputs"] = {{"timeseries", config.output.timeseries ? Json::array({"timeseries_F.csv", "timeseries_G.csv"})
                                                                 : Json::array()},
                          {"snapshots", names}};
    outcome.max_d_drift = std::max(fx.max_d_drift, g.max_d_drift);
    outcome.max_v_drift = std::max(fx.max_v_drift, g.max_v_drift);
    for (auto& w : stability_warnings(fx)) outcome.warnings.push_back(w);
    log << "species minima " << format_number(min_a) << ' ' << format_number(min_b) << ' ' << format_number(min_c)
        << ", max c_A*c_B " << format_number(max_ab) << '\n';
  }
  summary["warnings"] = outcome.warnings;
  for (const auto& w : outcome.warnings) log << "warning: " << w << '\n';
  outcome.summary_path = (fs::path(dir) / "summary.json").string();
  write_json(outcome.summary_path, summary);
  log << "wrote " << outcome.summary_path << '\n';
  return outcome;
}

// ---------------------------------------------------------------------------
// analyze

StabilityReport cmd_analyze(const RunConfig& config, std::ostream& out) {
  PreparedProblem prep = prepare_problem(config);
  const ProblemDefinition& p = prep.primary();
  AssembledProblem a = assemble_problem(p, prep.coupling);
  StabilityReport r = stability_report(a.system, prep.coupling, true);
  char buf[256];
  out << "problem " << config.problem << (config.variant.empty() ? "" : " " + config.variant) << ", method "
      << to_string(prep.coupling.method) << ", dt = " << format_number(prep.coupling.dt) << '\n';
  std::snprintf(buf, sizeof buf, "%-10s %-6s %-12s %-6s %-14s %-14s %s\n", "subdomain", "theta", "dt_i", "eta", "omega",
                "dt_critical", "K");
  out << buf;
  for (const auto& s : r.subdomains) {
    std::snprintf(buf, sizeof buf, "%-10d %-6g %-12g %-6d %-14.6g %-14s %s\n", s.id, s.theta, s.dt_sub, s.eta,
                  s.spectrum.omega, std::isinf(s.dt_critical) ? "inf" : format_number(s.dt_critical).c_str(),
                  s.spectrum.symmetric_k ? "symmetric" : "nonsymmetric");
    out << buf;
  }
  out << "alpha_max = " << (std::isinf(r.alpha_max) ? std::string("inf") : format_number(r.alpha_max)) << '\n';
  for (const auto& v : r.verdicts()) out << v << '\n';
  return r;
}

// ---------------------------------------------------------------------------
// convergence

double observed_order(const std::vector<ConvergenceLevel>& levels) {
  if (levels.size() < 2) throw ConfigError("an observed order needs at least two levels");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(levels.size());
  for (const auto& l : levels) {
    if (!(l.dt > 0.0) || !(l.error > 0.0)) throw NumericalError("observed order needs positive dt and error");
    double x = std::log(l.dt), y = std::log(l.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<Vector> state_at(const CoupledSystem& system, const CouplingConfig& config, const std::vector<Vector>& d0,
                             double t) {
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  Stepper stepper(system, config);
  SystemState s = initial_state(system, d0);
  if (std::abs(s.time - t) <= tol) return s.d;
  if (t < s.time) throw ConfigError("time " + format_number(t) + " precedes the initial state");
  for (;;) {
    const bool crosses = s.time + config.dt > t + tol;
    StepDiagnostics diag;
    StepOptions options;
    options.record_sublevels = crosses;
    SystemState next = stepper.step(s, diag, options);
    if (std::abs(next.time - t) <= tol) return next.d;
    if (crosses) {
      std::vector<Vector> out;
      for (int i = 0; i < system.subdomain_count(); ++i) {
        const auto& sub = system.subdomains[i];
        long j = std::lround((t - s.time) / sub.dt_sub);
        if (j < 1 || j > sub.eta || std::abs(s.time + j * sub.dt_sub - t) > tol) {
          throw ConfigError("time " + format_number(t) + " is not a sublevel of subdomain " + std::to_string(i + 1));
        }
        out.push_back(diag.sublevel_d[i][j - 1]);
      }
      return out;
    }
    s = std::move(next);
  }
}

namespace {

struct LevelResult {
  AssembledProblem assembled;
  std::vector<Vector> d;
};

LevelResult solve_level(const ProblemDefinition& base, const CouplingConfig& config, double dt, double scale,
                        bool fixed_substeps, double t_eval) {
  ProblemDefinition p = base;
  CouplingConfig c = config;
  c.dt = dt;
  if (!fixed_substeps) {
    for (auto& s : p.subdomains) s.dt_sub *= scale;
  }
  c.n_steps = p.steps_for(dt);
  LevelResult out;
  out.assembled = assemble_problem(p, c);
  out.d = state_at(out.assembled.system, c, out.assembled.d0, t_eval);
  return out;
}

}  // namespace

ConvergenceTable convergence_study(const ProblemDefinition& problem, const CouplingConfig& base,
                                   const std::vector<double>& dts, bool fixed_substeps, double t_eval) {
  if (dts.size() < 3) throw ConfigError("a convergence study needs at least 3 levels");
  ConvergenceTable table;
  const bool exact = problem.reference_kind == "exact" && static_cast<bool>(problem.reference);
  table.reference = exact ? "exact" : "finest";
  const double dt0 = base.dt;
  // Every level runs independently; results land in a fixed order.
  std::vector<std::future<LevelResult>> jobs;
  std::vector<double> all = dts;
  if (!exact) all.push_back(dts.back() / 2.0);
  for (double dt : all) {
    jobs.push_back(std::async(std::launch::deferred, solve_level, std::cref(problem), std::cref(base), dt, dt / dt0,
                              fixed_substeps, t_eval));
  }
  std::vector<LevelResult> results;
  for (auto& j : jobs) results.push_back(j.get());
  for (std::size_t k = 0; k < dts.size(); ++k) {
    double e = 0.0;
    if (exact) {
      e = copy_error(problem, results[k].assembled, results[k].d, t_eval);
    } else {
      for (std::size_t i = 0; i < results[k].d.size(); ++i) {
        e = std::max(e, (results[k].d[i] - results.back().d[i]).cwiseAbs().maxCoeff());
      }
    }
    table.levels.push_back({dts[k], e});
  }
  table.observed_order = observed_order(table.levels);
  return table;
}

ConvergenceTable cmd_convergence(const RunConfig& config, std::ostream& out) {
  if (config.convergence_levels < 3) {
    throw ConfigError("convergence needs at least 3 levels, got " + std::to_string(config.convergence_levels));
  }
  PreparedProblem prep = prepare_problem(config);
  if (prep.bimolecular) throw ConfigError("convergence studies run on single problems");
  std::vector<double> dts;
  for (int k = 0; k < config.convergence_levels; ++k) dts.push_back(prep.coupling.dt / std::pow(2.0, k));
  ConvergenceTable t =
      convergence_study(prep.single, prep.coupling, dts, config.convergence_fixed_substeps, prep.single.t_end);

  ensure_directory(config.output.directory);
  CsvWriter csv((fs::path(config.output.directory) / "convergence.csv").string(), {"dt", "error"});
  out << "reference: " << t.reference << ", t = " << format_number(prep.single.t_end) << '\n';
  char buf[128];
  for (const auto& l : t.levels) {
    std::snprintf(buf, sizeof buf, "dt = %-12g error = %.6e\n", l.dt, l.error);
    out << buf;
    csv.row(std::vector<double>{l.dt, l.error});
  }
  std::snprintf(buf, sizeof buf, "observed order = %.4f\n", t.observed_order);
  out << buf;
  return t;
}

// ---------------------------------------------------------------------------
// mesh-info

void cmd_mesh_info(const std::string& mesh_path, std::ostream& out) {
  Mesh mesh = load_mesh(mesh_path);
  validate_mesh(mesh);
  MeshSummary s = summarize(mesh);
  out << "dimension " << s.dimension << "\nnodes " << s.nodes << '\n';
  for (const auto& [kind, n] : s.elements_by_kind) out << "elements " << kind << ' ' << n << '\n';
  for (const auto& [name, n] : s.boundary_set_sizes) out << "set " << name << ' ' << n << '\n';
  out << "measure " << format_number(s.measure) << "\nelement size " << format_number(s.min_element_size) << " .. "
      << format_number(s.max_element_size) << '\n';
}

}  // namespace mts
