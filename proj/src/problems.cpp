#include "mts/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#ifndef MTS_DEFAULT_FIXTURE_DIR
#define MTS_DEFAULT_FIXTURE_DIR "data/fixtures/v1"
#endif

namespace mts {

namespace {

constexpr double pi = 3.14159265358979323846;

ScalarField constant_field(double value) {
  return [value](const Point&, double) { return value; };
}

int parse_case(const std::string& variant, int fallback) {
  if (variant.empty()) return fallback;
  std::string digits = variant.rfind("case", 0) == 0 ? variant.substr(4) : variant;
  try {
    std::size_t used = 0;
    int value = std::stoi(digits, &used);
    if (used == digits.size()) return value;
  } catch (const std::exception&) {
  }
  throw ConfigError("unknown variant '" + variant + "' (expected caseN)");
}

}  // namespace

int ProblemDefinition::steps_for(double dt) const {
  if (!(dt > 0.0)) throw ConfigError("system time-step must be positive");
  return static_cast<int>(std::ceil(t_end / dt - 1e-9));
}

AssembledProblem assemble_problem(const ProblemDefinition& problem, const CouplingConfig& config,
                                  const AssemblyOptions& options) {
  AssembledProblem out;
  if (problem.is_lumped()) {
    out.system = problem.lumped(problem.subdomains, config);
    out.d0 = problem.lumped_initial;
    return out;
  }
  if (problem.subdomain_count() != problem.partition.subdomain_count) {
    throw ConfigError("problem '" + problem.name + "' has " + std::to_string(problem.partition.subdomain_count) +
                      " subdomains but " + std::to_string(problem.subdomain_count()) + " subdomain settings");
  }
  out.dofs = build_dof_maps(problem.mesh, problem.partition, problem.bc.dirichlet_nodes(problem.mesh));
  for (int i = 0; i < problem.subdomain_count(); ++i) {
    const auto& s = problem.subdomains[i];
    IntegratorParams params{s.theta, s.dt_sub, subcycle_count(config.dt, s.dt_sub, i + 1)};
    out.system.subdomains.push_back(assemble_subdomain(problem.mesh, problem.partition, out.dofs, i,
                                                       problem.coefficients, s.formulation, params, problem.bc,
                                                       options));
  }
  out.system.constraints = build_constraints(out.dofs);
  ScalarField initial = problem.initial ? problem.initial : constant_field(0.0);
  out.d0 = restrict_field(problem, out.dofs, initial, 0.0);
  return out;
}

std::vector<Vector> restrict_field(const ProblemDefinition& problem, const DofMaps& dofs, const ScalarField& field,
                                   double t) {
  std::vector<Vector> out;
  for (const auto& map : dofs.subdomains) {
    Vector v(map.size());
    for (int k = 0; k < map.size(); ++k) v[k] = field(problem.mesh.nodes[map.dof_to_node[k]], t);
    out.push_back(std::move(v));
  }
  return out;
}

NodalField global_field(const ProblemDefinition& problem, const AssembledProblem& assembled,
                        const std::vector<Vector>& d, double t) {
  NodalField out;
  if (problem.is_lumped()) {
    Eigen::Index n = 0;
    for (const auto& x : d) n = std::max(n, x.size());
    out.value = Vector::Zero(n);
    out.jump = Vector::Zero(n);
    Vector count = Vector::Zero(n);
    for (const auto& x : d) {
      out.value.head(x.size()) += x;
      count.head(x.size()).array() += 1.0;
    }
    out.value.array() /= count.array().max(1.0);
    for (const auto& x : d)
      for (Eigen::Index k = 0; k < x.size(); ++k) out.jump[k] = std::max(out.jump[k], std::abs(x[k] - out.value[k]));
    return out;
  }
  const auto& mesh = problem.mesh;
  const int n_nodes = static_cast<int>(mesh.nodes.size());
  out.value = Vector::Zero(n_nodes);
  out.jump = Vector::Zero(n_nodes);
  std::vector<int> count(n_nodes, 0);
  const auto& dofs = assembled.dofs;
  for (std::size_t i = 0; i < dofs.subdomains.size(); ++i) {
    const auto& map = dofs.subdomains[i];
    for (int k = 0; k < map.size(); ++k) {
      out.value[map.dof_to_node[k]] += d[i][k];
      ++count[map.dof_to_node[k]];
    }
  }
  for (int n = 0; n < n_nodes; ++n) {
    if (count[n] > 0) {
      out.value[n] /= count[n];
    } else if (dofs.is_dirichlet[n]) {
      const DirichletCondition* cond = problem.bc.dirichlet_for(mesh, n);
      if (cond) out.value[n] = cond->value(mesh.nodes[n], t);
    }
  }
  for (std::size_t i = 0; i < dofs.subdomains.size(); ++i) {
    const auto& map = dofs.subdomains[i];
    for (int k = 0; k < map.size(); ++k) {
      int n = map.dof_to_node[k];
      out.jump[n] = std::max(out.jump[n], std::abs(d[i][k] - out.value[n]));
    }
  }
  return out;
}

L2Error l2_error(const Mesh& mesh, const PartitionMap& partition, const Vector& nodal, const ScalarField& exact,
                 double t, int subdomain_id) {
  if (nodal.size() != static_cast<Eigen::Index>(mesh.nodes.size())) throw Error("nodal vector length mismatch");
  double err2 = 0.0, norm2 = 0.0;
  auto accumulate = [&](const Point& x, double uh, double w) {
    double u = exact(x, t);
    err2 += w * (uh - u) * (uh - u);
    norm2 += w * u * u;
  };
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    if (subdomain_id > 0 && partition.element_to_subdomain[e] != subdomain_id) continue;
    const auto& el = mesh.elements[e];
    const auto& nd = el.nodes;
    switch (el.kind) {
      case ElementKind::line2: {
        const Point& a = mesh.nodes[nd[0]];
        const Point& b = mesh.nodes[nd[1]];
        double len = std::abs(b[0] - a[0]);
        const double g = std::sqrt(0.6) / 2.0;
        const double s[3] = {0.5 - g, 0.5, 0.5 + g};
        const double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
        for (int q = 0; q < 3; ++q) {
          Point x{a[0] + s[q] * (b[0] - a[0]), 0.0};
          accumulate(x, (1.0 - s[q]) * nodal[nd[0]] + s[q] * nodal[nd[1]], w[q] * len);
        }
        break;
      }
      case ElementKind::tri3: {
        double area = element_measure(mesh, el);
        for (int a = 0; a < 3; ++a) {
          int b = (a + 1) % 3;
          const Point& p = mesh.nodes[nd[a]];
          const Point& r = mesh.nodes[nd[b]];
          Point mid{0.5 * (p[0] + r[0]), 0.5 * (p[1] + r[1])};
          accumulate(mid, 0.5 * (nodal[nd[a]] + nodal[nd[b]]), area / 3.0);
        }
        break;
      }
      case ElementKind::quad4: {
        const double g = 1.0 / std::sqrt(3.0);
        for (double xi : {-g, g}) {
          for (double et : {-g, g}) {
            double N[4] = {0.25 * (1 - xi) * (1 - et), 0.25 * (1 + xi) * (1 - et), 0.25 * (1 + xi) * (1 + et),
                           0.25 * (1 - xi) * (1 + et)};
            double dxi[4] = {-0.25 * (1 - et), 0.25 * (1 - et), 0.25 * (1 + et), -0.25 * (1 + et)};
            double det[4] = {-0.25 * (1 - xi), -0.25 * (1 + xi), 0.25 * (1 + xi), 0.25 * (1 - xi)};
            Point x{0.0, 0.0};
            double J[2][2] = {{0, 0}, {0, 0}}, uh = 0.0;
            for (int a = 0; a < 4; ++a) {
              const Point& p = mesh.nodes[nd[a]];
              x[0] += N[a] * p[0];
              x[1] += N[a] * p[1];
              J[0][0] += dxi[a] * p[0];
              J[0][1] += dxi[a] * p[1];
              J[1][0] += det[a] * p[0];
              J[1][1] += det[a] * p[1];
              uh += N[a] * nodal[nd[a]];
            }
            accumulate(x, uh, std::abs(J[0][0] * J[1][1] - J[0][1] * J[1][0]));
          }
        }
        break;
      }
    }
  }
  return {std::sqrt(err2), std::sqrt(norm2)};
}

std::string fixture_directory() {
  if (const char* env = std::getenv("MTS_FIXTURE_DIR"); env && *env) return env;
  return MTS_DEFAULT_FIXTURE_DIR;
}

std::string fixture_path(const std::string& file) {
  std::filesystem::path p = std::filesystem::path(fixture_directory()) / file;
  if (!std::filesystem::exists(p)) {
    throw ConfigError("missing fixture '" + p.string() + "' (set MTS_FIXTURE_DIR to the fixture directory)");
  }
  return p.string();
}

FixtureSize fixture_size_from_string(const std::string& name) {
  if (name.empty() || name == "reduced") return FixtureSize::reduced;
  if (name == "full") return FixtureSize::full;
  throw ConfigError("unknown fixture size '" + name + "' (expected reduced or full)");
}

namespace {

const char* size_tag(FixtureSize size) { return size == FixtureSize::full ? "full" : "reduced"; }

void load_fixture(ProblemDefinition& p, const std::string& stem, FixtureSize size) {
  std::string base = stem + "_" + size_tag(size);
  p.mesh = load_mesh(fixture_path(base + ".mesh"));
  p.partition = load_partition(fixture_path(base + ".part"), p.mesh);
}

std::vector<SubdomainSetting> settings(const std::vector<double>& dts, const std::vector<double>& thetas) {
  std::vector<SubdomainSetting> out;
  for (std::size_t i = 0; i < dts.size(); ++i) out.push_back({thetas[i], dts[i], Formulation::galerkin});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// split degree of freedom

ProblemDefinition sdof_problem(int case_index, ConstraintMethod method) {
  ProblemDefinition p;
  p.name = "sdof";
  p.coupling.method = method;
  if (method == ConstraintMethod::d_continuity) {
    switch (case_index) {
      case 1: p.coupling.dt = 0.5; p.subdomains = settings({0.25, 0.5}, {1.0, 0.5}); break;
      case 2: p.coupling.dt = 0.5; p.subdomains = settings({0.05, 0.1}, {1.0, 0.5}); break;
      case 3: p.coupling.dt = 0.1; p.subdomains = settings({0.05, 0.1}, {1.0, 0.5}); break;
      default: throw ConfigError("sdof d-continuity cases are 1-3");
    }
  } else {
    switch (case_index) {
      case 1: p.coupling.dt = 0.5; p.coupling.alpha = 1.0; break;
      case 2: p.coupling.dt = 0.1; p.coupling.alpha = 1.0; break;
      case 3: p.coupling.dt = 0.5; p.coupling.alpha = 25.0; break;
      default: throw ConfigError("sdof Baumgarte cases are 1-3");
    }
    p.subdomains = settings({0.1, 0.02}, {0.5, 0.0});
  }
  p.t_end = 1.0;
  p.lumped_initial = {Vector::Ones(1), Vector::Ones(1)};
  p.lumped = [](const std::vector<SubdomainSetting>& s, const CouplingConfig& config) {
    if (s.size() != 2) throw ConfigError("sdof has two subdomains");
    const double m[2] = {100.0, 1.0}, k[2] = {1.0, 100.0};
    CoupledSystem sys;
    for (int i = 0; i < 2; ++i) {
      IntegratorParams params{s[i].theta, s[i].dt_sub, subcycle_count(config.dt, s[i].dt_sub, i + 1)};
      auto sub = make_dense_subdomain(DenseMatrix::Constant(1, 1, m[i]), DenseMatrix::Constant(1, 1, k[i]), nullptr,
                                      params);
      sub.id = i + 1;
      sys.subdomains.push_back(std::move(sub));
    }
    sys.constraints = ConstraintMap({1, 1}, {ConstraintRow{{0, 0, +1}, {1, 0, -1}, 0}});
    return sys;
  };
  p.reference = [](const Point&, double t) { return std::exp(-t); };
  p.reference_lambda = [](double t) { return Vector::Constant(1, -99.0 * std::exp(-t)); };
  p.reference_kind = "exact";
  return p;
}

ProblemDefinition sdof_reduced_problem() {
  ProblemDefinition p;
  p.name = "sdof_reduced";
  p.coupling.dt = 0.1;
  p.subdomains = settings({0.1}, {1.0});
  p.t_end = 1.0;
  p.lumped_initial = {Vector::Ones(1)};
  p.lumped = [](const std::vector<SubdomainSetting>& s, const CouplingConfig& config) {
    if (s.size() != 1) throw ConfigError("sdof_reduced has one subdomain");
    IntegratorParams params{s[0].theta, s[0].dt_sub, subcycle_count(config.dt, s[0].dt_sub, 1)};
    CoupledSystem sys;
    sys.subdomains.push_back(
        make_dense_subdomain(DenseMatrix::Constant(1, 1, 101.0), DenseMatrix::Constant(1, 1, 101.0), nullptr, params));
    sys.constraints = ConstraintMap({1}, {});
    return sys;
  };
  p.reference = [](const Point&, double t) { return std::exp(-t); };
  p.reference_kind = "exact";
  return p;
}

// ---------------------------------------------------------------------------
// one-dimensional singular perturbation

double singular_steady(double x, double eps) {
  // (e^{-x/ε} + e^{-(1-x)/ε}) / (1 + e^{-1/ε}) written without overflow
  double num = std::exp(-x / eps) + std::exp(-(1.0 - x) / eps);
  return 1.0 - num / (1.0 + std::exp(-1.0 / eps));
}

double singular_transient(double x, double t, double eps) {
  if (t <= 0.0) return 0.0;
  const double a2 = 1.0 / (eps * eps);
  double decayed = 0.0;
  for (int k = 1;; k += 2) {
    const double kp = k * pi;
    const double rate = 1.0 + eps * eps * kp * kp;
    if (rate * t > 80.0) break;
    const double b = 4.0 * a2 / (kp * (a2 + kp * kp));
    decayed += b * std::exp(-rate * t) * std::sin(kp * x);
  }
  return singular_steady(x, eps) - decayed;
}

namespace {

ProblemDefinition three_region_rod() {
  ProblemDefinition p;
  auto [mesh, partition] = build_interval_mesh({0.1, 0.8, 0.1}, {100, 100, 100});
  p.mesh = std::move(mesh);
  p.partition = std::move(partition);
  p.coefficients.diffusivity = isotropic_diffusivity(singular_epsilon * singular_epsilon);
  p.coefficients.decay = 1.0;
  p.bc.dirichlet.push_back({"left", constant_field(0.0), nullptr, false});
  p.bc.dirichlet.push_back({"right", constant_field(0.0), nullptr, false});
  return p;
}

}  // namespace

ProblemDefinition singular_1d_problem(int case_index, ConstraintMethod method) {
  ProblemDefinition p = three_region_rod();
  p.name = "singular_1d";
  p.coefficients.source = constant_field(1.0);
  p.initial = constant_field(0.0);
  p.coupling.method = method;
  if (method == ConstraintMethod::d_continuity) {
    switch (case_index) {
      case 1: p.coupling.dt = 0.25; p.subdomains = settings({0.05, 0.25, 0.05}, {0.5, 1.0, 0.5}); break;
      case 2: p.coupling.dt = 0.25; p.subdomains = settings({0.05, 0.01, 0.05}, {0.5, 1.0, 0.5}); break;
      case 3: p.coupling.dt = 0.1; p.subdomains = settings({0.1, 0.1, 0.1}, {0.5, 0.5, 0.5}); break;
      default: throw ConfigError("singular_1d d-continuity cases are 1-3");
    }
  } else {
    switch (case_index) {
      case 1: p.coupling.dt = 0.25; p.coupling.alpha = 1; p.subdomains = settings({0.125, 0.25, 0.125}, {0.5, 0.0, 0.5}); break;
      case 2: p.coupling.dt = 0.25; p.coupling.alpha = 5; p.subdomains = settings({0.125, 0.05, 0.125}, {0.5, 0.0, 0.5}); break;
      case 3: p.coupling.dt = 0.25; p.coupling.alpha = 5; p.subdomains = settings({0.00125, 0.25, 0.00125}, {0.0, 1.0, 0.0}); break;
      case 4: p.coupling.dt = 0.25; p.coupling.alpha = 1; p.subdomains = settings({0.0025, 0.25, 0.0025}, {0.0, 1.0, 0.0}); break;
      case 5: p.coupling.dt = 0.1; p.coupling.alpha = 1; p.subdomains = settings({0.1, 0.1, 0.1}, {0.5, 0.5, 0.5}); break;
      default: throw ConfigError("singular_1d Baumgarte cases are 1-5");
    }
  }
  p.t_end = 1.0;
  p.reference = [](const Point& x, double) { return singular_steady(x[0]); };
  p.reference_kind = "steady";
  return p;
}

ProblemDefinition diffusion_1d_problem() {
  ProblemDefinition p = three_region_rod();
  p.name = "diffusion_1d";
  p.initial = [](const Point& x, double) { return std::sin(pi * x[0]); };
  p.coupling.dt = 0.25;
  p.subdomains = settings({0.05, 0.25, 0.05}, {0.5, 1.0, 0.5});
  p.t_end = 500 * 0.25;
  return p;
}

// ---------------------------------------------------------------------------
// Hemker

HemkerPlan hemker_plan_from_string(const std::string& name) {
  if (name.empty() || name == "galerkin") return HemkerPlan::galerkin;
  if (name == "split") return HemkerPlan::split;
  throw ConfigError("unknown hemker_2d variant '" + name + "' (expected galerkin or split)");
}

ProblemDefinition hemker_2d_problem(HemkerPlan plan, ConstraintMethod method, FixtureSize size) {
  ProblemDefinition p;
  p.name = "hemker_2d";
  load_fixture(p, "hemker", size);
  if (p.partition.subdomain_count != 3) throw ConfigError("hemker fixture must have three subdomains");
  p.coefficients.velocity = [](const Point&, double) { return Eigen::Vector2d(1.0, 0.0); };
  p.coefficients.diffusivity = isotropic_diffusivity(0.01);
  p.bc.dirichlet.push_back({"circle", constant_field(1.0), nullptr, false});
  p.bc.dirichlet.push_back({"left", constant_field(0.0), nullptr, false});
  p.initial = constant_field(0.0);
  p.coupling.method = method;
  const bool dcon = method == ConstraintMethod::d_continuity;
  if (plan == HemkerPlan::galerkin) {
    p.coupling.dt = dcon ? 0.1 : 0.2;
    p.coupling.alpha = dcon ? 0.0 : 1.0;
    p.subdomains = dcon ? settings({0.001, 0.01, 0.1}, {0.5, 1.0, 1.0}) : settings({0.01, 0.05, 0.02}, {0.5, 1.0, 0.0});
  } else {
    p.coupling.dt = 0.2;
    p.coupling.alpha = dcon ? 0.0 : 1.0;
    p.subdomains = dcon ? settings({0.001, 0.005, 0.2}, {0.5, 1.0, 1.0}) : settings({0.001, 0.005, 0.02}, {1.0, 0.5, 0.0});
    p.subdomains[0].formulation = Formulation::gls;
    p.subdomains[1].formulation = Formulation::supg;
  }
  p.t_end = 5.0;
  return p;
}

// ---------------------------------------------------------------------------
// bimolecular reactions

std::pair<Vector, Vector> invariants_transform(const Stoichiometry& s, const Vector& c_a, const Vector& c_b,
                                               const Vector& c_c) {
  return {c_a + (s.n_a / s.n_c) * c_c, c_b + (s.n_b / s.n_c) * c_c};
}

SpeciesFields recover_species(const Stoichiometry& s, const Vector& c_f, const Vector& c_g) {
  if (c_f.size() != c_g.size()) throw Error("invariant fields differ in length");
  SpeciesFields out;
  const double r = s.n_a / s.n_b;
  out.a = (c_f - r * c_g).cwiseMax(0.0);
  out.b = (s.n_b / s.n_a) * (r * c_g - c_f).cwiseMax(0.0);
  out.c = (s.n_c / s.n_a) * (c_f - out.a);
  return out;
}

namespace {

struct Prescription {
  std::string set;
  double a = 0.0, b = 0.0, c = 0.0;
};

BimolecularScenario make_scenario(const std::string& name, const ProblemDefinition& base,
                                  const std::vector<Prescription>& prescribed, const Stoichiometry& s) {
  BimolecularScenario sc;
  sc.name = name;
  sc.stoichiometry = s;
  sc.invariant_f = base;
  sc.invariant_g = base;
  sc.invariant_f.name = name + "/F";
  sc.invariant_g.name = name + "/G";
  for (const auto& pr : prescribed) {
    double f = pr.a + (s.n_a / s.n_c) * pr.c;
    double g = pr.b + (s.n_b / s.n_c) * pr.c;
    sc.invariant_f.bc.dirichlet.push_back({pr.set, constant_field(f), nullptr, false});
    sc.invariant_g.bc.dirichlet.push_back({pr.set, constant_field(g), nullptr, false});
  }
  return sc;
}

}  // namespace

Eigen::Matrix2d bimolecular_diffusivity(const Point& p, double gamma) {
  const double x = p[0], y = p[1];
  Eigen::Matrix2d D;
  D << gamma * x * x + y * y, -(1.0 - gamma) * x * y, -(1.0 - gamma) * x * y, x * x + gamma * y * y;
  return D;
}

BimolecularScenario diffusion_bimolecular_problem(FixtureSize size) {
  ProblemDefinition base;
  load_fixture(base, "bimolecular_diffusion", size);
  if (base.partition.subdomain_count != 4) throw ConfigError("diffusion bimolecular fixture must have four subdomains");
  base.coefficients.diffusivity = [](const Point& x) { return bimolecular_diffusivity(x); };
  base.initial = constant_field(0.0);
  base.coupling.method = ConstraintMethod::baumgarte;
  base.coupling.alpha = 100.0;
  base.coupling.dt = 1e-3;
  base.coupling.clip_negative = true;
  base.subdomains = settings({5e-4, 1e-3, 5e-4, 1e-3}, {1.0, 0.5, 1.0, 0.5});
  base.t_end = 0.1;
  return make_scenario("diffusion_bimolecular", base, {{"inlet_a", 1.0, 0.0, 0.0}, {"inlet_b", 0.0, 1.0, 0.0}}, {});
}

Eigen::Vector2d stream_velocity(const Point& x, const std::array<double, 3>& amplitudes) {
  const double lx = 4.0, ly = 1.0;
  const double p[3] = {4.0, 5.0, 10.0}, q[3] = {1.0, 5.0, 10.0};
  // ψ = -y - Σ A_k cos(P_k x - π/2) sin(Q_k y);  v = (-∂ψ/∂y, ∂ψ/∂x)
  double vx = 1.0, vy = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double P = p[k] * pi / lx, Q = q[k] * pi / ly;
    vx += amplitudes[k] * Q * std::cos(P * x[0] - pi / 2) * std::cos(Q * x[1]);
    vy += amplitudes[k] * P * std::sin(P * x[0] - pi / 2) * std::sin(Q * x[1]);
  }
  return {vx, vy};
}

Eigen::Vector2d stream_velocity(const Point& x) { return stream_velocity(x, {0.08, 0.02, 0.01}); }

Eigen::Matrix2d dispersion_tensor(const Eigen::Vector2d& v, double alpha_l, double alpha_t) {
  const double speed = std::max(v.norm(), 1e-12);
  return alpha_t * speed * Eigen::Matrix2d::Identity() + ((alpha_l - alpha_t) / speed) * (v * v.transpose());
}

BimolecularScenario advective_bimolecular_problem(FixtureSize size) {
  ProblemDefinition base;
  load_fixture(base, "bimolecular_advective", size);
  if (base.partition.subdomain_count != 4) throw ConfigError("advective bimolecular fixture must have four subdomains");
  base.coefficients.velocity = [](const Point& x, double) { return stream_velocity(x); };
  base.coefficients.diffusivity = [](const Point& x) { return dispersion_tensor(stream_velocity(x)); };
  base.initial = constant_field(0.0);
  base.coupling.method = ConstraintMethod::d_continuity;
  base.coupling.dt = 0.1;
  base.coupling.clip_negative = true;
  base.subdomains = settings({0.01, 0.05, 0.01, 0.05}, {1.0, 0.5, 1.0, 0.5});
  base.t_end = 4.0;
  return make_scenario("advective_bimolecular", base,
                       {{"left_lower", 1.0, 0.0, 0.0}, {"left_upper", 0.0, 1.5, 0.0}}, {});
}

// ---------------------------------------------------------------------------
// registry

std::vector<std::string> builtin_problem_names() {
  return {"sdof", "sdof_reduced", "singular_1d", "diffusion_1d", "hemker_2d", "diffusion_bimolecular",
          "advective_bimolecular"};
}

bool is_bimolecular(const std::string& name) {
  return name == "diffusion_bimolecular" || name == "advective_bimolecular";
}

ProblemDefinition builtin_problem(const std::string& name, const std::string& variant, ConstraintMethod method,
                                  FixtureSize size) {
  const bool dcon = method == ConstraintMethod::d_continuity;
  if (name == "sdof") return sdof_problem(parse_case(variant, dcon ? 3 : 2), method);
  if (name == "sdof_reduced") return sdof_reduced_problem();
  if (name == "singular_1d") return singular_1d_problem(parse_case(variant, dcon ? 2 : 5), method);
  if (name == "diffusion_1d") {
    ProblemDefinition p = diffusion_1d_problem();
    p.coupling.method = method;
    return p;
  }
  if (name == "hemker_2d") return hemker_2d_problem(hemker_plan_from_string(variant), method, size);
  if (is_bimolecular(name)) throw ConfigError("'" + name + "' is a two-invariant scenario");
  throw ConfigError("unknown problem '" + name + "'");
}

BimolecularScenario builtin_scenario(const std::string& name, FixtureSize size) {
  if (name == "diffusion_bimolecular") return diffusion_bimolecular_problem(size);
  if (name == "advective_bimolecular") return advective_bimolecular_problem(size);
  throw ConfigError("unknown bimolecular scenario '" + name + "'");
}

}  // namespace mts
