#pragma once

#include "mts/assembly.hpp"
#include "mts/common.hpp"
#include "mts/decomposition.hpp"
#include "mts/mesh.hpp"
#include "mts/mts_core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mts {

struct SubdomainSetting {
  double theta = 1.0;
  double dt_sub = 0.0;
  Formulation formulation = Formulation::galerkin;
};

struct ProblemDefinition {
  std::string name;

  // Mesh-based problems.
  Mesh mesh;
  PartitionMap partition;
  TransportCoefficients coefficients;
  BoundaryConditions bc;
  ScalarField initial;

  // Lumped problems build their subdomain systems directly.
  std::function<CoupledSystem(const std::vector<SubdomainSetting>&, const CouplingConfig&)> lumped;
  std::vector<Vector> lumped_initial;

  std::vector<SubdomainSetting> subdomains;
  CouplingConfig coupling;  // defaults; n_steps follows from t_end
  double t_end = 1.0;

  // Exact nodal solution and multipliers, when known.
  ScalarField reference;
  std::function<Vector(double)> reference_lambda;
  std::string reference_kind;  // "exact", "steady" or empty

  bool is_lumped() const { return static_cast<bool>(lumped); }
  int subdomain_count() const { return static_cast<int>(subdomains.size()); }
  int steps_for(double dt) const;
};

struct AssembledProblem {
  CoupledSystem system;
  DofMaps dofs;  // empty for lumped problems
  std::vector<Vector> d0;
};

// Uses config.dt and the per-subdomain settings of the definition.
AssembledProblem assemble_problem(const ProblemDefinition& problem, const CouplingConfig& config,
                                  const AssemblyOptions& options = {});

// Field sampled at the free dofs of every subdomain.
std::vector<Vector> restrict_field(const ProblemDefinition& problem, const DofMaps& dofs, const ScalarField& field,
                                   double t);

struct NodalField {
  Vector value;  // mean of the subdomain copies, prescribed value on Dirichlet nodes
  Vector jump;   // largest deviation of a copy from the mean
};

NodalField global_field(const ProblemDefinition& problem, const AssembledProblem& assembled,
                        const std::vector<Vector>& d, double t);

// L2 norm of (interpolant - exact) over the elements of one subdomain (0 = all), and of exact.
struct L2Error {
  double error = 0.0;
  double norm = 0.0;
  double relative() const { return norm > 0.0 ? error / norm : error; }
};
L2Error l2_error(const Mesh& mesh, const PartitionMap& partition, const Vector& nodal, const ScalarField& exact,
                 double t, int subdomain_id = 0);

std::string fixture_directory();
std::string fixture_path(const std::string& file);

enum class FixtureSize { reduced, full };
FixtureSize fixture_size_from_string(const std::string& name);

// Two single-dof subdomains, m = (100, 1), k = (1, 100), c(0) = 1, exact c = e^{-t}.
// Time parameters follow the benchmark table row for the method.
ProblemDefinition sdof_problem(int case_index = 3, ConstraintMethod method = ConstraintMethod::d_continuity);
// The same dynamics as one subdomain: 101 ċ + 101 c = 0.
ProblemDefinition sdof_reduced_problem();

inline constexpr double singular_epsilon = 0.01;
double singular_steady(double x, double eps = singular_epsilon);
// Sine-series solution from zero initial data.
double singular_transient(double x, double t, double eps = singular_epsilon);
ProblemDefinition singular_1d_problem(int case_index = 2, ConstraintMethod method = ConstraintMethod::d_continuity);
// Same mesh, no source, c(x, 0) = sin(pi x).
ProblemDefinition diffusion_1d_problem();

enum class HemkerPlan { galerkin, split };
HemkerPlan hemker_plan_from_string(const std::string& name);
ProblemDefinition hemker_2d_problem(HemkerPlan plan, ConstraintMethod method = ConstraintMethod::d_continuity,
                                    FixtureSize size = FixtureSize::reduced);

struct Stoichiometry {
  double n_a = 1.0, n_b = 1.0, n_c = 1.0;
};

struct SpeciesFields {
  Vector a, b, c;
};

std::pair<Vector, Vector> invariants_transform(const Stoichiometry& s, const Vector& c_a, const Vector& c_b,
                                               const Vector& c_c);
SpeciesFields recover_species(const Stoichiometry& s, const Vector& c_f, const Vector& c_g);

struct BimolecularScenario {
  std::string name;
  Stoichiometry stoichiometry;
  ProblemDefinition invariant_f;
  ProblemDefinition invariant_g;
};

Eigen::Matrix2d bimolecular_diffusivity(const Point& x, double gamma = 0.001);
BimolecularScenario diffusion_bimolecular_problem(FixtureSize size = FixtureSize::reduced);

Eigen::Vector2d stream_velocity(const Point& x);
// Uniform flow from A_k = 0 is (1, 0).
Eigen::Vector2d stream_velocity(const Point& x, const std::array<double, 3>& amplitudes);
Eigen::Matrix2d dispersion_tensor(const Eigen::Vector2d& v, double alpha_l = 1.0, double alpha_t = 1e-4);
BimolecularScenario advective_bimolecular_problem(FixtureSize size = FixtureSize::reduced);

std::vector<std::string> builtin_problem_names();
// variant: "caseN" for the lumped and 1D benchmarks, "galerkin" or "split" for hemker_2d.
ProblemDefinition builtin_problem(const std::string& name, const std::string& variant = "",
                                  ConstraintMethod method = ConstraintMethod::d_continuity,
                                  FixtureSize size = FixtureSize::reduced);
BimolecularScenario builtin_scenario(const std::string& name, FixtureSize size = FixtureSize::reduced);
bool is_bimolecular(const std::string& name);

}  // namespace mts
