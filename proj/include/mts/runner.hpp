#pragma once

#include "mts/analysis.hpp"
#include "mts/problems.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mts {

struct SubdomainOverride {
  std::optional<double> theta;
  std::optional<double> dt_sub;
  std::optional<Formulation> formulation;
};

struct OutputSettings {
  std::string directory = "mts_out";
  int snapshot_every = 0;  // 0: initial and final state only
  bool timeseries = true;
};

// Expression strings over x, y, t for a problem defined entirely in the config.
struct CustomProblemSpec {
  std::string mesh_file;
  std::string partition_file;  // empty: every element in subdomain 1
  std::string velocity_x = "0", velocity_y = "0";
  std::string diffusivity_xx = "0", diffusivity_xy = "0", diffusivity_yy = "0";
  double decay = 0.0;
  std::string source = "0";
  std::string initial = "0";
  std::map<std::string, std::string> dirichlet;  // set -> value
  std::map<std::string, std::string> neumann;    // set -> flux
  std::string reference;                         // exact solution, optional
  double t_end = 0.0;
};

struct RunConfig {
  std::string source;  // file name, for messages

  std::string problem;
  std::string variant;
  FixtureSize fixtures = FixtureSize::reduced;
  std::optional<ConstraintMethod> method;

  std::optional<double> dt, alpha, t_end;
  std::optional<bool> clip;
  std::optional<int> newton_max_iters;
  std::optional<double> newton_abs_tol, newton_rel_tol;

  std::map<int, SubdomainOverride> subdomains;
  std::optional<CustomProblemSpec> custom;
  OutputSettings output;

  int convergence_levels = 0;
  bool convergence_fixed_substeps = false;  // keep Δt_i while Δt is halved
};

// INI text; relative file names resolve against base_dir. Throws ParseError or ConfigError.
RunConfig parse_run_config(std::istream& in, const std::string& base_dir = ".", const std::string& source = "");
RunConfig load_run_config(const std::string& path);

// Problem definitions with config overrides applied.
struct PreparedProblem {
  bool bimolecular = false;
  ProblemDefinition single;
  BimolecularScenario scenario;
  CouplingConfig coupling;  // n_steps set from t_end
  double t_end = 0.0;

  // The single problem, or invariant F of a scenario.
  const ProblemDefinition& primary() const { return bimolecular ? scenario.invariant_f : single; }
};

PreparedProblem prepare_problem(const RunConfig& config);

// Headline numbers of a finished run; the files hold the rest.
struct RunOutcome {
  std::string summary_path;
  double max_d_drift = 0.0;
  double max_v_drift = 0.0;
  std::optional<double> max_abs_error;
  std::vector<std::string> warnings;
};

// Writes timeseries.csv, snapshots and summary.json under the output directory.
RunOutcome cmd_run(const RunConfig& config, std::ostream& log);

StabilityReport cmd_analyze(const RunConfig& config, std::ostream& out);

struct ConvergenceLevel {
  double dt = 0.0;
  double error = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceLevel> levels;
  double observed_order = 0.0;
  std::string reference;  // "exact" or "finest"
};

// Least-squares slope of log(error) against log(dt).
double observed_order(const std::vector<ConvergenceLevel>& levels);

// Subdomain d at time t; when t falls between system levels the recorded sublevel that lands on t is used.
std::vector<Vector> state_at(const CoupledSystem& system, const CouplingConfig& config, const std::vector<Vector>& d0,
                             double t);

// Error per level is the largest deviation of any subdomain copy at t_eval, against the exact solution or,
// without one, against one extra halving of the finest level.
ConvergenceTable convergence_study(const ProblemDefinition& problem, const CouplingConfig& base,
                                   const std::vector<double>& dts, bool fixed_substeps, double t_eval);
ConvergenceTable cmd_convergence(const RunConfig& config, std::ostream& out);

void cmd_mesh_info(const std::string& mesh_path, std::ostream& out);

}  // namespace mts
