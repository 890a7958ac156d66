#pragma once

#include "mts/assembly.hpp"
#include "mts/common.hpp"
#include "mts/decomposition.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mts {

enum class ConstraintMethod { d_continuity, baumgarte };

const char* to_string(ConstraintMethod m);
ConstraintMethod constraint_method_from_string(const std::string& name);

struct NewtonSettings {
  int max_iters = 50;
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  // Affine systems are exact after one solve; set to run the confirming second solve anyway.
  bool verify_affine = false;
};

struct CouplingConfig {
  ConstraintMethod method = ConstraintMethod::d_continuity;
  double alpha = 0.0;  // Baumgarte parameter
  double dt = 0.0;     // system time-step
  int n_steps = 0;
  NewtonSettings newton;
  bool clip_negative = false;
};

struct CoupledSystem {
  std::vector<SubdomainSystem> subdomains;
  ConstraintMap constraints;

  int subdomain_count() const { return static_cast<int>(subdomains.size()); }
};

// Throws ConfigError naming the offending subdomain.
void validate(const CoupledSystem& system, const CouplingConfig& config);

// Integer subcycling count Δt/Δt_i, or ConfigError when not integral.
int subcycle_count(double dt_system, double dt_sub, int subdomain_id);

struct SystemState {
  std::vector<Vector> d;
  std::vector<Vector> v;
  Vector lambda;
  double time = 0.0;
  int step = 0;
};

// Additive perturbations of one system step, given as the terms added to the equations:
// Δt_i ε_d on every sublevel update, Δt Δ_λ on the interpolated multipliers, and on the
// constraint right-hand side ε_λ (d-continuity) or ε_λ / Δt (Baumgarte).
struct Perturbation {
  std::vector<Vector> d_update;
  Vector lambda_interpolation;
  Vector constraint;
};

struct StepDiagnostics {
  int newton_iterations = 0;
  double increment_norm = 0.0;
  double linear_residual = 0.0;
  bool refactorized = false;
  double d_drift_inf = 0.0, d_drift_2 = 0.0;
  double v_drift_inf = 0.0, v_drift_2 = 0.0;
  double constraint_residual = 0.0;  // of the active closure
  // Filled when sublevels are recorded: [subdomain][sublevel 1..η]
  std::vector<std::vector<Vector>> sublevel_d;
  std::vector<double> sublevel_dt;
};

// Multiplier at sublevel j + 1 of η, 0 ≤ j + 1 ≤ η.
Vector interpolate_lambda(const Vector& lambda_n, const Vector& lambda_np1, int j, int eta);
Vector clip_negative(const Vector& d);

// Σ C_i M_i⁻¹ C_iᵀ λ = -Σ C_i M_i⁻¹ h_i(d_i, 0), solved through the equivalent sparse saddle-point system.
Vector initial_lambda(const CoupledSystem& system, const std::vector<Vector>& d0, double* relative_residual = nullptr);
std::vector<Vector> initial_rates(const CoupledSystem& system, const std::vector<Vector>& d0, const Vector& lambda0,
                                  double* relative_residual = nullptr);
SystemState initial_state(const CoupledSystem& system, const std::vector<Vector>& d0, double t0 = 0.0);

struct MonolithicLayout {
  std::vector<int> offset;  // first unknown of each subdomain block
  int lambda_offset = 0;
  int size = 0;

  // v and d of sublevel j (1-based) in subdomain i
  int v_index(const CoupledSystem& s, int i, int j) const;
  int d_index(const CoupledSystem& s, int i, int j) const;
};

MonolithicLayout monolithic_layout(const CoupledSystem& system);

struct MonolithicSystem {
  SparseMatrix matrix;
  Vector rhs;
  MonolithicLayout layout;
};

// Sublevel guesses for d per subdomain ([i][j-1] for j = 1..η); empty means hold d^n.
using SublevelGuess = std::vector<std::vector<Vector>>;

MonolithicSystem assemble_monolithic(const CoupledSystem& system, const SystemState& state,
                                     const CouplingConfig& config, const SublevelGuess& guess = {},
                                     const Perturbation* perturbation = nullptr);

struct StepOptions {
  bool record_sublevels = false;
};

// Owns the factorization cache; not thread-safe, one per run.
class Stepper {
 public:
  Stepper(const CoupledSystem& system, const CouplingConfig& config);
  ~Stepper();
  Stepper(Stepper&&) noexcept;

  SystemState step(const SystemState& state, StepDiagnostics& diagnostics, const StepOptions& options = {},
                   const Perturbation* perturbation = nullptr);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Single-call convenience wrapper.
SystemState step(const SystemState& state, const CoupledSystem& system, const CouplingConfig& config,
                 StepDiagnostics* diagnostics = nullptr);

using Observer = std::function<void(const SystemState&, const StepDiagnostics&)>;

struct RunOptions {
  bool keep_trajectory = true;
  bool record_sublevels = false;
};

struct RunResult {
  std::vector<SystemState> trajectory;        // initial state first
  std::vector<StepDiagnostics> diagnostics;   // one per accepted step
  SystemState final_state;
};

RunResult run(const CoupledSystem& system, const CouplingConfig& config, const SystemState& initial,
              const std::vector<Observer>& observers = {}, const RunOptions& options = {});
RunResult run(const CoupledSystem& system, const CouplingConfig& config, const std::vector<Vector>& d0,
              const std::vector<Observer>& observers = {}, const RunOptions& options = {});

}  // namespace mts
