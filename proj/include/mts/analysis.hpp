#pragma once

#include "mts/common.hpp"
#include "mts/mts_core.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mts {

struct SpectralBound {
  double omega = 0.0;      // max real eigenvalue of M⁻¹K
  bool symmetric_k = true;  // false: omega is the max real part of a nonsymmetric spectrum
  bool iterative = false;   // computed by power iteration
};

// Dense generalized eigensolve up to dense_limit unknowns, power iteration above.
SpectralBound max_generalized_eigenvalue(const SparseMatrix& M, const SparseMatrix& K, int dense_limit = 2500);
SpectralBound max_generalized_eigenvalue(const DenseMatrix& M, const DenseMatrix& K);

double critical_dt_from_omega(double omega, double theta);
double critical_dt(const DenseMatrix& M, const DenseMatrix& K, double theta);
double critical_dt(const SparseMatrix& M, const SparseMatrix& K, double theta);

struct IntegratorSetting {
  double theta = 1.0;
  int eta = 1;
};
double alpha_max(const std::vector<IntegratorSetting>& settings);

// Rate drift after one system step under d-continuity (η = 1, uniform θ).
Vector predict_drift_dcontinuity(const Vector& v_drift, double theta);
// (d, v) drift after one system step under Baumgarte (η = 1, uniform θ).
std::pair<Vector, Vector> predict_drift_baumgarte(const Vector& d_drift, const Vector& v_drift, double theta,
                                                  double alpha, double dt);

struct DriftSample {
  int step = 0;
  double time = 0.0;
  Vector d_drift, v_drift;
  double d_inf = 0.0, d_2 = 0.0, v_inf = 0.0, v_2 = 0.0;
};

struct DriftReport {
  std::vector<DriftSample> samples;  // empty when there are no constraints
  double max_d_inf() const;
  double max_v_inf() const;
};

DriftReport measure_drift(const std::vector<SystemState>& trajectory, const ConstraintMap& constraints);

struct ProbeResult {
  double eps_d = 0.0, eps_lambda = 0.0, delta_interp = 0.0;  // ε_d (summed over subdomains), ε_λ, Δ_λ
  double delta_d = 0.0, delta_v = 0.0, delta_lambda = 0.0;   // ∞-norms of perturbed minus clean
  // δd over Δt Σε_d + φ ε_λ + Δt² Δ_λ; δv and δλ over Σε_d + (φ/Δt) ε_λ + Δt Δ_λ;
  // φ = 1 for d-continuity and Δt for Baumgarte
  double ratio_d = 0.0, ratio_v = 0.0, ratio_lambda = 0.0;
  double max_ratio = 0.0;
  bool bounded = true;
};

// One clean and one perturbed step from the same state.
ProbeResult perturbation_probe(const CoupledSystem& system, const CouplingConfig& config, const SystemState& state,
                               const Perturbation& perturbation, double ratio_cap = 100.0);

struct SubdomainStability {
  int id = 1;
  double theta = 1.0;
  double dt_sub = 0.0;
  int eta = 1;
  SpectralBound spectrum;
  double dt_critical = infinity;
  bool dt_ok = true;
};

struct StabilityReport {
  std::vector<SubdomainStability> subdomains;
  ConstraintMethod method = ConstraintMethod::d_continuity;
  double alpha = 0.0;
  double alpha_max = infinity;
  bool alpha_ok = true;
  bool symmetric_scope = true;  // every K symmetric, so the bounds are proven
  bool stable() const;
  std::vector<std::string> verdicts() const;
};

// all_spectra = false skips the eigensolve where θ ≥ ½ (ω is then NaN, Δt_critical infinite).
StabilityReport stability_report(const CoupledSystem& system, const CouplingConfig& config, bool all_spectra = true);

// Σ vᵢᵀQᵢvᵢ with Qᵢ = Mᵢ + (2θᵢ − 1)Δtᵢ sym Kᵢ.
double energy_q(const CoupledSystem& system, const SystemState& state);
// Σ vᵢᵀUᵢvᵢ with Uᵢ = αMᵢ + Δtᵢ(ηᵢ + α(2θᵢ − 1))Kᵢ.
double energy_u(const CoupledSystem& system, const SystemState& state, double alpha);

}  // namespace mts
