#include "mts/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mts {

namespace {

bool is_symmetric(const DenseMatrix& A) {
  double scale = A.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

bool is_symmetric(const SparseMatrix& A) {
  SparseMatrix diff = A - SparseMatrix(A.transpose());
  double scale = 0.0, worst = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst <= 1e-12 * scale;
}

SpectralBound power_iteration(const SparseMatrix& M, const SparseMatrix& K) {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw NumericalError("mass matrix is singular");
  SpectralBound out;
  out.symmetric_k = is_symmetric(K);
  out.iterative = true;
  const int n = static_cast<int>(M.rows());
  Vector x(n);
  for (int k = 0; k < n; ++k) x[k] = 1.0 + 0.5 * std::sin(1.0 + 7.0 * k);  // deterministic, not an eigenvector
  x.normalize();
  double estimate = 0.0;
  for (int it = 0; it < 200000; ++it) {
    Vector y = lu.solve(K * x);
    double next;
    bool converged;
    if (out.symmetric_k) {
      // Rayleigh quotient in the M inner product; the M-weighted residual bounds its error
      const Vector mx = M * x;
      const double xmx = x.dot(mx);
      next = x.dot(K * x) / xmx;
      const Vector r = y - next * x;
      const double residual = std::sqrt(std::max(r.dot(M * r), 0.0) / xmx);
      converged = residual <= 1e-8 * std::max(std::abs(next), 1e-300);
    } else {
      next = x.dot(y);
      converged = it > 0 && std::abs(next - estimate) <= 1e-8 * std::max(std::abs(next), 1e-300);
    }
    estimate = next;
    double norm = y.norm();
    if (norm == 0.0) break;
    x = y / norm;
    if (converged) break;
  }
  out.omega = estimate;
  return out;
}

}  // namespace

SpectralBound max_generalized_eigenvalue(const DenseMatrix& M, const DenseMatrix& K) {
  if (M.rows() != M.cols() || K.rows() != K.cols() || M.rows() != K.rows()) {
    throw Error("mass and stiffness matrices must be square and of equal size");
  }
  SpectralBound out;
  if (M.rows() == 0) return out;
  out.symmetric_k = is_symmetric(K);
  Eigen::FullPivLU<DenseMatrix> lu(M);
  if (!lu.isInvertible()) throw NumericalError("mass matrix is singular");
  if (out.symmetric_k && is_symmetric(M)) {
    Eigen::LLT<DenseMatrix> llt(M);
    if (llt.info() == Eigen::Success) {
      Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(K, M, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw NumericalError("generalized eigensolve failed");
      out.omega = es.eigenvalues().maxCoeff();
      return out;
    }
  }
  DenseMatrix A = lu.solve(K);
  Eigen::EigenSolver<DenseMatrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolve failed");
  out.omega = es.eigenvalues().real().maxCoeff();
  return out;
}

SpectralBound max_generalized_eigenvalue(const SparseMatrix& M, const SparseMatrix& K, int dense_limit) {
  if (M.rows() <= dense_limit) return max_generalized_eigenvalue(DenseMatrix(M), DenseMatrix(K));
  return power_iteration(M, K);
}

double critical_dt_from_omega(double omega, double theta) {
  if (theta >= 0.5) return infinity;
  if (!(omega > 0.0)) return infinity;
  return 2.0 / ((1.0 - 2.0 * theta) * omega);
}

double critical_dt(const DenseMatrix& M, const DenseMatrix& K, double theta) {
  if (theta >= 0.5) return infinity;
  return critical_dt_from_omega(max_generalized_eigenvalue(M, K).omega, theta);
}

double critical_dt(const SparseMatrix& M, const SparseMatrix& K, double theta) {
  if (theta >= 0.5) return infinity;
  return critical_dt_from_omega(max_generalized_eigenvalue(M, K).omega, theta);
}

double alpha_max(const std::vector<IntegratorSetting>& settings) {
  double out = infinity;
  for (const auto& s : settings) {
    if (s.theta < 0.5) out = std::min(out, 2.0 * s.eta / (1.0 - 2.0 * s.theta));
  }
  return out;
}

Vector predict_drift_dcontinuity(const Vector& v_drift, double theta) {
  if (!(theta > 0.0) || theta > 1.0) throw Error("rate drift recursion needs theta in (0, 1]");
  return (1.0 - 1.0 / theta) * v_drift;
}

std::pair<Vector, Vector> predict_drift_baumgarte(const Vector& d_drift, const Vector& v_drift, double theta,
                                                  double alpha, double dt) {
  const double den = 1.0 + alpha * theta;
  Vector d = d_drift / den + (dt * (1.0 - theta) / den) * v_drift;
  Vector v = (-alpha / (dt * den)) * d_drift - (alpha * (1.0 - theta) / den) * v_drift;
  return {d, v};
}

double DriftReport::max_d_inf() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.d_inf);
  return m;
}

double DriftReport::max_v_inf() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.v_inf);
  return m;
}

DriftReport measure_drift(const std::vector<SystemState>& trajectory, const ConstraintMap& constraints) {
  DriftReport report;
  if (constraints.n_lambda() == 0) return report;
  for (const auto& state : trajectory) {
    DriftSample s;
    s.step = state.step;
    s.time = state.time;
    s.d_drift = constraints.apply(state.d);
    s.v_drift = constraints.apply(state.v);
    s.d_inf = s.d_drift.lpNorm<Eigen::Infinity>();
    s.d_2 = s.d_drift.norm();
    s.v_inf = s.v_drift.lpNorm<Eigen::Infinity>();
    s.v_2 = s.v_drift.norm();
    report.samples.push_back(std::move(s));
  }
  return report;
}

ProbeResult perturbation_probe(const CoupledSystem& system, const CouplingConfig& config, const SystemState& state,
                               const Perturbation& perturbation, double ratio_cap) {
  ProbeResult out;
  const double dt = config.dt;
  for (std::size_t i = 0; i < perturbation.d_update.size() && i < system.subdomains.size(); ++i) {
    if (perturbation.d_update[i].size() == 0) continue;
    out.eps_d += perturbation.d_update[i].lpNorm<Eigen::Infinity>() / system.subdomains[i].dt_sub;
  }
  if (perturbation.lambda_interpolation.size() > 0) {
    out.delta_interp = perturbation.lambda_interpolation.lpNorm<Eigen::Infinity>() / dt;
  }
  const bool baumgarte = config.method == ConstraintMethod::baumgarte;
  if (perturbation.constraint.size() > 0) {
    out.eps_lambda = perturbation.constraint.lpNorm<Eigen::Infinity>() * (baumgarte ? dt : 1.0);
  }
  const double phi = baumgarte ? dt : 1.0;
  const double weight_d = dt * out.eps_d + phi * out.eps_lambda + dt * dt * out.delta_interp;
  const double weight_v = out.eps_d + phi / dt * out.eps_lambda + dt * out.delta_interp;
  Stepper stepper(system, config);
  StepDiagnostics diag;
  SystemState clean = stepper.step(state, diag);
  SystemState perturbed = stepper.step(state, diag, {}, &perturbation);
  for (int i = 0; i < system.subdomain_count(); ++i) {
    out.delta_d = std::max(out.delta_d, (perturbed.d[i] - clean.d[i]).lpNorm<Eigen::Infinity>());
    out.delta_v = std::max(out.delta_v, (perturbed.v[i] - clean.v[i]).lpNorm<Eigen::Infinity>());
  }
  if (clean.lambda.size() > 0) out.delta_lambda = (perturbed.lambda - clean.lambda).lpNorm<Eigen::Infinity>();
  if (weight_d > 0.0) out.ratio_d = out.delta_d / weight_d;
  if (weight_v > 0.0) {
    out.ratio_v = out.delta_v / weight_v;
    out.ratio_lambda = out.delta_lambda / weight_v;
  }
  out.max_ratio = std::max({out.ratio_d, out.ratio_v, out.ratio_lambda});
  out.bounded = std::isfinite(out.max_ratio) && out.max_ratio <= ratio_cap;
  return out;
}

bool StabilityReport::stable() const {
  if (!alpha_ok) return false;
  for (const auto& s : subdomains)
    if (!s.dt_ok) return false;
  return true;
}

std::vector<std::string> StabilityReport::verdicts() const {
  std::vector<std::string> out;
  char buf[256];
  for (const auto& s : subdomains) {
    if (method == ConstraintMethod::d_continuity) {
      std::snprintf(buf, sizeof buf, "subdomain %d: theta = %g %s", s.id, s.theta,
                    s.dt_ok ? "ok (>= 1/2)" : "VIOLATES theta >= 1/2 for d-continuity");
    } else if (std::isinf(s.dt_critical)) {
      std::snprintf(buf, sizeof buf, "subdomain %d: dt_i = %g, no time-step limit", s.id, s.dt_sub);
    } else {
      std::snprintf(buf, sizeof buf, "subdomain %d: dt_i = %g %s dt_critical = %g", s.id, s.dt_sub,
                    s.dt_ok ? "<=" : "EXCEEDS", s.dt_critical);
    }
    out.emplace_back(buf);
  }
  if (method == ConstraintMethod::baumgarte) {
    if (std::isinf(alpha_max)) {
      std::snprintf(buf, sizeof buf, "alpha = %g, alpha_max = inf", alpha);
    } else {
      std::snprintf(buf, sizeof buf, "alpha = %g %s alpha_max = %g", alpha, alpha_ok ? "<=" : "EXCEEDS", alpha_max);
    }
    out.emplace_back(buf);
  }
  out.emplace_back(stable() ? "verdict: within the proven stability bounds" : "verdict: outside the proven bounds");
  if (!symmetric_scope) out.emplace_back("bounds proven for symmetric K only");
  return out;
}

StabilityReport stability_report(const CoupledSystem& system, const CouplingConfig& config, bool all_spectra) {
  StabilityReport r;
  r.method = config.method;
  r.alpha = config.alpha;
  std::vector<IntegratorSetting> settings;
  for (const auto& s : system.subdomains) {
    SubdomainStability ss;
    ss.id = s.id;
    ss.theta = s.theta;
    ss.dt_sub = s.dt_sub;
    ss.eta = s.eta;
    SparseMatrix K = s.operators(0.0).K;
    if (all_spectra || s.theta < 0.5) {
      ss.spectrum = max_generalized_eigenvalue(s.capacity(), K);
      ss.dt_critical = critical_dt_from_omega(ss.spectrum.omega, s.theta);
    } else {
      ss.spectrum.omega = std::numeric_limits<double>::quiet_NaN();
      ss.spectrum.symmetric_k = is_symmetric(K);
    }
    if (config.method == ConstraintMethod::d_continuity) {
      ss.dt_ok = s.theta >= 0.5;
    } else {
      ss.dt_ok = s.dt_sub <= ss.dt_critical * (1.0 + 1e-12);
    }
    r.symmetric_scope = r.symmetric_scope && ss.spectrum.symmetric_k;
    settings.push_back({s.theta, s.eta});
    r.subdomains.push_back(ss);
  }
  r.alpha_max = alpha_max(settings);
  r.alpha_ok = config.method == ConstraintMethod::d_continuity || config.alpha <= r.alpha_max * (1.0 + 1e-12);
  return r;
}

double energy_q(const CoupledSystem& system, const SystemState& state) {
  double total = 0.0;
  for (int i = 0; i < system.subdomain_count(); ++i) {
    const auto& s = system.subdomains[i];
    const Vector& v = state.v[i];
    SparseMatrix K = s.operators(state.time).K;
    total += v.dot(s.capacity() * v) + (2.0 * s.theta - 1.0) * s.dt_sub * v.dot(K * v);
  }
  return total;
}

double energy_u(const CoupledSystem& system, const SystemState& state, double alpha) {
  double total = 0.0;
  for (int i = 0; i < system.subdomain_count(); ++i) {
    const auto& s = system.subdomains[i];
    const Vector& v = state.v[i];
    SparseMatrix K = s.operators(state.time).K;
    total += alpha * v.dot(s.capacity() * v) + s.dt_sub * (s.eta + alpha * (2.0 * s.theta - 1.0)) * v.dot(K * v);
  }
  return total;
}

}  // namespace mts
