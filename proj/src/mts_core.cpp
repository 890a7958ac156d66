#include "mts/mts_core.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mts {

const char* to_string(ConstraintMethod m) {
  return m == ConstraintMethod::d_continuity ? "d-continuity" : "baumgarte";
}

ConstraintMethod constraint_method_from_string(const std::string& name) {
  if (name == "d-continuity" || name == "d_continuity" || name == "dcontinuity") return ConstraintMethod::d_continuity;
  if (name == "baumgarte") return ConstraintMethod::baumgarte;
  throw ConfigError("unknown constraint method '" + name + "' (expected d-continuity or baumgarte)");
}

int subcycle_count(double dt_system, double dt_sub, int subdomain_id) {
  if (!(dt_system > 0.0)) throw ConfigError("system time-step must be positive");
  if (!(dt_sub > 0.0)) {
    throw ConfigError("subdomain " + std::to_string(subdomain_id) + ": time-step must be positive");
  }
  double ratio = dt_system / dt_sub;
  long long eta = std::llround(ratio);
  if (eta < 1 || std::abs(static_cast<double>(eta) - ratio) > 1e-9 * ratio) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "subdomain " << subdomain_id << ": dt/dt_" << subdomain_id << " = " << ratio << " is not a positive integer";
    throw ConfigError(msg.str());
  }
  return static_cast<int>(eta);
}

void validate(const CoupledSystem& system, const CouplingConfig& config) {
  if (system.subdomains.empty()) throw ConfigError("no subdomains");
  if (!(config.dt > 0.0)) throw ConfigError("system time-step must be positive");
  if (config.n_steps < 0) throw ConfigError("step count must be nonnegative");
  if (config.method == ConstraintMethod::baumgarte && !(config.alpha > 0.0)) {
    throw ConfigError("Baumgarte stabilization needs alpha > 0");
  }
  if (config.newton.max_iters < 1) throw ConfigError("Newton iteration limit must be at least 1");
  if (system.constraints.subdomain_count() != system.subdomain_count() && system.constraints.n_lambda() > 0) {
    throw ConfigError("constraint map and subdomain list disagree");
  }
  for (int i = 0; i < system.subdomain_count(); ++i) {
    const auto& s = system.subdomains[i];
    const int id = i + 1;
    if (s.theta < 0.0 || s.theta > 1.0) throw ConfigError("subdomain " + std::to_string(id) + ": theta outside [0, 1]");
    int eta = subcycle_count(config.dt, s.dt_sub, id);
    if (eta != s.eta) {
      throw ConfigError("subdomain " + std::to_string(id) + ": eta = " + std::to_string(s.eta) +
                        " but dt/dt_i = " + std::to_string(eta));
    }
    if (s.M.rows() != s.M.cols() || s.K.rows() != s.M.rows()) {
      throw ConfigError("subdomain " + std::to_string(id) + ": matrix sizes disagree");
    }
    if (system.constraints.n_lambda() > 0 && system.constraints.subdomain_size(i) != s.size()) {
      throw ConfigError("subdomain " + std::to_string(id) + ": constraint map size disagrees with the system");
    }
  }
}

Vector interpolate_lambda(const Vector& lambda_n, const Vector& lambda_np1, int j, int eta) {
  if (eta < 1 || j + 1 < 0 || j + 1 > eta) throw Error("sublevel index out of range");
  if (lambda_n.size() != lambda_np1.size()) throw Error("multiplier vectors differ in length");
  double w = static_cast<double>(j + 1) / eta;
  return (1.0 - w) * lambda_n + w * lambda_np1;
}

Vector clip_negative(const Vector& d) { return d.cwiseMax(0.0); }

namespace {

using LU = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

void add_block(std::vector<Triplet>& t, const SparseMatrix& A, int row0, int col0, double scale) {
  if (scale == 0.0) return;
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      t.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()), scale * it.value());
    }
  }
}

void add_identity(std::vector<Triplet>& t, int n, int row0, int col0, double scale) {
  if (scale == 0.0) return;
  for (int k = 0; k < n; ++k) t.emplace_back(row0 + k, col0 + k, scale);
}

void factorize(LU& lu, const SparseMatrix& A, const char* what) {
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw NumericalError(std::string("singular ") + what + ": " + lu.lastErrorMessage());
}

double sublevel_time(const SystemState& state, const CouplingConfig& config, int j, int eta) {
  return state.time + config.dt * static_cast<double>(j) / eta;
}

bool all_finite(const Vector& x) { return x.allFinite(); }

const std::vector<ConstraintMap::ViewEntry>& entries_of(const ConstraintMap& C, int i) {
  static const std::vector<ConstraintMap::ViewEntry> none;
  return C.n_lambda() == 0 ? none : C.view(i);
}

}  // namespace

// ---------------------------------------------------------------------------
// initialization

Vector initial_lambda(const CoupledSystem& system, const std::vector<Vector>& d0, double* relative_residual) {
  const auto& C = system.constraints;
  const int n_sub = system.subdomain_count();
  if (static_cast<int>(d0.size()) != n_sub) throw Error("initial values needed for every subdomain");
  for (int i = 0; i < n_sub; ++i) {
    if (d0[i].size() != system.subdomains[i].size()) {
      throw Error("subdomain " + std::to_string(i + 1) + ": initial vector length mismatch");
    }
  }
  if (relative_residual) *relative_residual = 0.0;
  const int n_lambda = C.n_lambda();
  if (n_lambda == 0) return Vector(0);

  std::vector<Vector> h(n_sub);
  std::vector<int> offset(n_sub + 1, 0);
  std::vector<Triplet> t;
  for (int i = 0; i < n_sub; ++i) {
    const auto& s = system.subdomains[i];
    h[i] = s.rhs(d0[i], 0.0);
    offset[i + 1] = offset[i] + s.size();
    add_block(t, s.capacity(), offset[i], offset[i], 1.0);
  }
  const int lam0 = offset[n_sub];
  for (int i = 0; i < n_sub; ++i) {
    for (const auto& e : entries_of(C, i)) {
      t.emplace_back(offset[i] + e.dof, lam0 + e.row, -e.sign);
      t.emplace_back(lam0 + e.row, offset[i] + e.dof, e.sign);
    }
  }
  SparseMatrix A(lam0 + n_lambda, lam0 + n_lambda);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  Vector b = Vector::Zero(A.rows());
  for (int i = 0; i < n_sub; ++i) b.segment(offset[i], h[i].size()) = h[i];
  LU lu;
  factorize(lu, A, "interface Schur system (redundant constraints?)");
  Vector x = lu.solve(b);
  if (!all_finite(x)) throw NumericalError("non-finite initial multipliers");
  Vector lambda = x.tail(n_lambda);

  if (relative_residual) {
    // residual of the Schur form: Σ C_i M_i⁻¹ (h_i + C_iᵀλ) against Σ C_i M_i⁻¹ h_i
    Vector r = Vector::Zero(n_lambda), r0 = Vector::Zero(n_lambda);
    for (int i = 0; i < n_sub; ++i) {
      LU lm;
      factorize(lm, system.subdomains[i].capacity(), "capacity matrix");
      Vector mh = lm.solve(h[i]);
      C.apply_add(i, mh, r0);
      C.apply_add(i, lm.solve(h[i] + C.apply_transpose(i, lambda)), r);
    }
    double scale = r0.lpNorm<Eigen::Infinity>();
    *relative_residual = r.lpNorm<Eigen::Infinity>() / (scale > 0.0 ? scale : 1.0);
  }
  return lambda;
}

std::vector<Vector> initial_rates(const CoupledSystem& system, const std::vector<Vector>& d0, const Vector& lambda0,
                                  double* relative_residual) {
  const auto& C = system.constraints;
  std::vector<Vector> v;
  double worst = 0.0;
  for (int i = 0; i < system.subdomain_count(); ++i) {
    const auto& s = system.subdomains[i];
    Vector rhs = s.rhs(d0[i], 0.0);
    if (C.n_lambda() > 0) rhs += C.apply_transpose(i, lambda0);
    SparseMatrix Mi = s.capacity();
    LU lu;
    factorize(lu, Mi, "capacity matrix");
    Vector vi = lu.solve(rhs);
    if (!all_finite(vi)) throw NumericalError("non-finite initial rates");
    double scale = rhs.lpNorm<Eigen::Infinity>();
    worst = std::max(worst, (Mi * vi - rhs).lpNorm<Eigen::Infinity>() / (scale > 0.0 ? scale : 1.0));
    v.push_back(std::move(vi));
  }
  if (relative_residual) *relative_residual = worst;
  return v;
}

SystemState initial_state(const CoupledSystem& system, const std::vector<Vector>& d0, double t0) {
  SystemState s;
  s.d = d0;
  s.lambda = initial_lambda(system, d0);
  s.v = initial_rates(system, d0, s.lambda);
  s.time = t0;
  return s;
}

// ---------------------------------------------------------------------------
// monolithic system

int MonolithicLayout::v_index(const CoupledSystem& s, int i, int j) const {
  return offset[i] + (j - 1) * 2 * s.subdomains[i].size();
}

int MonolithicLayout::d_index(const CoupledSystem& s, int i, int j) const {
  return v_index(s, i, j) + s.subdomains[i].size();
}

MonolithicLayout monolithic_layout(const CoupledSystem& system) {
  MonolithicLayout layout;
  int pos = 0;
  for (const auto& s : system.subdomains) {
    layout.offset.push_back(pos);
    pos += 2 * s.eta * s.size();
  }
  layout.lambda_offset = pos;
  layout.size = pos + system.constraints.n_lambda();
  return layout;
}

namespace {

const Vector& guess_at(const SublevelGuess& guess, const SystemState& state, int i, int j) {
  if (guess.empty()) return state.d[i];
  return guess[i][j - 1];
}

SparseMatrix build_matrix(const CoupledSystem& system, const CouplingConfig& config, const MonolithicLayout& layout,
                          const SystemState& state, const SublevelGuess& guess) {
  std::vector<Triplet> t;
  const auto& C = system.constraints;
  for (int i = 0; i < system.subdomain_count(); ++i) {
    const auto& s = system.subdomains[i];
    const int n = s.size(), eta = s.eta;
    const double theta = s.theta, h = s.dt_sub;
    for (int j = 1; j <= eta; ++j) {
      const double tj = sublevel_time(state, config, j, eta);
      const int rv = layout.v_index(system, i, j), rd = rv + n;
      TransportOperators ops = s.operators(tj);
      add_block(t, s.M, rv, rv, 1.0);
      add_block(t, ops.M_stab, rv, rv, theta);
      if (s.affine()) {
        add_block(t, ops.K, rv, rd, 1.0);
      } else {
        add_block(t, s.rhs_jacobian(guess_at(guess, state, i, j), tj), rv, rd, -1.0);
      }
      add_identity(t, n, rd, rv, -theta * h);
      add_identity(t, n, rd, rd, 1.0);
      if (j > 1) {
        const int pv = layout.v_index(system, i, j - 1), pd = pv + n;
        add_block(t, ops.M_stab, rv, pv, 1.0 - theta);
        add_identity(t, n, rd, pv, -(1.0 - theta) * h);
        add_identity(t, n, rd, pd, -1.0);
      }
      const double w = static_cast<double>(j) / eta;
      for (const auto& e : entries_of(C, i)) t.emplace_back(rv + e.dof, layout.lambda_offset + e.row, -w * e.sign);
    }
    const int fv = layout.v_index(system, i, eta), fd = fv + n;
    for (const auto& e : entries_of(C, i)) {
      const int row = layout.lambda_offset + e.row;
      if (config.method == ConstraintMethod::d_continuity) {
        t.emplace_back(row, fd + e.dof, e.sign);
      } else {
        t.emplace_back(row, fv + e.dof, e.sign);
        t.emplace_back(row, fd + e.dof, e.sign * config.alpha / config.dt);
      }
    }
  }
  SparseMatrix A(layout.size, layout.size);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

Vector build_rhs(const CoupledSystem& system, const CouplingConfig& config, const MonolithicLayout& layout,
                 const SystemState& state, const SublevelGuess& guess, const Perturbation* pert) {
  Vector b = Vector::Zero(layout.size);
  const auto& C = system.constraints;
  const bool has_lambda = C.n_lambda() > 0;
  for (int i = 0; i < system.subdomain_count(); ++i) {
    const auto& s = system.subdomains[i];
    const int n = s.size(), eta = s.eta;
    const double theta = s.theta, h = s.dt_sub;
    Vector ct_lambda = has_lambda ? C.apply_transpose(i, state.lambda) : Vector::Zero(n);
    if (pert && pert->lambda_interpolation.size() > 0) ct_lambda += C.apply_transpose(i, pert->lambda_interpolation);
    for (int j = 1; j <= eta; ++j) {
      const double tj = sublevel_time(state, config, j, eta);
      const int rv = layout.v_index(system, i, j), rd = rv + n;
      Vector top;
      if (s.affine()) {
        top = s.forcing(tj);
      } else {
        const Vector& dg = guess_at(guess, state, i, j);
        top = s.rhs(dg, tj) - s.rhs_jacobian(dg, tj) * dg;
      }
      top += ct_lambda;
      if (j == 1) {
        if (s.has_stabilization_mass() || s.operators_at) {
          top -= (1.0 - theta) * (s.operators(tj).M_stab * state.v[i]);
        }
        b.segment(rd, n) = state.d[i] + (1.0 - theta) * h * state.v[i];
      }
      if (pert && !pert->d_update.empty() && pert->d_update[i].size() > 0) b.segment(rd, n) += pert->d_update[i];
      b.segment(rv, n) = top;
    }
  }
  if (pert && pert->constraint.size() > 0) b.tail(C.n_lambda()) = pert->constraint;
  return b;
}

}  // namespace

MonolithicSystem assemble_monolithic(const CoupledSystem& system, const SystemState& state,
                                     const CouplingConfig& config, const SublevelGuess& guess,
                                     const Perturbation* perturbation) {
  MonolithicSystem out;
  out.layout = monolithic_layout(system);
  out.matrix = build_matrix(system, config, out.layout, state, guess);
  out.rhs = build_rhs(system, config, out.layout, state, guess, perturbation);
  return out;
}

// ---------------------------------------------------------------------------
// stepping

struct Stepper::Impl {
  const CoupledSystem& system;
  CouplingConfig config;
  MonolithicLayout layout;
  bool reusable = true;
  bool factor_valid = false;
  SparseMatrix matrix;
  LU lu;

  Impl(const CoupledSystem& s, const CouplingConfig& c) : system(s), config(c), layout(monolithic_layout(s)) {
    validate(system, config);
    for (const auto& sub : system.subdomains) reusable = reusable && sub.affine() && sub.steady_operators();
  }
};

Stepper::Stepper(const CoupledSystem& system, const CouplingConfig& config)
    : impl_(std::make_unique<Impl>(system, config)) {}
Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;

SystemState Stepper::step(const SystemState& state, StepDiagnostics& diag, const StepOptions& options,
                          const Perturbation* perturbation) {
  Impl& m = *impl_;
  const auto& sys = m.system;
  const auto& cfg = m.config;
  const auto& C = sys.constraints;
  const int n_sub = sys.subdomain_count();
  diag = StepDiagnostics{};

  bool all_affine = true;
  for (const auto& s : sys.subdomains) all_affine = all_affine && s.affine();

  SublevelGuess guess(n_sub);
  Vector x_prev = Vector::Zero(m.layout.size);
  for (int i = 0; i < n_sub; ++i) {
    const int eta = sys.subdomains[i].eta, n = sys.subdomains[i].size();
    guess[i].assign(eta, state.d[i]);
    for (int j = 1; j <= eta; ++j) {
      x_prev.segment(m.layout.v_index(sys, i, j), n) = state.v[i];
      x_prev.segment(m.layout.d_index(sys, i, j), n) = state.d[i];
    }
  }

  Vector x;
  const auto& newton = cfg.newton;
  for (int it = 1;; ++it) {
    if (!m.reusable || !m.factor_valid) {
      m.matrix = build_matrix(sys, cfg, m.layout, state, guess);
      factorize(m.lu, m.matrix, "monolithic matrix");
      m.factor_valid = true;
      diag.refactorized = true;
    }
    Vector b = build_rhs(sys, cfg, m.layout, state, guess, perturbation);
    x = m.lu.solve(b);
    if (!all_finite(x)) throw NumericalError("non-finite solution of the monolithic system at step " +
                                             std::to_string(state.step + 1));
    diag.linear_residual = (m.matrix * x - b).lpNorm<Eigen::Infinity>();
    diag.increment_norm = (x - x_prev).lpNorm<Eigen::Infinity>();
    diag.newton_iterations = it;
    const bool converged = diag.increment_norm <= newton.abs_tol + newton.rel_tol * x.lpNorm<Eigen::Infinity>();
    for (int i = 0; i < n_sub; ++i) {
      const int n = sys.subdomains[i].size();
      for (int j = 1; j <= sys.subdomains[i].eta; ++j) guess[i][j - 1] = x.segment(m.layout.d_index(sys, i, j), n);
    }
    x_prev = x;
    if (all_affine && !newton.verify_affine) break;
    if (converged) break;
    if (it >= newton.max_iters) {
      std::ostringstream msg;
      msg << "Newton iteration did not converge at step " << state.step + 1 << " after " << it
          << " iterations (last increment " << diag.increment_norm << ")";
      throw NumericalError(msg.str());
    }
  }

  SystemState next;
  next.step = state.step + 1;
  next.time = state.time + cfg.dt;
  next.d.resize(n_sub);
  next.v.resize(n_sub);
  for (int i = 0; i < n_sub; ++i) {
    const auto& s = sys.subdomains[i];
    const int n = s.size();
    next.v[i] = x.segment(m.layout.v_index(sys, i, s.eta), n);
    next.d[i] = x.segment(m.layout.d_index(sys, i, s.eta), n);
    if (cfg.clip_negative) next.d[i] = clip_negative(next.d[i]);
  }
  next.lambda = state.lambda + x.tail(C.n_lambda());
  if (!next.lambda.allFinite()) throw NumericalError("non-finite multipliers at step " + std::to_string(next.step));

  if (options.record_sublevels) {
    diag.sublevel_d.resize(n_sub);
    for (int i = 0; i < n_sub; ++i) {
      const auto& s = sys.subdomains[i];
      diag.sublevel_dt.push_back(s.dt_sub);
      for (int j = 1; j <= s.eta; ++j) {
        Vector dj = x.segment(m.layout.d_index(sys, i, j), s.size());
        diag.sublevel_d[i].push_back(cfg.clip_negative ? clip_negative(dj) : dj);
      }
    }
  }

  if (C.n_lambda() > 0) {
    Vector dd = C.apply(next.d), vd = C.apply(next.v);
    diag.d_drift_inf = dd.lpNorm<Eigen::Infinity>();
    diag.d_drift_2 = dd.norm();
    diag.v_drift_inf = vd.lpNorm<Eigen::Infinity>();
    diag.v_drift_2 = vd.norm();
    diag.constraint_residual = cfg.method == ConstraintMethod::d_continuity
                                   ? diag.d_drift_inf
                                   : (vd + (cfg.alpha / cfg.dt) * dd).lpNorm<Eigen::Infinity>();
  }
  return next;
}

SystemState step(const SystemState& state, const CoupledSystem& system, const CouplingConfig& config,
                 StepDiagnostics* diagnostics) {
  Stepper stepper(system, config);
  StepDiagnostics local;
  return stepper.step(state, diagnostics ? *diagnostics : local);
}

RunResult run(const CoupledSystem& system, const CouplingConfig& config, const SystemState& initial,
              const std::vector<Observer>& observers, const RunOptions& options) {
  Stepper stepper(system, config);
  RunResult result;
  if (options.keep_trajectory) result.trajectory.push_back(initial);
  SystemState state = initial;
  StepOptions step_options;
  step_options.record_sublevels = options.record_sublevels;
  for (int n = 0; n < config.n_steps; ++n) {
    StepDiagnostics diag;
    state = stepper.step(state, diag, step_options);
    for (const auto& obs : observers) obs(state, diag);
    if (options.keep_trajectory) result.trajectory.push_back(state);
    result.diagnostics.push_back(std::move(diag));
  }
  result.final_state = std::move(state);
  return result;
}

RunResult run(const CoupledSystem& system, const CouplingConfig& config, const std::vector<Vector>& d0,
              const std::vector<Observer>& observers, const RunOptions& options) {
  validate(system, config);
  return run(system, config, initial_state(system, d0), observers, options);
}

}  // namespace mts
