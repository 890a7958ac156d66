#include "mts/analysis.hpp"
#include "mts/problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace mts;

namespace {

AssembledProblem sdof(int case_index, ConstraintMethod method, CouplingConfig& config) {
  ProblemDefinition p = sdof_problem(case_index, method);
  config = p.coupling;
  config.n_steps = p.steps_for(config.dt);
  return assemble_problem(p, config);
}

bool contains(const std::vector<std::string>& lines, const std::string& text) {
  for (const auto& l : lines)
    if (l.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("critical time-step") {
  DenseMatrix I = DenseMatrix::Identity(3, 3);
  CHECK(std::isinf(critical_dt(I, DenseMatrix(100.0 * I), 0.5)));
  CHECK(std::isinf(critical_dt(I, DenseMatrix(100.0 * I), 1.0)));
  CHECK(critical_dt(I, DenseMatrix(100.0 * I), 0.0) == doctest::Approx(0.02));
  CHECK(critical_dt(DenseMatrix::Constant(1, 1, 1.0), DenseMatrix::Constant(1, 1, 100.0), 0.0) == doctest::Approx(0.02));
  CHECK(std::isinf(critical_dt_from_omega(0.0, 0.0)));
  CHECK_THROWS(critical_dt(DenseMatrix::Zero(2, 2), DenseMatrix(I.topLeftCorner(2, 2)), 0.0));

  // nondecreasing in θ on [0, 1/2)
  ProblemDefinition p = diffusion_1d_problem();
  CouplingConfig c = p.coupling;
  auto a = assemble_problem(p, c);
  const auto& s = a.system.subdomains[1];
  double previous = 0.0;
  for (double theta : {0.0, 0.1, 0.2, 0.3, 0.4, 0.49}) {
    double dt = critical_dt(s.M, s.K, theta);
    CHECK(dt >= previous);
    previous = dt;
  }
}

TEST_CASE("generalized eigenvalue: dense and iterative agree") {
  ProblemDefinition p = diffusion_1d_problem();
  CouplingConfig c = p.coupling;
  auto a = assemble_problem(p, c);
  const auto& s = a.system.subdomains[0];
  SpectralBound dense = max_generalized_eigenvalue(s.M, s.K);
  SpectralBound power = max_generalized_eigenvalue(s.M, s.K, 10);
  CHECK_FALSE(dense.iterative);
  CHECK(power.iterative);
  CHECK(dense.symmetric_k);
  CHECK(power.omega == doctest::Approx(dense.omega).epsilon(1e-6));
  CHECK(dense.omega >= 0.0);
}

TEST_CASE("alpha_max") {
  CHECK(std::isinf(alpha_max({{0.5, 3}, {1.0, 1}})));
  CHECK(alpha_max({{0.0, 1}}) == doctest::Approx(2.0));
  CHECK(alpha_max({{0.0, 5}, {0.25, 1}}) == doctest::Approx(4.0));
  CHECK(std::isinf(alpha_max({})));
  // +∞ exactly when every θ ≥ 1/2
  for (double t1 : {0.0, 0.3, 0.5, 1.0}) {
    for (double t2 : {0.0, 0.49, 0.5, 0.8}) {
      CHECK(std::isinf(alpha_max({{t1, 2}, {t2, 3}})) == (t1 >= 0.5 && t2 >= 0.5));
    }
  }
}

TEST_CASE("drift recursions") {
  Vector one = Vector::Ones(2);
  CHECK(predict_drift_dcontinuity(one, 1.0).norm() == 0.0);
  CHECK(predict_drift_dcontinuity(one, 0.5)[0] == -1.0);
  CHECK(predict_drift_dcontinuity(one, 0.75)[0] == doctest::Approx(-1.0 / 3.0));
  CHECK_THROWS(predict_drift_dcontinuity(one, 0.0));

  auto [d0, v0] = predict_drift_baumgarte(Vector::Zero(2), Vector::Zero(2), 0.5, 3.0, 0.1);
  CHECK(d0.norm() == 0.0);
  CHECK(v0.norm() == 0.0);
  auto [d_inf, v_inf] = predict_drift_baumgarte(one, one, 1.0, 1e12, 0.1);
  CHECK(d_inf.lpNorm<Eigen::Infinity>() < 1e-11);
  (void)v_inf;
  const double theta = 0.5, alpha = 2.0, dt = 0.1, d = 0.3, v = -0.7;
  auto [d1, v1] = predict_drift_baumgarte(Vector::Constant(1, d), Vector::Constant(1, v), theta, alpha, dt);
  CHECK(d1[0] == doctest::Approx(d / 2.0 + dt * 0.5 * v / 2.0));
  CHECK(v1[0] == doctest::Approx(-alpha * d / (dt * 2.0) - alpha * 0.5 * v / 2.0));
  // the pair satisfies the closure it came from
  CHECK(v1[0] + alpha / dt * d1[0] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("measured drift") {
  CouplingConfig c;
  auto a = sdof(2, ConstraintMethod::d_continuity, c);
  auto r = run(a.system, c, a.d0);
  DriftReport report = measure_drift(r.trajectory, a.system.constraints);
  CHECK(report.samples.size() == r.trajectory.size());
  CHECK(report.max_d_inf() <= 1e-10);
  for (const auto& s : report.samples) {
    CHECK(s.d_inf >= 0.0);
    CHECK(s.v_2 >= s.v_inf - 1e-300);
  }
}

TEST_CASE("perturbation probe") {
  CouplingConfig c;
  auto a = sdof(3, ConstraintMethod::d_continuity, c);
  SystemState s = initial_state(a.system, a.d0);

  Perturbation none;
  ProbeResult zero = perturbation_probe(a.system, c, s, none);
  CHECK(zero.delta_d == 0.0);
  CHECK(zero.delta_v == 0.0);
  CHECK(zero.delta_lambda == 0.0);

  // ε_d = O(Δt_i), Δ_λ = O(Δt), ε_λ = O(Δt²), entered as the terms added to the equations
  auto make = [](const CoupledSystem& sys, const CouplingConfig& cfg, double scale) {
    Perturbation p;
    for (int i = 0; i < sys.subdomain_count(); ++i) {
      const double h = sys.subdomains[i].dt_sub;
      p.d_update.push_back(Vector::Constant(1, (i == 0 ? 1.0 : -1.0) * scale * h * h));
    }
    p.lambda_interpolation = Vector::Constant(1, scale * cfg.dt * cfg.dt);
    const double eps_lambda = scale * cfg.dt * cfg.dt;
    p.constraint = Vector::Constant(1, cfg.method == ConstraintMethod::baumgarte ? eps_lambda / cfg.dt : eps_lambda);
    return p;
  };
  ProbeResult full = perturbation_probe(a.system, c, s, make(a.system, c, 1.0));
  ProbeResult half = perturbation_probe(a.system, c, s, make(a.system, c, 0.5));
  CHECK(half.delta_d == doctest::Approx(0.5 * full.delta_d).epsilon(1e-9));
  CHECK(half.delta_v == doctest::Approx(0.5 * full.delta_v).epsilon(1e-9));
  CHECK(half.delta_lambda == doctest::Approx(0.5 * full.delta_lambda).epsilon(1e-9));
  CHECK(half.max_ratio == doctest::Approx(full.max_ratio).epsilon(1e-9));
  CHECK(full.bounded);
  CHECK(full.delta_d > 0.0);
  CHECK(full.eps_d == doctest::Approx(a.system.subdomains[0].dt_sub + a.system.subdomains[1].dt_sub));

  // the weighted ratios play the role of step-independent constants: refining every step keeps them bounded
  for (ConstraintMethod method : {ConstraintMethod::d_continuity, ConstraintMethod::baumgarte}) {
    std::vector<double> ratios;
    for (double refine : {1.0, 0.5, 0.25, 0.125}) {
      ProblemDefinition p = sdof_problem(3, method);
      CouplingConfig cfg = p.coupling;
      cfg.dt *= refine;
      for (auto& sub : p.subdomains) sub.dt_sub *= refine;
      cfg.n_steps = p.steps_for(cfg.dt);
      auto b = assemble_problem(p, cfg);
      SystemState start = initial_state(b.system, b.d0);
      ProbeResult r = perturbation_probe(b.system, cfg, start, make(b.system, cfg, 1.0));
      CHECK(std::isfinite(r.max_ratio));
      ratios.push_back(r.max_ratio);
    }
    MESSAGE("weighted ratios: " << ratios[0] << " " << ratios[1] << " " << ratios[2] << " " << ratios[3]);
    for (std::size_t k = 1; k < ratios.size(); ++k) CHECK(ratios[k] <= 2.0 * ratios[0]);
  }
}

TEST_CASE("stability report for the split degree of freedom") {
  CouplingConfig c;
  auto a = sdof(2, ConstraintMethod::baumgarte, c);
  StabilityReport r = stability_report(a.system, c);
  REQUIRE(r.subdomains.size() == 2);
  CHECK(r.subdomains[1].spectrum.omega == doctest::Approx(100.0));
  CHECK(r.subdomains[1].dt_critical == doctest::Approx(0.02));
  CHECK(std::isinf(r.subdomains[0].dt_critical));
  CHECK(r.alpha_max == doctest::Approx(10.0));
  CHECK(r.stable());
  CHECK(contains(r.verdicts(), "within the proven stability bounds"));

  c.alpha = 20.0;
  CHECK_FALSE(stability_report(a.system, c).stable());

  CouplingConfig cd;
  auto b = sdof(3, ConstraintMethod::d_continuity, cd);
  StabilityReport implicit = stability_report(b.system, cd);
  CHECK(std::isinf(implicit.alpha_max));
}

TEST_CASE("stability report flags nonsymmetric transport") {
  ProblemDefinition p = hemker_2d_problem(HemkerPlan::galerkin);
  CouplingConfig c = p.coupling;
  auto a = assemble_problem(p, c);
  StabilityReport r = stability_report(a.system, c, false);
  CHECK_FALSE(r.symmetric_scope);
  CHECK(contains(r.verdicts(), "bounds proven for symmetric K only"));
}

TEST_CASE("energy functionals") {
  CouplingConfig c;
  auto a = sdof(2, ConstraintMethod::baumgarte, c);
  SystemState s = initial_state(a.system, a.d0);
  // v = -1 in both; Q_i = m_i + (2θ_i - 1)Δt_i k_i
  const double q = (100.0 + 0.0) + (1.0 + (-1.0) * 0.02 * 100.0);
  CHECK(energy_q(a.system, s) == doctest::Approx(q));
  // U_i = α m_i + Δt_i(η_i + α(2θ_i - 1)) k_i with η = (1, 5)
  const double u = (1.0 * 100.0 + 0.1 * (1.0 + 0.0) * 1.0) + (1.0 * 1.0 + 0.02 * (5.0 - 1.0) * 100.0);
  CHECK(energy_u(a.system, s, 1.0) == doctest::Approx(u));
}
