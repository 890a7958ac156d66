#include "mts/expression.hpp"
#include "mts/problems.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

using namespace mts;

namespace {

// ψ for the advective scenario, written independently of the library's closed form.
const char* stream_function =
    "-y - 0.08*cos(4*pi*x/4 - pi/2)*sin(1*pi*y/1) - 0.02*cos(5*pi*x/4 - pi/2)*sin(5*pi*y/1)"
    " - 0.01*cos(10*pi*x/4 - pi/2)*sin(10*pi*y/1)";

}  // namespace

TEST_CASE("split degree of freedom definition") {
  ProblemDefinition p = sdof_problem(3);
  CHECK(p.reference(Point{0, 0}, 1.0) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(p.reference_lambda(0.0)[0] == -99.0);
  CouplingConfig c = p.coupling;
  auto a = assemble_problem(p, c);
  REQUIRE(a.system.constraints.n_lambda() == 1);
  const auto& row = a.system.constraints.rows()[0];
  CHECK(row.plus.subdomain == 0);
  CHECK(row.minus.subdomain == 1);
  CHECK(DenseMatrix(a.system.subdomains[0].M)(0, 0) == 100.0);
  CHECK(DenseMatrix(a.system.subdomains[1].K)(0, 0) == 100.0);
  // the reduced equation: (m1 + m2) ċ + (k1 + k2) c = 0
  ProblemDefinition reduced = sdof_reduced_problem();
  CouplingConfig rc = reduced.coupling;
  auto r = assemble_problem(reduced, rc);
  CHECK(DenseMatrix(r.system.subdomains[0].M)(0, 0) == 101.0);
  CHECK(DenseMatrix(r.system.subdomains[0].K)(0, 0) == 101.0);
  CHECK_THROWS_AS(sdof_problem(4), ConfigError);
}

TEST_CASE("steady singular-perturbation solution") {
  CHECK(singular_steady(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(singular_steady(0.0)) <= 1e-15);
  CHECK(std::abs(singular_steady(1.0)) <= 1e-15);
  CHECK(singular_steady(0.03) == doctest::Approx(singular_steady(0.97)));
  // c - ε² c'' = 1 by central differences
  const double eps = singular_epsilon, h = 1e-4;
  for (double x : {0.005, 0.02, 0.3, 0.99}) {
    double c2 = (singular_steady(x + h) - 2 * singular_steady(x) + singular_steady(x - h)) / (h * h);
    CHECK(singular_steady(x) - eps * eps * c2 == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("transient singular-perturbation solution") {
  CHECK(singular_transient(0.4, 0.0) == 0.0);
  CHECK(std::abs(singular_transient(0.0, 0.5)) <= 1e-12);
  CHECK(singular_transient(0.5, 100.0) == doctest::Approx(singular_steady(0.5)));
  // mid-domain: c = 1 - e^{-t} away from the layers
  CHECK(singular_transient(0.5, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-3));
  // ∂c/∂t + c - ε² c'' = 1
  const double eps = singular_epsilon, h = 1e-4, k = 1e-5;
  for (double x : {0.03, 0.5}) {
    const double t = 0.5;
    double ct = (singular_transient(x, t + k) - singular_transient(x, t - k)) / (2 * k);
    double cxx = (singular_transient(x + h, t) - 2 * singular_transient(x, t) + singular_transient(x - h, t)) / (h * h);
    CHECK(ct + singular_transient(x, t) - eps * eps * cxx == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("one-dimensional benchmark configuration") {
  ProblemDefinition p = singular_1d_problem(2);
  CHECK(p.mesh.element_count() == 300);
  CHECK(p.partition.subdomain_count == 3);
  CHECK(p.reference_kind == "steady");
  CHECK(p.subdomains[1].dt_sub == 0.01);
  CHECK(p.steps_for(p.coupling.dt) == 4);
  CHECK_THROWS_AS(singular_1d_problem(9), ConfigError);
}

TEST_CASE("Hemker problem") {
  ProblemDefinition split = hemker_2d_problem(HemkerPlan::split);
  CHECK(split.partition.subdomain_count == 3);
  CHECK(split.subdomains[0].formulation == Formulation::gls);
  CHECK(split.subdomains[1].formulation == Formulation::supg);
  CHECK(split.subdomains[2].formulation == Formulation::galerkin);
  REQUIRE(split.mesh.boundary_sets.count("circle") == 1);
  for (int n : split.mesh.boundary_set("circle")) {
    const auto& x = split.mesh.nodes[n];
    CHECK(std::hypot(x[0], x[1]) == doctest::Approx(1.0).epsilon(1e-9));
  }
  MeshSummary s = summarize(split.mesh);
  CHECK(s.measure == doctest::Approx(14.0 * 8.0 - std::numbers::pi).epsilon(0.01));

  ProblemDefinition gal = hemker_2d_problem(HemkerPlan::galerkin);
  CouplingConfig c = gal.coupling;
  auto a = assemble_problem(gal, c);
  for (const auto& d : a.d0) CHECK(d.lpNorm<Eigen::Infinity>() == 0.0);
  NodalField f = global_field(gal, a, a.d0, 0.0);
  for (std::size_t n = 0; n < gal.mesh.node_count(); ++n) {
    bool on_circle = std::binary_search(gal.mesh.boundary_set("circle").begin(),
                                        gal.mesh.boundary_set("circle").end(), static_cast<int>(n));
    CHECK(f.value[n] == (on_circle ? 1.0 : 0.0));
  }
}

TEST_CASE("invariant transform and species recovery") {
  Stoichiometry unit;
  auto v = [](double x) { return Vector::Constant(1, x); };
  auto [f1, g1] = invariants_transform(unit, v(1), v(0), v(0));
  CHECK(f1[0] == 1.0);
  CHECK(g1[0] == 0.0);
  auto [f2, g2] = invariants_transform(unit, v(0), v(0), v(1));
  CHECK(f2[0] == 1.0);
  CHECK(g2[0] == 1.0);

  SpeciesFields s = recover_species(unit, v(2.0), v(0.5));
  CHECK(s.a[0] == 1.5);
  CHECK(s.b[0] == 0.0);
  CHECK(s.c[0] == 0.5);

  Stoichiometry uneven{2.0, 3.0, 4.0};
  SpeciesFields front = recover_species(uneven, v(2.0 / 3.0 * 0.9), v(0.9));
  CHECK(front.a[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(front.b[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(front.c[0] == doctest::Approx(4.0 / 2.0 * 0.6));
}

TEST_CASE("recovery property sweep") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (Stoichiometry s : {Stoichiometry{}, Stoichiometry{2.0, 1.0, 3.0}, Stoichiometry{1.0, 4.0, 0.5}}) {
    Vector f(500), g(500);
    for (int k = 0; k < 500; ++k) {
      f[k] = u(rng);
      g[k] = u(rng);
    }
    f[0] = s.n_a / s.n_b * g[0];
    SpeciesFields sp = recover_species(s, f, g);
    CHECK(sp.a.cwiseProduct(sp.b).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(sp.a.minCoeff() >= 0.0);
    CHECK(sp.b.minCoeff() >= 0.0);
    CHECK(sp.c.minCoeff() >= 0.0);
    auto [f_back, g_back] = invariants_transform(s, sp.a, sp.b, sp.c);
    CHECK((f_back - f).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((g_back - g).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("diffusion scenario tensor") {
  Eigen::Matrix2d D = bimolecular_diffusivity({1.0, 0.0});
  CHECK(D(0, 0) == doctest::Approx(0.001));
  CHECK(D(0, 1) == 0.0);
  CHECK(D(1, 1) == 1.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Eigen::Matrix2d R = bimolecular_diffusivity({u(rng), u(rng)});
    CHECK(std::abs(R(0, 1) - R(1, 0)) <= 1e-12);
    CHECK(R.determinant() >= -1e-15);
  }
  BimolecularScenario sc = diffusion_bimolecular_problem();
  CHECK(sc.invariant_f.partition.subdomain_count == 4);
  CHECK(sc.invariant_f.coupling.method == ConstraintMethod::baumgarte);
  CHECK(sc.invariant_f.coupling.alpha == 100.0);
  CHECK(sc.invariant_f.coupling.clip_negative);
}

TEST_CASE("stream-function velocity") {
  CHECK(stream_velocity({0.7, 0.3}, {0.0, 0.0, 0.0}) == Eigen::Vector2d(1.0, 0.0));
  Expression psi = Expression::parse(stream_function);
  Expression vx = psi.derivative(Variable::y), vy = psi.derivative(Variable::x);
  Expression div = vx.derivative(Variable::x);
  Expression div_y = vy.derivative(Variable::y);
  BimolecularScenario sc = advective_bimolecular_problem();
  const Mesh& mesh = sc.invariant_f.mesh;
  double worst_velocity = 0.0, worst_div = 0.0;
  for (const auto& el : mesh.elements) {
    Point c = element_centroid(mesh, el);
    Eigen::Vector2d v = stream_velocity(c);
    worst_velocity = std::max({worst_velocity, std::abs(v[0] + vx(c, 0.0)), std::abs(v[1] - vy(c, 0.0))});
    // div v = -ψ_yx + ψ_xy
    worst_div = std::max(worst_div, std::abs(-div(c, 0.0) + div_y(c, 0.0)));
  }
  CHECK(worst_velocity <= 1e-12);
  CHECK(worst_div <= 1e-10);
  // library velocity by central differences
  const double h = 1e-5;
  for (Point c : {Point{0.3, 0.2}, Point{2.1, 0.77}}) {
    double dvx = (stream_velocity({c[0] + h, c[1]})[0] - stream_velocity({c[0] - h, c[1]})[0]) / (2 * h);
    double dvy = (stream_velocity({c[0], c[1] + h})[1] - stream_velocity({c[0], c[1] - h})[1]) / (2 * h);
    CHECK(std::abs(dvx + dvy) <= 1e-6);
  }
}

TEST_CASE("dispersion tensor") {
  for (Eigen::Vector2d v : {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.8, -0.3), stream_velocity({1.3, 0.4})}) {
    Eigen::Matrix2d D = dispersion_tensor(v);
    CHECK((D * v - 1.0 * v.norm() * v).norm() <= 1e-14);
    Eigen::Vector2d perp(-v[1], v[0]);
    CHECK((D * perp - 1e-4 * v.norm() * perp).norm() <= 1e-14);
    CHECK(std::abs(D(0, 1) - D(1, 0)) <= 1e-15);
  }
  Eigen::Matrix2d still = dispersion_tensor(Eigen::Vector2d::Zero());
  CHECK(still.allFinite());
  CHECK(still.isApprox(1e-4 * 1e-12 * Eigen::Matrix2d::Identity()));
}

TEST_CASE("builtin registry and fixtures") {
  for (const auto& name : builtin_problem_names()) {
    CAPTURE(name);
    if (is_bimolecular(name)) {
      CHECK_NOTHROW(builtin_scenario(name));
    } else {
      CHECK_NOTHROW(builtin_problem(name));
    }
  }
  CHECK_THROWS_AS(builtin_problem("nope"), ConfigError);
  CHECK_THROWS_AS(fixture_path("does_not_exist.mesh"), ConfigError);

  const char* saved = std::getenv("MTS_FIXTURE_DIR");
  std::string restore = saved ? saved : "";
  setenv("MTS_FIXTURE_DIR", "/nonexistent", 1);
  CHECK(fixture_directory() == "/nonexistent");
  CHECK_THROWS_AS(hemker_2d_problem(HemkerPlan::galerkin), ConfigError);
  if (saved) {
    setenv("MTS_FIXTURE_DIR", restore.c_str(), 1);
  } else {
    unsetenv("MTS_FIXTURE_DIR");
  }
}

TEST_CASE("L2 error of an interpolated linear field is zero") {
  ProblemDefinition p = singular_1d_problem(2);
  Vector nodal(p.mesh.node_count());
  for (std::size_t n = 0; n < p.mesh.node_count(); ++n) nodal[n] = 2.0 * p.mesh.nodes[n][0] - 1.0;
  auto exact = [](const Point& x, double) { return 2.0 * x[0] - 1.0; };
  L2Error e = l2_error(p.mesh, p.partition, nodal, exact, 0.0);
  CHECK(e.error <= 1e-14);
  CHECK(e.norm == doctest::Approx(std::sqrt(1.0 / 3.0)));
  L2Error mid = l2_error(p.mesh, p.partition, nodal, exact, 0.0, 2);
  // ∫_{0.1}^{0.9} (2x - 1)² dx = 0.8³/3
  CHECK(mid.norm * mid.norm == doctest::Approx(std::pow(0.8, 3) / 3.0));
}
