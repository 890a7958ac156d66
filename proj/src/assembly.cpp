#include "mts/assembly.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace mts {

const char* to_string(Formulation f) {
  switch (f) {
    case Formulation::galerkin: return "galerkin";
    case Formulation::supg: return "supg";
    case Formulation::gls: return "gls";
  }
  return "?";
}

Formulation formulation_from_string(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "galerkin") return Formulation::galerkin;
  if (lower == "supg") return Formulation::supg;
  if (lower == "gls") return Formulation::gls;
  throw ConfigError("unknown formulation '" + name + "' (expected galerkin, supg or gls)");
}

std::set<int> BoundaryConditions::dirichlet_nodes(const Mesh& mesh) const {
  std::set<int> nodes;
  for (const auto& c : dirichlet) {
    const auto& set = mesh.boundary_set(c.set);
    nodes.insert(set.begin(), set.end());
  }
  return nodes;
}

const DirichletCondition* BoundaryConditions::dirichlet_for(const Mesh& mesh, int node) const {
  for (const auto& c : dirichlet) {
    const auto& set = mesh.boundary_set(c.set);
    if (std::binary_search(set.begin(), set.end(), node)) return &c;
  }
  return nullptr;
}

SparseMatrix SubdomainSystem::capacity() const {
  if (!has_stabilization_mass()) return M;
  SparseMatrix total = M + M_stab;
  return total;
}

TransportOperators SubdomainSystem::operators(double t) const {
  if (operators_at) return operators_at(t);
  return {M_stab, K};
}

Vector SubdomainSystem::rhs(const Vector& d, double t) const {
  Vector h = forcing ? forcing(t) : Vector::Zero(size());
  if (operators_at) {
    h -= operators_at(t).K * d;
  } else {
    h -= K * d;
  }
  if (nonlinear) h += nonlinear->value(d, t);
  return h;
}

SparseMatrix SubdomainSystem::rhs_jacobian(const Vector& d, double t) const {
  SparseMatrix J = -(operators_at ? operators_at(t).K : K);
  if (nonlinear) J += nonlinear->jacobian(d, t);
  return J;
}

SubdomainSystem make_dense_subdomain(const DenseMatrix& M, const DenseMatrix& K,
                                     std::function<Vector(double)> forcing, IntegratorParams params) {
  if (M.rows() != M.cols() || K.rows() != K.cols() || M.rows() != K.rows()) {
    throw Error("capacity and transport matrices must be square and of equal size");
  }
  SubdomainSystem s;
  s.M = M.sparseView();
  s.K = K.sparseView();
  s.M_stab.resize(M.rows(), M.cols());
  const auto n = M.rows();
  s.forcing = forcing ? std::move(forcing) : [n](double) -> Vector { return Vector::Zero(n); };
  s.theta = params.theta;
  s.dt_sub = params.dt_sub;
  s.eta = params.eta;
  return s;
}

double element_peclet(double v_norm, double h_e, double d_char) {
  if (!(h_e > 0.0)) throw Error("element size must be positive");
  if (!(d_char > 0.0)) throw Error("characteristic diffusivity must be positive");
  if (v_norm < 0.0) throw Error("velocity norm must be nonnegative");
  return h_e * v_norm / (2.0 * d_char);
}

double supg_tau(double v_norm, double h_e, double peclet) {
  if (!(v_norm > 0.0)) return 0.0;
  double xi = 0.0;
  if (std::isinf(peclet)) {
    xi = 1.0;
  } else if (peclet < 1e-3) {
    xi = peclet / 3.0 - peclet * peclet * peclet / 45.0;
  } else {
    xi = 1.0 / std::tanh(peclet) - 1.0 / peclet;
  }
  return h_e / (2.0 * v_norm) * xi;
}

double min_diffusivity(const Eigen::Matrix2d& D, int dimension) {
  if (dimension == 1) return D(0, 0);
  double mean = 0.5 * (D(0, 0) + D(1, 1));
  double half_diff = 0.5 * (D(0, 0) - D(1, 1));
  return mean - std::sqrt(half_diff * half_diff + D(0, 1) * D(0, 1));
}

SymmetricPartCheck check_symmetric_part(const DenseMatrix& K) {
  if (K.rows() != K.cols()) throw Error("check_symmetric_part needs a square matrix");
  SymmetricPartCheck out;
  if (K.rows() == 0) {
    out.is_semidefinite = true;
    return out;
  }
  DenseMatrix S = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(S, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolve failed");
  out.min_eig = solver.eigenvalues().minCoeff();
  out.tolerance = 1e-10 * K.cwiseAbs().rowwise().sum().maxCoeff();
  out.is_semidefinite = out.min_eig >= -out.tolerance;
  return out;
}

SymmetricPartCheck check_symmetric_part(const SparseMatrix& K) { return check_symmetric_part(DenseMatrix(K)); }

std::function<Eigen::Matrix2d(const Point&)> isotropic_diffusivity(double value) {
  return [value](const Point&) -> Eigen::Matrix2d { return value * Eigen::Matrix2d::Identity(); };
}

// ---------------------------------------------------------------------------
// element integration

namespace {

struct LocalElement {
  ElementKind kind;
  int n = 0;
  std::array<Point, 4> x{};
  std::array<int, 4> slot{};  // >= 0 free dof, < 0 Dirichlet index -(slot + 1)
  double h = 0.0;
  Point centroid{};
};

struct NeumannFacet {
  int n = 0;  // 1: point (1D), 2: segment
  std::array<Point, 2> x{};
  std::array<int, 2> slot{};
  const NeumannCondition* condition = nullptr;
};

struct QuadPoint {
  Point x{};
  double w = 0.0;
  std::array<double, 4> N{};
  std::array<Eigen::Vector2d, 4> dN{};
};

void quadrature(const LocalElement& el, std::vector<QuadPoint>& out) {
  out.clear();
  switch (el.kind) {
    case ElementKind::line2: {
      double h = el.x[1][0] - el.x[0][0];
      const double g = 1.0 / std::sqrt(3.0);
      for (double xi : {-g, g}) {
        QuadPoint q;
        q.N = {0.5 * (1.0 - xi), 0.5 * (1.0 + xi), 0.0, 0.0};
        q.x = {q.N[0] * el.x[0][0] + q.N[1] * el.x[1][0], 0.0};
        q.w = 0.5 * h;
        q.dN[0] = {-1.0 / h, 0.0};
        q.dN[1] = {1.0 / h, 0.0};
        out.push_back(q);
      }
      break;
    }
    case ElementKind::tri3: {
      const auto& a = el.x[0];
      const auto& b = el.x[1];
      const auto& c = el.x[2];
      double two_area = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
      std::array<Eigen::Vector2d, 3> grad = {Eigen::Vector2d(b[1] - c[1], c[0] - b[0]) / two_area,
                                             Eigen::Vector2d(c[1] - a[1], a[0] - c[0]) / two_area,
                                             Eigen::Vector2d(a[1] - b[1], b[0] - a[0]) / two_area};
      const double pts[3][3] = {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                                {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                                {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}};
      for (const auto& L : pts) {
        QuadPoint q;
        q.N = {L[0], L[1], L[2], 0.0};
        q.x = {L[0] * a[0] + L[1] * b[0] + L[2] * c[0], L[0] * a[1] + L[1] * b[1] + L[2] * c[1]};
        q.w = two_area / 6.0;
        for (int k = 0; k < 3; ++k) q.dN[k] = grad[k];
        out.push_back(q);
      }
      break;
    }
    case ElementKind::quad4: {
      const double g = 1.0 / std::sqrt(3.0);
      const double sx[4] = {-1, 1, 1, -1};
      const double sy[4] = {-1, -1, 1, 1};
      for (double eta : {-g, g}) {
        for (double xi : {-g, g}) {
          QuadPoint q;
          Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
          std::array<Eigen::Vector2d, 4> ref;
          for (int k = 0; k < 4; ++k) {
            q.N[k] = 0.25 * (1 + sx[k] * xi) * (1 + sy[k] * eta);
            ref[k] = {0.25 * sx[k] * (1 + sy[k] * eta), 0.25 * sy[k] * (1 + sx[k] * xi)};
            q.x[0] += q.N[k] * el.x[k][0];
            q.x[1] += q.N[k] * el.x[k][1];
            J(0, 0) += el.x[k][0] * ref[k][0];
            J(0, 1) += el.x[k][0] * ref[k][1];
            J(1, 0) += el.x[k][1] * ref[k][0];
            J(1, 1) += el.x[k][1] * ref[k][1];
          }
          double det = J.determinant();
          if (!(det > 0.0)) throw Error("quad4 element with non-positive Jacobian");
          Eigen::Matrix2d inv_t = J.inverse().transpose();
          for (int k = 0; k < 4; ++k) q.dN[k] = inv_t * ref[k];
          q.w = det;
          out.push_back(q);
        }
      }
      break;
    }
  }
}

struct Context {
  int dimension = 1;
  int n_free = 0;
  std::vector<LocalElement> elements;
  std::vector<Point> dirichlet_points;
  std::vector<const DirichletCondition*> dirichlet_conditions;
  std::vector<NeumannFacet> facets;
  TransportCoefficients coeffs;
  BoundaryConditions bc;  // owns the condition objects referenced above
  Formulation formulation = Formulation::galerkin;
  double dt_sub = 0.0;
  bool zero_tau = false;

  int n_dirichlet() const { return static_cast<int>(dirichlet_points.size()); }
};

struct Operators {
  SparseMatrix M, Ms, K;        // free x free
  SparseMatrix M_fd, Ms_fd, K_fd;  // free x Dirichlet
  Vector source;                   // volumetric and stabilization source
};

Eigen::Vector2d velocity_at(const TransportCoefficients& c, const Point& x, double t) {
  return c.velocity ? c.velocity(x, t) : Eigen::Vector2d::Zero();
}

Eigen::Matrix2d diffusivity_at(const TransportCoefficients& c, const Point& x, int dimension) {
  Eigen::Matrix2d D = c.diffusivity(x);
  if (dimension == 1) {
    D(0, 1) = D(1, 0) = D(1, 1) = 0.0;
  } else if (std::abs(D(0, 1) - D(1, 0)) > 1e-12 * std::max(1.0, D.cwiseAbs().maxCoeff())) {
    throw ConfigError("diffusivity tensor is not symmetric at (" + std::to_string(x[0]) + ", " +
                      std::to_string(x[1]) + ")");
  }
  return D;
}

double element_tau(const Context& ctx, const LocalElement& el, double t) {
  if (ctx.formulation == Formulation::galerkin || ctx.zero_tau) return 0.0;
  Eigen::Vector2d v = velocity_at(ctx.coeffs, el.centroid, t);
  if (ctx.dimension == 1) v[1] = 0.0;
  double vn = v.norm();
  if (vn == 0.0) return 0.0;
  double dmin = min_diffusivity(diffusivity_at(ctx.coeffs, el.centroid, ctx.dimension), ctx.dimension);
  double pe = dmin > 0.0 ? element_peclet(vn, el.h, dmin) : infinity;
  return supg_tau(vn, el.h, pe);
}

Operators compute_operators(const Context& ctx, double t, bool with_matrices, bool with_source) {
  Operators ops;
  const int nf = ctx.n_free, nd = ctx.n_dirichlet();
  std::vector<Triplet> tm, tms, tk, tm_fd, tms_fd, tk_fd;
  ops.source = Vector::Zero(nf);
  std::vector<QuadPoint> qps;
  const bool stabilized = ctx.formulation != Formulation::galerkin;
  const auto& c = ctx.coeffs;

  for (const auto& el : ctx.elements) {
    quadrature(el, qps);
    const int n = el.n;
    double me[4][4] = {}, mse[4][4] = {}, ke[4][4] = {};
    double fe[4] = {};
    double tau = stabilized ? element_tau(ctx, el, t) : 0.0;

    for (const auto& q : qps) {
      Eigen::Vector2d v = velocity_at(c, q.x, t);
      if (ctx.dimension == 1) v[1] = 0.0;
      double div_v = c.velocity_divergence ? c.velocity_divergence(q.x, t) : 0.0;
      double f = with_source && c.source ? c.source(q.x, t) : 0.0;
      Eigen::Matrix2d D = with_matrices ? diffusivity_at(c, q.x, ctx.dimension) : Eigen::Matrix2d::Zero();
      double adv[4], transport[4], test[4];
      for (int a = 0; a < n; ++a) {
        adv[a] = v.dot(q.dN[a]);
        // residual operator without the second-order diffusion term (zero for linear simplices)
        transport[a] = adv[a] + (div_v + c.decay) * q.N[a];
        test[a] = 0.0;
        if (tau != 0.0) {
          test[a] = ctx.formulation == Formulation::supg ? tau * adv[a]
                                                         : tau * (q.N[a] / ctx.dt_sub + transport[a]);
        }
      }
      for (int a = 0; a < n; ++a) {
        fe[a] += (q.N[a] + test[a]) * f * q.w;
        if (!with_matrices) continue;
        for (int b = 0; b < n; ++b) {
          me[a][b] += q.N[a] * q.N[b] * q.w;
          ke[a][b] += (q.N[a] * transport[b] + q.dN[a].dot(D * q.dN[b])) * q.w;
          if (tau != 0.0) {
            mse[a][b] += test[a] * q.N[b] * q.w;
            ke[a][b] += test[a] * transport[b] * q.w;
          }
        }
      }
    }

    for (int a = 0; a < n; ++a) {
      int ra = el.slot[a];
      if (ra < 0) continue;
      ops.source[ra] += fe[a];
      if (!with_matrices) continue;
      for (int b = 0; b < n; ++b) {
        int cb = el.slot[b];
        if (cb >= 0) {
          tm.emplace_back(ra, cb, me[a][b]);
          tk.emplace_back(ra, cb, ke[a][b]);
          if (tau != 0.0) tms.emplace_back(ra, cb, mse[a][b]);
        } else {
          int db = -cb - 1;
          tm_fd.emplace_back(ra, db, me[a][b]);
          tk_fd.emplace_back(ra, db, ke[a][b]);
          if (tau != 0.0) tms_fd.emplace_back(ra, db, mse[a][b]);
        }
      }
    }
  }

  if (with_matrices) {
    auto build = [](SparseMatrix& A, int rows, int cols, const std::vector<Triplet>& t) {
      A.resize(rows, cols);
      A.setFromTriplets(t.begin(), t.end());
      A.makeCompressed();
    };
    build(ops.M, nf, nf, tm);
    build(ops.Ms, nf, nf, tms);
    build(ops.K, nf, nf, tk);
    build(ops.M_fd, nf, nd, tm_fd);
    build(ops.Ms_fd, nf, nd, tms_fd);
    build(ops.K_fd, nf, nd, tk_fd);
  }
  return ops;
}

Vector neumann_vector(const Context& ctx, double t) {
  Vector out = Vector::Zero(ctx.n_free);
  for (const auto& facet : ctx.facets) {
    if (facet.n == 1) {
      if (facet.slot[0] >= 0) out[facet.slot[0]] -= facet.condition->flux(facet.x[0], t);
      continue;
    }
    double len = std::hypot(facet.x[1][0] - facet.x[0][0], facet.x[1][1] - facet.x[0][1]);
    const double g = 1.0 / std::sqrt(3.0);
    for (double xi : {-g, g}) {
      double N0 = 0.5 * (1.0 - xi), N1 = 0.5 * (1.0 + xi);
      Point x = {N0 * facet.x[0][0] + N1 * facet.x[1][0], N0 * facet.x[0][1] + N1 * facet.x[1][1]};
      double q = facet.condition->flux(x, t) * 0.5 * len;
      if (facet.slot[0] >= 0) out[facet.slot[0]] -= N0 * q;
      if (facet.slot[1] >= 0) out[facet.slot[1]] -= N1 * q;
    }
  }
  return out;
}

void dirichlet_vectors(const Context& ctx, double t, Vector& value, Vector& rate) {
  const int nd = ctx.n_dirichlet();
  value.resize(nd);
  rate.resize(nd);
  for (int k = 0; k < nd; ++k) {
    const auto* cond = ctx.dirichlet_conditions[k];
    value[k] = cond->value(ctx.dirichlet_points[k], t);
    rate[k] = cond->rate ? cond->rate(ctx.dirichlet_points[k], t) : 0.0;
  }
}

// Forcing with lifting: f + q-term - K_fd g - (M_fd + Ms_fd) ġ.
Vector forcing_from(const Context& ctx, const Operators& ops, const Vector& source, double t) {
  Vector f = source + neumann_vector(ctx, t);
  if (ctx.n_dirichlet() > 0) {
    Vector g, gdot;
    dirichlet_vectors(ctx, t, g, gdot);
    f -= ops.K_fd * g;
    if (gdot.cwiseAbs().maxCoeff() > 0.0) {
      f -= ops.M_fd * gdot;
      if (ops.Ms_fd.nonZeros() > 0) f -= ops.Ms_fd * gdot;
    }
  }
  return f;
}

}  // namespace

SubdomainSystem assemble_subdomain(const Mesh& mesh, const PartitionMap& partition, const DofMaps& dofs,
                                   int subdomain_index, const TransportCoefficients& coeffs,
                                   Formulation formulation, const IntegratorParams& integrator,
                                   const BoundaryConditions& bc, const AssemblyOptions& options) {
  if (subdomain_index < 0 || subdomain_index >= dofs.subdomain_count()) {
    throw Error("subdomain index " + std::to_string(subdomain_index) + " out of range");
  }
  if (!coeffs.diffusivity) throw ConfigError("a diffusivity field is required");
  if (coeffs.decay < 0.0) throw ConfigError("decay coefficient must be nonnegative");
  if (formulation == Formulation::gls && !(integrator.dt_sub > 0.0)) {
    throw ConfigError("GLS needs a positive subdomain time-step");
  }
  for (const auto& c : bc.neumann) mesh.boundary_set(c.set);

  auto ctx = std::make_shared<Context>();
  ctx->dimension = mesh.dimension;
  ctx->coeffs = coeffs;
  ctx->bc = bc;
  ctx->formulation = formulation;
  ctx->dt_sub = integrator.dt_sub;
  ctx->zero_tau = options.zero_tau;
  const DofMap& map = dofs.subdomains[subdomain_index];
  ctx->n_free = map.size();

  std::map<int, int> dirichlet_slot;
  auto slot_of = [&](int node) {
    int dof = map.node_to_dof[node];
    if (dof >= 0) return dof;
    auto it = dirichlet_slot.find(node);
    if (it == dirichlet_slot.end()) {
      const DirichletCondition* cond = ctx->bc.dirichlet_for(mesh, node);
      if (!cond) throw Error("node " + std::to_string(node) + " is neither free nor Dirichlet");
      it = dirichlet_slot.emplace(node, ctx->n_dirichlet()).first;
      ctx->dirichlet_points.push_back(mesh.nodes[node]);
      ctx->dirichlet_conditions.push_back(cond);
    }
    return -it->second - 1;
  };

  const int sub_id = subdomain_index + 1;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    if (partition.element_to_subdomain[e] != sub_id) continue;
    const Element& src = mesh.elements[e];
    LocalElement el;
    el.kind = src.kind;
    el.n = static_cast<int>(src.nodes.size());
    for (int a = 0; a < el.n; ++a) {
      el.x[a] = mesh.nodes[src.nodes[a]];
      el.slot[a] = slot_of(src.nodes[a]);
    }
    el.h = element_size(mesh, src);
    el.centroid = element_centroid(mesh, src);
    ctx->elements.push_back(el);
  }

  // Neumann facets on the outer boundary of this subdomain's elements.
  if (!ctx->bc.neumann.empty()) {
    std::map<std::pair<int, int>, int> edge_use;
    if (mesh.dimension == 2) {
      for (const auto& el : mesh.elements) {
        for (std::size_t a = 0; a < el.nodes.size(); ++a) {
          int p = el.nodes[a], q = el.nodes[(a + 1) % el.nodes.size()];
          ++edge_use[{std::min(p, q), std::max(p, q)}];
        }
      }
    }
    std::vector<int> node_use(mesh.nodes.size(), 0);
    for (const auto& el : mesh.elements) {
      for (int n : el.nodes) ++node_use[n];
    }
    for (const auto& cond : ctx->bc.neumann) {
      const auto& set = mesh.boundary_set(cond.set);
      auto in_set = [&](int n) { return std::binary_search(set.begin(), set.end(), n); };
      for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        if (partition.element_to_subdomain[e] != sub_id) continue;
        const auto& nodes = mesh.elements[e].nodes;
        if (mesh.dimension == 1) {
          for (int n : nodes) {
            if (node_use[n] == 1 && in_set(n)) {
              NeumannFacet f;
              f.n = 1;
              f.x[0] = mesh.nodes[n];
              f.slot[0] = slot_of(n);
              f.condition = &cond;
              ctx->facets.push_back(f);
            }
          }
          continue;
        }
        for (std::size_t a = 0; a < nodes.size(); ++a) {
          int p = nodes[a], q = nodes[(a + 1) % nodes.size()];
          if (!in_set(p) || !in_set(q) || edge_use[{std::min(p, q), std::max(p, q)}] != 1) continue;
          NeumannFacet f;
          f.n = 2;
          f.x = {mesh.nodes[p], mesh.nodes[q]};
          f.slot = {slot_of(p), slot_of(q)};
          f.condition = &cond;
          ctx->facets.push_back(f);
        }
      }
    }
  }

  bool dirichlet_static = true;
  for (const auto* cond : ctx->dirichlet_conditions) dirichlet_static = dirichlet_static && !cond->time_varying;
  bool neumann_static = true;
  for (const auto& cond : ctx->bc.neumann) neumann_static = neumann_static && !cond.time_varying;
  const bool matrices_static = !coeffs.time_varying;
  const bool source_static = matrices_static && !coeffs.source_time_varying;

  auto ops0 = std::make_shared<Operators>(compute_operators(*ctx, 0.0, true, true));

  SubdomainSystem sys;
  sys.id = sub_id;
  sys.M = ops0->M;
  sys.M_stab = ops0->Ms;
  sys.K = ops0->K;
  sys.dof_to_node = map.dof_to_node;
  sys.theta = integrator.theta;
  sys.dt_sub = integrator.dt_sub;
  sys.eta = integrator.eta;
  sys.formulation = formulation;
  for (const auto& [node, k] : dirichlet_slot) {
    const auto* cond = ctx->dirichlet_conditions[k];
    Point x = ctx->dirichlet_points[k];
    sys.dirichlet[node] = [cond, x, ctx](double t) { return cond->value(x, t); };
  }

  if (matrices_static && source_static && dirichlet_static && neumann_static) {
    auto constant = std::make_shared<Vector>(forcing_from(*ctx, *ops0, ops0->source, 0.0));
    sys.forcing = [constant](double) { return *constant; };
  } else if (matrices_static) {
    sys.forcing = [ctx, ops0, source_static](double t) {
      if (source_static) return forcing_from(*ctx, *ops0, ops0->source, t);
      Operators src = compute_operators(*ctx, t, false, true);
      return forcing_from(*ctx, *ops0, src.source, t);
    };
  } else {
    sys.forcing = [ctx](double t) {
      Operators ops = compute_operators(*ctx, t, true, true);
      return forcing_from(*ctx, ops, ops.source, t);
    };
    sys.operators_at = [ctx](double t) {
      Operators ops = compute_operators(*ctx, t, true, false);
      return TransportOperators{ops.Ms, ops.K};
    };
  }
  return sys;
}

}  // namespace mts
