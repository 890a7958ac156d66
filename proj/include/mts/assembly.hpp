#pragma once

#include "mts/common.hpp"
#include "mts/decomposition.hpp"
#include "mts/mesh.hpp"

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace mts {

enum class Formulation { galerkin, supg, gls };

const char* to_string(Formulation f);
Formulation formulation_from_string(const std::string& name);

struct TransportCoefficients {
  // Empty functions mean zero velocity, zero divergence and zero source.
  std::function<Eigen::Vector2d(const Point&, double)> velocity;
  std::function<double(const Point&, double)> velocity_divergence;
  std::function<Eigen::Matrix2d(const Point&)> diffusivity;
  double decay = 0.0;
  ScalarField source;
  bool time_varying = false;  // velocity depends on t
  bool source_time_varying = false;
};

struct DirichletCondition {
  std::string set;
  ScalarField value;
  ScalarField rate;  // time derivative of value; empty means zero
  bool time_varying = false;
};

// Flux q with -n·D grad c = q on the set.
struct NeumannCondition {
  std::string set;
  ScalarField flux;
  bool time_varying = false;
};

struct BoundaryConditions {
  std::vector<DirichletCondition> dirichlet;
  std::vector<NeumannCondition> neumann;

  std::set<int> dirichlet_nodes(const Mesh& mesh) const;
  // First matching condition wins for nodes listed in several sets.
  const DirichletCondition* dirichlet_for(const Mesh& mesh, int node) const;
};

struct IntegratorParams {
  double theta = 1.0;
  double dt_sub = 0.0;
  int eta = 1;
};

// Optional addition g(d, t) to the right-hand side.
class NonlinearTerm {
 public:
  virtual ~NonlinearTerm() = default;
  virtual Vector value(const Vector& d, double t) const = 0;
  virtual SparseMatrix jacobian(const Vector& d, double t) const = 0;
};

struct TransportOperators {
  SparseMatrix M_stab;
  SparseMatrix K;
};

// One subdomain's semi-discrete system
//   (M + M_stab) ċ + K c = f(t) + g(c, t) + Cᵀλ.
// The stabilization capacity acts on the weighted rate of each sublevel.
struct SubdomainSystem {
  int id = 1;
  SparseMatrix M;
  SparseMatrix M_stab;  // empty or zero for Galerkin
  SparseMatrix K;
  std::function<Vector(double)> forcing;
  std::shared_ptr<const NonlinearTerm> nonlinear;
  // Set when the transport coefficients change in time.
  std::function<TransportOperators(double)> operators_at;
  std::map<int, std::function<double(double)>> dirichlet;  // global node -> c^p(t)
  std::vector<int> dof_to_node;
  double theta = 1.0;
  double dt_sub = 0.0;
  int eta = 1;
  Formulation formulation = Formulation::galerkin;

  int size() const { return static_cast<int>(M.rows()); }
  bool has_stabilization_mass() const { return M_stab.nonZeros() > 0; }
  SparseMatrix capacity() const;
  TransportOperators operators(double t) const;
  // h(d, t) = f(t) - K(t) d + g(d, t)
  Vector rhs(const Vector& d, double t) const;
  // ∂h/∂d
  SparseMatrix rhs_jacobian(const Vector& d, double t) const;
  bool affine() const { return !nonlinear; }
  bool steady_operators() const { return !operators_at; }
};

// Small dense-matrix subdomain, used by lumped benchmarks and tests.
SubdomainSystem make_dense_subdomain(const DenseMatrix& M, const DenseMatrix& K,
                                     std::function<Vector(double)> forcing, IntegratorParams params);

double element_peclet(double v_norm, double h_e, double d_char);
double supg_tau(double v_norm, double h_e, double peclet);
// Smallest eigenvalue of the symmetric 2x2 (or the xx entry in 1D).
double min_diffusivity(const Eigen::Matrix2d& D, int dimension);

struct SymmetricPartCheck {
  double min_eig = 0.0;
  bool is_semidefinite = false;
  double tolerance = 0.0;
};

SymmetricPartCheck check_symmetric_part(const DenseMatrix& K);
SymmetricPartCheck check_symmetric_part(const SparseMatrix& K);

struct AssemblyOptions {
  bool zero_tau = false;  // disables stabilization while keeping the formulation tag
};

SubdomainSystem assemble_subdomain(const Mesh& mesh, const PartitionMap& partition, const DofMaps& dofs,
                                   int subdomain_index, const TransportCoefficients& coeffs,
                                   Formulation formulation, const IntegratorParams& integrator,
                                   const BoundaryConditions& bc, const AssemblyOptions& options = {});

// Constant isotropic tensor.
std::function<Eigen::Matrix2d(const Point&)> isotropic_diffusivity(double value);

}  // namespace mts
