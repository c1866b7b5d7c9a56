#pragma once

// Spatial operators of the damage / Kelvin-Voigt system on P1 elements.

#include "kvd/assembly.hpp"
#include "kvd/loads.hpp"
#include "kvd/material.hpp"
#include "kvd/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace kvd {

struct DirichletConstraint {
  int dof = 0;  ///< index into the displacement space
  std::function<double(double t)> value;
  std::string label;
};

/// Degree-of-freedom numbering: displacement/velocity components node-major
/// (node*d + c), then one damage value per node. Constraints apply to the
/// displacement space.
class DofMap {
 public:
  explicit DofMap(const Mesh& mesh) : n_nodes_(mesh.n_nodes()), dim_(mesh.dim()) {}

  int n_nodes() const { return n_nodes_; }
  int dim() const { return dim_; }
  int n_u() const { return n_nodes_ * dim_; }
  int n_alpha() const { return n_nodes_; }
  int n_total() const { return n_u() + n_alpha(); }
  int u(int node, int comp) const { return node * dim_ + comp; }
  /// Index of the damage value of `node` in the coupled (u, alpha) vector.
  int alpha(int node) const { return n_u() + node; }

  void add_constraint(int dof, std::function<double(double)> value, std::string label = {});
  const std::vector<DirichletConstraint>& constraints() const { return constraints_; }

  /// Sorted (dof, value) pairs at time t. Throws InconsistentConstraint when
  /// a dof is constrained twice with different values.
  std::vector<std::pair<int, double>> constrained_values(double t) const;
  /// Unconstrained displacement dofs, ascending.
  std::vector<int> free_u() const;
  std::vector<char> constrained_mask() const;

 private:
  int n_nodes_;
  int dim_;
  std::vector<DirichletConstraint> constraints_;
};

/// Registers the Dirichlet programs of `loads` on `dofs`.
void apply_programs(const LoadSpec& loads, const Mesh& mesh, DofMap& dofs);

/// Plans for the three spaces of one mesh, built once and shared.
struct Discretization {
  explicit Discretization(const Mesh& mesh)
      : mesh(mesh), vector(mesh, Space::Vector), scalar(mesh, Space::Scalar), coupled(mesh, Space::Coupled) {}
  const Mesh& mesh;
  AssemblyPlan vector;
  AssemblyPlan scalar;
  AssemblyPlan coupled;
};

/// Strain-displacement matrix of element e in scaled Voigt form:
/// voigt_size(d) x (nen*d).
Eigen::MatrixXd strain_operator(const Mesh& mesh, int e);
/// Constant strain of element e for the displacement vector u (size n_u).
Eigen::VectorXd element_strain(const Mesh& mesh, int e, const Eigen::VectorXd& u);
/// Damage values of element e at its quadrature points.
Eigen::VectorXd element_alpha_at_quadrature(const Mesh& mesh, int e, const Eigen::VectorXd& alpha);

// Element kernels, shared by the parallel plans and the serial reference.
MatrixKernel mass_kernel(const Mesh& mesh, double rho, const Eigen::VectorXd* rho_nodal = nullptr);
MatrixKernel scalar_mass_kernel(const Mesh& mesh);
/// int gamma(alpha_h) C1 e(u):e(w)
MatrixKernel degraded_stiffness_kernel(const Mesh& mesh, const ElasticTensor& c1, const DegradationLaw& gamma,
                                       const Eigen::VectorXd& alpha);
/// int (D0 + chi_R gamma(alpha_h) C1) e(u):e(w)
MatrixKernel viscous_stiffness_kernel(const Mesh& mesh, const MaterialParams& m, const Eigen::VectorXd& alpha);
MatrixKernel laplacian_kernel(const Mesh& mesh);

SparseSym assemble_mass(const Discretization& disc, double rho, const Eigen::VectorXd* rho_nodal = nullptr);
SparseSym assemble_scalar_mass(const Discretization& disc);
SparseSym assemble_degraded_stiffness(const Discretization& disc, const ElasticTensor& c1,
                                      const DegradationLaw& gamma, const Eigen::VectorXd& alpha);
SparseSym assemble_viscous_stiffness(const Discretization& disc, const MaterialParams& m,
                                     const Eigen::VectorXd& alpha);
SparseSym assemble_laplacian(const Discretization& disc);

struct GradientTermEval {
  double energy = 0.0;
  Eigen::VectorXd residual;  ///< gradient of the energy w.r.t. nodal alpha
  SparseSym jacobian;        ///< its Hessian
};

/// Energy, residual and Jacobian of alpha -> int psi(|grad alpha|^2) dx for
/// the (possibly regularized) p-Laplacian density of `term`.
GradientTermEval damage_gradient_residual(const Discretization& disc, const Eigen::VectorXd& alpha,
                                          const GradientTerm& term);
double damage_gradient_energy(const Mesh& mesh, const Eigen::VectorXd& alpha, const GradientTerm& term);

struct StepLoads {
  Eigen::VectorXd body;      ///< F_k, assembled against P1 test functions
  Eigen::VectorXd traction;  ///< G_k
};

/// Mean over ((k-1)tau, k tau] of f and g (composite Simpson, 5 samples),
/// assembled against P1 test functions.
StepLoads time_averaged_loads(const LoadSpec& loads, int k, double tau, const Mesh& mesh);

/// Load vectors of the instantaneous f(t), g(t).
StepLoads instantaneous_loads(const LoadSpec& loads, double t, const Mesh& mesh);

/// Partition of a displacement-sized index range into free and prescribed.
struct ReducedSystem {
  Eigen::SparseMatrix<double> matrix;  ///< free x free
  Eigen::VectorXd rhs;                 ///< b_f - A_fc u_c
  std::vector<int> free;
  Eigen::VectorXd prescribed;  ///< full-size vector with constrained values, zeros elsewhere

  Eigen::VectorXd expand(const Eigen::VectorXd& x_free) const;
};

/// Symmetric elimination of the constraints active at time t.
ReducedSystem apply_dirichlet(const SparseSym& a, const Eigen::VectorXd& b, const DofMap& dofs, double t);

/// Submatrix on the given sorted index list.
Eigen::SparseMatrix<double> submatrix(const Eigen::SparseMatrix<double>& a, const std::vector<int>& rows_cols);

}  // namespace kvd
