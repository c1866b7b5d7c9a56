#pragma once

// Per-step incremental potential over the coupled (u, alpha) P1 space.

#include "kvd/assembly.hpp"
#include "kvd/fem.hpp"
#include "kvd/loads.hpp"
#include "kvd/material.hpp"
#include "kvd/mesh.hpp"

#include <Eigen/Dense>

#include <memory>

namespace kvd {

struct ModelOptions {
  /// Damage held at its initial value: the box degenerates to a point.
  bool frozen_damage = false;
  /// Replace phi'(alpha^k) by the difference quotient against alpha^{k-1}.
  bool difference_quotient_phi = false;
};

/// Everything that stays fixed over a run: mesh, operators, material, loads.
class Model {
 public:
  Model(Mesh mesh, MaterialParams material, LoadSpec loads, ModelOptions options = {});
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const Mesh& mesh() const { return *mesh_; }
  const Discretization& disc() const { return *disc_; }
  const MaterialParams& material() const { return material_; }
  const LoadSpec& loads() const { return loads_; }
  const DofMap& dofs() const { return dofs_; }
  const ModelOptions& options() const { return options_; }

  const SparseSym& mass() const { return mass_; }                ///< rho-weighted, vector space
  const SparseSym& unit_mass() const { return unit_mass_; }      ///< vector space, rho = 1
  const SparseSym& scalar_mass() const { return scalar_mass_; }  ///< scalar space
  const SparseSym& laplacian() const { return laplacian_; }      ///< scalar space

  /// Critical time step; +inf with frozen damage.
  double tau0() const { return tau0_; }

  int n_u() const { return dofs_.n_u(); }
  int n_alpha() const { return dofs_.n_alpha(); }
  int n_total() const { return dofs_.n_total(); }

 private:
  std::unique_ptr<const Mesh> mesh_;
  std::unique_ptr<const Discretization> disc_;
  MaterialParams material_;
  LoadSpec loads_;
  DofMap dofs_;
  ModelOptions options_;
  SparseSym mass_, unit_mass_, scalar_mass_, laplacian_;
  double tau0_;
};

struct State {
  int k = 0;
  double t = 0.0;
  Eigen::VectorXd u, v, alpha;
};

/// Stored energy split as it enters the potential: elastic, -int phi,
/// gradient term.
struct StoredEnergy {
  double elastic = 0.0;
  double phi = 0.0;
  double gradient = 0.0;
  double total() const { return elastic + phi + gradient; }
};

StoredEnergy stored_energy(const Model& model, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha);
double kinetic_energy(const Model& model, const Eigen::VectorXd& v);

struct PotentialTerms {
  double inertia = 0.0;
  double elastic = 0.0;
  double phi = 0.0;  ///< -int phi(alpha)
  double gradient = 0.0;
  double load = 0.0;  ///< -(F + G).u
  double viscous = 0.0;
  double zeta = 0.0;
  double sum() const { return inertia + elastic + phi + gradient + load + viscous + zeta; }
  /// Sum of absolute values, the round-off scale of `sum()`.
  double magnitude() const;
};

struct PotentialEval {
  double value = 0.0;
  PotentialTerms terms;
  Eigen::VectorXd gradient;
  SparseSym hessian;
};

struct Bounds {
  Eigen::VectorXd lower, upper;
};

/// One time step k = prev.k + 1. Unknowns x = (u, alpha) laid out as the
/// coupled space: u node-major, then alpha per node.
class StepProblem {
 public:
  StepProblem(std::shared_ptr<const Model> model, State prev, double tau);

  const Model& model() const { return *model_; }
  std::shared_ptr<const Model> model_ptr() const { return model_; }
  const State& prev() const { return prev_; }
  double tau() const { return tau_; }
  int step() const { return prev_.k + 1; }
  double time() const { return step() * tau_; }
  int size() const { return model_->n_total(); }
  const StepLoads& loads() const { return loads_; }
  const SparseSym& viscous() const { return viscous_; }  ///< D(alpha^{k-1}) stiffness
  bool certified() const { return tau_ <= model_->tau0(); }
  /// False in difference-quotient mode: `gradient` is then a residual.
  bool is_potential() const { return !model_->options().difference_quotient_phi; }

  /// (u^{k-1} + tau v^{k-1} with prescribed values imposed, alpha^{k-1}).
  Eigen::VectorXd warm_start() const;
  /// Bounds on all unknowns: prescribed displacement dofs and degenerate
  /// damage boxes have lower == upper; free displacements are unbounded.
  const Bounds& bounds() const { return bounds_; }

  Eigen::VectorXd pack(const Eigen::VectorXd& u, const Eigen::VectorXd& alpha) const;
  Eigen::VectorXd u_of(const Eigen::VectorXd& x) const { return x.head(model_->n_u()); }
  Eigen::VectorXd alpha_of(const Eigen::VectorXd& x) const { return x.tail(model_->n_alpha()); }

  /// Throws Infeasible when alpha leaves its box by more than 1e-12.
  void check_feasible(const Eigen::VectorXd& x) const;

  PotentialTerms terms(const Eigen::VectorXd& x) const;
  double value(const Eigen::VectorXd& x) const { return terms(x).sum(); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  SparseSym hessian(const Eigen::VectorXd& x) const;
  PotentialEval evaluate(const Eigen::VectorXd& x, bool with_hessian = true) const;

  /// |F + G| in the max norm.
  double load_scale() const;

 private:
  std::shared_ptr<const Model> model_;
  State prev_;
  double tau_;
  StepLoads loads_;
  Eigen::VectorXd load_;  ///< F + G
  SparseSym viscous_;
  Bounds bounds_;
  std::vector<double> constant_hessian_;  ///< values in the coupled pattern
  Eigen::VectorXd alpha_prev_q_;          ///< alpha^{k-1} at quadrature points, element-major
};

double potential_value(const StepProblem& sp, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha);
Eigen::VectorXd potential_gradient(const StepProblem& sp, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha);
SparseSym potential_hessian(const StepProblem& sp, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha);
/// Damage box [0, alpha^{k-1}] (a point when damage is frozen).
Bounds feasible_box(const StepProblem& sp);

}  // namespace kvd
