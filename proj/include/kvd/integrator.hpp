#pragma once

// Time stepping, trajectory interpolants, energy ledger and the discrete
// energy inequality audit.

#include "kvd/loads.hpp"
#include "kvd/material.hpp"
#include "kvd/mesh.hpp"
#include "kvd/potential.hpp"
#include "kvd/solver.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kvd {

/// Initial data. Fields default to u0 = v0 = 0 and alpha0 = 1; nodal vectors,
/// when present, take precedence over the fields.
struct InitialFields {
  VectorField u0;
  VectorField v0;
  ScalarField alpha0;
  std::optional<Eigen::VectorXd> u0_nodal, v0_nodal, alpha0_nodal;
};

struct Problem {
  MeshSpec mesh;
  MaterialParams material;
  LoadSpec loads;
  InitialFields initial;
  ModelOptions options;
  double tau = 0.01;
  double T = 1.0;
  SolverConfig solver;
  bool strict_tau0 = false;

  int steps() const;
  /// All configuration violations, empty when the problem can run.
  std::vector<std::string> violations() const;
};

std::shared_ptr<const Model> build_model(const Problem& problem);
State initial_state(const Model& model, const InitialFields& init);

class Trajectory {
 public:
  enum class Field { U, V, Alpha };

  double tau = 0.0;
  std::vector<State> states;

  int steps() const { return static_cast<int>(states.size()) - 1; }
  double final_time() const { return steps() * tau; }
  const Eigen::VectorXd& field(int k, Field f) const;

  /// Piecewise affine interpolant through the states.
  Eigen::VectorXd affine(Field f, double t) const;
  /// Piecewise constant, right value (state k on ((k-1)tau, k tau]).
  Eigen::VectorXd upper(Field f, double t) const;
  /// Piecewise constant, left value (state k-1 on ((k-1)tau, k tau]).
  Eigen::VectorXd lower(Field f, double t) const;
  /// Average of upper and lower.
  Eigen::VectorXd midpoint(Field f, double t) const;

 private:
  int interval(double t) const;
};

struct EnergyRow {
  int k = 0;
  double t = 0.0;
  double kinetic = 0.0;
  double elastic = 0.0;
  double phi = 0.0;  ///< -int phi(alpha)
  double gradient = 0.0;
  double visc_diss = 0.0;  ///< cumulative
  double dam_diss = 0.0;   ///< cumulative
  double ext_work = 0.0;   ///< cumulative, including support reactions
  double margin = 0.0;
  double mechanical() const { return kinetic + elastic + phi + gradient; }
};

struct EnergyReport {
  std::vector<EnergyRow> rows;
  double tau = 0.0;
  double tau0 = 0.0;
  double prefactor = 1.0;  ///< 1 - sqrt(tau / tau0)
  double scale = 0.0;      ///< energy scale of the run
  double tolerance = 0.0;  ///< tol_E = 1e-8 * scale
  bool certified = true;   ///< tau <= tau0; otherwise the audit is advisory

  double min_margin() const;
  /// True when every margin is >= -tolerance.
  bool inequality_holds() const;
};

/// Kinetic, stored, dissipated and external-work ledgers of a (possibly
/// partial) trajectory; margins from check_energy_inequality with the
/// model's tau0.
EnergyReport energy_report(const Trajectory& traj, const Model& model);

/// Fills margin_k = [T0 + E0 + W_k] - [T_k + E_k + (1 - sqrt(tau/tau0)) D_k]
/// and the tolerance; returns the margins.
std::vector<double> check_energy_inequality(EnergyReport& report, double tau, double tau0);

struct AprioriBounds {
  double u_h1_h1 = 0.0;        ///< ||u||_{H^1(I;H^1)}
  double u_w1inf_l2 = 0.0;     ///< ||u||_{W^{1,inf}(I;L^2)}
  double alpha_linf_w1p = 0.0; ///< ||alpha||_{L^inf(I;W^{1,p})}
  double alpha_h1_l2 = 0.0;    ///< ||alpha||_{H^1(I;L^2)}
  std::vector<double> values() const { return {u_h1_h1, u_w1inf_l2, alpha_linf_w1p, alpha_h1_l2}; }
};

AprioriBounds apriori_diagnostics(const Trajectory& traj, const Model& model);

/// sqrt(|u|_{H^1}^2 + |alpha|_{H^1}^2) with unit density.
double energy_norm(const Model& model, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha);

struct RunResult {
  std::shared_ptr<const Model> model;
  Trajectory trajectory;
  EnergyReport report;
  std::vector<StepStats> stats;
  bool completed = false;
  std::string failure;
};

/// NoConvergence raised by run(), with everything computed before the
/// failing step.
class RunFailure : public NoConvergence {
 public:
  RunFailure(const std::string& what, int step, std::shared_ptr<const RunResult> partial)
      : NoConvergence(what, step), partial(std::move(partial)) {}
  std::shared_ptr<const RunResult> partial;
};

struct RunHooks {
  std::function<void(const State&, const StepStats&)> on_step;
};

/// Throws ValidationError before stepping, RunFailure on a failed step.
RunResult run(const Problem& problem, const RunHooks& hooks = {});

}  // namespace kvd
