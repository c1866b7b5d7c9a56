#pragma once

// Per-step minimization of the incremental potential over its box:
// active-set projected Newton (monolithic) and an alternating baseline.

#include "kvd/errors.hpp"
#include "kvd/potential.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace kvd {

enum class SolverMode { Monolithic, Staggered };

std::string to_string(SolverMode mode);
SolverMode solver_mode_from_string(const std::string& s);

struct SolverConfig {
  double grad_tol = 1e-9;  ///< relative to the gradient/load scale of the step
  int max_newton = 100;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;
  SolverMode mode = SolverMode::Monolithic;
  int max_sweeps = 1000;
  double refine_tol = 1e-12;  ///< iterative refinement of the free-block solve
  double active_eps = 1e-3;   ///< upper cap of the epsilon-active band
  bool monitor_convexity = true;
  int lanczos_iterations = 20;

  std::vector<std::string> violations() const;
};

struct StepStats {
  int step = 0;
  int newton_iters = 0;
  int backtracks = 0;
  int sweeps = 0;
  int shifts = 0;  ///< Hessian regularizations applied
  double pg_norm = 0.0;  ///< KKT residual, damage block rescaled to the displacement tolerance
  double tolerance = 0.0;
  int active_set = 0;
  double min_eig_estimate = 0.0;
  bool convexity_ok = true;
  bool certified = true;
  double wall_time = 0.0;
  double value = 0.0;
  std::vector<double> values;  ///< potential after every accepted iteration, first entry at the start
};

/// NoConvergence carrying the statistics of the failed solve.
class StepFailure : public NoConvergence {
 public:
  StepFailure(const std::string& what, StepStats stats) : NoConvergence(what, stats.step), stats(std::move(stats)) {}
  StepStats stats;
};

struct StepResult {
  Eigen::VectorXd u, alpha;
  StepStats stats;
};

/// Absolute stopping tolerances on the KKT residual of the displacement and
/// damage blocks, each grad_tol times the scale of its own block at the warm
/// start, floored at the rounding level of the block's Hessian diagonal.
struct StepTolerance {
  double u = 0.0, alpha = 0.0;
};
StepTolerance step_tolerance(const StepProblem& sp, const SolverConfig& cfg);

/// Max violation of the box-constrained stationarity conditions: |g| on the
/// interior, max(0, -g) at a lower bound, max(0, g) at an upper bound, 0 on
/// degenerate boxes.
double kkt_residual(const Eigen::VectorXd& g, const Eigen::VectorXd& x, const Bounds& b);
double kkt_residual(const StepProblem& sp, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha);

/// Dispatches on cfg.mode. `start` defaults to sp.warm_start() and is
/// projected onto the bounds.
StepResult solve_step(const StepProblem& sp, const SolverConfig& cfg,
                      const std::optional<Eigen::VectorXd>& start = std::nullopt);
StepResult monolithic_step(const StepProblem& sp, const SolverConfig& cfg,
                           const std::optional<Eigen::VectorXd>& start = std::nullopt);
StepResult staggered_step(const StepProblem& sp, const SolverConfig& cfg,
                          const std::optional<Eigen::VectorXd>& start = std::nullopt);

/// v^k = (2/tau)(u^k - u^{k-1}) - v^{k-1}
Eigen::VectorXd velocity_update(const Eigen::VectorXd& u, const Eigen::VectorXd& u_prev,
                                const Eigen::VectorXd& v_prev, double tau);

/// Smallest Ritz value of `h` restricted to `subset` after `iterations`
/// Lanczos steps with full reorthogonalization (an upper bound on the
/// smallest eigenvalue).
double lanczos_min_eigenvalue(const SparseSym& h, const std::vector<int>& subset, int iterations,
                              unsigned seed = 7);

}  // namespace kvd
