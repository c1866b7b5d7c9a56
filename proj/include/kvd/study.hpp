#pragma once

// Time-step halving study: runs a scenario at tau, tau/2, tau/4, ...
// concurrently and compares the trajectories at shared grid times.

#include "kvd/integrator.hpp"
#include "kvd/scenario.hpp"

#include <optional>
#include <vector>

namespace kvd {

struct LevelSummary {
  double tau = 0.0;
  int steps = 0;
  AprioriBounds bounds;
  int newton_iters = 0;
  double min_margin = 0.0;
  bool inequality_holds = true;
  double wall_time = 0.0;
};

/// Distance of each level to the closed-form modal solution of a frozen,
/// proportionally damped linear problem released from an eigenmode.
struct ReferenceErrors {
  double omega = 0.0;    ///< undamped angular frequency
  double damping = 0.0;  ///< c in u'' + c u' + omega^2 u = 0
  std::vector<double> errors;  ///< max_k L2 error per level
  std::vector<double> orders;  ///< log2 of successive error ratios
};

struct SchemeComparison {
  double relative_difference = 0.0;  ///< energy norm of the final-state difference, relative
  int monolithic_newton = 0;
  int staggered_newton = 0;
  int staggered_sweeps = 0;
};

struct StudyResult {
  double window_start = 0.0, window_end = 0.0;
  std::vector<LevelSummary> levels;
  std::vector<double> u_diffs, alpha_diffs;    ///< level i vs i+1, max_k L2 in the window
  std::vector<double> u_orders, alpha_orders;  ///< log2(d_i / d_{i+1})
  bool u_monotone = false, alpha_monotone = false;
  bool bounds_uniform = false;  ///< all a-priori norms within a factor 2 across levels
  std::optional<ReferenceErrors> reference;
  std::optional<SchemeComparison> scheme;
};

/// Errors propagate from the individual runs. Levels >= 3.
StudyResult run_convergence_study(const Scenario& scenario, int levels, bool compare_staggered = false);

/// Closed-form displacement of the modal problem at time t.
Eigen::VectorXd modal_solution(const Eigen::VectorXd& u0, double omega, double damping, double t);

}  // namespace kvd
