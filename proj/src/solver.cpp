#include "kvd/solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace kvd {

namespace {

using Clock = std::chrono::steady_clock;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

bool fixed(const Bounds& b, int i) { return b.lower[i] == b.upper[i]; }

Eigen::VectorXd project(const Eigen::VectorXd& x, const Bounds& b) {
  return x.cwiseMax(b.lower).cwiseMin(b.upper);
}

// Per-variable weights: 0 excludes a variable, positive values rescale its
// KKT violation so that every block is measured against the displacement tolerance.
using Weights = std::vector<double>;

double kkt_on(const Eigen::VectorXd& g, const Eigen::VectorXd& x, const Bounds& b, const Weights& w) {
  double r = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    if (w[i] == 0.0 || fixed(b, i)) continue;
    double v;
    if (x[i] <= b.lower[i])
      v = std::max(0.0, -g[i]);
    else if (x[i] >= b.upper[i])
      v = std::max(0.0, g[i]);
    else
      v = std::abs(g[i]);
    r = std::max(r, w[i] * v);
  }
  return r;
}

double natural_residual(const Eigen::VectorXd& g, const Eigen::VectorXd& x, const Bounds& b,
                        const Weights& w) {
  const Eigen::VectorXd p = x - project(x - g, b);
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += w[i] * w[i] * p[i] * p[i];
  return std::sqrt(s);
}

struct FreeSolve {
  Eigen::VectorXd d;
  int shifts = 0;
};

// Solves H_FF d = rhs with a sparse LDL^T factorization. A diagonal shift is
// added until every pivot is positive, so the result is a descent direction
// even for an indefinite Hessian.
FreeSolve solve_free_block(const Eigen::SparseMatrix<double>& hff, const Eigen::VectorXd& rhs, double refine_tol) {
  FreeSolve out;
  if (hff.rows() == 0) {
    out.d = Eigen::VectorXd(0);
    return out;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  ldlt.analyzePattern(hff);
  const double dmax = std::max(hff.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  double mu = 0.0;
  Eigen::SparseMatrix<double> shifted = hff;
  Eigen::SparseMatrix<double> eye(hff.rows(), hff.cols());
  eye.setIdentity();
  for (int attempt = 0; attempt < 40; ++attempt) {
    if (mu > 0.0) shifted = hff + mu * eye;
    ldlt.factorize(shifted);
    if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0) {
      Eigen::VectorXd d = ldlt.solve(rhs);
      const double rn = std::max(rhs.norm(), std::numeric_limits<double>::min());
      for (int it = 0; it < 3; ++it) {
        const Eigen::VectorXd r = rhs - shifted * d;
        if (r.norm() <= refine_tol * rn) break;
        d += ldlt.solve(r);
      }
      if (!d.allFinite()) break;
      out.d = std::move(d);
      return out;
    }
    mu = mu == 0.0 ? 1e-10 * dmax : 10.0 * mu;
    ++out.shifts;
  }
  throw LinearSolveFailure("free-block factorization failed even after diagonal shifting");
}

// Projected Newton over the variables flagged in `movable`; the others stay
// where they are. Returns true when the restricted KKT residual reaches tol.
bool projected_newton(const StepProblem& sp, const SolverConfig& cfg, const Weights& movable, double tol,
                      Eigen::VectorXd& x, StepStats& st, int max_iters) {
  const Bounds& b = sp.bounds();
  const bool potential = sp.is_potential();
  const bool trust = !sp.certified();
  double radius = std::numeric_limits<double>::infinity();
  const int n = sp.size();

  PotentialTerms terms = sp.terms(x);
  double f = terms.sum();
  Eigen::VectorXd g = sp.gradient(x);
  if (st.values.empty()) st.values.push_back(f);

  for (int iter = 0;; ++iter) {
    const double r = kkt_on(g, x, b, movable);
    st.pg_norm = r;
    st.value = f;
    if (r <= tol) return true;
    if (iter >= max_iters) return false;

    const SparseSym h = sp.hessian(x);
    const Eigen::VectorXd pg = x - project(x - g, b);
    double band = 0.0;
    for (int i = 0; i < n; ++i)
      if (movable[i] != 0.0) band = std::max(band, std::abs(pg[i]));
    band = std::min(cfg.active_eps, band);
    std::vector<int> free;
    std::vector<int> active;
    for (int i = 0; i < n; ++i) {
      if (movable[i] == 0.0 || fixed(b, i)) continue;
      const bool at_lower = x[i] <= b.lower[i] + band && g[i] > 0.0;
      const bool at_upper = x[i] >= b.upper[i] - band && g[i] < 0.0;
      (at_lower || at_upper ? active : free).push_back(i);
    }
    st.active_set = static_cast<int>(active.size());

    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (int i : active) d[i] = (g[i] > 0.0 ? b.lower[i] : b.upper[i]) - x[i];
    const Eigen::VectorXd coupling = h.apply(d);
    Eigen::VectorXd gf(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) gf[i] = -g[free[i]] - coupling[free[i]];
    const FreeSolve fs = solve_free_block(submatrix(h.m, free), gf, cfg.refine_tol);
    st.shifts += fs.shifts;
    for (std::size_t i = 0; i < free.size(); ++i) d[free[i]] = fs.d[i];
    bool capped = false;
    if (trust) {
      const double dn = d.lpNorm<Eigen::Infinity>();
      if (dn > radius) {
        d *= radius / dn;
        capped = true;
      }
    }

    const double merit0 = potential ? f : natural_residual(g, x, b, movable);
    const double noise = 1e-14 * std::max(terms.magnitude(), std::abs(f));
    double s = 1.0;
    bool accepted = false;
    Eigen::VectorXd xs, gs;
    PotentialTerms ts;
    double fs_val = f;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      xs = project(x + s * d, b);
      const Eigen::VectorXd dx = xs - x;
      if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
      ts = sp.terms(xs);
      fs_val = ts.sum();
      gs = sp.gradient(xs);
      if (potential) {
        const double slope = g.dot(dx);
        if ((slope < 0.0 && fs_val <= f + cfg.armijo * slope) ||
            (fs_val <= f + noise && kkt_on(gs, xs, b, movable) < r)) {
          accepted = true;
        }
      } else {
        const double m1 = natural_residual(gs, xs, b, movable);
        if (m1 <= (1.0 - cfg.armijo * s) * merit0) accepted = true;
      }
      if (accepted) {
        if (trust && potential) {
          const double pred = -(g.dot(dx) + 0.5 * dx.dot(h.m * dx));
          const double ratio = pred > 0.0 ? (f - fs_val) / pred : 0.0;
          if (ratio < 0.25)
            radius = 0.25 * dx.lpNorm<Eigen::Infinity>();
          else if (ratio > 0.75 && capped)
            radius *= 2.0;
        }
        break;
      }
      s *= cfg.shrink;
      ++st.backtracks;
    }
    if (!accepted) {
      throw StepFailure("line search failed at step " + std::to_string(sp.step()) + " (KKT residual " +
                            sci(r) + ")",
                        st);
    }
    x = std::move(xs);
    g = std::move(gs);
    terms = ts;
    f = fs_val;
    ++st.newton_iters;
    st.values.push_back(f);
  }
}

void finish_stats(const StepProblem& sp, const SolverConfig& cfg, const Eigen::VectorXd& x, StepStats& st,
                  Clock::time_point t0) {
  st.certified = sp.certified();
  if (cfg.monitor_convexity && sp.is_potential()) {
    const SparseSym h = sp.hessian(x);
    std::vector<int> subset;
    for (int i = 0; i < sp.size(); ++i)
      if (!fixed(sp.bounds(), i)) subset.push_back(i);
    if (!subset.empty()) {
      double scale = 0.0;
      for (int i : subset) scale = std::max(scale, std::abs(h.m.coeff(i, i)));
      st.min_eig_estimate = lanczos_min_eigenvalue(h, subset, cfg.lanczos_iterations);
      st.convexity_ok = st.min_eig_estimate >= -1e-8 * std::max(scale, 1.0);
    }
  }
  st.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd initial_point(const StepProblem& sp, const std::optional<Eigen::VectorXd>& start) {
  if (start && start->size() != sp.size()) throw BadSpec("start vector has the wrong size");
  return project(start ? *start : sp.warm_start(), sp.bounds());
}

}  // namespace

std::string to_string(SolverMode mode) { return mode == SolverMode::Monolithic ? "monolithic" : "staggered"; }

SolverMode solver_mode_from_string(const std::string& s) {
  if (s == "monolithic") return SolverMode::Monolithic;
  if (s == "staggered") return SolverMode::Staggered;
  throw BadSpec("unknown solver mode '" + s + "'");
}

std::vector<std::string> SolverConfig::violations() const {
  std::vector<std::string> v;
  if (!(grad_tol > 0.0)) v.push_back("solver.grad_tol must be positive");
  if (max_newton < 1) v.push_back("solver.max_newton must be >= 1");
  if (!(armijo > 0.0 && armijo < 0.5)) v.push_back("solver.armijo must lie in (0, 0.5)");
  if (!(shrink > 0.0 && shrink < 1.0)) v.push_back("line-search shrink factor must lie in (0, 1)");
  if (max_sweeps < 1) v.push_back("max_sweeps must be >= 1");
  if (!(refine_tol > 0.0)) v.push_back("refinement tolerance must be positive");
  return v;
}

double kkt_residual(const Eigen::VectorXd& g, const Eigen::VectorXd& x, const Bounds& b) {
  return kkt_on(g, x, b, Weights(x.size(), 1.0));
}

double kkt_residual(const StepProblem& sp, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd x = sp.pack(u, alpha);
  return kkt_residual(sp.gradient(x), x, sp.bounds());
}

StepTolerance step_tolerance(const StepProblem& sp, const SolverConfig& cfg) {
  const Eigen::VectorXd x0 = sp.warm_start();
  const Eigen::VectorXd g0 = sp.gradient(x0);
  const Bounds& b = sp.bounds();
  const SparseSym h = sp.hessian(x0);
  const int nu = sp.model().n_u();
  Weights u_block(sp.size(), 0.0), a_block(sp.size(), 0.0);
  for (int i = 0; i < sp.size(); ++i) (i < nu ? u_block : a_block)[i] = 1.0;
  auto block_tol = [&](const Weights& w, double scale, double magnitude) {
    double diag = 0.0;
    for (int i = 0; i < sp.size(); ++i)
      if (w[i] > 0.0 && !fixed(b, i)) diag = std::max(diag, std::abs(h.m.coeff(i, i)));
    const double floor = 1e-13 * diag * std::max(1.0, magnitude);
    return std::max({cfg.grad_tol * scale, floor, std::numeric_limits<double>::min()});
  };
  double alpha_grad = 0.0;
  for (int i = nu; i < sp.size(); ++i)
    if (!fixed(b, i)) alpha_grad = std::max(alpha_grad, std::abs(g0[i]));
  StepTolerance t;
  t.u = block_tol(u_block, std::max(kkt_on(g0, x0, b, u_block), sp.load_scale()), x0.head(nu).lpNorm<Eigen::Infinity>());
  t.alpha = block_tol(a_block, std::max(kkt_on(g0, x0, b, a_block), alpha_grad), 1.0);
  return t;
}

namespace {

// Weights restricted to `block` (u, alpha or both) that express the damage
// violation in units of the displacement tolerance.
Weights block_weights(const StepProblem& sp, const StepTolerance& t, bool u, bool alpha) {
  const int nu = sp.model().n_u();
  Weights w(sp.size(), 0.0);
  for (int i = 0; i < sp.size(); ++i) w[i] = i < nu ? (u ? 1.0 : 0.0) : (alpha ? t.u / t.alpha : 0.0);
  return w;
}

}  // namespace

StepResult monolithic_step(const StepProblem& sp, const SolverConfig& cfg, const std::optional<Eigen::VectorXd>& start) {
  const auto t0 = Clock::now();
  StepStats st;
  st.step = sp.step();
  st.certified = sp.certified();
  const StepTolerance tol = step_tolerance(sp, cfg);
  st.tolerance = tol.u;
  Eigen::VectorXd x = initial_point(sp, start);
  const Weights all = block_weights(sp, tol, true, true);
  if (!projected_newton(sp, cfg, all, st.tolerance, x, st, cfg.max_newton)) {
    st.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    throw StepFailure("projected Newton hit max_newton = " + std::to_string(cfg.max_newton) + " at step " +
                          std::to_string(sp.step()) + " (KKT residual " + sci(st.pg_norm) + ")",
                      st);
  }
  finish_stats(sp, cfg, x, st, t0);
  return {sp.u_of(x), sp.alpha_of(x), std::move(st)};
}

StepResult staggered_step(const StepProblem& sp, const SolverConfig& cfg, const std::optional<Eigen::VectorXd>& start) {
  const auto t0 = Clock::now();
  StepStats st;
  st.step = sp.step();
  st.certified = sp.certified();
  const StepTolerance tol = step_tolerance(sp, cfg);
  st.tolerance = tol.u;
  Eigen::VectorXd x = initial_point(sp, start);
  const Weights u_block = block_weights(sp, tol, true, false), a_block = block_weights(sp, tol, false, true);
  const Weights all = block_weights(sp, tol, true, true);

  for (;;) {
    double r = kkt_on(sp.gradient(x), x, sp.bounds(), all);
    st.pg_norm = r;
    if (r <= st.tolerance) break;
    if (st.sweeps >= cfg.max_sweeps)
      throw MaxSweeps("staggered scheme did not converge in " + std::to_string(cfg.max_sweeps) + " sweeps at step " +
                          std::to_string(sp.step()) + " (KKT residual " + sci(r) + ")",
                      sp.step());
    ++st.sweeps;
    for (const Weights* block : {&u_block, &a_block}) {
      if (!projected_newton(sp, cfg, *block, st.tolerance, x, st, cfg.max_newton))
        throw StepFailure(std::string("staggered ") + (block == &u_block ? "displacement" : "damage") +
                              " sub-solve hit max_newton at step " + std::to_string(sp.step()) + " (KKT residual " +
                              sci(st.pg_norm) + ", tolerance " + sci(st.tolerance) + ")",
                          st);
    }
  }
  st.value = sp.value(x);
  finish_stats(sp, cfg, x, st, t0);
  return {sp.u_of(x), sp.alpha_of(x), std::move(st)};
}

StepResult solve_step(const StepProblem& sp, const SolverConfig& cfg, const std::optional<Eigen::VectorXd>& start) {
  if (auto v = cfg.violations(); !v.empty()) throw ValidationError(v);
  return cfg.mode == SolverMode::Monolithic ? monolithic_step(sp, cfg, start) : staggered_step(sp, cfg, start);
}

Eigen::VectorXd velocity_update(const Eigen::VectorXd& u, const Eigen::VectorXd& u_prev,
                                const Eigen::VectorXd& v_prev, double tau) {
  return (2.0 / tau) * (u - u_prev) - v_prev;
}

double lanczos_min_eigenvalue(const SparseSym& h, const std::vector<int>& subset, int iterations, unsigned seed) {
  const int n = static_cast<int>(subset.size());
  if (n == 0) return 0.0;
  const Eigen::SparseMatrix<double> a = submatrix(h.m, subset);
  const int m = std::min(iterations, n);
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd q(n, m + 1);
  Eigen::VectorXd q0(n);
  for (int i = 0; i < n; ++i) q0[i] = nd(rng);
  q.col(0) = q0.normalized();
  Eigen::VectorXd alpha(m), beta(m);
  int k = 0;
  for (; k < m; ++k) {
    Eigen::VectorXd w = a * q.col(k);
    alpha[k] = q.col(k).dot(w);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j <= k; ++j) w -= q.col(j).dot(w) * q.col(j);
    beta[k] = w.norm();
    if (beta[k] <= 1e-14 * std::max(1.0, std::abs(alpha[k]))) {
      ++k;
      break;
    }
    q.col(k + 1) = w / beta[k];
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace kvd
