#include "kvd/study.hpp"

#include "kvd/errors.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <limits>

namespace kvd {

namespace {

double order(double coarse, double fine) {
  if (fine == 0.0) return coarse == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  return std::log2(coarse / fine);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

int total_newton(const RunResult& r) {
  int n = 0;
  for (const auto& s : r.stats) n += s.newton_iters;
  return n;
}

bool in_window(double t, double a, double b) { return t >= a - 1e-12 && t <= b + 1e-12; }

}  // namespace

Eigen::VectorXd modal_solution(const Eigen::VectorXd& u0, double omega, double damping, double t) {
  const double c = damping;
  const double disc = 0.25 * c * c - omega * omega;
  double s;
  if (std::abs(disc) <= 1e-14 * omega * omega) {
    s = std::exp(-omega * t) * (1.0 + omega * t);
  } else if (disc < 0.0) {
    const double wd = std::sqrt(-disc);
    s = std::exp(-0.5 * c * t) * (std::cos(wd * t) + 0.5 * c / wd * std::sin(wd * t));
  } else {
    const double r1 = -0.5 * c + std::sqrt(disc);
    const double r2 = -0.5 * c - std::sqrt(disc);
    s = (r2 * std::exp(r1 * t) - r1 * std::exp(r2 * t)) / (r2 - r1);
  }
  return s * u0;
}

StudyResult run_convergence_study(const Scenario& scenario, int levels, bool compare_staggered) {
  if (levels < 3) throw BadSpec("a convergence study needs at least 3 levels");
  StudyResult res;
  res.window_start = scenario.study.window_start;
  res.window_end = scenario.study.window_end;

  std::vector<std::future<RunResult>> futures;
  for (int i = 0; i < levels; ++i) {
    Problem p = scenario.problem;
    p.tau = scenario.problem.tau / std::pow(2.0, i);
    futures.push_back(std::async(std::launch::async, [p] { return run(p); }));
  }
  std::optional<std::future<RunResult>> staggered;
  if (compare_staggered) {
    Problem p = scenario.problem;
    p.solver.mode = SolverMode::Staggered;
    staggered = std::async(std::launch::async, [p] { return run(p); });
  }
  std::vector<RunResult> runs;
  for (auto& f : futures) runs.push_back(f.get());

  for (const auto& r : runs) {
    LevelSummary s;
    s.tau = r.trajectory.tau;
    s.steps = r.trajectory.steps();
    s.bounds = apriori_diagnostics(r.trajectory, *r.model);
    s.newton_iters = total_newton(r);
    s.min_margin = r.report.min_margin();
    s.inequality_holds = r.report.inequality_holds();
    for (const auto& st : r.stats) s.wall_time += st.wall_time;
    res.levels.push_back(s);
  }

  const Model& model = *runs.front().model;
  for (int i = 0; i + 1 < levels; ++i) {
    const Trajectory& a = runs[i].trajectory;
    const Trajectory& b = runs[i + 1].trajectory;
    double du = 0.0, da = 0.0;
    for (int k = 0; k <= a.steps(); ++k) {
      if (!in_window(a.states[k].t, res.window_start, res.window_end)) continue;
      const State& sa = a.states[k];
      const State& sb = b.states[2 * k];
      du = std::max(du, std::sqrt(model.unit_mass().quad(sa.u - sb.u)));
      da = std::max(da, std::sqrt(model.scalar_mass().quad(sa.alpha - sb.alpha)));
    }
    res.u_diffs.push_back(du);
    res.alpha_diffs.push_back(da);
  }
  for (std::size_t i = 0; i + 1 < res.u_diffs.size(); ++i) {
    res.u_orders.push_back(order(res.u_diffs[i], res.u_diffs[i + 1]));
    res.alpha_orders.push_back(order(res.alpha_diffs[i], res.alpha_diffs[i + 1]));
  }
  res.u_monotone = strictly_decreasing(res.u_diffs);
  res.alpha_monotone = strictly_decreasing(res.alpha_diffs);

  res.bounds_uniform = true;
  const auto ref = res.levels.front().bounds.values();
  for (const auto& l : res.levels) {
    const auto v = l.bounds.values();
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double hi = std::max(v[j], ref[j]);
      const double lo = std::min(v[j], ref[j]);
      if (hi > 2.0 * lo && hi > 1e-300) res.bounds_uniform = false;
    }
  }

  if (scenario.study.oscillator_reference) {
    ReferenceErrors re;
    const Eigen::VectorXd& u0 = runs.front().trajectory.states.front().u;
    const Eigen::VectorXd& a0 = runs.front().trajectory.states.front().alpha;
    const MaterialParams& m = model.material();
    const double mu0 = model.mass().quad(u0);
    if (!(mu0 > 0.0)) throw BadSpec("oscillator reference needs a nonzero initial displacement");
    const SparseSym k = assemble_degraded_stiffness(model.disc(), m.elastic, m.degradation, a0);
    const SparseSym kv = assemble_viscous_stiffness(model.disc(), m, a0);
    re.omega = std::sqrt(k.quad(u0) / mu0);
    re.damping = kv.quad(u0) / mu0;
    for (const auto& r : runs) {
      double err = 0.0;
      for (const auto& s : r.trajectory.states) {
        if (!in_window(s.t, res.window_start, res.window_end)) continue;
        const Eigen::VectorXd ex = modal_solution(u0, re.omega, re.damping, s.t);
        err = std::max(err, std::sqrt(model.unit_mass().quad(s.u - ex)));
      }
      re.errors.push_back(err);
    }
    for (std::size_t i = 0; i + 1 < re.errors.size(); ++i) re.orders.push_back(order(re.errors[i], re.errors[i + 1]));
    res.reference = re;
  }

  if (staggered) {
    const RunResult st = staggered->get();
    const State& a = runs.front().trajectory.states.back();
    const State& b = st.trajectory.states.back();
    SchemeComparison sc;
    const double base = energy_norm(model, a.u, a.alpha);
    const double diff = energy_norm(model, a.u - b.u, a.alpha - b.alpha);
    sc.relative_difference = base > 0.0 ? diff / base : diff;
    sc.monolithic_newton = total_newton(runs.front());
    sc.staggered_newton = total_newton(st);
    for (const auto& s : st.stats) sc.staggered_sweeps += s.sweeps;
    res.scheme = sc;
  }
  return res;
}

}  // namespace kvd
