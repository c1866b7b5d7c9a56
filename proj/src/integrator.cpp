#include "kvd/integrator.hpp"

#include "kvd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kvd {

namespace {

Eigen::VectorXd nodal_vector(const Mesh& mesh, const VectorField& f, double t) {
  const int d = mesh.dim();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.n_nodes() * d);
  if (!f) return out;
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Eigen::Vector2d v = f(t, mesh.node(n));
    for (int c = 0; c < d; ++c) out[n * d + c] = v[c];
  }
  return out;
}

// Sum over components of grad(u_c) . grad(u_c) with the scalar Laplacian.
double vector_dirichlet_sq(const Model& model, const Eigen::VectorXd& u) {
  const int d = model.mesh().dim();
  const int n = model.mesh().n_nodes();
  double s = 0.0;
  for (int c = 0; c < d; ++c) {
    Eigen::VectorXd uc(n);
    for (int i = 0; i < n; ++i) uc[i] = u[i * d + c];
    s += model.laplacian().quad(uc);
  }
  return s;
}

double w1p_norm(const Model& model, const Eigen::VectorXd& alpha, double p) {
  const Mesh& mesh = model.mesh();
  double s = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.element(e);
    Eigen::VectorXd ae(mesh.nodes_per_element());
    for (int a = 0; a < ae.size(); ++a) ae[a] = alpha[el[a]];
    for (const auto& q : quadrature(mesh.dim())) {
      double v = 0.0;
      for (int a = 0; a < ae.size(); ++a) v += q.bary[a] * ae[a];
      s += q.weight * mesh.measure(e) * std::pow(std::abs(v), p);
    }
    s += mesh.measure(e) * std::pow((mesh.gradients(e) * ae).norm(), p);
  }
  return std::pow(s, 1.0 / p);
}

}  // namespace

int Problem::steps() const { return static_cast<int>(std::llround(T / tau)); }

std::vector<std::string> Problem::violations() const {
  const bool quasistatic = material.rho == 0.0 && !material.rho_nodal;
  std::vector<std::string> v = material.violations(quasistatic, options.frozen_damage);
  for (auto& s : solver.violations()) v.push_back(s);
  if (!(tau > 0.0)) v.push_back("time.tau must be positive");
  if (!(T > 0.0)) v.push_back("time.T must be positive");
  if (tau > 0.0 && T > 0.0) {
    const long n = std::llround(T / tau);
    if (n < 1 || std::abs(n * tau - T) > 1e-9 * T) v.push_back("time.T must be an integer multiple of time.tau");
  }
  if (quasistatic && loads.dirichlet.empty())
    v.push_back("quasistatic runs (rho = 0) need at least one Dirichlet constraint");
  if (material.dim != mesh.dim) v.push_back("material and mesh dimensions differ");
  return v;
}

std::shared_ptr<const Model> build_model(const Problem& problem) {
  if (auto v = problem.violations(); !v.empty()) throw ValidationError(v);
  return std::make_shared<const Model>(build_mesh(problem.mesh), problem.material, problem.loads, problem.options);
}

State initial_state(const Model& model, const InitialFields& init) {
  const Mesh& mesh = model.mesh();
  State s;
  s.u = init.u0_nodal ? *init.u0_nodal : nodal_vector(mesh, init.u0, 0.0);
  s.v = init.v0_nodal ? *init.v0_nodal : nodal_vector(mesh, init.v0, 0.0);
  if (init.alpha0_nodal) {
    s.alpha = *init.alpha0_nodal;
  } else {
    s.alpha = Eigen::VectorXd::Ones(mesh.n_nodes());
    if (init.alpha0)
      for (int n = 0; n < mesh.n_nodes(); ++n) s.alpha[n] = init.alpha0(0.0, mesh.node(n));
  }
  std::vector<std::string> v;
  if (s.u.size() != model.n_u()) v.push_back("initial displacement has the wrong size");
  if (s.v.size() != model.n_u()) v.push_back("initial velocity has the wrong size");
  if (s.alpha.size() != model.n_alpha()) v.push_back("initial damage has the wrong size");
  if (v.empty() && !(s.alpha.minCoeff() >= 0.0 && s.alpha.maxCoeff() <= 1.0))
    v.push_back("initial damage must lie in [0, 1]");
  if (v.empty() && !(s.u.allFinite() && s.v.allFinite())) v.push_back("initial fields must be finite");
  if (!v.empty()) throw ValidationError(v);
  return s;
}

// ---------------------------------------------------------------------------

const Eigen::VectorXd& Trajectory::field(int k, Field f) const {
  const State& s = states.at(k);
  return f == Field::U ? s.u : f == Field::V ? s.v : s.alpha;
}

int Trajectory::interval(double t) const {
  if (steps() < 1) throw BadSpec("trajectory has no steps");
  const int k = static_cast<int>(std::ceil(t / tau - 1e-12));
  return std::clamp(k, 1, steps());
}

Eigen::VectorXd Trajectory::affine(Field f, double t) const {
  const int k = interval(t);
  const double s = std::clamp((t - (k - 1) * tau) / tau, 0.0, 1.0);
  return (1.0 - s) * field(k - 1, f) + s * field(k, f);
}

Eigen::VectorXd Trajectory::upper(Field f, double t) const { return field(interval(t), f); }

Eigen::VectorXd Trajectory::lower(Field f, double t) const { return field(interval(t) - 1, f); }

Eigen::VectorXd Trajectory::midpoint(Field f, double t) const {
  const int k = interval(t);
  return 0.5 * (field(k, f) + field(k - 1, f));
}

// ---------------------------------------------------------------------------

double EnergyReport::min_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) m = std::min(m, r.margin);
  return m;
}

bool EnergyReport::inequality_holds() const { return min_margin() >= -tolerance; }

EnergyReport energy_report(const Trajectory& traj, const Model& model) {
  EnergyReport rep;
  rep.tau = traj.tau;
  const double eta = model.material().dissipation.eta;
  const bool constrained = !model.dofs().constraints().empty();
  std::shared_ptr<const Model> alias(std::shared_ptr<const Model>{}, &model);
  EnergyRow acc;
  for (int k = 0; k <= traj.steps(); ++k) {
    const State& s = traj.states[k];
    EnergyRow row;
    row.k = k;
    row.t = s.t;
    row.kinetic = kinetic_energy(model, s.v);
    const StoredEnergy e = stored_energy(model, s.u, s.alpha);
    row.elastic = e.elastic;
    row.phi = e.phi;
    row.gradient = e.gradient;
    if (k > 0) {
      const State& p = traj.states[k - 1];
      const StepProblem sp(alias, p, traj.tau);
      const Eigen::VectorXd du = s.u - p.u;
      const Eigen::VectorXd da = s.alpha - p.alpha;
      acc.visc_diss += sp.viscous().quad(du) / traj.tau;
      acc.dam_diss += eta * model.scalar_mass().quad(da) / traj.tau;
      acc.ext_work += (sp.loads().body + sp.loads().traction).dot(du);
      if (constrained) {
        const Eigen::VectorXd g = sp.gradient(sp.pack(s.u, s.alpha));
        for (const auto& [dof, val] : model.dofs().constrained_values(s.t)) {
          (void)val;
          acc.ext_work += g[dof] * du[dof];
        }
      }
    }
    row.visc_diss = acc.visc_diss;
    row.dam_diss = acc.dam_diss;
    row.ext_work = acc.ext_work;
    rep.rows.push_back(row);
  }
  check_energy_inequality(rep, traj.tau, model.tau0());
  return rep;
}

std::vector<double> check_energy_inequality(EnergyReport& report, double tau, double tau0) {
  report.tau = tau;
  report.tau0 = tau0;
  report.certified = tau <= tau0;
  report.prefactor = std::isinf(tau0) ? 1.0 : 1.0 - std::sqrt(tau / tau0);
  std::vector<double> margins;
  if (report.rows.empty()) return margins;
  const EnergyRow& r0 = report.rows.front();
  double scale = std::abs(r0.mechanical());
  for (const auto& r : report.rows)
    scale = std::max({scale, std::abs(r.mechanical()), std::abs(r.ext_work), r.visc_diss + r.dam_diss});
  report.scale = scale;
  report.tolerance = 1e-8 * scale;
  for (auto& r : report.rows) {
    const double rhs = r0.kinetic + r0.elastic + r0.phi + r0.gradient + r.ext_work;
    const double lhs = r.mechanical() + report.prefactor * (r.visc_diss + r.dam_diss);
    r.margin = rhs - lhs;
    margins.push_back(r.margin);
  }
  return margins;
}

AprioriBounds apriori_diagnostics(const Trajectory& traj, const Model& model) {
  AprioriBounds b;
  const double tau = traj.tau;
  const double p = model.material().gradient.p;
  const auto& m1 = model.unit_mass();
  double u_l2 = 0.0, u_l2_sq_int = 0.0, du_max = 0.0, du_h1_sq_int = 0.0;
  double a_l2_sq_int = 0.0, da_sq_int = 0.0, a_w1p = 0.0;
  for (int k = 0; k <= traj.steps(); ++k) {
    const State& s = traj.states[k];
    u_l2 = std::max(u_l2, std::sqrt(m1.quad(s.u)));
    a_w1p = std::max(a_w1p, w1p_norm(model, s.alpha, p));
    if (k == 0) continue;
    const State& q = traj.states[k - 1];
    u_l2_sq_int += tau * (m1.quad(s.u) + vector_dirichlet_sq(model, s.u));
    const Eigen::VectorXd du = (s.u - q.u) / tau;
    du_max = std::max(du_max, std::sqrt(m1.quad(du)));
    du_h1_sq_int += tau * (m1.quad(du) + vector_dirichlet_sq(model, du));
    a_l2_sq_int += tau * model.scalar_mass().quad(s.alpha);
    const Eigen::VectorXd da = (s.alpha - q.alpha) / tau;
    da_sq_int += tau * model.scalar_mass().quad(da);
  }
  b.u_h1_h1 = std::sqrt(u_l2_sq_int + du_h1_sq_int);
  b.u_w1inf_l2 = u_l2 + du_max;
  b.alpha_linf_w1p = a_w1p;
  b.alpha_h1_l2 = std::sqrt(a_l2_sq_int + da_sq_int);
  return b;
}

double energy_norm(const Model& model, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha) {
  return std::sqrt(model.unit_mass().quad(u) + vector_dirichlet_sq(model, u) + model.scalar_mass().quad(alpha) +
                   model.laplacian().quad(alpha));
}

// ---------------------------------------------------------------------------

RunResult run(const Problem& problem, const RunHooks& hooks) {
  auto model = build_model(problem);
  if (problem.strict_tau0 && problem.tau > model->tau0()) {
    throw ValidationError({"time step " + std::to_string(problem.tau) + " exceeds the critical step " +
                           std::to_string(model->tau0()) + " (strict mode)"});
  }
  RunResult res;
  res.model = model;
  res.trajectory.tau = problem.tau;
  res.trajectory.states.push_back(initial_state(*model, problem.initial));
  const int n = problem.steps();
  for (int k = 1; k <= n; ++k) {
    const State& prev = res.trajectory.states.back();
    try {
      const StepProblem sp(model, prev, problem.tau);
      StepResult r = solve_step(sp, problem.solver);
      State s;
      s.k = k;
      s.t = k * problem.tau;
      s.v = velocity_update(r.u, prev.u, prev.v, problem.tau);
      s.u = std::move(r.u);
      s.alpha = std::move(r.alpha);
      res.trajectory.states.push_back(std::move(s));
      res.stats.push_back(r.stats);
      if (hooks.on_step) hooks.on_step(res.trajectory.states.back(), res.stats.back());
    } catch (const NoConvergence& e) {
      if (const auto* sf = dynamic_cast<const StepFailure*>(&e)) res.stats.push_back(sf->stats);
      res.failure = e.what();
      res.report = energy_report(res.trajectory, *model);
      throw RunFailure(e.what(), k, std::make_shared<const RunResult>(std::move(res)));
    } catch (const LinearSolveFailure& e) {
      res.failure = e.what();
      res.report = energy_report(res.trajectory, *model);
      throw RunFailure(e.what(), k, std::make_shared<const RunResult>(std::move(res)));
    }
  }
  res.completed = true;
  res.report = energy_report(res.trajectory, *model);
  return res;
}

}  // namespace kvd
