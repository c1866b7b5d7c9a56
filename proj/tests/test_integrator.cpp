#include "doctest.h"
#include "support.hpp"

#include "kvd/errors.hpp"
#include "kvd/integrator.hpp"

#include <cmath>

using namespace kvd;

namespace {

RunResult run_text(const std::string& text) { return run(parse_scenario_text(text).problem); }

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("equilibrium: no loads and zero data give a constant trajectory") {
  const RunResult r = run_text(test::bar_text(10, 0.0));
  REQUIRE(r.completed);
  for (const State& s : r.trajectory.states) {
    CHECK(test::max_abs(s.u) == 0.0);
    CHECK(test::max_abs(s.v) == 0.0);
    CHECK((s.alpha.array() == 1.0).all());
  }
  for (const EnergyRow& row : r.report.rows) {
    CHECK(row.kinetic == 0.0);
    CHECK(row.visc_diss == 0.0);
    CHECK(row.mechanical() == r.report.rows.front().mechanical());
    CHECK(std::abs(row.margin) <= 1e-15);
  }
  const AprioriBounds b = apriori_diagnostics(r.trajectory, *r.model);
  CHECK(b.u_h1_h1 == 0.0);
  CHECK(b.u_w1inf_l2 == 0.0);
  CHECK(b.alpha_h1_l2 == doctest::Approx(std::sqrt(r.trajectory.final_time())).epsilon(1e-12));
}

TEST_CASE("frozen undamped bar with two free dofs loses exactly the backward-Euler term") {
  const std::string text =
      "[mesh]\ndim = 1\nnx = 2\n[material]\nviscosity.D0_scale = 0\ndamage.frozen = true\n"
      "[loads]\ndirichlet.left.x = 0\n[initial]\nu = linear:0.01\nv = 0.3\n[time]\nT = 0.5\ntau = 0.05\n";
  const RunResult r = run_text(text);
  const Model& m = *r.model;
  const SparseSym k = assemble_degraded_stiffness(m.disc(), m.material().elastic, m.material().degradation,
                                                  r.trajectory.states[0].alpha);
  const auto& st = r.trajectory.states;
  for (int i = 1; i <= r.trajectory.steps(); ++i) {
    const double before = kinetic_energy(m, st[i - 1].v) + stored_energy(m, st[i - 1].u, st[i - 1].alpha).total();
    const double after = kinetic_energy(m, st[i].v) + stored_energy(m, st[i].u, st[i].alpha).total();
    const double expect = 0.5 * k.quad(st[i].u - st[i - 1].u);
    CHECK(rel(before - after, expect) <= 1e-9);
  }
}

TEST_CASE("property: kinetic telescoping and midpoint identity on every trajectory") {
  for (const std::string& text : {test::bar_text(20), test::plate_text(4)}) {
    const RunResult r = run_text(text);
    const Model& m = *r.model;
    const auto& st = r.trajectory.states;
    double sum = 0.0;
    for (int i = 1; i <= r.trajectory.steps(); ++i) {
      const Eigen::VectorXd dv = st[i].v - st[i - 1].v, sv = st[i].v + st[i - 1].v;
      sum += 0.5 * dv.dot(m.mass().apply(sv));
      const Eigen::VectorXd mid = (st[i].u - st[i - 1].u) / r.trajectory.tau - 0.5 * sv;
      CHECK(test::max_abs(mid) <= 1e-12 * std::max(1.0, test::max_abs(sv)));
    }
    const double telescoped = kinetic_energy(m, st.back().v) - kinetic_energy(m, st.front().v);
    CHECK(rel(sum, telescoped) <= 1e-12);
  }
}

TEST_CASE("property: interpolant identities at random times") {
  test::Rng rng(101);
  const RunResult r = run_text(test::bar_text(10));
  const Trajectory& tr = r.trajectory;
  const auto f = Trajectory::Field::U;
  for (int k = 0; k <= tr.steps(); ++k) CHECK((tr.affine(f, k * tr.tau) - tr.states[k].u).norm() <= 1e-12);
  for (int trial = 0; trial < 100; ++trial) {
    const double t = rng.uniform(0.0, tr.final_time());
    const int k = std::max(1, static_cast<int>(std::ceil(t / tr.tau - 1e-12)));
    const double lam = (t - (k - 1) * tr.tau) / tr.tau;
    const Eigen::VectorXd lin = (1.0 - lam) * tr.states[k - 1].u + lam * tr.states[k].u;
    CHECK((tr.affine(f, t) - lin).norm() <= 1e-12 * std::max(1.0, lin.norm()));
    CHECK((tr.upper(f, t) - tr.states[k].u).norm() == 0.0);
    CHECK((tr.lower(f, t) - tr.states[k - 1].u).norm() == 0.0);
    CHECK((tr.midpoint(f, t) - 0.5 * (tr.states[k].u + tr.states[k - 1].u)).norm() <= 1e-15 * (1.0 + lin.norm()));
  }
}

TEST_CASE("energy ledger invariants along a damaging run") {
  const RunResult r = run_text(test::bar_text(20, 0.3));
  const auto& rows = r.report.rows;
  CHECK(rows.size() == static_cast<std::size_t>(r.trajectory.steps() + 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].kinetic >= 0.0);
    CHECK(rows[i].gradient >= 0.0);
    if (i == 0) continue;
    CHECK(rows[i].visc_diss >= rows[i - 1].visc_diss);
    CHECK(rows[i].dam_diss >= rows[i - 1].dam_diss);
  }
  CHECK(r.report.inequality_holds());
  for (int k = 1; k <= r.trajectory.steps(); ++k)
    CHECK((r.trajectory.states[k].alpha.array() <= r.trajectory.states[k - 1].alpha.array()).all());
}

TEST_CASE("ledger reconciles with the per-step potential terms") {
  const RunResult r = run_text(test::bar_text(12, 0.2));
  const auto& st = r.trajectory.states;
  const auto& rows = r.report.rows;
  const double tau = r.trajectory.tau;
  for (int k = 1; k <= r.trajectory.steps(); ++k) {
    const StepProblem sp(r.model, st[k - 1], tau);
    const PotentialTerms t = sp.terms(sp.pack(st[k].u, st[k].alpha));
    CHECK(rows[k].visc_diss - rows[k - 1].visc_diss == doctest::Approx(2.0 * t.viscous).epsilon(1e-10));
    CHECK(rows[k].dam_diss - rows[k - 1].dam_diss == doctest::Approx(2.0 * t.zeta).epsilon(1e-10));
    CHECK(rows[k].elastic == doctest::Approx(t.elastic).epsilon(1e-12));
  }
}

TEST_CASE("rate-independent limit has no damage dissipation") {
  const RunResult r = run_text(test::bar_text(10, 0.3, "[material]\ndissipation.eta = 0\ndissipation.rate_independent = true\n"));
  for (const auto& row : r.report.rows) CHECK(row.dam_diss == 0.0);
}

TEST_CASE("inequality prefactor at a quarter of the critical step is one half") {
  const Scenario sc = parse_scenario_text(test::bar_text(10, 0.1, ""));
  Scenario q = sc;
  set_tau(q, sc.tau0 / 4.0);
  const RunResult r = run(q.problem);
  CHECK(r.report.prefactor == 0.5);
  EnergyReport rep = r.report;
  const auto margins = check_energy_inequality(rep, q.problem.tau, sc.tau0);
  CHECK(margins.size() == rep.rows.size());
}

TEST_CASE("quasistatic uniform stretch matches the pointwise damage model") {
  const Scenario sc = builtin_scenario("quasistatic_bar");
  const RunResult r = run(sc.problem);
  const MaterialParams& m = sc.problem.material;
  const double eta = m.dissipation.eta, tau = sc.problem.tau;
  const auto* at = std::get_if<DamageEnergy::ATQuadratic>(&m.damage_energy.kind());
  REQUIRE(at != nullptr);
  const double e_mod = m.elastic.voigt()(0, 0);
  double alpha = 1.0;
  for (int k = 1; k <= r.trajectory.steps(); ++k) {
    const double e = 0.2 * k * tau;
    alpha = std::min(alpha, (eta * alpha / tau + at->gc / at->eps) / (eta / tau + 0.5 * e_mod * e * e + at->gc / at->eps));
    const auto& s = r.trajectory.states[k];
    CHECK(test::max_abs((s.alpha.array() - alpha).matrix()) <= 1e-10);
    for (int n = 0; n < r.model->mesh().n_nodes(); ++n)
      CHECK(s.u[n] == doctest::Approx(e * r.model->mesh().node(n)[0]).epsilon(1e-10).scale(1e-3));
  }
}

TEST_CASE("damage is localized at the loaded end early in the bar run") {
  auto settings = builtin_scenario("bar1d").settings;
  settings["time.T"] = "0.2";
  const Scenario sc = rebuild(settings);
  const RunResult r = run(sc.problem);
  const State& s = r.trajectory.states.back();
  const Mesh& mesh = r.model->mesh();
  const double peak = 1.0 - s.alpha.minCoeff();
  CHECK(peak > 1e-6);
  CHECK(1.0 - s.alpha[mesh.n_nodes() - 1] == doctest::Approx(peak));
  for (int n = 0; n < mesh.n_nodes(); ++n)
    if (mesh.node(n)[0] <= 0.5) CHECK(1.0 - s.alpha[n] <= 1e-2 * peak);
}

TEST_CASE("strict mode refuses uncertified steps") {
  Scenario sc = parse_scenario_text(test::bar_text(10));
  set_tau(sc, 2.0 * sc.tau0);
  sc.problem.strict_tau0 = true;
  CHECK_THROWS_AS(run(sc.problem), ValidationError);
  sc.problem.strict_tau0 = false;
  const RunResult r = run(sc.problem);
  CHECK_FALSE(r.report.certified);
  for (const auto& s : r.stats) CHECK_FALSE(s.certified);
}

TEST_CASE("solver failure keeps the partial trajectory") {
  Scenario sc = parse_scenario_text(test::bar_text(10, 0.3));
  sc.problem.solver.max_newton = 1;
  sc.problem.solver.grad_tol = 1e-16;
  try {
    run(sc.problem);
    FAIL("expected RunFailure");
  } catch (const RunFailure& f) {
    REQUIRE(f.partial);
    CHECK_FALSE(f.partial->completed);
    CHECK(f.partial->trajectory.steps() == f.step - 1);
    CHECK(f.partial->report.rows.size() == f.partial->trajectory.states.size());
  }
}

TEST_CASE("quasistatic mode needs a Dirichlet constraint") {
  Scenario sc = builtin_scenario("quasistatic_bar");
  sc.problem.loads.dirichlet.clear();
  CHECK_FALSE(sc.problem.violations().empty());
  CHECK_THROWS_AS(run(sc.problem), ValidationError);
}

TEST_CASE("initial damage outside [0, 1] is rejected") {
  Scenario sc = parse_scenario_text(test::bar_text(6));
  sc.problem.initial.alpha0_nodal = Eigen::VectorXd::Constant(7, 1.5);
  CHECK_THROWS_AS(run(sc.problem), ValidationError);
}
