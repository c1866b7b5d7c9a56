#include "doctest.h"
#include "support.hpp"

#include "kvd/errors.hpp"
#include "kvd/fem.hpp"
#include "kvd/loads.hpp"

#include <cmath>

using namespace kvd;

TEST_CASE("structured meshes carry tagged boundaries") {
  const Mesh m1 = build_mesh({1, 2.0, 1.0, 8, 1, {}});
  CHECK(m1.n_nodes() == 9);
  CHECK(m1.n_elements() == 8);
  int left = 0, right = 0;
  for (const auto& f : m1.facets()) {
    if (f.tag == kLeft) left += f.nodes[0] == 0;
    if (f.tag == kRight) right += f.nodes[0] == 8;
  }
  CHECK(left == 1);
  CHECK(right == 1);
  const Mesh m2 = build_mesh({2, 1.0, 1.0, 4, 3, {}});
  CHECK(m2.n_nodes() == 20);
  CHECK(m2.n_elements() == 24);
  int top = 0;
  for (const auto& f : m2.facets()) top += f.tag == kTop;
  CHECK(top == 4);
  CHECK(boundary_tag("bottom") == kBottom);
  CHECK(boundary_tag("7") == 7);
}

TEST_CASE("mesh text round trip") {
  const Mesh m = parse_mesh("2 4 2\n0 0\n1 0\n1 1\n0 1\n1 2 3\n1 3 4\n");
  CHECK(m.dim() == 2);
  CHECK(m.n_nodes() == 4);
  CHECK(m.n_elements() == 2);
  CHECK_THROWS_AS(parse_mesh("2 4 2\n0 0\n1 0\n"), FileFormat);
}

TEST_CASE("time profiles") {
  CHECK(TimeProfile::parse("ramp:2")(1.0) == doctest::Approx(0.5));
  CHECK(TimeProfile::parse("ramp:2")(3.0) == doctest::Approx(1.0));
  CHECK(TimeProfile::parse("linear")(0.3) == doctest::Approx(0.3));
  CHECK(TimeProfile::parse("constant")(5.0) == doctest::Approx(1.0));
  CHECK(TimeProfile::parse("sin:2")(0.25) == doctest::Approx(std::sin(0.5)));
  const auto tab = TimeProfile::parse("table:0:0,1:2,2:2");
  CHECK(tab(0.5) == doctest::Approx(1.0));
  CHECK(tab(1.5) == doctest::Approx(2.0));
  CHECK(TimeProfile::parse(tab.str()).str() == tab.str());
  CHECK_THROWS(TimeProfile::parse("wobble"));
}

TEST_CASE("dof map constraints: sorted values, conflicts, free list") {
  const Mesh m = build_mesh({2, 1.0, 1.0, 2, 2, {}});
  DofMap dofs(m);
  dofs.add_constraint(4, [](double t) { return 2.0 * t; });
  dofs.add_constraint(1, [](double) { return 0.0; });
  dofs.add_constraint(4, [](double t) { return 2.0 * t; });
  const auto vals = dofs.constrained_values(0.5);
  REQUIRE(vals.size() == 2);
  CHECK(vals[0].first == 1);
  CHECK(vals[1].first == 4);
  CHECK(vals[1].second == doctest::Approx(1.0));
  CHECK(dofs.free_u().size() == static_cast<std::size_t>(dofs.n_u() - 2));
  dofs.add_constraint(1, [](double) { return 1.0; });
  CHECK_THROWS_AS(dofs.constrained_values(0.0), InconsistentConstraint);
}

TEST_CASE("time-averaged loads integrate linear profiles exactly") {
  const Mesh m = build_mesh({2, 2.0, 1.0, 4, 2, {}});
  LoadSpec loads;
  loads.body = LoadSpec::uniform({0.5, -1.0}, TimeProfile::parse("linear"));
  loads.tractions.push_back({kTop, LoadSpec::uniform({0.0, 3.0}, TimeProfile::parse("linear"))});
  const double tau = 0.1;
  const int k = 4;
  const StepLoads sl = time_averaged_loads(loads, k, tau, m);
  const double tbar = (k - 0.5) * tau;
  double fx = 0.0, fy = 0.0, gy = 0.0;
  for (int n = 0; n < m.n_nodes(); ++n) {
    fx += sl.body[2 * n];
    fy += sl.body[2 * n + 1];
    gy += sl.traction[2 * n + 1];
  }
  CHECK(fx == doctest::Approx(0.5 * tbar * 2.0).epsilon(1e-13));
  CHECK(fy == doctest::Approx(-1.0 * tbar * 2.0).epsilon(1e-13));
  CHECK(gy == doctest::Approx(3.0 * tbar * 2.0).epsilon(1e-13));
  const StepLoads inst = instantaneous_loads(loads, tbar, m);
  CHECK((inst.body - sl.body).norm() < 1e-13);
}

TEST_CASE("1D traction is a point load at the tagged end") {
  const Mesh m = build_mesh({1, 1.0, 1.0, 5, 1, {}});
  LoadSpec loads;
  loads.tractions.push_back({kRight, LoadSpec::uniform({0.2, 0.0}, TimeProfile{})});
  const StepLoads sl = instantaneous_loads(loads, 0.0, m);
  CHECK(sl.traction[5] == doctest::Approx(0.2));
  CHECK(sl.traction.head(5).norm() == 0.0);
}

TEST_CASE("Dirichlet elimination solves a constrained Poisson problem") {
  const Mesh m = build_mesh({1, 1.0, 1.0, 10, 1, {}});
  const Discretization disc(m);
  const auto c1 = ElasticTensor::isotropic(1, 0.0, 0.5);
  const auto gamma = DegradationLaw::quadratic(1.0);
  const SparseSym k = assemble_degraded_stiffness(disc, c1, gamma, Eigen::VectorXd::Ones(11));
  DofMap dofs(m);
  dofs.add_constraint(0, [](double) { return 0.0; });
  dofs.add_constraint(10, [](double) { return 0.3; });
  const ReducedSystem rs = apply_dirichlet(k, Eigen::VectorXd::Zero(11), dofs, 0.0);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(rs.matrix);
  const Eigen::VectorXd u = rs.expand(ldlt.solve(rs.rhs));
  for (int i = 0; i <= 10; ++i) CHECK(u[i] == doctest::Approx(0.03 * i).epsilon(1e-12));
}

TEST_CASE("damage gradient residual matches finite differences for p = 3") {
  test::Rng rng(17);
  const Mesh m = build_mesh({2, 1.0, 1.0, 4, 4, {}});
  const Discretization disc(m);
  const GradientTerm term{0.3, 3.0, 0.05};
  const Eigen::VectorXd a = rng.vector(m.n_nodes(), 0.2, 1.0);
  const GradientTermEval ev = damage_gradient_residual(disc, a, term);
  CHECK(ev.energy == doctest::Approx(damage_gradient_energy(m, a, term)).epsilon(1e-14));
  const auto f = [&](const Eigen::VectorXd& x) { return damage_gradient_energy(m, x, term); };
  const Eigen::VectorXd fd = test::fd_gradient(f, a, 1e-6);
  CHECK((fd - ev.residual).norm() <= 1e-6 * ev.residual.norm());
  const Eigen::VectorXd dir = rng.vector(m.n_nodes());
  const double h = 1e-6;
  const Eigen::VectorXd hv = (damage_gradient_residual(disc, a + h * dir, term).residual -
                              damage_gradient_residual(disc, a - h * dir, term).residual) / (2 * h);
  CHECK((hv - ev.jacobian.apply(dir)).norm() <= 1e-5 * hv.norm());
}
