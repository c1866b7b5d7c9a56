#include "doctest.h"
#include "support.hpp"

#include "kvd/errors.hpp"
#include "kvd/material.hpp"

#include <cmath>

using namespace kvd;

namespace {

MaterialParams at_material(int dim, double eps, double eps0, const ElasticTensor& c1, const ElasticTensor& d0) {
  MaterialParams m;
  m.dim = dim;
  m.degradation = DegradationLaw::ambrosio_tortorelli(eps, eps0);
  m.elastic = c1;
  m.viscosity.d0 = d0;
  m.damage_energy = DamageEnergy::at_quadratic(1e-3, eps);
  m.dissipation.eta = 1e-4;
  m.gradient.kappa = eps * 1e-3;
  return m;
}

double min_eig(const Eigen::MatrixXd& a) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double energy(const MaterialParams& m, double k, double alpha, const Eigen::VectorXd& e) {
  return 0.5 * m.degradation.value(alpha) * m.elastic.quad(e) + 0.5 * k * e.squaredNorm();
}

}  // namespace

TEST_CASE("voigt map preserves the double contraction") {
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix2d a = Eigen::Matrix2d::Random(), b = Eigen::Matrix2d::Random();
    a = (0.5 * (a + a.transpose())).eval();
    b = (0.5 * (b + b.transpose())).eval();
    const double direct = (a.array() * b.array()).sum();
    CHECK(to_voigt(a).dot(to_voigt(b)) == doctest::Approx(direct).epsilon(1e-14));
    CHECK((from_voigt(to_voigt(a), 2) - Eigen::MatrixXd(a)).norm() < 1e-15);
  }
}

TEST_CASE("isotropic tensor in 2D has eigenvalues 2mu and 2mu + 2lambda") {
  const ElasticTensor c = ElasticTensor::isotropic(2, 1.0, 1.0);
  CHECK(c.min_eigenvalue() == doctest::Approx(2.0));
  CHECK(c.max_eigenvalue() == doctest::Approx(4.0));
  const auto n = tensor_norms(c);
  CHECK(n.opnorm == doctest::Approx(4.0));
  CHECK(n.inv_opnorm == doctest::Approx(0.5));
  CHECK_THROWS_AS(tensor_norms(ElasticTensor(1, Eigen::MatrixXd::Constant(1, 1, -1.0))), NotPositiveDefinite);
}

TEST_CASE("Ambrosio-Tortorelli law values and derivatives") {
  const auto g = DegradationLaw::ambrosio_tortorelli(0.05, 0.5);
  for (double a : {0.0, 0.3, 0.7, 1.0}) {
    CHECK(g.value(a) == doctest::Approx((0.01 + a * a) / 2.0).epsilon(1e-15));
    CHECK(g.d1(a) == doctest::Approx(a));
    CHECK(g.d2(a) == doctest::Approx(1.0));
  }
  CHECK(g.violations().empty());
  const auto ext = gamma_extrema(g);
  CHECK(ext.min_gpp == doctest::Approx(1.0));
  CHECK(ext.max_gp_sq == doctest::Approx(1.0));
}

TEST_CASE("tabulated law reproduces a smooth law through the spline") {
  const auto at = DegradationLaw::ambrosio_tortorelli(0.1, 1.0);
  const auto tab = DegradationLaw::tabulated([&](double a) { return at.value(a); }, 201);
  for (double a = 0.0; a <= 1.0; a += 0.0371) {
    CHECK(tab.value(a) == doctest::Approx(at.value(a)).epsilon(1e-8));
    CHECK(tab.d1(a) == doctest::Approx(at.d1(a)).epsilon(1e-4));
  }
  CHECK(tab.violations().empty());
}

TEST_CASE("degenerate degradation laws are rejected") {
  const auto concave = DegradationLaw::tabulated([](double a) { return 1.0 - 0.25 * a * a; }, 51);
  CHECK_FALSE(concave.violations().empty());
  CHECK_THROWS_AS(gamma_extrema(concave), DegenerateLaw);
  const auto flat = DegradationLaw::tabulated([](double) { return 0.5; }, 51);
  CHECK_THROWS_AS(gamma_extrema(flat), DegenerateLaw);
}

TEST_CASE("critical step with identity tensors is one half") {
  const auto id = ElasticTensor::identity(1);
  const MaterialParams m = at_material(1, 0.05, 0.5, id, id);
  CHECK(critical_timestep(m) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(semiconvexity_constant(m) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("critical step equals 1 / (K |D0^-1|)") {
  test::Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const double lambda = rng.uniform(0.0, 2.0), mu = rng.uniform(0.1, 2.0), s = rng.uniform(0.01, 0.5);
    const auto c1 = ElasticTensor::isotropic(2, lambda, mu);
    const MaterialParams m = at_material(2, rng.uniform(0.02, 0.2), 0.5, c1, c1.scaled(s));
    const double k = semiconvexity_constant(m);
    CHECK(critical_timestep(m) == doctest::Approx(1.0 / (k * tensor_norms(m.viscosity.d0).inv_opnorm)).epsilon(1e-12));
  }
}

TEST_CASE("stored Hessian matches finite differences") {
  test::Rng rng(5);
  const auto c1 = ElasticTensor::isotropic(2, 0.7, 1.3);
  const MaterialParams m = at_material(2, 0.05, 0.5, c1, c1);
  const double k = 2.5;
  for (int trial = 0; trial < 10; ++trial) {
    const double a = rng.uniform(0.1, 0.9);
    const Eigen::VectorXd e = rng.vector(3);
    const Eigen::MatrixXd h = stored_hessian(m, k, a, e);
    auto f = [&](const Eigen::VectorXd& z) { return energy(m, k, z[3], z.head(3)); };
    Eigen::VectorXd z(4);
    z << e, a;
    const double step = 1e-4;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        Eigen::VectorXd pp = z, pm = z, mp = z, mm = z;
        pp[i] += step, pp[j] += step;
        pm[i] += step, pm[j] -= step;
        mp[i] -= step, mp[j] += step;
        mm[i] -= step, mm[j] -= step;
        const double fd = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step * step);
        CHECK(h(i, j) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("property: K-regularized stored energy is convex at random samples") {
  test::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = rng.integer(1, 2);
    const auto c1 = dim == 1 ? ElasticTensor::isotropic(1, 0.0, rng.uniform(0.1, 3.0))
                             : ElasticTensor::isotropic(2, rng.uniform(0.0, 3.0), rng.uniform(0.1, 3.0));
    const MaterialParams m = at_material(dim, rng.uniform(0.01, 0.3), rng.uniform(0.3, 1.0), c1, c1);
    const double k = semiconvexity_constant(m);
    const Eigen::VectorXd e = rng.vector(voigt_size(dim), -1e3, 1e3);
    const double a = rng.uniform(0.0, 1.0);
    const Eigen::MatrixXd h = stored_hessian(m, k, a, e);
    CHECK(min_eig(h) >= -1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("psd check passes with K and fails without it") {
  const auto c1 = ElasticTensor::isotropic(2, 1.0, 1.0);
  const MaterialParams m = at_material(2, 0.06, 0.6, c1, c1);
  const CheckReport ok = stored_hessian_psd_check(m, semiconvexity_constant(m));
  CHECK(ok.pass);
  CHECK(ok.samples > 1000);
  const CheckReport bad = stored_hessian_psd_check(m, 0.0);
  CHECK_FALSE(bad.pass);
  CHECK(bad.min_eigenvalue < 0.0);
  CHECK_FALSE(bad.summary().empty());
}

TEST_CASE("damage-viscosity regularization admits an indefinite witness") {
  const auto id = ElasticTensor::identity(1);
  const MaterialParams m = at_material(1, 0.1, 1.0, id, id);
  const Witness w = visco_damage_nonconvexity_witness(m, 1e6, 1.0);
  CHECK(w.alpha == doctest::Approx(1.0));
  CHECK(w.min_eigenvalue < -1.0);
  CHECK(min_eig(visco_damage_hessian(m, 1e6, w.alpha, w.strain)) == doctest::Approx(w.min_eigenvalue));
}

TEST_CASE("stress splits into elastic and viscous parts") {
  const auto c1 = ElasticTensor::isotropic(2, 1.0, 0.5);
  MaterialParams m = at_material(2, 0.05, 0.5, c1, c1.scaled(0.1));
  m.viscosity.chi_r = 0.3;
  const Eigen::Vector3d e(0.1, -0.2, 0.05), ed(1.0, 0.5, -0.25);
  const double a = 0.6, a_old = 0.8;
  const Eigen::VectorXd expect = m.degradation.value(a) * c1.apply(e) +
                                 (0.1 * c1.voigt() + 0.3 * m.degradation.value(a_old) * c1.voigt()) * ed;
  CHECK((stress(m, a, e, ed, a_old) - expect).norm() < 1e-15);
  CHECK(driving_force(m, a, e) == doctest::Approx(0.5 * a * c1.quad(e)));
}

TEST_CASE("material invariants reject negative fracture toughness and density") {
  const auto id = ElasticTensor::identity(1);
  MaterialParams m = at_material(1, 0.05, 0.5, id, id);
  CHECK(m.violations().empty());
  m.damage_energy = DamageEnergy::at_quadratic(-1.0, 0.05);
  CHECK_FALSE(m.violations().empty());
  m = at_material(1, 0.05, 0.5, id, id);
  m.rho = 0.0;
  CHECK_FALSE(m.violations().empty());
  CHECK(m.violations(true).empty());
}

TEST_CASE("dissipation potential is infinite for healing rates") {
  DissipationLaw z{2.0};
  CHECK(z.value(-0.5) == doctest::Approx(0.25));
  CHECK(std::isinf(z.value(1e-3)));
  CHECK(z.value(0.0) == 0.0);
}

TEST_CASE("gradient density derivatives are consistent") {
  for (double p : {2.0, 3.0}) {
    GradientTerm g{0.7, p, p == 2.0 ? 0.0 : 0.1};
    for (double s : {0.01, 0.4, 2.0}) {
      const double h = 1e-6 * s;
      const auto d = g.density(s);
      CHECK(d.dpsi == doctest::Approx((g.density(s + h).psi - g.density(s - h).psi) / (2 * h)).epsilon(1e-6));
      CHECK(d.ddpsi == doctest::Approx((g.density(s + h).dpsi - g.density(s - h).dpsi) / (2 * h)).epsilon(1e-5));
    }
  }
}
