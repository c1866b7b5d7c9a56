#include "doctest.h"
#include "support.hpp"

#include "kvd/assembly.hpp"
#include "kvd/fem.hpp"

#include <omp.h>

using namespace kvd;

namespace {

MatrixKernel random_sym_kernel(int nloc, std::uint64_t seed) {
  return [nloc, seed](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
    std::mt19937_64 g(seed + 977 * static_cast<std::uint64_t>(e));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < nloc; ++i)
      for (int j = 0; j <= i; ++j) ke(i, j) = ke(j, i) = u(g);
  };
}

VectorKernel random_vec_kernel(int nloc, std::uint64_t seed) {
  return [nloc, seed](int e, Eigen::Ref<Eigen::VectorXd> fe) {
    std::mt19937_64 g(seed + 31 * static_cast<std::uint64_t>(e));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < nloc; ++i) fe[i] = u(g);
  };
}

}  // namespace

TEST_CASE("space sizes and local dof layout") {
  const Mesh m = build_mesh({2, 1.0, 1.0, 3, 2, {}});
  CHECK(space_size(m, Space::Vector) == 2 * m.n_nodes());
  CHECK(space_size(m, Space::Scalar) == m.n_nodes());
  CHECK(space_size(m, Space::Coupled) == 3 * m.n_nodes());
  CHECK(local_size(m, Space::Coupled) == 9);
  std::vector<int> dofs(9);
  local_dofs(m, Space::Coupled, 0, dofs);
  const auto& el = m.element(0);
  for (int a = 0; a < 3; ++a) {
    CHECK(dofs[a * 2] == el[a] * 2);
    CHECK(dofs[a * 2 + 1] == el[a] * 2 + 1);
    CHECK(dofs[6 + a] == 2 * m.n_nodes() + el[a]);
  }
}

TEST_CASE("property: parallel assembly equals the serial reference") {
  test::Rng rng(21);
  for (int trial = 0; trial < 12; ++trial) {
    const int dim = rng.integer(1, 2);
    const Mesh m = build_mesh({dim, 1.0, rng.uniform(0.5, 2.0), rng.integer(2, 12), rng.integer(2, 9), {}});
    for (Space s : {Space::Vector, Space::Scalar, Space::Coupled}) {
      const AssemblyPlan plan(m, s);
      const auto mk = random_sym_kernel(plan.local_size(), 100 + trial);
      const auto vk = random_vec_kernel(plan.local_size(), 200 + trial);
      const SparseSym a = plan.assemble(mk);
      const SparseSym b = serial::assemble(m, s, mk);
      CHECK((a.dense() - b.dense()).cwiseAbs().maxCoeff() < 1e-13);
      CHECK(a.is_symmetric());
      CHECK((plan.assemble_vector(vk) - serial::assemble_vector(m, s, vk)).cwiseAbs().maxCoeff() < 1e-13);
    }
    const ScalarKernel sk = [](int e) { return 1.0 / (1.0 + e); };
    const AssemblyPlan plan(m, Space::Scalar);
    CHECK(plan.assemble_scalar(sk) == doctest::Approx(serial::assemble_scalar(m, sk)).epsilon(1e-14));
  }
}

TEST_CASE("assembly is bitwise independent of the thread count") {
  const Mesh m = build_mesh({2, 1.0, 1.0, 16, 16, {}});
  const AssemblyPlan plan(m, Space::Coupled);
  const auto mk = random_sym_kernel(plan.local_size(), 7);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const SparseSym a = plan.assemble(mk);
  omp_set_num_threads(4);
  const SparseSym b = plan.assemble(mk);
  omp_set_num_threads(saved);
  REQUIRE(a.m.nonZeros() == b.m.nonZeros());
  for (int i = 0; i < a.m.nonZeros(); ++i) CHECK(a.m.valuePtr()[i] == b.m.valuePtr()[i]);
}

TEST_CASE("accumulate adds into the pattern layout and find locates entries") {
  const Mesh m = build_mesh({1, 1.0, 1.0, 5, 1, {}});
  const AssemblyPlan plan(m, Space::Scalar);
  const SparseSym z = plan.zero();
  CHECK(z.m.nonZeros() == 5 + 2 * 5 + 1);
  std::vector<double> vals(z.m.nonZeros(), 0.0);
  const MatrixKernel ones = [](int, Eigen::Ref<Eigen::MatrixXd> ke) { ke.setOnes(); };
  plan.accumulate(ones, vals);
  plan.accumulate(ones, vals);
  CHECK(vals[plan.find(2, 2)] == 4.0);
  CHECK(vals[plan.find(2, 3)] == 2.0);
  CHECK(plan.find(0, 3) == -1);
}

TEST_CASE("consistent mass integrates density times volume") {
  test::Rng rng(4);
  for (int dim : {1, 2}) {
    const Mesh m = build_mesh({dim, 2.0, 0.5, 7, 5, {}});
    const Discretization disc(m);
    const double rho = rng.uniform(0.5, 3.0);
    const SparseSym mass = assemble_mass(disc, rho);
    const double vol = dim == 1 ? 2.0 : 1.0;
    Eigen::VectorXd ones_x = Eigen::VectorXd::Zero(mass.size());
    for (int n = 0; n < m.n_nodes(); ++n) ones_x[n * dim] = 1.0;
    CHECK(mass.quad(ones_x) == doctest::Approx(rho * vol).epsilon(1e-13));
    const SparseSym ms = assemble_scalar_mass(disc);
    CHECK(ms.quad(Eigen::VectorXd::Ones(m.n_nodes())) == doctest::Approx(vol).epsilon(1e-13));
    const SparseSym lap = assemble_laplacian(disc);
    CHECK(test::max_abs(lap.apply(Eigen::VectorXd::Ones(m.n_nodes()))) < 1e-12);
  }
}

TEST_CASE("stiffness annihilates rigid motions and reproduces linear strain energy") {
  const Mesh m = build_mesh({2, 1.0, 1.0, 6, 6, {}});
  const Discretization disc(m);
  const auto c1 = ElasticTensor::isotropic(2, 1.0, 1.0);
  const auto gamma = DegradationLaw::ambrosio_tortorelli(0.1, 1.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_nodes());
  const SparseSym k = assemble_degraded_stiffness(disc, c1, gamma, ones);
  Eigen::VectorXd tx(m.n_nodes() * 2), rot(m.n_nodes() * 2), lin(m.n_nodes() * 2);
  for (int n = 0; n < m.n_nodes(); ++n) {
    const auto& p = m.nodes()[n];
    tx.segment<2>(2 * n) << 1.0, 0.0;
    rot.segment<2>(2 * n) << -p[1], p[0];
    lin.segment<2>(2 * n) << 0.3 * p[0], -0.1 * p[1];
  }
  CHECK(test::max_abs(k.apply(tx)) < 1e-12);
  CHECK(test::max_abs(k.apply(rot)) < 1e-12);
  Eigen::Matrix2d eps;
  eps << 0.3, 0.0, 0.0, -0.1;
  const double density = gamma.value(1.0) * c1.quad(to_voigt(eps));
  CHECK(k.quad(lin) == doctest::Approx(density).epsilon(1e-12));
}

TEST_CASE("strain operator reproduces affine displacement gradients") {
  test::Rng rng(8);
  const Mesh m = build_mesh({2, 1.0, 1.0, 4, 3, {}});
  Eigen::Matrix2d g = Eigen::Matrix2d::Random();
  Eigen::VectorXd u(m.n_nodes() * 2);
  for (int n = 0; n < m.n_nodes(); ++n) {
    const Eigen::Vector2d x(m.nodes()[n][0], m.nodes()[n][1]);
    u.segment<2>(2 * n) = g * x;
  }
  const Eigen::VectorXd expect = to_voigt(0.5 * (g + g.transpose()));
  for (int e = 0; e < m.n_elements(); ++e) CHECK((element_strain(m, e, u) - expect).norm() < 1e-13);
}
