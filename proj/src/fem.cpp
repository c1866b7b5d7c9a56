#include "kvd/fem.hpp"

#include "kvd/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kvd {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Composite Simpson on 4 subintervals: nodes j*tau/4, weights (1,4,2,4,1)/12.
constexpr double kSimpsonWeights[5] = {1.0 / 12, 4.0 / 12, 2.0 / 12, 4.0 / 12, 1.0 / 12};

Eigen::Vector2d time_mean(const VectorField& f, int k, double tau, const Point& x) {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  const double t0 = (k - 1) * tau;
  for (int j = 0; j < 5; ++j) s += kSimpsonWeights[j] * f(t0 + 0.25 * j * tau, x);
  return s;
}

StepLoads assemble_loads(const LoadSpec& loads, const Mesh& mesh,
                         const std::function<Eigen::Vector2d(const VectorField&, const Point&)>& eval) {
  const int d = mesh.dim();
  const int nen = mesh.nodes_per_element();
  StepLoads out{Eigen::VectorXd::Zero(mesh.n_nodes() * d), Eigen::VectorXd::Zero(mesh.n_nodes() * d)};
  if (loads.body) {
    const auto& qr = quadrature(d);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const auto& el = mesh.element(e);
      for (const auto& q : qr) {
        const Eigen::Vector2d f = eval(loads.body, map_point(mesh, e, q));
        const double w = q.weight * mesh.measure(e);
        for (int a = 0; a < nen; ++a)
          for (int c = 0; c < d; ++c) out.body[el[a] * d + c] += w * q.bary[a] * f[c];
      }
    }
  }
  for (const auto& tr : loads.tractions) {
    for (const auto& f : mesh.facets()) {
      if (f.tag != tr.tag) continue;
      if (d == 1) {
        const Eigen::Vector2d g = eval(tr.g, mesh.node(f.nodes[0]));
        out.traction[f.nodes[0]] += g[0];
        continue;
      }
      const double len = mesh.facet_measure(f);
      const double gp = 0.5 / std::sqrt(3.0);
      for (double s : {0.5 - gp, 0.5 + gp}) {
        const auto& a = mesh.node(f.nodes[0]);
        const auto& b = mesh.node(f.nodes[1]);
        const Point x{(1 - s) * a[0] + s * b[0], (1 - s) * a[1] + s * b[1]};
        const Eigen::Vector2d g = eval(tr.g, x);
        for (int c = 0; c < d; ++c) {
          out.traction[f.nodes[0] * d + c] += 0.5 * len * (1 - s) * g[c];
          out.traction[f.nodes[1] * d + c] += 0.5 * len * s * g[c];
        }
      }
    }
  }
  return out;
}

}  // namespace

void DofMap::add_constraint(int dof, std::function<double(double)> value, std::string label) {
  if (dof < 0 || dof >= n_u()) throw BadSpec("constraint on nonexistent dof " + std::to_string(dof));
  constraints_.push_back({dof, std::move(value), std::move(label)});
}

std::vector<std::pair<int, double>> DofMap::constrained_values(double t) const {
  std::vector<std::pair<int, double>> v;
  v.reserve(constraints_.size());
  for (const auto& c : constraints_) v.emplace_back(c.dof, c.value(t));
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<int, double>> out;
  for (const auto& [dof, val] : v) {
    if (!std::isfinite(val)) throw InconsistentConstraint("non-finite prescribed value on dof " + std::to_string(dof));
    if (!out.empty() && out.back().first == dof) {
      if (std::abs(out.back().second - val) > 1e-14 * std::max(1.0, std::abs(val)))
        throw InconsistentConstraint("dof " + std::to_string(dof) + " is constrained to different values");
      continue;
    }
    out.emplace_back(dof, val);
  }
  return out;
}

std::vector<char> DofMap::constrained_mask() const {
  std::vector<char> mask(n_u(), 0);
  for (const auto& c : constraints_) mask[c.dof] = 1;
  return mask;
}

std::vector<int> DofMap::free_u() const {
  const auto mask = constrained_mask();
  std::vector<int> out;
  for (int i = 0; i < n_u(); ++i)
    if (!mask[i]) out.push_back(i);
  return out;
}

void apply_programs(const LoadSpec& loads, const Mesh& mesh, DofMap& dofs) {
  for (const auto& p : loads.dirichlet) {
    if (p.component < 0 || p.component >= mesh.dim()) throw BadSpec("Dirichlet component out of range");
    const auto nodes = mesh.tagged_nodes(p.tag);
    if (nodes.empty()) throw BadSpec("no boundary nodes carry tag " + std::to_string(p.tag));
    for (int n : nodes) {
      const Point x = mesh.node(n);
      dofs.add_constraint(dofs.u(n, p.component), [value = p.value, x](double t) { return value(t, x); },
                          "tag " + std::to_string(p.tag));
    }
  }
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd strain_operator(const Mesh& mesh, int e) {
  const int d = mesh.dim();
  const int nen = mesh.nodes_per_element();
  const Eigen::MatrixXd& g = mesh.gradients(e);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(voigt_size(d), nen * d);
  for (int a = 0; a < nen; ++a) {
    if (d == 1) {
      b(0, a) = g(0, a);
    } else {
      b(0, 2 * a) = g(0, a);
      b(1, 2 * a + 1) = g(1, a);
      b(2, 2 * a) = kInvSqrt2 * g(1, a);
      b(2, 2 * a + 1) = kInvSqrt2 * g(0, a);
    }
  }
  return b;
}

Eigen::VectorXd element_strain(const Mesh& mesh, int e, const Eigen::VectorXd& u) {
  const int d = mesh.dim();
  const int nen = mesh.nodes_per_element();
  Eigen::VectorXd ue(nen * d);
  const auto& el = mesh.element(e);
  for (int a = 0; a < nen; ++a)
    for (int c = 0; c < d; ++c) ue[a * d + c] = u[el[a] * d + c];
  return strain_operator(mesh, e) * ue;
}

Eigen::VectorXd element_alpha_at_quadrature(const Mesh& mesh, int e, const Eigen::VectorXd& alpha) {
  const auto& qr = quadrature(mesh.dim());
  const auto& el = mesh.element(e);
  Eigen::VectorXd out(qr.size());
  for (std::size_t q = 0; q < qr.size(); ++q) {
    double a = 0.0;
    for (int k = 0; k < mesh.nodes_per_element(); ++k) a += qr[q].bary[k] * alpha[el[k]];
    out[q] = a;
  }
  return out;
}

MatrixKernel mass_kernel(const Mesh& mesh, double rho, const Eigen::VectorXd* rho_nodal) {
  return [&mesh, rho, rho_nodal](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
    const int d = mesh.dim();
    const int nen = mesh.nodes_per_element();
    const auto& el = mesh.element(e);
    for (const auto& q : quadrature(d)) {
      double r = rho;
      if (rho_nodal) {
        r = 0.0;
        for (int a = 0; a < nen; ++a) r += q.bary[a] * (*rho_nodal)[el[a]];
      }
      const double w = q.weight * mesh.measure(e) * r;
      for (int a = 0; a < nen; ++a)
        for (int b = 0; b < nen; ++b)
          for (int c = 0; c < d; ++c) ke(a * d + c, b * d + c) += w * q.bary[a] * q.bary[b];
    }
  };
}

MatrixKernel scalar_mass_kernel(const Mesh& mesh) {
  return [&mesh](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
    const int nen = mesh.nodes_per_element();
    for (const auto& q : quadrature(mesh.dim())) {
      const double w = q.weight * mesh.measure(e);
      for (int a = 0; a < nen; ++a)
        for (int b = 0; b < nen; ++b) ke(a, b) += w * q.bary[a] * q.bary[b];
    }
  };
}

MatrixKernel degraded_stiffness_kernel(const Mesh& mesh, const ElasticTensor& c1, const DegradationLaw& gamma,
                                       const Eigen::VectorXd& alpha) {
  return [&mesh, &c1, &gamma, &alpha](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
    const auto& qr = quadrature(mesh.dim());
    const Eigen::VectorXd aq = element_alpha_at_quadrature(mesh, e, alpha);
    double gbar = 0.0;
    for (std::size_t q = 0; q < qr.size(); ++q) gbar += qr[q].weight * gamma.value(aq[q]);
    const Eigen::MatrixXd b = strain_operator(mesh, e);
    ke.noalias() = (gbar * mesh.measure(e)) * (b.transpose() * c1.voigt() * b);
  };
}

MatrixKernel viscous_stiffness_kernel(const Mesh& mesh, const MaterialParams& m, const Eigen::VectorXd& alpha) {
  return [&mesh, &m, &alpha](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
    const auto& qr = quadrature(mesh.dim());
    const Eigen::VectorXd aq = element_alpha_at_quadrature(mesh, e, alpha);
    double gbar = 0.0;
    for (std::size_t q = 0; q < qr.size(); ++q) gbar += qr[q].weight * m.degradation.value(aq[q]);
    const Eigen::MatrixXd d = m.viscosity.d0.voigt() + m.viscosity.chi_r * gbar * m.elastic.voigt();
    const Eigen::MatrixXd b = strain_operator(mesh, e);
    ke.noalias() = mesh.measure(e) * (b.transpose() * d * b);
  };
}

MatrixKernel laplacian_kernel(const Mesh& mesh) {
  return [&mesh](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
    const Eigen::MatrixXd& g = mesh.gradients(e);
    ke.noalias() = mesh.measure(e) * (g.transpose() * g);
  };
}

SparseSym assemble_mass(const Discretization& disc, double rho, const Eigen::VectorXd* rho_nodal) {
  return disc.vector.assemble(mass_kernel(disc.mesh, rho, rho_nodal));
}

SparseSym assemble_scalar_mass(const Discretization& disc) {
  return disc.scalar.assemble(scalar_mass_kernel(disc.mesh));
}

SparseSym assemble_degraded_stiffness(const Discretization& disc, const ElasticTensor& c1,
                                      const DegradationLaw& gamma, const Eigen::VectorXd& alpha) {
  return disc.vector.assemble(degraded_stiffness_kernel(disc.mesh, c1, gamma, alpha));
}

SparseSym assemble_viscous_stiffness(const Discretization& disc, const MaterialParams& m,
                                     const Eigen::VectorXd& alpha) {
  return disc.vector.assemble(viscous_stiffness_kernel(disc.mesh, m, alpha));
}

SparseSym assemble_laplacian(const Discretization& disc) { return disc.scalar.assemble(laplacian_kernel(disc.mesh)); }

namespace {

Eigen::VectorXd element_values(const Mesh& mesh, int e, const Eigen::VectorXd& nodal) {
  const auto& el = mesh.element(e);
  Eigen::VectorXd out(mesh.nodes_per_element());
  for (int a = 0; a < mesh.nodes_per_element(); ++a) out[a] = nodal[el[a]];
  return out;
}

}  // namespace

GradientTermEval damage_gradient_residual(const Discretization& disc, const Eigen::VectorXd& alpha,
                                          const GradientTerm& term) {
  const Mesh& mesh = disc.mesh;
  GradientTermEval out;
  out.energy = damage_gradient_energy(mesh, alpha, term);
  out.residual = disc.scalar.assemble_vector([&](int e, Eigen::Ref<Eigen::VectorXd> fe) {
    const Eigen::MatrixXd& g = mesh.gradients(e);
    const Eigen::VectorXd grad = g * element_values(mesh, e, alpha);
    const auto dens = term.density(grad.squaredNorm());
    fe.noalias() = (2.0 * dens.dpsi * mesh.measure(e)) * (g.transpose() * grad);
  });
  out.jacobian = disc.scalar.assemble([&](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
    const Eigen::MatrixXd& g = mesh.gradients(e);
    const Eigen::VectorXd grad = g * element_values(mesh, e, alpha);
    const auto dens = term.density(grad.squaredNorm());
    const Eigen::VectorXd gtg = g.transpose() * grad;
    ke.noalias() = mesh.measure(e) * (2.0 * dens.dpsi * (g.transpose() * g) + 4.0 * dens.ddpsi * gtg * gtg.transpose());
  });
  return out;
}

double damage_gradient_energy(const Mesh& mesh, const Eigen::VectorXd& alpha, const GradientTerm& term) {
  double sum = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Eigen::VectorXd grad = mesh.gradients(e) * element_values(mesh, e, alpha);
    sum += mesh.measure(e) * term.density(grad.squaredNorm()).psi;
  }
  return sum;
}

StepLoads time_averaged_loads(const LoadSpec& loads, int k, double tau, const Mesh& mesh) {
  if (k < 1) throw BadSpec("step index must be >= 1");
  return assemble_loads(loads, mesh, [k, tau](const VectorField& f, const Point& x) { return time_mean(f, k, tau, x); });
}

StepLoads instantaneous_loads(const LoadSpec& loads, double t, const Mesh& mesh) {
  return assemble_loads(loads, mesh, [t](const VectorField& f, const Point& x) { return f(t, x); });
}

// ---------------------------------------------------------------------------

Eigen::SparseMatrix<double> submatrix(const Eigen::SparseMatrix<double>& a, const std::vector<int>& keep) {
  std::vector<int> map(a.rows(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) map[keep[i]] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(a.nonZeros());
  for (int j = 0; j < a.outerSize(); ++j) {
    if (map[j] < 0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
      if (map[it.row()] >= 0) trips.emplace_back(map[it.row()], map[j], it.value());
  }
  Eigen::SparseMatrix<double> out(keep.size(), keep.size());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::VectorXd ReducedSystem::expand(const Eigen::VectorXd& x_free) const {
  Eigen::VectorXd x = prescribed;
  for (std::size_t i = 0; i < free.size(); ++i) x[free[i]] = x_free[i];
  return x;
}

ReducedSystem apply_dirichlet(const SparseSym& a, const Eigen::VectorXd& b, const DofMap& dofs, double t) {
  ReducedSystem r;
  r.prescribed = Eigen::VectorXd::Zero(a.size());
  for (const auto& [dof, val] : dofs.constrained_values(t)) r.prescribed[dof] = val;
  r.free = dofs.free_u();
  const Eigen::VectorXd full = b - a.m * r.prescribed;
  r.rhs.resize(r.free.size());
  for (std::size_t i = 0; i < r.free.size(); ++i) r.rhs[i] = full[r.free[i]];
  r.matrix = submatrix(a.m, r.free);
  return r;
}

}  // namespace kvd
