#include "kvd/potential.hpp"

#include "kvd/errors.hpp"

#include <cmath>
#include <limits>

namespace kvd {

namespace {

constexpr double kFeasTol = 1e-12;

struct ElementEnergy {
  double elastic = 0.0, phi = 0.0, gradient = 0.0;
};

Eigen::VectorXd gather_u(const Mesh& mesh, int e, const Eigen::VectorXd& u) {
  const int d = mesh.dim();
  const int nen = mesh.nodes_per_element();
  const auto& el = mesh.element(e);
  Eigen::VectorXd ue(nen * d);
  for (int a = 0; a < nen; ++a)
    for (int c = 0; c < d; ++c) ue[a * d + c] = u[el[a] * d + c];
  return ue;
}

Eigen::VectorXd gather_alpha(const Mesh& mesh, int e, const Eigen::VectorXd& alpha) {
  const auto& el = mesh.element(e);
  Eigen::VectorXd ae(mesh.nodes_per_element());
  for (int a = 0; a < mesh.nodes_per_element(); ++a) ae[a] = alpha[el[a]];
  return ae;
}

double at_quadrature(const QuadraturePoint& q, const Eigen::VectorXd& ae) {
  double s = 0.0;
  for (int a = 0; a < ae.size(); ++a) s += q.bary[a] * ae[a];
  return s;
}

ElementEnergy element_energy(const Mesh& mesh, const MaterialParams& m, int e, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& alpha) {
  ElementEnergy out;
  const Eigen::VectorXd eps = strain_operator(mesh, e) * gather_u(mesh, e, u);
  const double ece = m.elastic.quad(eps);
  const Eigen::VectorXd ae = gather_alpha(mesh, e, alpha);
  for (const auto& q : quadrature(mesh.dim())) {
    const double w = q.weight * mesh.measure(e);
    const double a = at_quadrature(q, ae);
    out.elastic += w * 0.5 * m.degradation.value(a) * ece;
    out.phi -= w * m.damage_energy.value(a);
  }
  const Eigen::VectorXd g = mesh.gradients(e) * ae;
  out.gradient = mesh.measure(e) * m.gradient.density(g.squaredNorm()).psi;
  return out;
}

// phi' or its difference-quotient replacement, with the derivative of that
// replacement.
std::pair<double, double> phi_slope(const DamageEnergy& phi, double a, double a_prev, bool quotient) {
  const double h = a - a_prev;
  if (!quotient || std::abs(h) <= 1e-12) return {phi.d1(a), phi.d2(a)};
  const double q = (phi.value(a) - phi.value(a_prev)) / h;
  return {q, (phi.d1(a) - q) / h};
}

}  // namespace

Model::Model(Mesh mesh, MaterialParams material, LoadSpec loads, ModelOptions options)
    : mesh_(std::make_unique<const Mesh>(std::move(mesh))),
      disc_(std::make_unique<const Discretization>(*mesh_)),
      material_(std::move(material)),
      loads_(std::move(loads)),
      dofs_(*mesh_),
      options_(options) {
  if (material_.dim != mesh_->dim()) throw BadSpec("material and mesh dimensions differ");
  apply_programs(loads_, *mesh_, dofs_);
  const Eigen::VectorXd* rho_nodal = material_.rho_nodal ? &*material_.rho_nodal : nullptr;
  mass_ = assemble_mass(*disc_, material_.rho, rho_nodal);
  unit_mass_ = assemble_mass(*disc_, 1.0);
  scalar_mass_ = assemble_scalar_mass(*disc_);
  laplacian_ = assemble_laplacian(*disc_);
  tau0_ = options_.frozen_damage ? std::numeric_limits<double>::infinity() : critical_timestep(material_);
}

StoredEnergy stored_energy(const Model& model, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha) {
  const Mesh& mesh = model.mesh();
  std::vector<ElementEnergy> parts(mesh.n_elements());
#pragma omp parallel for schedule(static)
  for (int e = 0; e < mesh.n_elements(); ++e) parts[e] = element_energy(mesh, model.material(), e, u, alpha);
  StoredEnergy s;
  for (const auto& p : parts) {
    s.elastic += p.elastic;
    s.phi += p.phi;
    s.gradient += p.gradient;
  }
  return s;
}

double kinetic_energy(const Model& model, const Eigen::VectorXd& v) { return 0.5 * model.mass().quad(v); }

double PotentialTerms::magnitude() const {
  return std::abs(inertia) + std::abs(elastic) + std::abs(phi) + std::abs(gradient) + std::abs(load) +
         std::abs(viscous) + std::abs(zeta);
}

// ---------------------------------------------------------------------------

StepProblem::StepProblem(std::shared_ptr<const Model> model, State prev, double tau)
    : model_(std::move(model)), prev_(std::move(prev)), tau_(tau) {
  if (!(tau_ > 0.0)) throw BadSpec("time step must be positive");
  const Model& md = *model_;
  const Mesh& mesh = md.mesh();
  loads_ = time_averaged_loads(md.loads(), step(), tau_, mesh);
  load_ = loads_.body + loads_.traction;
  viscous_ = assemble_viscous_stiffness(md.disc(), md.material(), prev_.alpha);

  const int nu = md.n_u();
  const int na = md.n_alpha();
  const double inf = std::numeric_limits<double>::infinity();
  bounds_.lower = Eigen::VectorXd::Constant(nu + na, -inf);
  bounds_.upper = Eigen::VectorXd::Constant(nu + na, inf);
  for (const auto& [dof, val] : md.dofs().constrained_values(time())) bounds_.lower[dof] = bounds_.upper[dof] = val;
  for (int i = 0; i < na; ++i) {
    bounds_.upper[nu + i] = prev_.alpha[i];
    bounds_.lower[nu + i] = md.options().frozen_damage ? prev_.alpha[i] : 0.0;
  }

  const auto& qr = quadrature(mesh.dim());
  alpha_prev_q_.resize(static_cast<Eigen::Index>(mesh.n_elements() * qr.size()));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Eigen::VectorXd ae = gather_alpha(mesh, e, prev_.alpha);
    for (std::size_t q = 0; q < qr.size(); ++q) alpha_prev_q_[e * qr.size() + q] = at_quadrature(qr[q], ae);
  }

  // (2/tau^2) M + (1/tau) D(alpha^{k-1}) on u, (eta/tau) Ms on alpha.
  const MaterialParams& m = md.material();
  const Eigen::VectorXd* rho_nodal = m.rho_nodal ? &*m.rho_nodal : nullptr;
  const MatrixKernel mk = mass_kernel(mesh, m.rho, rho_nodal);
  const MatrixKernel vk = viscous_stiffness_kernel(mesh, m, prev_.alpha);
  const MatrixKernel sk = scalar_mass_kernel(mesh);
  const int nloc_u = mesh.nodes_per_element() * mesh.dim();
  const int nen = mesh.nodes_per_element();
  const double c_inertia = 2.0 / (tau_ * tau_);
  const double c_visc = 1.0 / tau_;
  const double c_zeta = m.dissipation.eta / tau_;
  const AssemblyPlan& plan = md.disc().coupled;
  constant_hessian_.assign(plan.zero().m.nonZeros(), 0.0);
  plan.accumulate(
      [&](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nloc_u, nloc_u);
        mk(e, a);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nloc_u, nloc_u);
        vk(e, b);
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nen, nen);
        sk(e, s);
        ke.topLeftCorner(nloc_u, nloc_u) = c_inertia * a + c_visc * b;
        ke.bottomRightCorner(nen, nen) = c_zeta * s;
      },
      constant_hessian_);
}

Eigen::VectorXd StepProblem::pack(const Eigen::VectorXd& u, const Eigen::VectorXd& alpha) const {
  Eigen::VectorXd x(size());
  x << u, alpha;
  return x;
}

Eigen::VectorXd StepProblem::warm_start() const {
  Eigen::VectorXd x = pack(prev_.u + tau_ * prev_.v, prev_.alpha);
  for (int i = 0; i < model_->n_u(); ++i)
    if (bounds_.lower[i] == bounds_.upper[i]) x[i] = bounds_.lower[i];
  return x;
}

double StepProblem::load_scale() const { return load_.size() ? load_.lpNorm<Eigen::Infinity>() : 0.0; }

void StepProblem::check_feasible(const Eigen::VectorXd& x) const {
  if (x.size() != size()) throw BadSpec("state vector has the wrong size");
  const int nu = model_->n_u();
  for (int i = nu; i < size(); ++i) {
    if (x[i] < bounds_.lower[i] - kFeasTol || x[i] > bounds_.upper[i] + kFeasTol) {
      throw Infeasible("damage value " + std::to_string(x[i]) + " at node " + std::to_string(i - nu) +
                       " lies outside [" + std::to_string(bounds_.lower[i]) + ", " +
                       std::to_string(bounds_.upper[i]) + "]");
    }
  }
}

PotentialTerms StepProblem::terms(const Eigen::VectorXd& x) const {
  check_feasible(x);
  const Model& md = *model_;
  const Eigen::VectorXd u = u_of(x);
  const Eigen::VectorXd alpha = alpha_of(x);
  const Eigen::VectorXd w = u - prev_.u - tau_ * prev_.v;
  const Eigen::VectorXd du = u - prev_.u;
  const Eigen::VectorXd da = alpha - prev_.alpha;
  PotentialTerms t;
  t.inertia = md.mass().quad(w) / (tau_ * tau_);
  const StoredEnergy s = stored_energy(md, u, alpha);
  t.elastic = s.elastic;
  t.phi = s.phi;
  t.gradient = s.gradient;
  t.load = -load_.dot(u);
  t.viscous = viscous_.quad(du) / (2.0 * tau_);
  t.zeta = md.material().dissipation.eta * md.scalar_mass().quad(da) / (2.0 * tau_);
  return t;
}

Eigen::VectorXd StepProblem::gradient(const Eigen::VectorXd& x) const {
  check_feasible(x);
  const Model& md = *model_;
  const Mesh& mesh = md.mesh();
  const MaterialParams& m = md.material();
  const bool quotient = md.options().difference_quotient_phi;
  const Eigen::VectorXd u = u_of(x);
  const Eigen::VectorXd alpha = alpha_of(x);
  const int d = mesh.dim();
  const int nen = mesh.nodes_per_element();
  const auto& qr = quadrature(d);

  Eigen::VectorXd g = md.disc().coupled.assemble_vector([&](int e, Eigen::Ref<Eigen::VectorXd> fe) {
    const Eigen::MatrixXd b = strain_operator(mesh, e);
    const Eigen::VectorXd eps = b * gather_u(mesh, e, u);
    const Eigen::VectorXd ce = m.elastic.apply(eps);
    const double ece = eps.dot(ce);
    const Eigen::VectorXd ae = gather_alpha(mesh, e, alpha);
    double gbar = 0.0;
    for (std::size_t q = 0; q < qr.size(); ++q) {
      const double wq = qr[q].weight * mesh.measure(e);
      const double a = at_quadrature(qr[q], ae);
      gbar += wq * m.degradation.value(a);
      const double slope = phi_slope(m.damage_energy, a, alpha_prev_q_[e * qr.size() + q], quotient).first;
      const double s = wq * (0.5 * m.degradation.d1(a) * ece - slope);
      for (int k = 0; k < nen; ++k) fe[nen * d + k] += s * qr[q].bary[k];
    }
    fe.head(nen * d) += gbar * (b.transpose() * ce);
    const Eigen::MatrixXd& gr = mesh.gradients(e);
    const Eigen::VectorXd ga = gr * ae;
    const auto dens = m.gradient.density(ga.squaredNorm());
    fe.tail(nen) += (2.0 * dens.dpsi * mesh.measure(e)) * (gr.transpose() * ga);
  });

  const int nu = md.n_u();
  const Eigen::VectorXd w = u - prev_.u - tau_ * prev_.v;
  g.head(nu) += (2.0 / (tau_ * tau_)) * md.mass().apply(w) + viscous_.apply(u - prev_.u) / tau_ - load_;
  g.tail(md.n_alpha()) += (m.dissipation.eta / tau_) * md.scalar_mass().apply(alpha - prev_.alpha);
  return g;
}

SparseSym StepProblem::hessian(const Eigen::VectorXd& x) const {
  check_feasible(x);
  const Model& md = *model_;
  const Mesh& mesh = md.mesh();
  const MaterialParams& m = md.material();
  const bool quotient = md.options().difference_quotient_phi;
  const Eigen::VectorXd u = u_of(x);
  const Eigen::VectorXd alpha = alpha_of(x);
  const int d = mesh.dim();
  const int nen = mesh.nodes_per_element();
  const int nlu = nen * d;
  const auto& qr = quadrature(d);

  SparseSym h = md.disc().coupled.zero();
  std::copy(constant_hessian_.begin(), constant_hessian_.end(), h.m.valuePtr());
  md.disc().coupled.accumulate(
      [&](int e, Eigen::Ref<Eigen::MatrixXd> ke) {
        const Eigen::MatrixXd b = strain_operator(mesh, e);
        const Eigen::VectorXd eps = b * gather_u(mesh, e, u);
        const Eigen::VectorXd ce = m.elastic.apply(eps);
        const Eigen::VectorXd btce = b.transpose() * ce;
        const double ece = eps.dot(ce);
        const Eigen::VectorXd ae = gather_alpha(mesh, e, alpha);
        double gbar = 0.0;
        for (std::size_t q = 0; q < qr.size(); ++q) {
          const double wq = qr[q].weight * mesh.measure(e);
          const double a = at_quadrature(qr[q], ae);
          gbar += wq * m.degradation.value(a);
          const double curv = phi_slope(m.damage_energy, a, alpha_prev_q_[e * qr.size() + q], quotient).second;
          const double caa = wq * (0.5 * m.degradation.d2(a) * ece - curv);
          const double cua = wq * m.degradation.d1(a);
          for (int k = 0; k < nen; ++k) {
            const double nk = qr[q].bary[k];
            ke.block(0, nlu + k, nlu, 1) += (cua * nk) * btce;
            for (int l = 0; l < nen; ++l) ke(nlu + k, nlu + l) += caa * nk * qr[q].bary[l];
          }
        }
        ke.block(nlu, 0, nen, nlu) = ke.block(0, nlu, nlu, nen).transpose();
        ke.topLeftCorner(nlu, nlu) += gbar * (b.transpose() * m.elastic.voigt() * b);
        const Eigen::MatrixXd& gr = mesh.gradients(e);
        const Eigen::VectorXd ga = gr * ae;
        const auto dens = m.gradient.density(ga.squaredNorm());
        const Eigen::VectorXd gtg = gr.transpose() * ga;
        ke.bottomRightCorner(nen, nen) +=
            mesh.measure(e) * (2.0 * dens.dpsi * (gr.transpose() * gr) + 4.0 * dens.ddpsi * gtg * gtg.transpose());
      },
      {h.m.valuePtr(), static_cast<std::size_t>(h.m.nonZeros())});
  return h;
}

PotentialEval StepProblem::evaluate(const Eigen::VectorXd& x, bool with_hessian) const {
  PotentialEval ev;
  ev.terms = terms(x);
  ev.value = ev.terms.sum();
  ev.gradient = gradient(x);
  if (with_hessian) ev.hessian = hessian(x);
  return ev;
}

double potential_value(const StepProblem& sp, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha) {
  return sp.value(sp.pack(u, alpha));
}

Eigen::VectorXd potential_gradient(const StepProblem& sp, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha) {
  return sp.gradient(sp.pack(u, alpha));
}

SparseSym potential_hessian(const StepProblem& sp, const Eigen::VectorXd& u, const Eigen::VectorXd& alpha) {
  return sp.hessian(sp.pack(u, alpha));
}

Bounds feasible_box(const StepProblem& sp) {
  const int na = sp.model().n_alpha();
  return {sp.bounds().lower.tail(na), sp.bounds().upper.tail(na)};
}

}  // namespace kvd
