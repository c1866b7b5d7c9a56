#include "kvd/material.hpp"

#include "kvd/errors.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace kvd {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

double clamp01(double a) { return std::clamp(a, 0.0, 1.0); }

// (row, col) pairs of the Voigt ordering.
std::vector<std::pair<int, int>> voigt_pairs(int dim) {
  switch (dim) {
    case 1: return {{0, 0}};
    case 2: return {{0, 0}, {1, 1}, {0, 1}};
    case 3: return {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
    default: throw BadSpec("dimension must be 1, 2 or 3");
  }
}

}  // namespace

Eigen::VectorXd to_voigt(const Eigen::MatrixXd& sym) {
  const int dim = static_cast<int>(sym.rows());
  const auto pairs = voigt_pairs(dim);
  Eigen::VectorXd v(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [r, c] = pairs[i];
    v[i] = r == c ? sym(r, c) : kSqrt2 * 0.5 * (sym(r, c) + sym(c, r));
  }
  return v;
}

Eigen::MatrixXd from_voigt(const Eigen::VectorXd& v, int dim) {
  const auto pairs = voigt_pairs(dim);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [r, c] = pairs[i];
    if (r == c) {
      m(r, c) = v[i];
    } else {
      m(r, c) = m(c, r) = v[i] / kSqrt2;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

ElasticTensor::ElasticTensor(int dim, Eigen::MatrixXd voigt) : dim_(dim), voigt_(std::move(voigt)) {
  if (voigt_.rows() != voigt_size(dim) || voigt_.cols() != voigt_size(dim))
    throw BadSpec("elastic tensor: Voigt matrix has wrong size for dimension " + std::to_string(dim));
  if ((voigt_ - voigt_.transpose()).norm() > 1e-12 * std::max(1.0, voigt_.norm()))
    throw BadSpec("elastic tensor: Voigt matrix is not symmetric");
}

ElasticTensor ElasticTensor::isotropic(int dim, double lambda, double mu) {
  const int n = voigt_size(dim);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  // C e = lambda tr(e) I + 2 mu e
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) c(i, j) = lambda;
    c(i, i) += 2.0 * mu;
  }
  for (int i = dim; i < n; ++i) c(i, i) = 2.0 * mu;
  return {dim, c};
}

ElasticTensor ElasticTensor::identity(int dim) {
  const int n = voigt_size(dim);
  return {dim, Eigen::MatrixXd::Identity(n, n)};
}

double ElasticTensor::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(voigt_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double ElasticTensor::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(voigt_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

TensorNorms tensor_norms(const ElasticTensor& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.voigt(), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << "tensor is not positive definite (smallest eigenvalue " << lo << ")";
    throw NotPositiveDefinite(os.str());
  }
  return {hi, 1.0 / lo};
}

// ---------------------------------------------------------------------------

struct DegradationLaw::Spline {
  boost::math::interpolators::cardinal_cubic_b_spline<double> s;
};

DegradationLaw DegradationLaw::ambrosio_tortorelli(double eps, double eps0) {
  DegradationLaw law;
  law.kind_ = AmbrosioTortorelli{eps, eps0};
  return law;
}

DegradationLaw DegradationLaw::quadratic(double c0) {
  DegradationLaw law;
  law.kind_ = Quadratic{c0};
  return law;
}

DegradationLaw DegradationLaw::tabulated(std::vector<double> samples) {
  if (samples.size() < 5) throw BadSpec("tabulated degradation law needs at least 5 samples");
  DegradationLaw law;
  const double h = 1.0 / static_cast<double>(samples.size() - 1);
  const std::size_t n = samples.size();
  const double left = (-11.0 * samples[0] + 18.0 * samples[1] - 9.0 * samples[2] + 2.0 * samples[3]) / (6.0 * h);
  const double right =
      (11.0 * samples[n - 1] - 18.0 * samples[n - 2] + 9.0 * samples[n - 3] - 2.0 * samples[n - 4]) / (6.0 * h);
  law.spline_ = std::make_shared<const Spline>(Spline{
      boost::math::interpolators::cardinal_cubic_b_spline<double>(samples.data(), n, 0.0, h, left, right)});
  law.kind_ = Tabulated{std::move(samples)};
  return law;
}

DegradationLaw DegradationLaw::tabulated(const std::function<double(double)>& f, int n) {
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = f(static_cast<double>(i) / (n - 1));
  return tabulated(std::move(s));
}

double DegradationLaw::value(double alpha) const {
  const double a = clamp01(alpha);
  if (auto* at = std::get_if<AmbrosioTortorelli>(&kind_)) {
    const double r = at->eps / at->eps0;
    return 0.5 * (r * r + a * a);
  }
  if (auto* q = std::get_if<Quadratic>(&kind_)) return 0.5 * (q->c0 + a * a);
  return spline_->s(a);
}

double DegradationLaw::d1(double alpha) const {
  const double a = clamp01(alpha);
  if (std::holds_alternative<Tabulated>(kind_)) return spline_->s.prime(a);
  return a;
}

double DegradationLaw::d2(double alpha) const {
  const double a = clamp01(alpha);
  if (std::holds_alternative<Tabulated>(kind_)) return spline_->s.double_prime(a);
  return 1.0;
}

std::string DegradationLaw::name() const {
  if (std::holds_alternative<AmbrosioTortorelli>(kind_)) return "at";
  if (std::holds_alternative<Quadratic>(kind_)) return "quadratic";
  return "tabulated";
}

bool DegradationLaw::is_constant() const {
  if (auto* t = std::get_if<Tabulated>(&kind_)) {
    const auto [lo, hi] = std::minmax_element(t->samples.begin(), t->samples.end());
    return *hi - *lo == 0.0;
  }
  return false;
}

std::vector<std::string> DegradationLaw::violations() const {
  std::vector<std::string> out;
  constexpr int n = 1001;
  double min_g = std::numeric_limits<double>::infinity();
  double min_gpp = min_g;
  double max_gp = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / (n - 1);
    min_g = std::min(min_g, value(a));
    min_gpp = std::min(min_gpp, d2(a));
    max_gp = std::max(max_gp, std::abs(d1(a)));
  }
  if (!(min_g > 0.0)) out.push_back("degradation: gamma must be positive on [0,1]");
  if (!(min_gpp > 0.0)) out.push_back("degradation: gamma must be strictly convex on [0,1]");
  if (std::abs(d1(0.0)) > 1e-6 * std::max(1.0, max_gp)) out.push_back("degradation: gamma'(0) must vanish");
  return out;
}

GammaExtrema gamma_extrema(const DegradationLaw& law, int samples) {
  samples = std::max(samples, 1001);
  const double h = 1.0 / (samples - 1);
  int i_pp = 0;
  int i_gp = 0;
  double min_gpp = std::numeric_limits<double>::infinity();
  double max_gp_sq = -1.0;
  for (int i = 0; i < samples; ++i) {
    const double a = i * h;
    const double gpp = law.d2(a);
    const double gp = law.d1(a);
    if (gpp < min_gpp) { min_gpp = gpp; i_pp = i; }
    if (gp * gp > max_gp_sq) { max_gp_sq = gp * gp; i_gp = i; }
  }

  constexpr int bits = std::numeric_limits<double>::digits / 2;
  auto bracket = [&](int i) {
    return std::pair{std::max(0.0, (i - 1) * h), std::min(1.0, (i + 1) * h)};
  };
  {
    auto [lo, hi] = bracket(i_pp);
    auto r = boost::math::tools::brent_find_minima([&](double a) { return law.d2(a); }, lo, hi, bits);
    min_gpp = std::min(min_gpp, r.second);
  }
  {
    auto [lo, hi] = bracket(i_gp);
    auto r = boost::math::tools::brent_find_minima(
        [&](double a) { const double g = law.d1(a); return -g * g; }, lo, hi, bits);
    max_gp_sq = std::max(max_gp_sq, -r.second);
  }

  if (!(min_gpp > 0.0)) {
    std::ostringstream os;
    os << "degradation law is not strictly convex on [0,1] (min gamma'' = " << min_gpp << ")";
    throw DegenerateLaw(os.str());
  }
  return {min_gpp, max_gp_sq};
}

// ---------------------------------------------------------------------------

DamageEnergy DamageEnergy::at_quadratic(double gc, double eps) {
  DamageEnergy d;
  d.kind_ = ATQuadratic{gc, eps};
  return d;
}

DamageEnergy DamageEnergy::custom(std::function<double(double)> phi, std::function<double(double)> dphi,
                                  std::function<double(double)> ddphi) {
  DamageEnergy d;
  d.kind_ = Custom{std::move(phi), std::move(dphi), std::move(ddphi)};
  return d;
}

double DamageEnergy::value(double alpha) const {
  if (auto* at = std::get_if<ATQuadratic>(&kind_)) {
    const double r = 1.0 - alpha;
    return -at->gc * r * r / (2.0 * at->eps);
  }
  return std::get<Custom>(kind_).phi(alpha);
}

double DamageEnergy::d1(double alpha) const {
  if (auto* at = std::get_if<ATQuadratic>(&kind_)) return at->gc * (1.0 - alpha) / at->eps;
  return std::get<Custom>(kind_).dphi(alpha);
}

double DamageEnergy::d2(double alpha) const {
  if (auto* at = std::get_if<ATQuadratic>(&kind_)) return -at->gc / at->eps;
  const auto& c = std::get<Custom>(kind_);
  if (c.ddphi) return c.ddphi(alpha);
  constexpr double h = 1e-5;
  const double lo = std::max(0.0, alpha - h);
  const double hi = std::min(1.0, alpha + h);
  return (c.dphi(hi) - c.dphi(lo)) / (hi - lo);
}

std::vector<std::string> DamageEnergy::violations() const {
  std::vector<std::string> out;
  if (auto* at = std::get_if<ATQuadratic>(&kind_)) {
    if (!(at->gc > 0.0)) out.push_back("damage: Gc must be positive");
    if (!(at->eps > 0.0)) out.push_back("damage: eps must be positive");
    return out;
  }
  if (d1(0.0) < 0.0) out.push_back("damage: phi'(0) must be nonnegative");
  constexpr int n = 201;
  for (int i = 1; i < n; ++i) {
    const double a = static_cast<double>(i - 1) / (n - 1);
    const double b = static_cast<double>(i) / (n - 1);
    // secant slopes of a concave function are nonincreasing
    if (d1(b) > d1(a) + 1e-9 * std::max(1.0, std::abs(d1(a)))) {
      out.push_back("damage: phi must be concave on [0,1]");
      break;
    }
  }
  return out;
}

double DissipationLaw::value(double rate) const {
  if (rate > 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 * eta * rate * rate;
}

GradientTerm::Density GradientTerm::density(double s) const {
  if (p == 2.0) {
    const double k = eps_g > 0.0 ? kappa * (1.0 + eps_g) : kappa;
    return {0.5 * k * s, 0.5 * k, 0.0};
  }
  // (kappa/p) (s + g^2)^(p/2), shifted so that psi(0) = 0
  const double g2 = kGuard * kGuard;
  const double base = s + g2;
  const double c = eps_g > 0.0 ? kappa * eps_g : kappa;
  double psi = c / p * (std::pow(base, 0.5 * p) - std::pow(g2, 0.5 * p));
  double dpsi = 0.5 * c * std::pow(base, 0.5 * p - 1.0);
  double ddpsi = 0.5 * c * (0.5 * p - 1.0) * std::pow(base, 0.5 * p - 2.0);
  if (eps_g > 0.0) {
    psi += 0.5 * kappa * s;
    dpsi += 0.5 * kappa;
  }
  return {psi, dpsi, ddpsi};
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd MaterialParams::viscous_voigt(double alpha) const {
  return viscosity.d0.voigt() + viscosity.chi_r * degradation.value(alpha) * elastic.voigt();
}

std::vector<std::string> MaterialParams::violations(bool quasistatic, bool frozen_damage) const {
  std::vector<std::string> out;
  auto add = [&](const std::vector<std::string>& v) { out.insert(out.end(), v.begin(), v.end()); };
  if (dim < 1 || dim > 3) out.push_back("dimension must be 1, 2 or 3");
  if (elastic.dim() != dim) out.push_back("elastic tensor dimension mismatch");
  if (viscosity.d0.dim() != dim) out.push_back("viscosity tensor dimension mismatch");
  add(degradation.violations());
  if (!(elastic.min_eigenvalue() > 0.0)) out.push_back("elastic: C1 must be positive definite");
  const double d0_min = viscosity.d0.min_eigenvalue();
  if (frozen_damage ? d0_min < 0.0 : !(d0_min > 0.0))
    out.push_back("viscosity: D0 must be positive definite");
  if (viscosity.chi_r < 0.0) out.push_back("viscosity: chi_R must be nonnegative");
  add(damage_energy.violations());
  if (dissipation.eta < 0.0) out.push_back("dissipation: eta must be nonnegative");
  if (dissipation.eta == 0.0 && !dissipation.allow_rate_independent && !frozen_damage)
    out.push_back("dissipation: eta = 0 requires the rate-independent flag");
  if (!(gradient.kappa > 0.0)) out.push_back("gradient: kappa must be positive");
  if (!(gradient.p >= 2.0)) out.push_back("gradient: p must be >= 2");
  if (gradient.eps_g < 0.0) out.push_back("gradient: eps_g must be nonnegative");
  if (quasistatic ? rho < 0.0 : !(rho > 0.0)) out.push_back("rho must be positive");
  if (rho_nodal && (quasistatic ? rho_nodal->minCoeff() < 0.0 : !(rho_nodal->minCoeff() > 0.0)))
    out.push_back("nodal rho must be positive");
  return out;
}

double semiconvexity_constant(const MaterialParams& m) {
  const auto ext = gamma_extrema(m.degradation);
  const auto c = tensor_norms(m.elastic);
  return 2.0 * c.opnorm * c.opnorm * c.inv_opnorm * ext.max_gp_sq / ext.min_gpp;
}

double critical_timestep(const MaterialParams& m) {
  const auto ext = gamma_extrema(m.degradation);
  const auto c = tensor_norms(m.elastic);
  const auto d = tensor_norms(m.viscosity.d0);
  if (ext.max_gp_sq == 0.0) return std::numeric_limits<double>::infinity();
  return ext.min_gpp / (2.0 * d.inv_opnorm * c.opnorm * c.opnorm * c.inv_opnorm * ext.max_gp_sq);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd stored_hessian(const MaterialParams& m, double K, double alpha, const Eigen::VectorXd& e) {
  const int n = static_cast<int>(e.size());
  const Eigen::MatrixXd& c1 = m.elastic.voigt();
  const Eigen::VectorXd c1e = c1 * e;
  Eigen::MatrixXd h(n + 1, n + 1);
  h.topLeftCorner(n, n) = m.degradation.value(alpha) * c1 + K * Eigen::MatrixXd::Identity(n, n);
  h.block(0, n, n, 1) = m.degradation.d1(alpha) * c1e;
  h.block(n, 0, 1, n) = m.degradation.d1(alpha) * c1e.transpose();
  h(n, n) = 0.5 * m.degradation.d2(alpha) * e.dot(c1e);
  return h;
}

std::string CheckReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << ": min eigenvalue " << min_eigenvalue << " (threshold " << -tolerance
     << ") over " << samples << " samples; worst at alpha = " << worst_alpha
     << ", |e| = " << (worst_strain.size() ? worst_strain.norm() : 0.0);
  return os.str();
}

CheckReport stored_hessian_psd_check(const MaterialParams& m, double K, const PsdSampleSpec& spec) {
  const int n = voigt_size(m.dim);
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < n; ++i) dirs.push_back(Eigen::VectorXd::Unit(n, i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      dirs.push_back((Eigen::VectorXd::Unit(n, i) + Eigen::VectorXd::Unit(n, j)).normalized());
      dirs.push_back((Eigen::VectorXd::Unit(n, i) - Eigen::VectorXd::Unit(n, j)).normalized());
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.elastic.voigt());
  for (int i = 0; i < n; ++i) dirs.push_back(es.eigenvectors().col(i));
  std::mt19937 rng(spec.seed);
  std::normal_distribution<double> normal;
  for (int r = 0; r < spec.n_random_directions; ++r) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = normal(rng);
    dirs.push_back(d.normalized());
  }

  std::vector<double> mags{0.0};
  const double ratio = spec.n_magnitudes > 1 ? std::pow(spec.max_strain / spec.min_strain,
                                                        1.0 / (spec.n_magnitudes - 1))
                                             : 1.0;
  for (int i = 0; i < spec.n_magnitudes; ++i) mags.push_back(spec.min_strain * std::pow(ratio, i));
  mags.back() = spec.max_strain;

  CheckReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.tolerance = spec.tol_psd * std::max(1.0, m.elastic.max_eigenvalue());
  for (int ia = 0; ia < spec.n_alpha; ++ia) {
    const double alpha = spec.n_alpha > 1 ? static_cast<double>(ia) / (spec.n_alpha - 1) : 1.0;
    for (double mag : mags) {
      for (const auto& d : dirs) {
        const Eigen::VectorXd e = mag * d;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hs(stored_hessian(m, K, alpha, e),
                                                          Eigen::EigenvaluesOnly);
        const double lo = hs.eigenvalues().minCoeff();
        ++rep.samples;
        if (lo < rep.min_eigenvalue) {
          rep.min_eigenvalue = lo;
          rep.worst_alpha = alpha;
          rep.worst_strain = e;
        }
        if (mag == 0.0) break;  // all directions coincide
      }
    }
  }
  rep.pass = rep.min_eigenvalue >= -rep.tolerance;
  return rep;
}

Eigen::MatrixXd visco_damage_hessian(const MaterialParams& m, double K, double alpha, const Eigen::VectorXd& e) {
  Eigen::MatrixXd h = stored_hessian(m, 0.0, alpha, e);
  h(h.rows() - 1, h.cols() - 1) += K;
  return h;
}

Witness visco_damage_nonconvexity_witness(const MaterialParams& m, double K, std::optional<double> alpha,
                                          int n_alpha, double max_strain) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.elastic.voigt());
  const int n = voigt_size(m.dim);
  const Eigen::VectorXd dir = es.eigenvectors().col(n - 1);

  std::vector<double> grid;
  if (alpha) {
    grid.push_back(*alpha);
  } else {
    for (int i = 0; i < n_alpha; ++i) grid.push_back(static_cast<double>(i) / (n_alpha - 1));
  }

  double best_margin = -std::numeric_limits<double>::infinity();
  Witness best;
  best.min_eigenvalue = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double a : grid) {
    const double g = m.degradation.value(a);
    const double gp = m.degradation.d1(a);
    const double margin = gp * gp / g - 0.5 * m.degradation.d2(a);
    best_margin = std::max(best_margin, margin);
    if (!(margin > 0.0)) continue;
    double first_negative = 0.0;
    for (double mag = 1e-3; mag <= max_strain; mag *= 2.0) {
      const Eigen::VectorXd e = mag * dir;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hs(visco_damage_hessian(m, K, a, e), Eigen::EigenvaluesOnly);
      const double lo = hs.eigenvalues().minCoeff();
      if (lo < 0.0 && first_negative == 0.0) first_negative = mag;
      if (lo < best.min_eigenvalue) {
        best.min_eigenvalue = lo;
        best.alpha = a;
        best.strain = e;
        best.first_negative_magnitude = first_negative;
        found = found || lo < 0.0;
      }
    }
  }
  if (!found) {
    std::ostringstream os;
    os << "no indefinite sample found; max Schur margin gamma'^2/gamma - gamma''/2 = " << best_margin;
    throw NoWitnessFound(os.str(), best_margin);
  }
  return best;
}

Eigen::VectorXd stress(const MaterialParams& m, double alpha, const Eigen::VectorXd& e,
                       const Eigen::VectorXd& e_dot, double alpha_old) {
  return m.degradation.value(alpha) * (m.elastic.voigt() * e) + m.viscous_voigt(alpha_old) * e_dot;
}

double driving_force(const MaterialParams& m, double alpha, const Eigen::VectorXd& e) {
  return 0.5 * m.degradation.d1(alpha) * m.elastic.quad(e);
}

}  // namespace kvd
