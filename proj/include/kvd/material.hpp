#pragma once

// Constitutive laws of the damageable Kelvin-Voigt solid and the convexity
// constants that certify the per-step minimization problem.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kvd {

/// Number of independent components of a symmetric d x d tensor.
constexpr int voigt_size(int dim) { return dim * (dim + 1) / 2; }

/// Symmetric tensor -> Voigt vector with sqrt(2) scaling of off-diagonal
/// entries, so that a:b equals the Euclidean dot product of the images.
/// Ordering: d=2 (11, 22, 12); d=3 (11, 22, 33, 23, 13, 12).
Eigen::VectorXd to_voigt(const Eigen::MatrixXd& sym);
Eigen::MatrixXd from_voigt(const Eigen::VectorXd& v, int dim);

/// Fourth-order tensor acting on symmetric strains, stored as its
/// (scaled) Voigt matrix.
class ElasticTensor {
 public:
  ElasticTensor() = default;
  ElasticTensor(int dim, Eigen::MatrixXd voigt);

  static ElasticTensor isotropic(int dim, double lambda, double mu);
  static ElasticTensor identity(int dim);

  int dim() const { return dim_; }
  const Eigen::MatrixXd& voigt() const { return voigt_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& e) const { return voigt_ * e; }
  double quad(const Eigen::VectorXd& e) const { return e.dot(voigt_ * e); }
  ElasticTensor scaled(double s) const { return {dim_, s * voigt_}; }

  double min_eigenvalue() const;
  double max_eigenvalue() const;

 private:
  int dim_ = 1;
  Eigen::MatrixXd voigt_ = Eigen::MatrixXd::Identity(1, 1);
};

struct TensorNorms {
  double opnorm;      ///< |C|, largest eigenvalue
  double inv_opnorm;  ///< |C^-1| = 1 / smallest eigenvalue
};

/// Throws NotPositiveDefinite when the smallest eigenvalue is <= 0.
TensorNorms tensor_norms(const ElasticTensor& c);

// ---------------------------------------------------------------------------
// Degradation law gamma(alpha), C(alpha) = gamma(alpha) C1.

class DegradationLaw {
 public:
  struct AmbrosioTortorelli {
    double eps;
    double eps0;
  };
  struct Quadratic {
    double c0;  ///< gamma = (c0 + alpha^2) / 2
  };
  struct Tabulated {
    std::vector<double> samples;  ///< gamma at equispaced alpha on [0,1]
  };
  using Kind = std::variant<AmbrosioTortorelli, Quadratic, Tabulated>;

  static DegradationLaw ambrosio_tortorelli(double eps, double eps0);
  static DegradationLaw quadratic(double c0);
  static DegradationLaw tabulated(std::vector<double> samples);
  /// Tabulates f on n equispaced points of [0,1].
  static DegradationLaw tabulated(const std::function<double(double)>& f, int n);

  double value(double alpha) const;
  double d1(double alpha) const;
  double d2(double alpha) const;

  const Kind& kind() const { return kind_; }
  std::string name() const;
  bool is_constant() const;

  /// Invariant violations (positivity, strict convexity, gamma'(0) = 0).
  std::vector<std::string> violations() const;

 private:
  struct Spline;
  Kind kind_;
  std::shared_ptr<const Spline> spline_;
};

struct GammaExtrema {
  double min_gpp;     ///< min gamma'' over [0,1]
  double max_gp_sq;   ///< max gamma'^2 over [0,1]
};

/// Dense sampling (n >= 1001 points) plus Brent refinement of the best
/// bracket. Throws DegenerateLaw when min gamma'' <= 0.
GammaExtrema gamma_extrema(const DegradationLaw& law, int samples = 1001);

// ---------------------------------------------------------------------------

struct ViscosityModel {
  ElasticTensor d0;    ///< Pa s
  double chi_r = 0.0;  ///< relaxation time, s
};

/// Stored damage energy phi (J/m^3); enters the stored energy with a minus sign.
class DamageEnergy {
 public:
  struct ATQuadratic {
    double gc;
    double eps;
  };
  struct Custom {
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
    std::function<double(double)> ddphi;  ///< optional; central differences otherwise
  };
  using Kind = std::variant<ATQuadratic, Custom>;

  static DamageEnergy at_quadratic(double gc, double eps);
  static DamageEnergy custom(std::function<double(double)> phi, std::function<double(double)> dphi,
                             std::function<double(double)> ddphi = {});

  double value(double alpha) const;
  double d1(double alpha) const;
  double d2(double alpha) const;
  const Kind& kind() const { return kind_; }

  std::vector<std::string> violations() const;

 private:
  Kind kind_ = ATQuadratic{1.0, 1.0};
};

/// zeta(r) = eta/2 r^2 for r <= 0, +inf for r > 0.
struct DissipationLaw {
  double eta = 0.0;
  /// Permits eta = 0 (rate-independent phase-field regime, not coercive).
  bool allow_rate_independent = false;

  double value(double rate) const;
};

/// (kappa/p)|grad alpha|^p, or kappa(|g|^2/2 + eps_g/p |g|^p) when eps_g > 0.
struct GradientTerm {
  double kappa = 1.0;
  double p = 2.0;
  double eps_g = 0.0;
  static constexpr double kGuard = 1e-12;

  /// Energy density as a function of s = |g|^2 with first and second
  /// s-derivatives.
  struct Density {
    double psi, dpsi, ddpsi;
  };
  Density density(double s) const;
};

struct MaterialParams {
  int dim = 1;
  DegradationLaw degradation = DegradationLaw::ambrosio_tortorelli(0.0, 1.0);
  ElasticTensor elastic;
  ViscosityModel viscosity;
  DamageEnergy damage_energy;
  DissipationLaw dissipation;
  GradientTerm gradient;
  double rho = 1.0;
  std::optional<Eigen::VectorXd> rho_nodal;

  /// D(alpha) = D0 + chi_R gamma(alpha) C1 as a Voigt matrix.
  Eigen::MatrixXd viscous_voigt(double alpha) const;
  /// All invariant violations, empty when admissible. `quasistatic` allows
  /// rho = 0; `frozen_damage` allows D0 = 0 (no coupling to certify).
  std::vector<std::string> violations(bool quasistatic = false, bool frozen_damage = false) const;
};

/// Minimal K making (e, alpha) -> C(alpha)e:e/2 + K|e|^2/2 convex.
double semiconvexity_constant(const MaterialParams& m);

/// Largest time step for which the incremental potential is certified
/// strictly convex:
///   tau0 = min gamma'' / (2 |D0^-1| |C1|^2 |C1^-1| max gamma'^2).
double critical_timestep(const MaterialParams& m);

struct PsdSampleSpec {
  int n_alpha = 101;
  double max_strain = 1e3;
  double min_strain = 1e-3;
  int n_magnitudes = 13;  ///< geometric between min and max, plus |e| = 0
  int n_random_directions = 16;
  unsigned seed = 12345;
  double tol_psd = 1e-10;  ///< relative to max(1, |C1|)
};

struct CheckReport {
  bool pass = false;
  double min_eigenvalue = 0.0;
  double tolerance = 0.0;
  double worst_alpha = 0.0;
  Eigen::VectorXd worst_strain;
  long samples = 0;
  std::string summary() const;
};

/// Hessian of (e, alpha) -> C(alpha)e:e/2 + K|e|^2/2, an
/// (voigt_size + 1)-square symmetric matrix.
Eigen::MatrixXd stored_hessian(const MaterialParams& m, double K, double alpha, const Eigen::VectorXd& e);

CheckReport stored_hessian_psd_check(const MaterialParams& m, double K, const PsdSampleSpec& spec = {});

struct Witness {
  Eigen::VectorXd strain;
  double alpha = 0.0;
  double min_eigenvalue = 0.0;
  double first_negative_magnitude = 0.0;  ///< |e| of the first indefinite sample on the path
};

/// Hessian of (e, alpha) -> C(alpha)e:e/2 + K alpha^2/2.
Eigen::MatrixXd visco_damage_hessian(const MaterialParams& m, double K, double alpha, const Eigen::VectorXd& e);

/// Searches for an indefinite sample of the damage-viscosity regularized
/// stored energy by growing |e| geometrically along the top eigenvector of
/// C1. Returns the most negative sample found. When `alpha` is given only
/// that value is scanned. Throws NoWitnessFound when gamma'^2/gamma <=
/// gamma''/2 on the whole alpha grid.
Witness visco_damage_nonconvexity_witness(const MaterialParams& m, double K,
                                          std::optional<double> alpha = std::nullopt,
                                          int n_alpha = 101, double max_strain = 1e5);

/// sigma = gamma(alpha) C1 e + (D0 + chi_R gamma(alpha_old) C1) e_dot, all Voigt.
Eigen::VectorXd stress(const MaterialParams& m, double alpha, const Eigen::VectorXd& e,
                       const Eigen::VectorXd& e_dot, double alpha_old);

/// gamma'(alpha) C1 e:e / 2
double driving_force(const MaterialParams& m, double alpha, const Eigen::VectorXd& e);

}  // namespace kvd
