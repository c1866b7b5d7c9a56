#pragma once

// Shared test helpers: seeded generators, small problem builders,
// finite differences and a legacy VTK reader.

#include "kvd/integrator.hpp"
#include "kvd/potential.hpp"
#include "kvd/scenario.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kvd::test {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(gen_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen_); }
  Eigen::VectorXd vector(int n, double a = -1.0, double b = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(a, b);
    return v;
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline std::string bar_text(int nx, double traction = 0.05, const std::string& extra = "") {
  std::ostringstream os;
  os << "[scenario]\nname = test_bar\n[mesh]\ndim = 1\nlx = 1\nnx = " << nx
     << "\n[loads]\ndirichlet.left.x = 0\ntraction.right = " << traction
     << "\ntraction.right.profile = linear\n[time]\nT = 0.1\ntau = tau0*0.5\n"
     << extra;
  return os.str();
}

inline std::string plate_text(int n, const std::string& extra = "") {
  std::ostringstream os;
  os << "[scenario]\nname = test_plate\n[mesh]\ndim = 2\nlx = 1\nly = 1\nnx = " << n << "\nny = " << n
     << "\n[material]\ndegradation.eps = 0.06\ndegradation.eps0 = 0.6\nelastic.lambda = 1\nelastic.mu = 1\n"
        "viscosity.D0_scale = 0.04\n[loads]\ndirichlet.bottom.x = 0\ndirichlet.bottom.y = 0\n"
        "traction.top = 0,0.1\ntraction.top.profile = linear\n[time]\nT = 0.05\ntau = tau0*0.5\n"
     << extra;
  return os.str();
}

/// Random state with alpha in [lo, 1] and u, v of the given amplitude.
inline State random_state(const Model& model, Rng& rng, double amp_u, double amp_v, double alpha_lo = 0.2) {
  State s;
  s.k = rng.integer(0, 5);
  s.t = 0.0;
  s.u = rng.vector(model.n_u(), -amp_u, amp_u);
  s.v = rng.vector(model.n_u(), -amp_v, amp_v);
  s.alpha = rng.vector(model.n_alpha(), alpha_lo, 1.0);
  for (const auto& [dof, val] : model.dofs().constrained_values(s.t)) {
    s.u[dof] = val;
    s.v[dof] = 0.0;
  }
  return s;
}

/// Random point in the box of `sp`, strictly inside where the box allows.
inline Eigen::VectorXd random_feasible(const StepProblem& sp, Rng& rng, double amp_u) {
  Eigen::VectorXd x = sp.warm_start();
  const Bounds& b = sp.bounds();
  for (int i = 0; i < x.size(); ++i) {
    if (b.lower[i] == b.upper[i]) {
      x[i] = b.lower[i];
    } else if (std::isinf(b.lower[i]) || std::isinf(b.upper[i])) {
      x[i] += rng.uniform(-amp_u, amp_u);
    } else {
      x[i] = b.lower[i] + rng.uniform(0.0, 1.0) * (b.upper[i] - b.lower[i]);
    }
  }
  return x;
}

/// Interior point: keeps a margin h away from finite bounds.
inline Eigen::VectorXd random_interior(const StepProblem& sp, Rng& rng, double amp_u, double h) {
  Eigen::VectorXd x = random_feasible(sp, rng, amp_u);
  const Bounds& b = sp.bounds();
  for (int i = 0; i < x.size(); ++i) {
    if (b.lower[i] == b.upper[i] || std::isinf(b.lower[i])) continue;
    const double lo = b.lower[i] + h, hi = b.upper[i] - h;
    if (lo < hi) x[i] = std::clamp(x[i], lo, hi);
  }
  return x;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (int i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double fp = f(y);
    y[i] = x[i] - h;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

struct VtkFields {
  int n_points = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<std::array<double, 3>> u, v;
  std::vector<double> alpha;
  std::vector<int> cell_types;
};

/// Reader for the subset of legacy ASCII VTK written by export_vtk.
inline VtkFields read_vtk(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  VtkFields f;
  std::string tok;
  auto triples = [&](int n, std::vector<std::array<double, 3>>& out) {
    out.resize(n);
    for (auto& p : out) in >> p[0] >> p[1] >> p[2];
  };
  while (in >> tok) {
    if (tok == "POINTS") {
      std::string type;
      in >> f.n_points >> type;
      triples(f.n_points, f.points);
    } else if (tok == "CELL_TYPES") {
      int n;
      in >> n;
      f.cell_types.resize(n);
      for (auto& c : f.cell_types) in >> c;
    } else if (tok == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      triples(f.n_points, name == "u" ? f.u : f.v);
    } else if (tok == "SCALARS") {
      std::string name, type, lt, def;
      int ncomp;
      in >> name >> type >> ncomp >> lt >> def;
      f.alpha.resize(f.n_points);
      for (auto& a : f.alpha) in >> a;
    }
  }
  return f;
}

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace kvd::test
