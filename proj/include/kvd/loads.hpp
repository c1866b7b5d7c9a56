#pragma once

#include "kvd/mesh.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace kvd {

/// Scalar time program multiplying a load or prescribed displacement.
struct TimeProfile {
  enum class Kind { Constant, Linear, Ramp, Sine, Table };
  Kind kind = Kind::Constant;
  double param = 0.0;  ///< ramp time for Ramp, angular frequency for Sine
  std::vector<std::pair<double, double>> table;

  double operator()(double t) const;

  /// "constant", "linear", "ramp:T", "sin:OMEGA" or "table:t0:v0,t1:v1,...".
  static TimeProfile parse(const std::string& text);
  std::string str() const;
};

using VectorField = std::function<Eigen::Vector2d(double t, const Point& x)>;
using ScalarField = std::function<double(double t, const Point& x)>;

struct Traction {
  int tag = 0;
  VectorField g;  ///< N/m^2 (2D) or N (1D end load)
};

struct DirichletProgram {
  int tag = 0;
  int component = 0;
  ScalarField value;  ///< m
};

/// External loading: body force f (N/m^3), boundary tractions g, and
/// prescribed displacements on tagged boundary parts.
struct LoadSpec {
  VectorField body;  ///< empty: no body force
  std::vector<Traction> tractions;
  std::vector<DirichletProgram> dirichlet;

  /// Uniform vector times a time profile.
  static VectorField uniform(const Eigen::Vector2d& value, TimeProfile profile);
};

}  // namespace kvd
