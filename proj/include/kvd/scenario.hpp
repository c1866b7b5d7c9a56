#pragma once

// Scenario files: INI-style sections of `key = value` lines.
//
//   [scenario] name
//   [mesh]     dim lx ly nx ny file
//   [material] degradation.* elastic.* viscosity.* damage.* dissipation.*
//              gradient.* rho
//   [loads]    body body.profile traction.<tag> traction.<tag>.profile
//              dirichlet.<tag>.<x|y> dirichlet.<tag>.<x|y>.profile
//   [initial]  u v alpha seam
//   [time]     T tau
//   [solver]   grad_tol max_newton armijo mode max_sweeps strict_tau0
//   [output]   dir every vtk
//   [study]    window levels reference compare_staggered
//
// Settings are kept in canonical form (full key -> value, numbers at 17
// significant digits) so that serialize() followed by parse is a fixed point.

#include "kvd/integrator.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kvd {

struct OutputConfig {
  std::filesystem::path dir = "out";
  int every = 0;  ///< VTK dump cadence in steps; 0 dumps initial and final states only
  bool vtk = true;
};

struct StudyConfig {
  double window_start = 0.0;
  double window_end = 0.0;  ///< defaults to T
  int levels = 3;
  bool oscillator_reference = false;  ///< compare against the closed-form modal solution
  bool compare_staggered = false;
};

struct Scenario {
  std::string name;
  Problem problem;
  OutputConfig output;
  StudyConfig study;
  double tau0 = 0.0;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> settings;  ///< canonical "section.key" -> value

  bool certified() const { return problem.tau <= tau0; }
};

/// Throws ParseError (syntax, unknown or malformed keys) or ValidationError
/// (all semantic violations at once).
Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_text(const std::string& text);
std::string serialize_scenario(const Scenario& s);

/// Names accepted by builtin_scenario.
std::vector<std::string> builtin_names();
/// Throws UnknownScenario.
Scenario builtin_scenario(const std::string& name);
/// Text of a builtin scenario, in the file format.
std::string builtin_scenario_text(const std::string& name);

/// "builtin:NAME" or a file path.
Scenario load_scenario(const std::string& ref);

/// Replaces the time step (rounded to a divisor of T, with a warning when
/// adjusted) and rebuilds the problem.
void set_tau(Scenario& s, double tau);
/// Rebuilds a scenario from modified settings.
Scenario rebuild(const std::map<std::string, std::string>& settings);

}  // namespace kvd
