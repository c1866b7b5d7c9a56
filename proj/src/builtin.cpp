#include "kvd/errors.hpp"
#include "kvd/scenario.hpp"

#include <map>

namespace kvd {

namespace {

// Viscoelastic damage bar: fixed left end, ramped traction on the right end.
constexpr const char* kBar1d = R"(
[scenario]
name = bar1d

[mesh]
dim = 1
lx = 1
nx = 100

[material]
degradation.kind = at
degradation.eps = 0.05
degradation.eps0 = 0.5
elastic.lambda = 0
elastic.mu = 0.5
viscosity.D0_scale = 0.02
viscosity.chi_R = 0
damage.Gc = 0.001
rho = 1

[loads]
dirichlet.left.x = 0
traction.right = 0.05
traction.right.profile = ramp:1

[time]
T = 2
tau = tau0*0.5

[study]
window = 0,1
)";

// Phase-field plate, pre-damaged seam from the left edge as the crack seed.
constexpr const char* kNotchedPlate2d = R"(
[scenario]
name = notched_plate2d

[mesh]
dim = 2
lx = 1
ly = 1
nx = 32
ny = 32

[material]
degradation.kind = at
degradation.eps = 0.06
degradation.eps0 = 0.6
elastic.lambda = 1
elastic.mu = 1
viscosity.D0_scale = 0.04
viscosity.chi_R = 0
damage.Gc = 0.001
rho = 1

[loads]
dirichlet.bottom.x = 0
dirichlet.bottom.y = 0
traction.top = 0,0.1
traction.top.profile = ramp:0.5

[initial]
seam = 0,0.5,0.3,0.5,0,0.1

[time]
T = 0.6
tau = tau0*0.5
)";

// Fixed-free bar released from its lowest mode, damage frozen, no damping.
constexpr const char* kOscillatorFrozen = R"(
[scenario]
name = oscillator_frozen

[mesh]
dim = 1
lx = 1
nx = 20

[material]
degradation.kind = at
degradation.eps = 0.05
degradation.eps0 = 0.5
elastic.lambda = 0
elastic.mu = 0.5
viscosity.D0_scale = 0
viscosity.chi_R = 0
damage.frozen = true
rho = 1

[loads]
dirichlet.left.x = 0

[initial]
u = mode:0.01

[time]
T = 2
tau = 0.01

[study]
reference = oscillator
)";

// Inertia-free bar under a prescribed uniform stretch.
constexpr const char* kQuasistaticBar = R"(
[scenario]
name = quasistatic_bar

[mesh]
dim = 1
lx = 1
nx = 20

[material]
degradation.kind = at
degradation.eps = 0.05
degradation.eps0 = 0.5
elastic.lambda = 0
elastic.mu = 0.5
viscosity.D0_scale = 0.02
viscosity.chi_R = 0
damage.Gc = 0.001
rho = 0

[loads]
dirichlet.left.x = 0
dirichlet.right.x = 0.2
dirichlet.right.x.profile = linear

[initial]
v = linear:0.2

[time]
T = 1
tau = tau0*0.5
)";

const std::map<std::string, const char*>& table() {
  static const std::map<std::string, const char*> t = {
      {"bar1d", kBar1d},
      {"notched_plate2d", kNotchedPlate2d},
      {"oscillator_frozen", kOscillatorFrozen},
      {"quasistatic_bar", kQuasistaticBar},
  };
  return t;
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : table()) out.push_back(k);
  return out;
}

std::string builtin_scenario_text(const std::string& name) {
  auto it = table().find(name);
  if (it == table().end()) throw UnknownScenario("unknown builtin scenario '" + name + "'");
  return it->second;
}

Scenario builtin_scenario(const std::string& name) { return parse_scenario_text(builtin_scenario_text(name)); }

}  // namespace kvd
