#include "kvd/scenario.hpp"

#include "kvd/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace kvd {

namespace {

const std::vector<std::string> kSections = {"scenario", "mesh",   "material", "loads", "initial",
                                            "time",     "solver", "output",   "study"};

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"scenario.name", "custom"},
      {"mesh.dim", "1"},
      {"mesh.lx", "1"},
      {"mesh.ly", "1"},
      {"mesh.nx", "100"},
      {"mesh.ny", "1"},
      {"mesh.file", ""},
      {"material.degradation.kind", "at"},
      {"material.degradation.eps", "0.050000000000000003"},
      {"material.degradation.eps0", "0.5"},
      {"material.degradation.c0", "0.01"},
      {"material.degradation.samples", ""},
      {"material.elastic.lambda", "0"},
      {"material.elastic.mu", "0.5"},
      {"material.viscosity.D0_scale", "0.02"},
      {"material.viscosity.chi_R", "0"},
      {"material.damage.Gc", "0.001"},
      {"material.damage.eps", "auto"},
      {"material.damage.frozen", "false"},
      {"material.damage.phi_mode", "derivative"},
      {"material.dissipation.eta", "auto"},
      {"material.dissipation.rate_independent", "false"},
      {"material.gradient.kappa", "auto"},
      {"material.gradient.p", "2"},
      {"material.gradient.eps_g", "0"},
      {"material.rho", "1"},
      {"loads.body", ""},
      {"loads.body.profile", "constant"},
      {"initial.u", "zero"},
      {"initial.v", "zero"},
      {"initial.alpha", "1"},
      {"initial.seam", ""},
      {"time.T", "1"},
      {"time.tau", "tau0*0.5"},
      {"solver.grad_tol", "1.0000000000000001e-09"},
      {"solver.max_newton", "100"},
      {"solver.armijo", "0.0001"},
      {"solver.mode", "monolithic"},
      {"solver.max_sweeps", "1000"},
      {"solver.strict_tau0", "false"},
      {"output.dir", "out"},
      {"output.every", "0"},
      {"output.vtk", "true"},
      {"study.window", ""},
      {"study.levels", "3"},
      {"study.reference", "none"},
      {"study.compare_staggered", "false"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Inline comments start at '#' or ';' preceded by whitespace.
std::string strip_comment(const std::string& s) {
  for (std::size_t i = 1; i < s.size(); ++i)
    if ((s[i] == '#' || s[i] == ';') && (s[i - 1] == ' ' || s[i - 1] == '\t')) return s.substr(0, i);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back({});
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool valid_tag(const std::string& t) {
  try {
    boundary_tag(t);
    return true;
  } catch (const BadSpec&) {
    return false;
  }
}

bool is_profile_key(const std::string& key) { return key.size() > 8 && key.ends_with(".profile"); }

// loads.traction.<tag>[.profile], loads.dirichlet.<tag>.<x|y>[.profile]
bool is_dynamic_key(const std::string& key) {
  const auto parts = split(key, '.');
  if (parts.size() < 3 || parts[0] != "loads") return false;
  if (parts[1] == "traction")
    return valid_tag(parts[2]) && (parts.size() == 3 || (parts.size() == 4 && parts[3] == "profile"));
  if (parts[1] == "dirichlet" && parts.size() >= 4)
    return valid_tag(parts[2]) && (parts[3] == "x" || parts[3] == "y") &&
           (parts.size() == 4 || (parts.size() == 5 && parts[4] == "profile"));
  return false;
}

bool is_known_key(const std::string& key) { return defaults().count(key) || is_dynamic_key(key); }

std::string canonical_value(const std::string& key, const std::string& raw) {
  if (is_profile_key(key)) {
    try {
      return TimeProfile::parse(raw).str();
    } catch (const BadSpec&) {
      return raw;
    }
  }
  const auto parts = split(raw, ',');
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    double v;
    if (!parse_double(parts[i], v)) return raw;
    if (i) out += ',';
    out += fmt17(v);
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;  ///< 0 for defaults
  int col = 0;
};
using Entries = std::map<std::string, Entry>;

Entries lex(const std::string& text) {
  Entries out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos || raw[first] == '#' || raw[first] == ';') continue;
    const int col0 = static_cast<int>(first) + 1;
    std::string body = raw;
    body = strip_comment(body);
    body = trim(body);
    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError("unterminated section header", line, col0 + static_cast<int>(body.size()));
      section = trim(body.substr(1, body.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end())
        throw ParseError("unknown section [" + section + "]", line, col0 + 1);
      continue;
    }
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line, col0);
    if (section.empty()) throw ParseError("key outside of any section", line, col0);
    const std::string key = trim(raw.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line, col0);
    std::string value = raw.substr(eq + 1);
    value = strip_comment(value);
    value = trim(value);
    const std::string full = section + "." + key;
    if (!is_known_key(full)) throw ParseError("unknown key '" + key + "' in [" + section + "]", line, col0);
    if (out.count(full)) throw ParseError("duplicate key '" + key + "'", line, col0);
    const auto vpos = raw.find_first_not_of(" \t", eq + 1);
    out[full] = {value, line, static_cast<int>(vpos == std::string::npos ? eq + 2 : vpos + 1)};
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const Entries& e) : e_(e) {}

  const Entry& entry(const std::string& key) const {
    auto it = e_.find(key);
    if (it == e_.end()) throw BadSpec("internal: missing key " + key);
    return it->second;
  }
  const std::string& str(const std::string& key) const { return entry(key).value; }
  bool is(const std::string& key, const std::string& v) const { return str(key) == v; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const Entry& en = entry(key);
    throw ParseError(what + " for key '" + key + "'", std::max(en.line, 1), std::max(en.col, 1));
  }

  double num(const std::string& key) const {
    double v;
    if (!parse_double(str(key), v)) fail(key, "expected a number");
    return v;
  }
  double num_or_auto(const std::string& key, double fallback) const { return is(key, "auto") ? fallback : num(key); }
  int integer(const std::string& key) const {
    const double v = num(key);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(key, "expected an integer");
    return static_cast<int>(v);
  }
  bool boolean(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(key, "expected true or false");
  }
  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    if (str(key).empty()) return out;
    for (const auto& p : split(str(key), ',')) {
      double v;
      if (!parse_double(p, v)) fail(key, "expected a comma-separated list of numbers");
      out.push_back(v);
    }
    return out;
  }
  TimeProfile profile(const std::string& key) const {
    try {
      return TimeProfile::parse(str(key));
    } catch (const BadSpec& e) {
      fail(key, e.what());
    }
  }
  Eigen::Vector2d vec(const std::string& key, int dim) const {
    const auto v = list(key);
    if (v.empty() || v.size() > 2) fail(key, "expected one or two components");
    if (static_cast<int>(v.size()) > dim) fail(key, "more components than the mesh dimension");
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
  }

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : e_)
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
  }

 private:
  const Entries& e_;
};

// u(x) = G x for "linear:g" (1D) or "linear:g11,g12,g21,g22" (2D); constant
// vectors; "zero".
VectorField field_from_spec(const Reader& r, const std::string& key, int dim) {
  const std::string& s = r.str(key);
  if (s == "zero" || s.empty()) return {};
  if (s.rfind("mode:", 0) == 0) return {};
  if (s.rfind("linear:", 0) == 0) {
    std::vector<double> g;
    for (const auto& p : split(s.substr(7), ',')) {
      double v;
      if (!parse_double(p, v)) r.fail(key, "bad linear field");
      g.push_back(v);
    }
    if (static_cast<int>(g.size()) != dim * dim) r.fail(key, "linear field needs dim*dim coefficients");
    return [g, dim](double, const Point& x) -> Eigen::Vector2d {
      Eigen::Vector2d out = Eigen::Vector2d::Zero();
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) out[i] += g[i * dim + j] * x[j];
      return out;
    };
  }
  const Eigen::Vector2d c = r.vec(key, dim);
  return [c](double, const Point&) -> Eigen::Vector2d { return c; };
}

// Lowest nonrigid generalized eigenvector of (K(alpha0), M) on the free
// displacement dofs, scaled to max |u| = amp.
Eigen::VectorXd lowest_mode(const Problem& p, const Eigen::VectorXd& alpha0, double amp) {
  Model model(build_mesh(p.mesh), p.material, p.loads, p.options);
  const std::vector<int> free = model.dofs().free_u();
  if (free.size() > 3000) throw BadSpec("modal initial data is limited to 3000 free dofs");
  const SparseSym k = assemble_degraded_stiffness(model.disc(), p.material.elastic, p.material.degradation, alpha0);
  const Eigen::MatrixXd kf(submatrix(k.m, free));
  const Eigen::MatrixXd mf(submatrix(model.mass().m, free));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kf, mf);
  if (es.info() != Eigen::Success) throw BadSpec("modal eigensolve failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double cut = 1e-10 * std::max(lam.cwiseAbs().maxCoeff(), 1.0);
  int idx = 0;
  while (idx < lam.size() - 1 && lam[idx] <= cut) ++idx;
  Eigen::VectorXd phi = es.eigenvectors().col(idx);
  Eigen::Index imax;
  phi.cwiseAbs().maxCoeff(&imax);
  phi *= amp / phi[imax];
  Eigen::VectorXd u = Eigen::VectorXd::Zero(model.n_u());
  for (std::size_t i = 0; i < free.size(); ++i) u[free[i]] = phi[i];
  return u;
}

double segment_distance(const Point& x, double x0, double y0, double x1, double y1) {
  const double dx = x1 - x0, dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  double s = len2 > 0.0 ? ((x[0] - x0) * dx + (x[1] - y0) * dy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::hypot(x[0] - (x0 + s * dx), x[1] - (y0 + s * dy));
}

Scenario resolve(const Entries& given) {
  Entries e;
  for (const auto& [k, v] : defaults()) e[k] = {v, 0, 0};
  for (const auto& [k, v] : given) e[k] = v;
  const Reader r(e);
  std::vector<std::string> bad;

  Scenario sc;
  sc.name = r.str("scenario.name");
  Problem& p = sc.problem;

  // mesh
  p.mesh.dim = r.integer("mesh.dim");
  p.mesh.lx = r.num("mesh.lx");
  p.mesh.ly = r.num("mesh.ly");
  p.mesh.nx = r.integer("mesh.nx");
  p.mesh.ny = r.integer("mesh.ny");
  p.mesh.file = r.str("mesh.file");
  const int dim = p.mesh.dim;
  if (dim != 1 && dim != 2) r.fail("mesh.dim", "dimension must be 1 or 2");
  if (p.mesh.file.empty()) {
    if (!(p.mesh.lx > 0.0) || (dim == 2 && !(p.mesh.ly > 0.0))) bad.push_back("mesh: extents must be positive");
    if (p.mesh.nx < 1 || (dim == 2 && p.mesh.ny < 1)) bad.push_back("mesh: resolution must be positive");
  }

  // material
  MaterialParams& m = p.material;
  m.dim = dim;
  const double eps = r.num("material.degradation.eps");
  const std::string& kind = r.str("material.degradation.kind");
  if (kind == "at") {
    const double eps0 = r.num("material.degradation.eps0");
    if (!(eps0 > 0.0)) bad.push_back("degradation.eps0 must be positive");
    m.degradation = DegradationLaw::ambrosio_tortorelli(eps, eps0 > 0.0 ? eps0 : 1.0);
  } else if (kind == "quadratic") {
    m.degradation = DegradationLaw::quadratic(r.num("material.degradation.c0"));
  } else if (kind == "tabulated") {
    try {
      m.degradation = DegradationLaw::tabulated(r.list("material.degradation.samples"));
    } catch (const BadSpec& ex) {
      bad.push_back(std::string("degradation: ") + ex.what());
    }
  } else {
    r.fail("material.degradation.kind", "expected at, quadratic or tabulated");
  }
  if (kind == "at" && !(eps > 0.0)) bad.push_back("degradation.eps must be positive");
  m.elastic = ElasticTensor::isotropic(dim, r.num("material.elastic.lambda"), r.num("material.elastic.mu"));
  const double d0_scale = r.num("material.viscosity.D0_scale");
  m.viscosity.d0 = m.elastic.scaled(d0_scale);
  m.viscosity.chi_r = r.num("material.viscosity.chi_R");
  const double gc = r.num("material.damage.Gc");
  const double eps_d = r.num_or_auto("material.damage.eps", eps);
  if (!(eps_d > 0.0)) bad.push_back("damage.eps must be positive");
  if (!(gc >= 0.0)) bad.push_back("damage.Gc must be nonnegative");
  m.damage_energy = DamageEnergy::at_quadratic(gc, eps_d > 0.0 ? eps_d : 1.0);
  m.dissipation.eta = r.num_or_auto("material.dissipation.eta", 1e-3 * std::max(m.viscosity.d0.max_eigenvalue(), 0.0));
  m.dissipation.allow_rate_independent = r.boolean("material.dissipation.rate_independent");
  m.gradient.kappa = r.num_or_auto("material.gradient.kappa", eps_d * gc);
  m.gradient.p = r.num("material.gradient.p");
  m.gradient.eps_g = r.num("material.gradient.eps_g");
  m.rho = r.num("material.rho");
  p.options.frozen_damage = r.boolean("material.damage.frozen");
  const std::string& phi_mode = r.str("material.damage.phi_mode");
  if (phi_mode != "derivative" && phi_mode != "difference_quotient")
    r.fail("material.damage.phi_mode", "expected derivative or difference_quotient");
  p.options.difference_quotient_phi = phi_mode == "difference_quotient";

  // loads
  if (!r.str("loads.body").empty())
    p.loads.body = LoadSpec::uniform(r.vec("loads.body", dim), r.profile("loads.body.profile"));
  for (const auto& key : r.keys_with_prefix("loads.traction.")) {
    if (is_profile_key(key)) continue;
    const std::string tag = split(key, '.')[2];
    const std::string pkey = key + ".profile";
    const TimeProfile prof = e.count(pkey) ? r.profile(pkey) : TimeProfile{};
    p.loads.tractions.push_back({boundary_tag(tag), LoadSpec::uniform(r.vec(key, dim), prof)});
  }
  for (const auto& key : r.keys_with_prefix("loads.dirichlet.")) {
    if (is_profile_key(key)) continue;
    const auto parts = split(key, '.');
    const std::string pkey = key + ".profile";
    const TimeProfile prof = e.count(pkey) ? r.profile(pkey) : TimeProfile{};
    const double value = r.num(key);
    const int comp = parts[3] == "x" ? 0 : 1;
    if (comp >= dim) r.fail(key, "component exceeds the mesh dimension");
    p.loads.dirichlet.push_back({boundary_tag(parts[2]), comp,
                                 [value, prof](double t, const Point&) { return value * prof(t); }});
  }
  for (const auto& key : r.keys_with_prefix("loads.")) {
    if (!is_profile_key(key)) continue;
    if (!e.count(key.substr(0, key.size() - 8))) bad.push_back("profile given without a load: " + key);
  }

  // initial
  p.initial.u0 = field_from_spec(r, "initial.u", dim);
  p.initial.v0 = field_from_spec(r, "initial.v", dim);
  const double alpha_base = r.num("initial.alpha");
  if (!(alpha_base >= 0.0 && alpha_base <= 1.0)) bad.push_back("initial.alpha must lie in [0, 1]");
  const auto seam = r.list("initial.seam");
  if (!seam.empty() && seam.size() != 6) r.fail("initial.seam", "expected x0,y0,x1,y1,halfwidth,value");
  if (!seam.empty() && !(seam[5] >= 0.0 && seam[5] <= 1.0)) bad.push_back("initial.seam value must lie in [0, 1]");
  p.initial.alpha0 = [alpha_base, seam](double, const Point& x) {
    if (!seam.empty() && segment_distance(x, seam[0], seam[1], seam[2], seam[3]) <= seam[4] + 1e-12)
      return std::min(alpha_base, seam[5]);
    return alpha_base;
  };

  // time
  p.T = r.num("time.T");
  if (!(p.T > 0.0)) bad.push_back("time.T must be positive");

  // solver
  p.solver.grad_tol = r.num("solver.grad_tol");
  p.solver.max_newton = r.integer("solver.max_newton");
  p.solver.armijo = r.num("solver.armijo");
  try {
    p.solver.mode = solver_mode_from_string(r.str("solver.mode"));
  } catch (const BadSpec&) {
    r.fail("solver.mode", "expected monolithic or staggered");
  }
  p.solver.max_sweeps = r.integer("solver.max_sweeps");
  p.strict_tau0 = r.boolean("solver.strict_tau0");

  // output and study
  sc.output.dir = r.str("output.dir");
  sc.output.every = r.integer("output.every");
  sc.output.vtk = r.boolean("output.vtk");
  if (sc.output.every < 0) bad.push_back("output.every must be >= 0");
  const auto window = r.list("study.window");
  if (!window.empty() && window.size() != 2) r.fail("study.window", "expected t0,t1");
  sc.study.window_start = window.empty() ? 0.0 : window[0];
  sc.study.window_end = window.empty() ? p.T : window[1];
  if (!(sc.study.window_end > sc.study.window_start)) bad.push_back("study.window must be a nonempty interval");
  sc.study.levels = r.integer("study.levels");
  if (sc.study.levels < 3) bad.push_back("study.levels must be >= 3");
  const std::string& ref = r.str("study.reference");
  if (ref != "none" && ref != "oscillator") r.fail("study.reference", "expected none or oscillator");
  sc.study.oscillator_reference = ref == "oscillator";
  sc.study.compare_staggered = r.boolean("study.compare_staggered");

  // Material admissibility first: tau0 needs a valid material.
  const bool quasistatic = m.rho == 0.0;
  for (auto& v : m.violations(quasistatic, p.options.frozen_damage)) bad.push_back("material: " + v);
  sc.tau0 = std::numeric_limits<double>::infinity();
  if (bad.empty() && !p.options.frozen_damage) {
    try {
      sc.tau0 = critical_timestep(m);
    } catch (const Error& ex) {
      bad.push_back(std::string("material: ") + ex.what());
    }
  }

  const std::string& tau_s = r.str("time.tau");
  double tau = 0.0;
  if (tau_s.rfind("tau0*", 0) == 0 || tau_s.rfind("tau0/", 0) == 0) {
    double f;
    if (!parse_double(tau_s.substr(5), f) || !(f > 0.0)) r.fail("time.tau", "bad tau0 expression");
    if (std::isinf(sc.tau0)) {
      bad.push_back("time.tau is given relative to tau0, but tau0 is unbounded for this material");
    } else {
      tau = tau_s[4] == '*' ? sc.tau0 * f : sc.tau0 / f;
    }
  } else {
    tau = r.num("time.tau");
    if (!(tau > 0.0)) bad.push_back("time.tau must be positive");
  }
  if (tau > 0.0 && p.T > 0.0) {
    const long n = std::max(1L, static_cast<long>(std::ceil(p.T / tau - 1e-9)));
    const double adjusted = p.T / static_cast<double>(n);
    if (std::abs(adjusted - tau) > 1e-12 * tau)
      sc.warnings.push_back("time step adjusted from " + fmt17(tau) + " to " + fmt17(adjusted) +
                            " so that T is a multiple of it");
    tau = adjusted;
  }
  p.tau = tau;
  if (tau > 0.0 && tau > sc.tau0) {
    const std::string msg = "time step " + fmt17(tau) + " exceeds the critical step tau0 = " + fmt17(sc.tau0) +
                            "; steps are not certified convex";
    if (p.strict_tau0)
      bad.push_back(msg);
    else
      sc.warnings.push_back(msg);
  }

  for (auto& v : p.violations())
    if (std::find(bad.begin(), bad.end(), "material: " + v) == bad.end() &&
        v.rfind("time.", 0) != 0)
      bad.push_back(v);
  if (!bad.empty()) throw ValidationError(bad);

  for (const char* key : {"initial.u", "initial.v"}) {
    const std::string& s = r.str(key);
    if (s.rfind("mode:", 0) != 0) continue;
    double amp;
    if (!parse_double(s.substr(5), amp)) r.fail(key, "expected mode:AMPLITUDE");
    const Model probe(build_mesh(p.mesh), m, p.loads, p.options);
    const Eigen::VectorXd alpha0 = initial_state(probe, InitialFields{{}, {}, p.initial.alpha0, {}, {}, {}}).alpha;
    (std::string(key) == "initial.u" ? p.initial.u0_nodal : p.initial.v0_nodal) = lowest_mode(p, alpha0, amp);
  }

  for (const auto& [k, v] : e) sc.settings[k] = canonical_value(k, v.value);
  return sc;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) { return resolve(lex(text)); }

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream os;
  for (const auto& section : kSections) {
    os << "[" << section << "]\n";
    const std::string prefix = section + ".";
    for (const auto& [k, v] : s.settings)
      if (k.rfind(prefix, 0) == 0) os << k.substr(prefix.size()) << " = " << v << "\n";
    os << "\n";
  }
  return os.str();
}

Scenario rebuild(const std::map<std::string, std::string>& settings) {
  Entries e;
  for (const auto& [k, v] : settings) {
    if (!is_known_key(k)) throw ParseError("unknown key '" + k + "'", 1, 1);
    e[k] = {v, 0, 0};
  }
  return resolve(e);
}

void set_tau(Scenario& s, double tau) {
  auto settings = s.settings;
  settings["time.tau"] = fmt17(tau);
  s = rebuild(settings);
}

Scenario load_scenario(const std::string& ref) {
  if (ref.rfind("builtin:", 0) == 0) return builtin_scenario(ref.substr(8));
  return parse_scenario(ref);
}

}  // namespace kvd
