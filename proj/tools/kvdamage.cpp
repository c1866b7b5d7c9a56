#include "kvd/errors.hpp"
#include "kvd/export.hpp"
#include "kvd/integrator.hpp"
#include "kvd/material.hpp"
#include "kvd/scenario.hpp"
#include "kvd/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kNonconvergence = 3;
constexpr int kIo = 4;

json finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json stats_json(const std::vector<kvd::StepStats>& stats) {
  int newton = 0, backtracks = 0, sweeps = 0, uncertified = 0, nonconvex = 0;
  double wall = 0.0;
  for (const auto& s : stats) {
    newton += s.newton_iters;
    backtracks += s.backtracks;
    sweeps += s.sweeps;
    uncertified += s.certified ? 0 : 1;
    nonconvex += s.convexity_ok ? 0 : 1;
    wall += s.wall_time;
  }
  return {{"steps", stats.size()},         {"newton_iters", newton},   {"backtracks", backtracks},
          {"sweeps", sweeps},              {"uncertified_steps", uncertified},
          {"convexity_flags", nonconvex}, {"solve_seconds", wall}};
}

void write_json(const fs::path& path, const json& j) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw kvd::IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw kvd::IoError("write failed for " + path.string());
}

std::string vtk_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "state_%06d.vtk", k);
  return buf;
}

void print_warnings(const kvd::Scenario& sc) {
  for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_run(const std::string& ref, std::optional<double> tau, std::optional<std::string> out, bool strict) {
  kvd::Scenario sc = kvd::load_scenario(ref);
  if (tau) kvd::set_tau(sc, *tau);
  if (strict) sc.problem.strict_tau0 = true;
  print_warnings(sc);
  const fs::path dir = out ? fs::path(*out) : sc.output.dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw kvd::IoError("cannot create " + dir.string() + ": " + ec.message());

  const kvd::Mesh mesh = kvd::build_mesh(sc.problem.mesh);
  const int steps = sc.problem.steps();
  kvd::RunHooks hooks;
  hooks.on_step = [&](const kvd::State& s, const kvd::StepStats& st) {
    std::printf("step %d t=%.6g newton=%d pg=%.3e active=%d%s\n", s.k, s.t, st.newton_iters, st.pg_norm,
                st.active_set, st.certified ? "" : " uncertified");
    if (sc.output.vtk && sc.output.every > 0 && s.k % sc.output.every == 0 && s.k < steps) kvd::export_vtk(s, mesh, dir / vtk_name(s.k));
  };

  auto finish = [&](const kvd::RunResult& r, const std::string& status) {
    if (sc.output.vtk && !r.trajectory.states.empty()) {
      kvd::export_vtk(r.trajectory.states.front(), mesh, dir / vtk_name(0));
      kvd::export_vtk(r.trajectory.states.back(), mesh, dir / vtk_name(r.trajectory.states.back().k));
    }
    kvd::export_csv(r.report, r.stats, dir / "energy.csv");
    json j = {{"scenario", sc.name},
              {"status", status},
              {"tau", sc.problem.tau},
              {"tau0", finite(sc.tau0)},
              {"T", sc.problem.T},
              {"certified", sc.certified()},
              {"steps_completed", r.trajectory.steps()},
              {"prefactor", r.report.prefactor},
              {"min_margin", r.report.min_margin()},
              {"tol_E", r.report.tolerance},
              {"inequality_holds", r.report.inequality_holds()},
              {"stats", stats_json(r.stats)},
              {"warnings", sc.warnings}};
    if (!r.failure.empty()) j["failure"] = r.failure;
    write_json(dir / "summary.json", j);
    std::printf("%s: %d steps, min margin %.3e (tol %.3e), output in %s\n", status.c_str(), r.trajectory.steps(),
                r.report.min_margin(), r.report.tolerance, dir.string().c_str());
  };

  try {
    const kvd::RunResult r = kvd::run(sc.problem, hooks);
    finish(r, "completed");
  } catch (const kvd::RunFailure& f) {
    if (f.partial) finish(*f.partial, "failed");
    throw;
  }
  return kOk;
}

int cmd_study(const std::string& ref, int levels, bool staggered, std::optional<std::string> out) {
  kvd::Scenario sc = kvd::load_scenario(ref);
  print_warnings(sc);
  const kvd::StudyResult res = kvd::run_convergence_study(sc, levels, staggered || sc.study.compare_staggered);
  json lv = json::array();
  for (const auto& l : res.levels)
    lv.push_back({{"tau", l.tau},
                  {"steps", l.steps},
                  {"newton_iters", l.newton_iters},
                  {"min_margin", l.min_margin},
                  {"inequality_holds", l.inequality_holds},
                  {"apriori", l.bounds.values()},
                  {"solve_seconds", l.wall_time}});
  auto arr = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(finite(x));
    return a;
  };
  json j = {{"scenario", sc.name},
            {"window", {res.window_start, res.window_end}},
            {"levels", lv},
            {"u_diffs", arr(res.u_diffs)},
            {"alpha_diffs", arr(res.alpha_diffs)},
            {"u_orders", arr(res.u_orders)},
            {"alpha_orders", arr(res.alpha_orders)},
            {"u_monotone", res.u_monotone},
            {"alpha_monotone", res.alpha_monotone},
            {"bounds_uniform", res.bounds_uniform}};
  if (res.reference)
    j["reference"] = {{"omega", res.reference->omega},
                      {"damping", res.reference->damping},
                      {"errors", arr(res.reference->errors)},
                      {"orders", arr(res.reference->orders)}};
  if (res.scheme)
    j["staggered"] = {{"relative_difference", res.scheme->relative_difference},
                      {"monolithic_newton", res.scheme->monolithic_newton},
                      {"staggered_newton", res.scheme->staggered_newton},
                      {"staggered_sweeps", res.scheme->staggered_sweeps}};
  std::cout << j.dump(2) << "\n";
  if (out) write_json(fs::path(*out) / "study.json", j);
  return kOk;
}

int cmd_tau0(const std::string& ref, double witness_k) {
  const kvd::Scenario sc = kvd::load_scenario(ref);
  print_warnings(sc);
  const kvd::MaterialParams& m = sc.problem.material;
  const double k = kvd::semiconvexity_constant(m);
  std::printf("scenario %s\n", sc.name.c_str());
  std::printf("tau0 = %.17g\n", sc.tau0);
  std::printf("K = %.17g\n", k);
  std::printf("tau = %.17g (%s)\n", sc.problem.tau, sc.certified() ? "certified" : "uncertified");
  const kvd::CheckReport psd = kvd::stored_hessian_psd_check(m, k);
  std::printf("semiconvexity check: %s\n", psd.summary().c_str());
  try {
    const kvd::Witness w = kvd::visco_damage_nonconvexity_witness(m, witness_k);
    std::printf("damage-viscosity regularization with K = %g: indefinite at alpha = %.6g, |e| = %.6g, min eigenvalue %.6e\n",
                witness_k, w.alpha, w.strain.norm(), w.min_eigenvalue);
  } catch (const kvd::NoWitnessFound& e) {
    std::printf("damage-viscosity regularization with K = %g: no indefinite sample (%s)\n", witness_k, e.what());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kelvin-Voigt damage dynamics: scenario runs, time-step studies and convexity checks"};
  app.require_subcommand(1);

  std::string run_ref;
  std::optional<double> run_tau;
  std::optional<std::string> run_out;
  bool strict = false;
  auto* run = app.add_subcommand("run", "Run a scenario file or builtin:NAME");
  run->add_option("scenario", run_ref, "Scenario file or builtin:NAME")->required();
  run->add_option("--tau", run_tau, "Time step override");
  run->add_option("--out", run_out, "Output directory");
  run->add_flag("--strict-tau0", strict, "Refuse time steps above tau0");

  std::string study_ref;
  int levels = 3;
  bool staggered = false;
  std::optional<std::string> study_out;
  auto* study = app.add_subcommand("study", "Time-step halving convergence study");
  study->add_option("scenario", study_ref, "Scenario file or builtin:NAME")->required();
  study->add_option("--levels", levels, "Number of levels (>= 3)")->check(CLI::Range(3, 12));
  study->add_flag("--compare-staggered", staggered, "Also run the staggered scheme at the base step");
  study->add_option("--out", study_out, "Directory for study.json");

  std::string tau0_ref;
  double witness_k = 1e6;
  auto* tau0 = app.add_subcommand("tau0", "Print the critical time step and convexity checks");
  tau0->add_option("scenario", tau0_ref, "Scenario file or builtin:NAME")->required();
  tau0->add_option("--witness-K", witness_k, "Regularization constant for the nonconvexity witness");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) return cmd_run(run_ref, run_tau, run_out, strict);
    if (*study) return cmd_study(study_ref, levels, staggered, study_out);
    if (*tau0) return cmd_tau0(tau0_ref, witness_k);
  } catch (const kvd::NoConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNonconvergence;
  } catch (const kvd::LinearSolveFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNonconvergence;
  } catch (const kvd::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const kvd::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const kvd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
