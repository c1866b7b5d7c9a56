#include "doctest.h"
#include "support.hpp"

#include "kvd/errors.hpp"
#include "kvd/scenario.hpp"

#include <filesystem>
#include <fstream>

using namespace kvd;

TEST_CASE("minimal bar file takes defaults and checks tau against tau0") {
  const Scenario sc = parse_scenario_text("[mesh]\ndim = 1\n[time]\nT = 1\ntau = 0.02\n");
  CHECK(sc.problem.mesh.nx == 100);
  CHECK(sc.problem.material.degradation.name() == "at");
  CHECK(sc.tau0 == doctest::Approx(0.01));
  CHECK_FALSE(sc.certified());
  bool warned = false;
  for (const auto& w : sc.warnings) warned |= w.find("tau0") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("time step is rounded to a divisor of T with a warning") {
  const Scenario sc = parse_scenario_text("[time]\nT = 1\ntau = 0.3\n");
  CHECK(sc.problem.tau == doctest::Approx(0.25));
  CHECK(sc.problem.steps() == 4);
  CHECK_FALSE(sc.warnings.empty());
}

TEST_CASE("tau0 expressions") {
  CHECK(parse_scenario_text("[time]\ntau = tau0*0.25\n").problem.tau == doctest::Approx(0.0025));
  CHECK(parse_scenario_text("[time]\ntau = tau0/4\n").problem.tau == doctest::Approx(0.0025));
}

TEST_CASE("semantic violations are collected together") {
  try {
    parse_scenario_text("[material]\ndamage.Gc = -1\nrho = -2\n[time]\nT = -1\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.violations.size() >= 3);
  }
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_scenario_text("[mesh]\ndim = 1\n  bogus_key = 3\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(e.column == 3);
  }
  CHECK_THROWS_AS(parse_scenario_text("[nosuch]\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text("[mesh]\ndim = 1\ndim = 2\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text("[mesh]\nnx = ten\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text("[mesh]\nnx\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text("[loads]\ntraction.right = 1\ntraction.right.profile = wobble\n"), ParseError);
}

TEST_CASE("builtins validate, and parse-serialize-parse is a fixed point") {
  for (const auto& name : builtin_names()) {
    const Scenario a = builtin_scenario(name);
    CHECK(a.name == name);
    CHECK(a.problem.violations().empty());
    const std::string text = serialize_scenario(a);
    const Scenario b = parse_scenario_text(text);
    CHECK(serialize_scenario(b) == text);
    CHECK(b.settings == a.settings);
    CHECK(b.problem.tau == a.problem.tau);
  }
  CHECK_THROWS_AS(builtin_scenario("nope"), UnknownScenario);
  CHECK_THROWS_AS(load_scenario("builtin:nope"), UnknownScenario);
}

TEST_CASE("builtin defaults") {
  const Scenario bar = builtin_scenario("bar1d");
  CHECK(bar.problem.mesh.dim == 1);
  CHECK(bar.problem.mesh.nx == 100);
  CHECK(bar.problem.tau == doctest::Approx(0.5 * bar.tau0));
  const Scenario plate = builtin_scenario("notched_plate2d");
  CHECK(plate.problem.mesh.dim == 2);
  CHECK(plate.problem.mesh.nx == 32);
  CHECK(plate.problem.mesh.ny == 32);
  const auto model = build_model(plate.problem);
  const State s0 = initial_state(*model, plate.problem.initial);
  int seam = 0;
  for (int n = 0; n < model->mesh().n_nodes(); ++n) {
    const auto& p = model->mesh().node(n);
    if (s0.alpha[n] < 1.0) {
      ++seam;
      CHECK(std::abs(p[1] - 0.5) < 1e-9);
      CHECK(p[0] <= 0.3 + 1e-9);
    }
  }
  CHECK(seam == 10);
  const Scenario osc = builtin_scenario("oscillator_frozen");
  CHECK(osc.problem.options.frozen_damage);
  CHECK(osc.study.oscillator_reference);
  const Scenario qs = builtin_scenario("quasistatic_bar");
  CHECK(qs.problem.material.rho == 0.0);
}

TEST_CASE("file round trip and missing files") {
  const auto dir = std::filesystem::temp_directory_path() / "kvd_scenario_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "bar.ini";
  {
    std::ofstream out(path);
    out << builtin_scenario_text("bar1d");
  }
  const Scenario a = parse_scenario(path);
  CHECK(a.settings == builtin_scenario("bar1d").settings);
  CHECK(load_scenario(path.string()).name == "bar1d");
  CHECK_THROWS_AS(parse_scenario(dir / "missing.ini"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("set_tau keeps other settings") {
  Scenario sc = builtin_scenario("bar1d");
  set_tau(sc, sc.tau0 / 4);
  CHECK(sc.problem.tau == doctest::Approx(0.0025));
  CHECK(sc.problem.T == 2.0);
  CHECK(sc.name == "bar1d");
}

TEST_CASE("modal initial data is a generalized eigenvector") {
  const Scenario sc = builtin_scenario("oscillator_frozen");
  const auto model = build_model(sc.problem);
  const State s0 = initial_state(*model, sc.problem.initial);
  CHECK(test::max_abs(s0.u) == doctest::Approx(0.01));
  const SparseSym k = assemble_degraded_stiffness(model->disc(), sc.problem.material.elastic,
                                                  sc.problem.material.degradation, s0.alpha);
  const double w2 = k.quad(s0.u) / model->mass().quad(s0.u);
  const Eigen::VectorXd r = k.apply(s0.u) - w2 * model->mass().apply(s0.u);
  for (int i : model->dofs().free_u()) CHECK(std::abs(r[i]) <= 1e-10 * test::max_abs(k.apply(s0.u)));
}

TEST_CASE("inline comments are stripped") {
  const Scenario sc = parse_scenario_text("[mesh]\ndim = 1 ; interval\nnx = 40\t# elements\n[time]\nT = 1 # end\n");
  CHECK(sc.problem.mesh.nx == 40);
  CHECK(sc.problem.T == 1.0);
}
