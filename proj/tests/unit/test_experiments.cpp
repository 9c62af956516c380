#include <doctest.h>

#include "helm/experiments.hpp"
#include "helm/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace helm;
using doctest::Approx;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("helm_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

SweepConfig tiny_sweep() {
  SweepConfig c;
  c.scene = build_two_wall_scene(false);
  c.regimes = {Regime::U1, Regime::RE};
  c.n_values = {1, 2};
  c.c_default = 400;
  c.c_pml = 9;
  c.reference.degree = 3;
  return c;
}

RhoConfig cheap_rho() {
  RhoConfig r{RhoSource::Conjectured};
  r.delta = TwoWallDims::gap() / 6;
  r.directions = 16;
  r.t_max = 20;
  return r;
}

}  // namespace

TEST_CASE("beam source has unit L2 norm by brute-force grid quadrature") {
  for (double k : {10.0, 40.0}) {
    BeamSpec b = beam_in(k);
    b.x0 = Vec2(0.1, -0.2);
    b.xi0 = Vec2(0.6, 0.8);
    const SourceFunction f = gaussian_beam(b);
    const int n = 800;
    const double h = 2 * b.r_bump / n;
    double s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += std::norm(f(b.x0 + Vec2(-b.r_bump + (i + 0.5) * h, -b.r_bump + (j + 0.5) * h)));
    CHECK(std::sqrt(s * h * h) == Approx(1.0).epsilon(1e-4));
  }
  CHECK(beam_bump(Vec2(0.4, 0), 0.4) == 0.0);
  CHECK(beam_bump(Vec2::Zero(), 0.4) == 1.0);
}

TEST_CASE("beam_out aims at the lower corner of the right wall's flat face") {
  const Scene s = build_two_wall_scene(false);
  const double k = cavity_wavenumber(10);
  const BeamSpec b = beam_out(s, k);
  CHECK(b.xi0.x() == Approx(std::cos(3 / std::sqrt(k))));
  CHECK(b.xi0.y() == Approx(std::sin(3 / std::sqrt(k))));
  CHECK((b.target - b.x0).norm() == Approx(1.8));
  CHECK_FALSE(s.inside_obstacle(b.x0));
  CHECK_THROWS_AS(beam_out(build_two_wall_scene(false), -1), DomainError);
}

TEST_CASE("cavity wavenumbers and rate fits") {
  CHECK(cavity_wavenumber(20) == Approx(55.54).epsilon(1e-3));
  std::vector<double> ks{5, 10, 20, 40}, v;
  for (double k : ks) v.push_back(3 * std::pow(k, -1.7));
  const RateFit f = fit_rate(ks, v);
  CHECK(f.slope == Approx(-1.7));
  CHECK(f.intercept == Approx(std::log(3.0)));
  CHECK(f.r2 == Approx(1.0));
  CHECK_THROWS(fit_rate({1.0}, {1.0}));
}

TEST_CASE("predicted errors are monotone in every meshwidth") {
  const double k = 20, rho = 400;
  const MeshBudget b{0.01, 0.02, 0.03, 0.05, false};
  const Eigen::Vector4d norms(1, 2, 3, 0.5);
  const Eigen::Vector4d e0 = predicted_errors(b, k, rho, 2, norms);
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector4d h = b.vec();
    h[i] *= 0.8;
    const Eigen::Vector4d e1 = predicted_errors(MeshBudget{h[0], h[1], h[2], h[3], false}, k, rho, 2, norms);
    CHECK((e1.array() <= e0.array() + 1e-15).all());
  }
}

TEST_CASE("tiny sweep is deterministic, round-trips through CSV and feeds the report") {
  const SweepConfig cfg = tiny_sweep();
  const SweepResult a = run_regime_sweep(cfg);
  const SweepResult b = run_regime_sweep(cfg);
  REQUIRE(a.rows.size() == 4);
  for (const auto& r : a.rows) {
    CHECK(r.ok);
    CHECK(r.qo_global >= 1 - 1e-9);
    CHECK(r.dofs > 0);
    CHECK(r.reference_dofs > r.dofs);
  }
  const fs::path dir = scratch_dir("sweep");
  write_sweep_csv(dir / "a.csv", a.rows);
  write_sweep_csv(dir / "b.csv", b.rows);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

  const auto back = read_sweep_csv(dir / "a.csv");
  REQUIRE(back.size() == a.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].regime == a.rows[i].regime);
    CHECK(back[i].n == a.rows[i].n);
    CHECK(back[i].dofs == a.rows[i].dofs);
    CHECK(back[i].qo_global == Approx(a.rows[i].qo_global).epsilon(1e-12));
    CHECK(back[i].rel_local[0] == Approx(a.rows[i].rel_local[0]).epsilon(1e-12));
  }

  const auto checks = regime_checks(a);
  std::vector<std::string> ids;
  for (const auto& c : checks) ids.push_back(c.id);
  CHECK(ids == std::vector<std::string>{"u1_qo_global_in", "u1_rel_K_slope_in", "re_rel_global_slope_in"});
  const auto files = emit_report(a, checks, dir / "report");
  for (const auto& f : files) CHECK(fs::exists(f));
  CHECK(fs::exists(dir / "report" / "summary.json"));
  const json summary = read_json_file(dir / "report" / "summary.json");
  CHECK(summary.contains("checks"));
  CHECK(summary["checks"].size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("sweep config JSON round trip and validation") {
  SweepConfig c = tiny_sweep();
  c.c[Regime::U1] = 2000;
  const json j = sweep_config_to_json(c);
  const SweepConfig back = sweep_config_from_json(j);
  CHECK(back.constant(Regime::U1) == 2000);
  CHECK(back.constant(Regime::RE) == 400);
  CHECK(back.n_values == c.n_values);
  CHECK(sweep_config_to_json(back) == j);

  json bad = j;
  bad["unexpected"] = 1;
  CHECK_THROWS_AS(sweep_config_from_json(bad), ConfigError);
  SweepConfig empty = c;
  empty.regimes.clear();
  CHECK_THROWS_AS(empty.validate(), ConfigError);
}

TEST_CASE("adaptive loop") {
  AdaptiveConfig cfg;
  cfg.scene = build_two_wall_scene(false);
  cfg.k = cavity_wavenumber(2);
  cfg.f = gaussian_beam(beam_in(cfg.k));
  cfg.rho = cheap_rho();
  cfg.initial = mesh_budgets(RegimeSpec{Regime::RE, 2, 100.0, 2, 9.0}, cfg.k, cfg.k * cfg.k);

  SUBCASE("an unreachable-free tolerance stops after one solve") {
    cfg.tol = std::numeric_limits<double>::infinity();
    const AdaptiveResult r = adaptive_refine(cfg);
    CHECK(r.converged);
    CHECK(r.stop_reason == "converged");
    CHECK(r.steps.size() == 1);
    CHECK(r.rho == Approx(cfg.k * cfg.k));
    CHECK_FALSE(r.regions.K_hat.empty());
  }
  SUBCASE("refinement for the cavity target lowers the predicted error") {
    cfg.tol = 1e-3;
    cfg.max_iters = 2;
    cfg.max_descent_steps = 8;
    const AdaptiveResult r = adaptive_refine(cfg);
    REQUIRE(r.steps.size() == 2);
    const MeshBudget& b = r.steps.back().budget;
    CHECK(b.hK < r.steps.front().budget.hK);
    CHECK(b.hK <= b.hI);
    CHECK(r.steps.back().dofs > r.steps.front().dofs);
    const json j = adaptive_result_to_json(r);
    CHECK(j["steps"].size() == 2);
  }
  SUBCASE("the DoF cap stops the descent before the mesh outgrows it") {
    cfg.tol = 1e-6;
    cfg.max_iters = 4;
    cfg.max_dofs = 20000;
    const AdaptiveResult r = adaptive_refine(cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.stop_reason == "dof_limit");
    // The projection is approximate; allow the mesher some slack.
    for (const auto& s : r.steps) CHECK(s.dofs < 2 * cfg.max_dofs);
  }
  SUBCASE("bad settings are rejected") {
    cfg.tol = 0;
    CHECK_THROWS_AS(adaptive_refine(cfg), ConfigError);
  }
}

TEST_CASE("adaptive config parsing") {
  const json j = json::parse(R"({"scene": "two_wall", "n": 3, "target": "I", "tol": "inf",
                                 "initial": {"regime": "QO", "c": 50}, "rho": {"source": "conjectured"}})");
  const AdaptiveConfig c = adaptive_config_from_json(j);
  CHECK(c.k == Approx(cavity_wavenumber(3)));
  CHECK(c.target == Region::I);
  CHECK(std::isinf(c.tol));
  CHECK(c.rho.source == RhoSource::Conjectured);
  json bad = j;
  bad["bogus"] = true;
  CHECK_THROWS_AS(adaptive_config_from_json(bad), ConfigError);
}
