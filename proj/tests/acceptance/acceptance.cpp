// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. `--only 3,4` restricts the run; `--out DIR` receives the
// regime-sweep report.

#include "helm/experiments.hpp"
#include "helm/graph_paths.hpp"
#include "helm/io.hpp"
#include "helm/pml.hpp"
#include "oracles/graph_oracle.hpp"
#include "oracles/mie_oracle.hpp"
#include "oracles/plane_wave.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

using namespace helm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome graph_certification() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_real_distribution<double> U(0, 1);
  int passed = 0;
  double worst = 0, cmin = 1, cmax = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    const double target = 0.1 + 0.8 * U(rng);
    Eigen::MatrixXd W(n, n);
    do {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) W(i, j) = U(rng) < 0.3 ? 0.0 : U(rng);
    } while (oracle::simple_loop_weight(W) == 0.0);
    // c(sW) is a polynomial in s with nonnegative coefficients: bisect.
    double lo = 0, hi = 1;
    while (oracle::simple_loop_weight(hi * W) < target) hi *= 2;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (oracle::simple_loop_weight(mid * W) < target ? lo : hi) = mid;
    }
    const auto r = certify_bound(WeightedDigraph<double>(lo * W));
    cmin = std::min(cmin, r.c);
    cmax = std::max(cmax, r.c);
    worst = std::max(worst, r.max_violation);
    if (r.pass()) ++passed;
  }
  return {passed == 200, std::to_string(passed) + "/200 certified, c in [" + fmt("%.3f", cmin) + ", " +
                             fmt("%.3f", cmax) + "], worst violation " + fmt("%.2e", worst)};
}

Outcome loop_decomposition() {
  std::set<LoopDecomposition> seen;
  long paths = 0, failures = 0;
  for (int L = 0; L <= 8; ++L) {
    for (const auto& nodes : oracle::all_walks(4, 0, 3, L)) {
      ++paths;
      const Path p = Path::from_nodes(nodes);
      const LoopDecomposition d = loop_decompose(p);
      std::multiset<Edge> before(p.edges.begin(), p.edges.end()), after(d.spine.edges.begin(), d.spine.edges.end());
      int len = d.spine.size();
      bool ok = is_non_intersecting(d.spine);
      for (const auto& l : d.loops) {
        ok = ok && is_simple_loop(l);
        after.insert(l.edges.begin(), l.edges.end());
        len += l.size();
      }
      ok = ok && before == after && len == p.size() && seen.insert(d).second;
      if (!ok) ++failures;
    }
  }
  return {failures == 0 && paths > 0,
          std::to_string(paths) + " paths, " + std::to_string(seen.size()) + " distinct decompositions, " +
              std::to_string(failures) + " failures"};
}

// ---------------------------------------------------------------------------

Outcome fem_convergence() {
  Scene s;
  s.r_tr = 0.6;
  s.r_pml_minus = 0.55;
  s.obstacles.push_back(ClosedCurve::disk(Vec2::Zero(), 0.3));
  s.cover = make_trivial_cover(s.r_pml_minus);
  const double k = 20;
  const oracle::PlaneWave w{k, 0.3};
  const ExactFunction exact = [&](const Vec2& x) {
    PointValue v;
    v.u = w.value(x(0), x(1));
    v.grad = Eigen::Vector2cd(w.dx(x(0), x(1)), w.dy(x(0), x(1)));
    return v;
  };
  PmlProfile off;
  off.enabled = false;
  std::ostringstream os;
  bool pass = true;
  for (int p : {1, 2}) {
    const double h0 = p == 1 ? 0.02 : 0.04;
    Mesh m = generate_mesh(s, [h0](const Vec2&) { return h0; });
    std::vector<double> hs, e1, e0;
    for (int level = 0; level <= 3; ++level) {
      if (level > 0) m = refine_uniform(m);
      auto mesh = std::make_shared<const Mesh>(m);
      auto V = std::make_shared<const FESpace>(mesh, p);
      const FieldFunction uh = galerkin_solve(V, off, k, {}, [&](const Vec2& x, BoundaryTag) { return exact(x).u; });
      const NormPair e = error_norms(uh, exact, whole_domain(), k);
      hs.push_back(h0 / (1 << level));
      e1.push_back(e.h1k);
      e0.push_back(e.l2);
    }
    const double r1 = fit_rate(hs, e1).slope, r0 = fit_rate(hs, e0).slope;
    const bool ok = std::abs(r1 - p) <= 0.2 && std::abs(r0 - (p + 1)) <= 0.3;
    pass = pass && ok;
    os << "p=" << p << ": H1k rate " << fmt("%.3f", r1) << ", L2 rate " << fmt("%.3f", r0) << "; ";
  }
  return {pass, os.str()};
}

Outcome pml_accuracy() {
  const double k = 10;
  Scene s;
  s.r_pml_minus = 2;
  s.r_tr = 3;
  s.obstacles.push_back(ClosedCurve::disk(Vec2::Zero(), 1));
  s.cover = make_trivial_cover(s.r_pml_minus);
  PmlProfile pml;
  pml.r_minus = 2;
  pml.r_tr = 3;
  const oracle::SoundSoftDisk mie(k, 1.0, static_cast<int>(std::ceil(4 * k)));
  const ExactFunction scattered = [&](const Vec2& x) {
    const auto v = mie(x(0), x(1));
    PointValue p;
    p.u = v.u;
    p.grad = Eigen::Vector2cd(v.du_dx, v.du_dy);
    return p;
  };
  auto mesh = std::make_shared<const Mesh>(generate_mesh(s, [](const Vec2&) { return 0.05; }));
  auto V = std::make_shared<const FESpace>(mesh, 2);
  const FieldFunction uh = galerkin_solve(V, pml, k, {}, [&](const Vec2& x, BoundaryTag tag) {
    return tag == BoundaryTag::Obstacle ? -std::polar(1.0, k * x(0)) : cplx(0);
  });
  const RegionPredicate ring = [](const Vec2& x) { return x.norm() > 1.2 && x.norm() < 1.8; };
  const NormPair err = error_norms(uh, scattered, ring, k);
  const NormPair ref = error_norms(FieldFunction{V, Eigen::VectorXcd()}, scattered, ring, k);
  const double rel = err.l2 / ref.l2;
  return {rel < 0.05, "relative L2 error in 1.2 < r < 1.8: " + fmt("%.4f", rel) + " (" +
                          std::to_string(V->num_dofs()) + " DoFs)"};
}

// ---------------------------------------------------------------------------

Outcome dof_savings() {
  const Scene sc = build_two_wall_scene(false);
  const double k = cavity_wavenumber(20), rho = k * k;
  std::map<Regime, long> dofs;
  for (Regime r : {Regime::U1, Regime::QO, Regime::U2, Regime::RE}) {
    const MeshBudget b = mesh_budgets(RegimeSpec{r, 2, 10000.0, 2, 9.0}, k, rho);
    auto mesh = std::make_shared<const Mesh>(plan_mesh(sc, b, 0.3));
    dofs[r] = FESpace(mesh, 2).num_dofs();
  }
  const double a = double(dofs[Regime::U1]) / dofs[Regime::QO];
  const double b = double(dofs[Regime::U2]) / dofs[Regime::RE];
  std::ostringstream os;
  os << "k=" << fmt("%.2f", k) << " DoFs U1 " << dofs[Regime::U1] << ", QO " << dofs[Regime::QO] << ", U2 "
     << dofs[Regime::U2] << ", RE " << dofs[Regime::RE] << "; U1/QO " << fmt("%.3f", a) << ", U2/RE "
     << fmt("%.3f", b);
  return {a >= 1.8 && b >= 1.5, os.str()};
}

Outcome regime_sweep(const std::string& out_dir) {
  SweepConfig cfg;
  cfg.scene = build_two_wall_scene(false);
  cfg.regimes = {Regime::U1, Regime::RE};
  for (int n = 6; n <= 14; ++n) cfg.n_values.push_back(n);
  cfg.p = 2;
  cfg.c[Regime::U1] = 2000;
  cfg.c[Regime::RE] = 2500;
  cfg.c_pml = 9;
  const SweepResult res = run_regime_sweep(cfg, [](const SweepRow& r) {
    std::printf("  [sweep] %s n=%d dofs=%ld QO=%.3f relK=%.4f relG=%.4f%s%s\n", regime_name(r.regime), r.n, r.dofs,
                r.qo_global, r.rel_local[0], r.rel_global, r.ok ? "" : " error: ", r.error.c_str());
    std::fflush(stdout);
  });
  const auto checks = regime_checks(res);
  if (!out_dir.empty()) emit_report(res, checks, out_dir);
  bool pass = !checks.empty();
  std::ostringstream os;
  for (const auto& c : checks) {
    pass = pass && c.pass;
    os << c.id << "=" << fmt("%.3f", c.value) << (c.pass ? " ok; " : " FAILED; ");
  }
  return {pass, os.str()};
}

Outcome rho_heuristic() {
  const Scene sc = build_two_wall_scene(false);
  RhoConfig rc{RhoSource::Measured};
  const PhaseSampleGrid grid = measured_grid(sc, rc);
  const SurvivalProfile prof = survival_volume(grid);
  std::vector<double> ks, rhos;
  for (int n = 6; n <= 14; ++n) {
    const double k = cavity_wavenumber(n);
    ks.push_back(k);
    rhos.push_back(estimate_rho(prof, k).rho);
  }
  const RateFit f = fit_rate(ks, rhos);
  return {f.slope >= 1.5 && f.slope <= 2.5, "alpha " + fmt("%.3f", f.slope) + " (r2 " + fmt("%.3f", f.r2) + ", " +
                                                std::to_string(grid.points.size()) + " points x " +
                                                std::to_string(grid.M) + " directions)"};
}

Outcome trapped_inclusion() {
  const Scene two = build_two_wall_scene(false);
  auto k_hat = [](const Scene& sc) {
    // Corner reflections can leave a ray with a tiny vertical speed, so
    // points just outside the hulls may survive several hundred time units.
    PhaseSampleGrid g = sample_phase_space(sc, TwoWallDims::gap() / 40, 64);
    fill_survival(sc, g, 1000);
    return classify_regions(sc, g).K_hat;
  };
  const auto K = k_hat(two);
  std::vector<Polygon> hulls;
  for (std::size_t i = 0; i < two.obstacles.size(); ++i)
    for (std::size_t j = i + 1; j < two.obstacles.size(); ++j) {
      std::vector<Vec2> pts = polygonize(two.obstacles[i], 4096).v;
      const auto pj = polygonize(two.obstacles[j], 4096).v;
      pts.insert(pts.end(), pj.begin(), pj.end());
      hulls.push_back(convex_hull(pts));
    }
  std::size_t inside = 0;
  for (const auto& x : K) {
    const bool in_omega_plus = x.norm() < two.r_pml_minus && !two.inside_obstacle(x);
    bool in_hull = false;
    for (const auto& h : hulls) in_hull = in_hull || h.contains(x);
    if (in_omega_plus && in_hull) ++inside;
  }
  Scene single;
  single.obstacles.push_back(ClosedCurve::disk(Vec2(0.3, -0.2), 0.7));
  single.cover = make_trivial_cover(single.r_pml_minus);
  const auto K1 = k_hat(single);
  std::ostringstream os;
  os << inside << "/" << K.size() << " K_hat points inside the pairwise hulls; single obstacle K_hat size "
     << K1.size();
  return {!K.empty() && inside == K.size() && K1.empty(), os.str()};
}

Outcome pml_garding() {
  PmlProfile pr;
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> R(1e-3, pr.r_tr - 1e-9), T(0, 2 * kPi), U(-1, 1);
  std::vector<GardingSample> samples;
  samples.reserve(10000);
  for (int i = 0; i < 10000; ++i) {
    // Half of the samples land inside the layer.
    const double r = i % 2 ? R(rng) : pr.r_minus + (pr.r_tr - pr.r_minus) * (0.5 + 0.5 * U(rng)) * (1 - 1e-9);
    const double t = T(rng);
    samples.push_back({Vec2(r * std::cos(t), r * std::sin(t)),
                       Eigen::Vector2cd(cplx(U(rng), U(rng)), cplx(U(rng), U(rng)))});
  }
  const GardingResult g = garding_check(pr, samples);
  double jump = 0;
  for (int i = 0; i < 360; ++i) {
    const Vec2 d(std::cos(i * kPi / 180), std::sin(i * kPi / 180));
    const auto a = coefficients<double>(pr, Vec2(pr.r_minus * (1 - 1e-9) * d));
    const auto b = coefficients<double>(pr, Vec2(pr.r_minus * (1 + 1e-9) * d));
    jump = std::max({jump, (a.A - b.A).cwiseAbs().maxCoeff(), std::abs(a.n - b.n)});
  }
  return {g.min_ratio > 0 && jump < 1e-6,
          "min Re(A xi . conj xi)/|xi|^2 = " + fmt("%.4f", g.min_ratio) + ", jump at r_minus " + fmt("%.2e", jump)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string out_dir;
  std::vector<int> only;
  app.add_option("--out", out_dir, "Directory for the regime-sweep report");
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"graph bound certification", graph_certification},
      {"loop decomposition oracle", loop_decomposition},
      {"FEM convergence", fem_convergence},
      {"PML accuracy against the series solution", pml_accuracy},
      {"DoF savings", dof_savings},
      {"regime behaviour", [&] { return regime_sweep(out_dir); }},
      {"rho heuristic", rho_heuristic},
      {"trapped-set inclusion", trapped_inclusion},
      {"PML continuity and Garding positivity", pml_garding},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
