#include "helm/billiards.hpp"
#include "helm/experiments.hpp"
#include "helm/geometry.hpp"
#include "helm/graph_paths.hpp"
#include "helm/io.hpp"
#include "helm/linear_solve.hpp"
#include "helm/mesh.hpp"
#include "helm/norms.hpp"
#include "helm/planner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace helm;

namespace {

int worker_count() {
  const char* s = std::getenv("HELM_THREADS");
  if (!s || !*s) return 1;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) throw ConfigError("HELM_THREADS must be an integer in [1, 1024]");
  return static_cast<int>(v);
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

Scene load_scene(const std::string& s) {
  if (s == "two_wall" || s == "two_wall_shifted") return scene_from_config(json(s));
  if (!fs::exists(s)) throw ConfigError("scene file not found: " + s);
  return scene_from_config(json(s));
}

// Wavenumber given either directly or as a cavity index.
struct WaveOpts {
  std::optional<double> k;
  std::optional<int> n;

  void add(CLI::App* a) {
    auto* ok = a->add_option("--k", k, "Wavenumber");
    auto* on = a->add_option("--n", n, "Cavity index; k = n pi / L_gap");
    ok->excludes(on);
  }
  double value() const {
    if (k) {
      if (!(*k > 0)) throw ConfigError("--k must be positive");
      return *k;
    }
    if (n) {
      if (*n < 1) throw ConfigError("--n must be >= 1");
      return cavity_wavenumber(*n);
    }
    throw ConfigError("one of --k and --n is required");
  }
};

struct PlanOpts {
  std::string scene = "two_wall";
  WaveOpts wave;
  std::string regime = "QO";
  int p = 2;
  double c = 1.0;
  std::optional<double> c_pml;
  std::string rho = "conjectured";
  double rho_factor = 1.0;
  double rho_exponent = 2.0;
  double delta = 0;
  int directions = 0;
  double t_max = 500;
  double grading = 0.3;

  void add(CLI::App* a, bool with_regime = true) {
    a->add_option("--scene", scene, "two_wall, two_wall_shifted or a scene JSON file")->capture_default_str();
    wave.add(a);
    a->add_option("--p", p, "Polynomial degree")->capture_default_str();
    a->add_option("--grading", grading, "Size-field grading constant G")->capture_default_str();
    if (!with_regime) return;
    a->add_option("--regime", regime, "U1, QO, QOaway, U2, RE or REaway")->capture_default_str();
    a->add_option("--c", c, "Threshold constant")->capture_default_str();
    a->add_option("--c-pml", c_pml, "Threshold constant of the PML term (default: --c)");
    a->add_option("--rho", rho, "Solution-operator norm source: conjectured, measured or user")
        ->capture_default_str();
    a->add_option("--rho-factor", rho_factor, "rho = factor * k^2 (conjectured), factor * k^exponent (user) or "
                                              "factor * ray estimate (measured)")
        ->capture_default_str();
    a->add_option("--rho-exponent", rho_exponent, "Exponent for --rho user")->capture_default_str();
    a->add_option("--delta", delta, "Ray sample spacing for --rho measured (0: L_gap/100)")->capture_default_str();
    a->add_option("--directions", directions, "Ray directions for --rho measured (0: 2 pi / delta)")
        ->capture_default_str();
    a->add_option("--t-max", t_max, "Ray time limit for --rho measured")->capture_default_str();
  }

  RhoConfig rho_config() const {
    RhoConfig r;
    r.source = rho_source_from_name(rho);
    r.factor = rho_factor;
    r.exponent = rho_exponent;
    r.delta = delta;
    r.directions = directions;
    r.t_max = t_max;
    return r;
  }

  double rho_value(const Scene& sc, double k) const {
    SweepConfig cfg;
    cfg.rho = rho_config();
    if (cfg.rho.source == RhoSource::Measured) {
      const SurvivalProfile prof = survival_volume(measured_grid(sc, cfg.rho));
      return std::max(k, planning_rho(cfg, k, &prof));
    }
    return std::max(k, planning_rho(cfg, k));
  }

  RegimeSpec spec() const {
    RegimeSpec s{regime_from_name(regime), p, c, 2, c_pml};
    s.validate();
    return s;
  }
};

SourceFunction make_source(const std::string& kind, const Scene& sc, double k) {
  if (kind == "in") return gaussian_beam(beam_in(k));
  if (kind == "out") return gaussian_beam(beam_out(sc, k));
  if (kind == "none") return {};
  throw ConfigError("unknown source '" + kind + "' (expected in, out or none)");
}

// ---------------------------------------------------------------------------

void cmd_trace(const PlanOpts& o, const std::string& out, bool survival_csv, bool regions_wanted) {
  const Scene sc = load_scene(o.scene);
  RhoConfig rc = o.rho_config();
  if (!(rc.t_max > 0)) throw ConfigError("--t-max must be positive");
  PhaseSampleGrid grid = sample_phase_space(sc, rc.spacing(), rc.direction_count());
  fill_survival(sc, grid, rc.t_max, worker_count());
  const TrappedRegions regions = regions_wanted ? classify_regions(sc, grid) : TrappedRegions{};
  const SurvivalProfile prof = survival_volume(grid);

  json result{{"format_version", kFormatVersion},
              {"delta", grid.delta},
              {"directions", grid.M},
              {"t_max", rc.t_max},
              {"points", grid.points.size()},
              {"K_hat_points", regions.K_hat.size()},
              {"V_hat_points", regions.V_hat.size()},
              {"trapped_volume", prof.trapped}};
  std::vector<double> ks;
  if (o.wave.k || o.wave.n) {
    ks.push_back(o.wave.value());
  } else {
    for (int n = 6; n <= 14; ++n) ks.push_back(cavity_wavenumber(n));
  }
  json est = json::array();
  std::vector<double> rhos;
  for (double k : ks) {
    const RhoEstimate e = estimate_rho(prof, k);
    rhos.push_back(e.rho);
    est.push_back({{"k", k}, {"rho", e.rho}, {"t_star", e.t_star}, {"clamped", e.clamped}, {"warning", e.warning}});
  }
  result["rho"] = est;
  if (ks.size() >= 3) {
    const RateFit f = fit_rate(ks, rhos);
    result["alpha"] = f.slope;
    result["alpha_r2"] = f.r2;
  }
  if (!out.empty()) {
    fs::create_directories(out);
    if (regions_wanted) write_json_file(fs::path(out) / "regions.json", regions_to_json(regions));
    CsvWriter w(fs::path(out) / "rho.csv", {"k", "rho", "t_star", "clamped"});
    for (const auto& e : est)
      w.row({e["k"].get<double>(), e["rho"].get<double>(), e["t_star"].get<double>(),
             e["clamped"].get<bool>() ? 1.0 : 0.0});
    if (survival_csv) write_survival_csv(fs::path(out) / "survival.csv", grid);
    write_json_file(fs::path(out) / "trace.json", result);
  }
  print_json(result);
}

void cmd_plan(const PlanOpts& o, const std::string& out, const std::string& field_csv, double spacing) {
  const Scene sc = load_scene(o.scene);
  const double k = o.wave.value();
  const RegimeSpec spec = o.spec();
  const double rho = o.rho_value(sc, k);
  const MeshBudget b = mesh_budgets(spec, k, rho);
  const ConditionReport cond = check_conditions(b, k, rho, spec.p, spec.c);
  const PredictedBound pb = predicted_bound(spec, k, rho);
  json j{{"format_version", kFormatVersion},
         {"regime", regime_name(spec.regime)},
         {"k", k},
         {"rho", rho},
         {"p", spec.p},
         {"c", spec.c},
         {"c_pml", spec.pml_constant()},
         {"budget", budget_to_json(b)},
         {"hk", {{"K", b.hK * k}, {"V", b.hV * k}, {"I", b.hI * k}, {"P", b.hP * k}}},
         {"threshold_sum", regime_threshold_sum(spec, b, k, rho)},
         {"matrices", matrices_to_json(build_matrices<double>(b, k, rho, spec.p, spec.c))},
         {"conditions",
          {{"simple_sum", cond.simple_sum},
           {"simple_condition", cond.simple_condition},
           {"c_loops", cond.c_loops},
           {"loop_condition", cond.loop_condition}}},
         {"corollary", corollary_name(pb.corollary)},
         {"dof_estimate", dof_estimate(sc, b, spec.p, 2, o.grading)}};
  if (!field_csv.empty()) {
    if (!(spacing > 0)) throw ConfigError("--spacing must be positive");
    write_size_field_csv(field_csv, sc, size_field(sc, b, o.grading), spacing);
  }
  if (!out.empty()) write_json_file(out, j);
  print_json(j);
}

Mesh build_mesh(const PlanOpts& o, const Scene& sc, double k, std::optional<double> uniform_hk, MeshBudget* used) {
  if (uniform_hk) {
    if (!(*uniform_hk > 0)) throw ConfigError("--uniform-hk must be positive");
    const double h = *uniform_hk / k;
    if (used) *used = MeshBudget{h, h, h, h, false};
    return generate_mesh(sc, [h](const Vec2&) { return h; });
  }
  const MeshBudget b = mesh_budgets(o.spec(), k, o.rho_value(sc, k));
  if (used) *used = b;
  return plan_mesh(sc, b, o.grading);
}

json stats_json(const MeshStats& s) {
  return {{"nodes", s.nodes},
          {"triangles", s.triangles},
          {"min_angle_deg", s.min_angle_deg},
          {"max_size_ratio", s.max_size_ratio},
          {"area", s.area},
          {"conforming", s.conforming},
          {"positive_orientation", s.positive_orientation}};
}

void cmd_mesh(const PlanOpts& o, std::optional<double> uniform_hk, const std::string& out) {
  const Scene sc = load_scene(o.scene);
  const double k = o.wave.value();
  MeshBudget b;
  const Mesh m = build_mesh(o, sc, k, uniform_hk, &b);
  if (!out.empty()) write_mesh(out, m);
  FESpace V(std::make_shared<const Mesh>(m), o.p);
  print_json({{"format_version", kFormatVersion},
              {"k", k},
              {"budget", budget_to_json(b)},
              {"stats", stats_json(mesh_stats(m))},
              {"dofs", V.num_dofs()}});
}

void cmd_solve(const PlanOpts& o, std::optional<double> uniform_hk, const std::string& mesh_file,
               const std::string& source, double angle, bool no_pml, const std::string& formulation,
               const std::string& out) {
  const Scene sc = load_scene(o.scene);
  const double k = o.wave.value();
  std::shared_ptr<const Mesh> mesh;
  if (!mesh_file.empty()) {
    if (!fs::exists(mesh_file)) throw ConfigError("mesh file not found: " + mesh_file);
    mesh = std::make_shared<const Mesh>(read_mesh(mesh_file));
  } else {
    mesh = std::make_shared<const Mesh>(build_mesh(o, sc, k, uniform_hk, nullptr));
  }
  PmlProfile pml;
  pml.r_minus = sc.r_pml_minus;
  pml.r_tr = sc.r_tr;
  pml.enabled = !no_pml;
  pml.formulation = pml_formulation_from_name(formulation);
  pml.validate();

  SourceFunction f;
  DirichletFunction g;
  if (source == "scatter") {
    // Sound-soft scattering of exp(i k x.d): the scattered field equals -u_inc on the obstacles.
    const Vec2 d(std::cos(angle), std::sin(angle));
    g = [k, d](const Vec2& x, BoundaryTag tag) -> cplx {
      return tag == BoundaryTag::Obstacle ? -std::polar(1.0, k * d.dot(x)) : cplx(0);
    };
  } else {
    f = make_source(source, sc, k);
  }
  auto space = std::make_shared<const FESpace>(mesh, o.p);
  SolveReport rep;
  const FieldFunction uh = galerkin_solve(space, pml, k, f, g, &rep);

  json norms = json::object();
  for (Region r : kAllRegions)
    norms[region_name(r)] = local_norm(uh, [&sc, r](const Vec2& x) { return sc.cover.in(r, x); }, 1, k);
  norms["global"] = local_norm(uh, whole_domain(), 1, k);
  json j{{"format_version", kFormatVersion},
         {"k", k},
         {"p", o.p},
         {"dofs", space->num_dofs()},
         {"triangles", mesh->num_triangles()},
         {"backend", rep.backend},
         {"relative_residual", rep.relative_residual},
         {"h1k_norms", norms}};
  if (!out.empty()) {
    fs::create_directories(out);
    write_field_csv(fs::path(out) / "field.csv", uh);
    write_json_file(fs::path(out) / "solve.json", j);
  }
  print_json(j);
}

void cmd_graph_certify(const std::string& matrix, int terms, double tol) {
  if (!fs::exists(matrix)) throw ConfigError("matrix file not found: " + matrix);
  Eigen::MatrixXd W = read_matrix_csv(matrix);
  WeightedDigraph<double> g;
  try {
    g = WeightedDigraph<double>(W);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("bad weight matrix: ") + e.what());
  }
  CertOptions opt;
  opt.n_terms = terms;
  opt.tol_abs = tol;
  const auto r = certify_bound(g, opt);
  auto mat = [](const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      a.push_back(row);
    }
    return a;
  };
  const char* status = r.status == CertStatus::Certified       ? "certified"
                       : r.status == CertStatus::BoundViolated ? "bound_violated"
                                                               : "condition_failed";
  print_json({{"format_version", kFormatVersion},
              {"n", r.n},
              {"c", r.c},
              {"pass", r.pass()},
              {"status", status},
              {"terms_used", r.terms_used},
              {"max_violation", r.max_violation},
              {"T_star", mat(r.T_star)},
              {"S", mat(r.S)}});
}

void cmd_experiment_run(const std::string& config, const std::string& out) {
  const SweepConfig cfg = sweep_config_from_json(read_json_file(config));
  const SweepResult res = run_regime_sweep(cfg, [](const SweepRow& r) {
    std::cerr << regime_name(r.regime) << " f_" << source_name(r.source) << " n=" << r.n << " k=" << r.k
              << " dofs=" << r.dofs << " qo=" << r.qo_global << " rel=" << r.rel_global
              << (r.ok ? "" : " FAILED: " + r.error) << '\n';
  });
  const auto checks = regime_checks(res);
  const auto files = emit_report(res, checks, out);
  json j{{"format_version", kFormatVersion}, {"files", json::array()}, {"checks", json::array()}};
  for (const auto& f : files) j["files"].push_back(f.string());
  for (const auto& c : checks) j["checks"].push_back({{"id", c.id}, {"pass", c.pass}, {"value", c.value}});
  print_json(j);
  for (const auto& r : res.rows)
    if (!r.ok) throw DomainError("one or more sweep cells failed; see summary.json");
}

void cmd_experiment_adaptive(const std::string& config, const std::string& out) {
  const AdaptiveConfig cfg = adaptive_config_from_json(read_json_file(config));
  const AdaptiveResult res = adaptive_refine(cfg);
  const json j = adaptive_result_to_json(res);
  if (!out.empty()) {
    fs::create_directories(out);
    write_json_file(fs::path(out) / "adaptive.json", j);
    if (res.solution.space) write_field_csv(fs::path(out) / "field.csv", res.solution);
  }
  print_json(j);
}

void cmd_report(const std::string& csv, const std::string& config, const std::string& out) {
  if (!fs::exists(csv)) throw ConfigError("sweep CSV not found: " + csv);
  SweepResult res;
  res.rows = read_sweep_csv(csv);
  if (res.rows.empty()) throw ConfigError("sweep CSV has no rows: " + csv);
  if (!config.empty()) {
    res.config = sweep_config_from_json(read_json_file(config));
  } else {
    res.config.scene = build_two_wall_scene(false);
    for (const auto& r : res.rows) {
      if (std::find(res.config.regimes.begin(), res.config.regimes.end(), r.regime) == res.config.regimes.end())
        res.config.regimes.push_back(r.regime);
      if (std::find(res.config.n_values.begin(), res.config.n_values.end(), r.n) == res.config.n_values.end())
        res.config.n_values.push_back(r.n);
    }
  }
  const auto checks = regime_checks(res);
  const auto files = emit_report(res, checks, out);
  json j{{"format_version", kFormatVersion}, {"files", json::array()}};
  for (const auto& f : files) j["files"].push_back(f.string());
  print_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Helmholtz regime planner, ray tracer and FEM driver"};
  app.name("helm");
  app.require_subcommand(1);
  std::function<void()> action;

  // trace
  PlanOpts trace_o;
  std::string trace_out;
  bool trace_survival = false, trace_no_regions = false;
  auto* trace = app.add_subcommand("trace", "Ray classification of the trapped set and ray-based rho estimates");
  trace_o.add(trace, false);
  trace->add_option("--delta", trace_o.delta, "Sample spacing (0: L_gap/100)")->capture_default_str();
  trace->add_option("--directions", trace_o.directions, "Number of directions (0: 2 pi / delta)")
      ->capture_default_str();
  trace->add_option("--t-max", trace_o.t_max, "Ray time limit")->capture_default_str();
  trace->add_option("--out", trace_out, "Output directory (regions.json, rho.csv, trace.json)");
  trace->add_flag("--survival-csv", trace_survival, "Also write survival.csv with every t_ij");
  trace->add_flag("--no-regions", trace_no_regions,
                  "Skip the K_hat/V_hat classification (re-traces every escaping ray from K_hat; slow at fine delta)");
  trace->callback([&] { action = [&] { cmd_trace(trace_o, trace_out, trace_survival, !trace_no_regions); }; });

  // plan
  PlanOpts plan_o;
  std::string plan_out, plan_field;
  double plan_spacing = 0.05;
  auto* plan = app.add_subcommand("plan", "Mesh budgets, error-propagation matrices and condition checks");
  plan_o.add(plan);
  plan->add_option("--out", plan_out, "Write the JSON to this file as well");
  plan->add_option("--size-field-csv", plan_field, "Write the size field sampled on a grid (x, y, h)");
  plan->add_option("--spacing", plan_spacing, "Grid spacing for --size-field-csv")->capture_default_str();
  plan->callback([&] { action = [&] { cmd_plan(plan_o, plan_out, plan_field, plan_spacing); }; });

  // graph certify
  std::string graph_matrix;
  int graph_terms = 200;
  double graph_tol = 1e-9;
  auto* graph = app.add_subcommand("graph", "Weighted-digraph tools");
  graph->require_subcommand(1);
  auto* certify = graph->add_subcommand("certify", "Certify T* <= sum_{m<=N} W^m <= T*/(1-c) for a weight matrix");
  certify->add_option("--matrix", graph_matrix, "CSV weight matrix (no header)")->required();
  certify->add_option("--terms", graph_terms, "Number of Neumann-series terms N")->capture_default_str();
  certify->add_option("--tol", graph_tol, "Absolute tolerance")->capture_default_str();
  certify->callback([&] { action = [&] { cmd_graph_certify(graph_matrix, graph_terms, graph_tol); }; });

  // mesh
  PlanOpts mesh_o;
  std::optional<double> mesh_uniform;
  std::string mesh_out;
  auto* mesh = app.add_subcommand("mesh", "Generate a mesh from a regime budget or a uniform meshwidth");
  mesh_o.add(mesh);
  mesh->add_option("--uniform-hk", mesh_uniform, "Uniform mesh with h = value / k instead of a regime budget");
  mesh->add_option("--out", mesh_out, "Mesh file to write");
  mesh->callback([&] { action = [&] { cmd_mesh(mesh_o, mesh_uniform, mesh_out); }; });

  // solve
  PlanOpts solve_o;
  std::optional<double> solve_uniform;
  std::string solve_mesh, solve_source = "in", solve_form = "divergence", solve_out;
  double solve_angle = 0;
  bool solve_no_pml = false;
  auto* solve = app.add_subcommand("solve", "One Helmholtz solve with PML");
  solve_o.add(solve);
  solve->add_option("--uniform-hk", solve_uniform, "Uniform mesh with h = value / k instead of a regime budget");
  solve->add_option("--mesh", solve_mesh, "Read the mesh from this file instead of generating one");
  solve->add_option("--source", solve_source, "in, out (Gaussian beams), scatter (plane wave) or none")
      ->capture_default_str();
  solve->add_option("--angle", solve_angle, "Plane-wave direction angle for --source scatter")->capture_default_str();
  solve->add_flag("--no-pml", solve_no_pml, "Disable the PML");
  solve->add_option("--formulation", solve_form, "PML formulation: divergence or unmultiplied")
      ->capture_default_str();
  solve->add_option("--out", solve_out, "Output directory (field.csv, solve.json)");
  solve->callback([&] {
    action = [&] {
      cmd_solve(solve_o, solve_uniform, solve_mesh, solve_source, solve_angle, solve_no_pml, solve_form, solve_out);
    };
  });

  // experiment
  std::string exp_config, exp_out = "out";
  auto* experiment = app.add_subcommand("experiment", "Regime sweeps and the adaptive loop");
  experiment->require_subcommand(1);
  auto* run = experiment->add_subcommand("run", "Run a regime sweep and write the report");
  run->add_option("--config", exp_config, "Sweep config JSON")->required();
  run->add_option("--out", exp_out, "Report directory")->capture_default_str();
  run->callback([&] { action = [&] { cmd_experiment_run(exp_config, exp_out); }; });
  auto* adaptive = experiment->add_subcommand("adaptive", "Run the ray-informed adaptive refinement loop");
  adaptive->add_option("--config", exp_config, "Adaptive config JSON")->required();
  adaptive->add_option("--out", exp_out, "Output directory")->capture_default_str();
  adaptive->callback([&] { action = [&] { cmd_experiment_adaptive(exp_config, exp_out); }; });

  // report
  std::string rep_csv, rep_config, rep_out = "report";
  auto* report = app.add_subcommand("report", "Rebuild tables, plots and summary.json from a sweep CSV");
  report->add_option("--csv", rep_csv, "sweep.csv written by experiment run")->required();
  report->add_option("--config", rep_config, "Sweep config JSON to record in summary.json");
  report->add_option("--out", rep_out, "Report directory")->capture_default_str();
  report->callback([&] { action = [&] { cmd_report(rep_csv, rep_config, rep_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
