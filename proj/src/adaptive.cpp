#include "helm/experiments.hpp"

#include "helm/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace helm {

Eigen::Vector4d predicted_errors(const MeshBudget& b, double k, double rho, int p, const Eigen::Vector4d& norms) {
  const PropagationMatrices<double> m = build_matrices<double>(b, k, rho, p);
  Eigen::Vector4d proxy;
  for (int i = 0; i < 4; ++i) proxy[i] = std::pow(b.vec()[i] * k, p) * norms[i];
  return m.M * proxy;
}

namespace {

// Area of the mesh elements whose barycenter lies in each region.
Eigen::Vector4d region_areas(const Mesh& mesh) {
  Eigen::Vector4d a = Eigen::Vector4d::Zero();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    for (Region r : kAllRegions)
      if (mesh.regions[t].has(r)) a[static_cast<int>(r)] += std::abs(mesh.area(t));
  return a;
}

double budget_cost(const MeshBudget& b, const Eigen::Vector4d& areas) {
  const Eigen::Vector4d h = b.vec();
  return (areas.array() / h.array().square()).sum();
}

void set_h(MeshBudget& b, int i, double v) {
  switch (i) {
    case 0: b.hK = v; break;
    case 1: b.hV = v; break;
    case 2: b.hI = v; break;
    default: b.hP = v; break;
  }
}

double rho_for(const AdaptiveConfig& cfg, const PhaseSampleGrid* grid) {
  const double k = cfg.k;
  switch (cfg.rho.source) {
    case RhoSource::Conjectured: return cfg.rho.factor * k * k;
    case RhoSource::User: return cfg.rho.factor * std::pow(k, cfg.rho.exponent);
    case RhoSource::Measured: return cfg.rho.factor * estimate_rho(survival_volume(*grid), k).rho;
  }
  return k;
}

}  // namespace

AdaptiveResult adaptive_refine(const AdaptiveConfig& cfg) {
  if (!(cfg.tol > 0)) throw ConfigError("adaptive tol must be positive");
  if (cfg.max_iters < 1) throw ConfigError("adaptive max_iters must be >= 1");
  if (!(cfg.k > 0)) throw ConfigError("adaptive k must be positive");
  if (!(cfg.shrink > 1)) throw ConfigError("adaptive shrink must exceed 1");
  if (!(cfg.initial.vec().array() > 0).all()) throw ConfigError("adaptive initial budget must be positive");
  if (!cfg.f) throw ConfigError("adaptive loop needs a source");
  if (cfg.max_dofs < 1) throw ConfigError("adaptive max_dofs must be positive");
  cfg.scene.validate();

  AdaptiveResult res;
  {
    const PhaseSampleGrid grid = measured_grid(cfg.scene, cfg.rho);
    res.regions = classify_regions(cfg.scene, grid);
    res.rho = std::max(cfg.k, rho_for(cfg, &grid));
  }
  const double k = cfg.k;
  const int target = static_cast<int>(cfg.target);

  MeshBudget budget = cfg.initial;
  for (int it = 0; it < cfg.max_iters; ++it) {
    auto mesh = std::make_shared<const Mesh>(plan_mesh(cfg.scene, budget, cfg.grading, cfg.mesh));
    auto space = std::make_shared<const FESpace>(mesh, cfg.p);
    FieldFunction uh = galerkin_solve(space, cfg.pml, k, cfg.f);

    AdaptiveStep step;
    step.budget = budget;
    step.dofs = space->num_dofs();
    Eigen::Vector4d norms;
    for (Region r : kAllRegions) {
      const int i = static_cast<int>(r);
      norms[i] = local_norm(uh, [&c = cfg.scene.cover, r](const Vec2& x) { return c.in(r, x); }, 1, k);
      step.norms[static_cast<std::size_t>(i)] = norms[i];
      step.proxy[static_cast<std::size_t>(i)] = std::pow(budget.vec()[i] * k, cfg.p) * norms[i];
    }
    // Errors are measured relative to ||u_h||_{H^1_k(Omega)}.
    const double scale = std::max(norms.norm(), std::numeric_limits<double>::min());
    const Eigen::Vector4d pred = predicted_errors(budget, k, res.rho, cfg.p, norms) / scale;
    for (int i = 0; i < 4; ++i) step.predicted[static_cast<std::size_t>(i)] = pred[i];
    step.target_error = pred[target];
    res.steps.push_back(step);
    res.solution = std::move(uh);

    if (step.target_error < cfg.tol) {
      res.converged = true;
      res.stop_reason = "converged";
      break;
    }
    if (it + 1 == cfg.max_iters) {
      res.stop_reason = "max_iters";
      break;
    }

    // Greedy coordinate descent: shrink the meshwidth that buys the largest
    // drop in predicted target error per unit of added cost.
    const Eigen::Vector4d areas = region_areas(*mesh);
    const double dofs_per_cost = static_cast<double>(step.dofs) / budget_cost(budget, areas);
    MeshBudget cand = budget;
    double err = pred[target];
    bool capped = false;
    for (int s = 0; s < cfg.max_descent_steps && err >= cfg.tol; ++s) {
      const double cost0 = budget_cost(cand, areas);
      int best = -1;
      double best_gain = 0, best_err = err;
      for (int i = 0; i < 4; ++i) {
        MeshBudget trial = cand;
        set_h(trial, i, cand.vec()[i] / cfg.shrink);
        if (dofs_per_cost * budget_cost(trial, areas) > static_cast<double>(cfg.max_dofs)) {
          capped = true;
          continue;
        }
        const double e = predicted_errors(trial, k, res.rho, cfg.p, norms)[target] / scale;
        const double dc = std::max(budget_cost(trial, areas) - cost0, 1e-300);
        const double gain = (err - e) / dc;
        if (e < err && gain > best_gain) {
          best = i;
          best_gain = gain;
          best_err = e;
        }
      }
      if (best < 0) break;
      set_h(cand, best, cand.vec()[best] / cfg.shrink);
      err = best_err;
    }
    if (cand.vec() == budget.vec()) {
      res.stop_reason = capped ? "dof_limit" : "no_progress";
      break;
    }
    budget = cand;
  }
  return res;
}

AdaptiveConfig adaptive_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("adaptive config must be a JSON object");
  reject_unknown_keys(j,
                      {"format_version", "scene", "k", "n", "p", "target", "tol", "max_iters", "initial", "rho",
                       "source", "grading", "pml", "shrink", "max_descent_steps", "max_dofs"},
                      "adaptive config");
  AdaptiveConfig c;
  c.scene = j.contains("scene") ? scene_from_config(j["scene"]) : build_two_wall_scene(false);
  c.pml.r_minus = c.scene.r_pml_minus;
  c.pml.r_tr = c.scene.r_tr;
  if (j.contains("k") == j.contains("n")) throw ConfigError("adaptive config needs exactly one of k and n");
  c.k = j.contains("k") ? get_required<double>(j, "k", "adaptive config")
                        : cavity_wavenumber(get_required<int>(j, "n", "adaptive config"));
  c.p = get_or<int>(j, "p", c.p);
  if (c.p < 1 || c.p > LagrangeBasis::kMaxDegree) throw ConfigError("p out of range");
  c.target = region_from_name(get_or<std::string>(j, "target", "K"));
  c.tol = j.contains("tol") && j["tol"].is_string() && j["tol"].get<std::string>() == "inf"
              ? std::numeric_limits<double>::infinity()
              : get_or<double>(j, "tol", c.tol);
  c.max_iters = get_or<int>(j, "max_iters", c.max_iters);
  c.grading = get_or<double>(j, "grading", c.grading);
  c.shrink = get_or<double>(j, "shrink", c.shrink);
  c.max_descent_steps = get_or<int>(j, "max_descent_steps", c.max_descent_steps);
  c.max_dofs = get_or<long>(j, "max_dofs", c.max_dofs);
  if (j.contains("rho")) {
    const json& r = j["rho"];
    reject_unknown_keys(r, {"source", "factor", "exponent", "delta", "directions", "t_max"}, "rho");
    c.rho.source = rho_source_from_name(get_or<std::string>(r, "source", "measured"));
    c.rho.factor = get_or<double>(r, "factor", c.rho.factor);
    c.rho.exponent = get_or<double>(r, "exponent", c.rho.exponent);
    c.rho.delta = get_or<double>(r, "delta", c.rho.delta);
    c.rho.directions = get_or<int>(r, "directions", c.rho.directions);
    c.rho.t_max = get_or<double>(r, "t_max", c.rho.t_max);
  }
  if (j.contains("pml")) {
    const json& r = j["pml"];
    reject_unknown_keys(r, {"formulation", "amplitude"}, "pml");
    c.pml.formulation = pml_formulation_from_name(get_or<std::string>(r, "formulation", "divergence"));
    c.pml.amplitude = get_or<double>(r, "amplitude", c.pml.amplitude);
  }
  c.pml.validate();
  const json init = j.contains("initial") ? j["initial"] : json{{"regime", "RE"}, {"c", 100.0}};
  if (init.contains("regime")) {
    reject_unknown_keys(init, {"regime", "c", "c_pml"}, "initial");
    RegimeSpec spec;
    spec.regime = regime_from_name(get_required<std::string>(init, "regime", "initial"));
    spec.p = c.p;
    spec.c = get_or<double>(init, "c", 100.0);
    if (init.contains("c_pml")) spec.c_pml = get_or<double>(init, "c_pml", 1.0);
    spec.validate();
    c.initial = mesh_budgets(spec, c.k, c.k * c.k);
  } else {
    reject_unknown_keys(init, {"h_K", "h_V", "h_I", "h_P"}, "initial");
    c.initial.hK = get_required<double>(init, "h_K", "initial");
    c.initial.hV = get_required<double>(init, "h_V", "initial");
    c.initial.hI = get_required<double>(init, "h_I", "initial");
    c.initial.hP = get_required<double>(init, "h_P", "initial");
  }
  const SourceKind src = source_from_name(get_or<std::string>(j, "source", "in"));
  c.f = gaussian_beam(src == SourceKind::In ? beam_in(c.k) : beam_out(c.scene, c.k));
  return c;
}

json adaptive_result_to_json(const AdaptiveResult& r) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"budget", budget_to_json(s.budget)},
                     {"dofs", s.dofs},
                     {"norms", s.norms},
                     {"proxy", s.proxy},
                     {"predicted", s.predicted},
                     {"target_error", s.target_error}});
  return {{"format_version", kFormatVersion},
          {"rho", r.rho},
          {"converged", r.converged},
          {"stop_reason", r.stop_reason},
          {"iterations", r.steps.size()},
          {"K_hat_points", r.regions.K_hat.size()},
          {"V_hat_points", r.regions.V_hat.size()},
          {"steps", steps}};
}

}  // namespace helm
