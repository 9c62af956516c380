#include "helm/experiments.hpp"

#include "helm/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace helm {

const char* source_name(SourceKind s) { return s == SourceKind::In ? "in" : "out"; }

SourceKind source_from_name(const std::string& s) {
  if (s == "in") return SourceKind::In;
  if (s == "out") return SourceKind::Out;
  throw ConfigError("unknown source '" + s + "' (expected in or out)");
}

const char* rho_source_name(RhoSource r) {
  switch (r) {
    case RhoSource::Conjectured: return "conjectured";
    case RhoSource::Measured: return "measured";
    case RhoSource::User: return "user";
  }
  return "?";
}

RhoSource rho_source_from_name(const std::string& s) {
  if (s == "conjectured") return RhoSource::Conjectured;
  if (s == "measured") return RhoSource::Measured;
  if (s == "user") return RhoSource::User;
  throw ConfigError("unknown rho source '" + s + "' (expected conjectured, measured or user)");
}

double SweepConfig::constant(Regime r) const {
  auto it = c.find(r);
  return it == c.end() ? c_default : it->second;
}

void SweepConfig::validate() const {
  scene.validate();
  if (regimes.empty()) throw ConfigError("sweep needs at least one regime");
  if (n_values.empty()) throw ConfigError("sweep needs at least one n");
  if (sources.empty()) throw ConfigError("sweep needs at least one source");
  for (int n : n_values)
    if (n < 1) throw ConfigError("n values must be >= 1");
  if (p < 1 || p > LagrangeBasis::kMaxDegree) throw ConfigError("p out of range");
  if (reference.degree < 1 || reference.degree > LagrangeBasis::kMaxDegree)
    throw ConfigError("reference degree out of range");
  if (reference.refinements < 0) throw ConfigError("reference refinements must be >= 0");
  if (!(reference.h_factor > 0)) throw ConfigError("reference h_factor must be positive");
  if (!(reference.hk >= 0)) throw ConfigError("reference hk must be >= 0");
  if (!(reference.wall_factor > 0)) throw ConfigError("reference wall_factor must be positive");
  if (!(grading > 0 && grading <= 1)) throw ConfigError("grading must lie in (0, 1]");
  if (!(rho.factor > 0)) throw ConfigError("rho factor must be positive");
  if (!(rho.delta >= 0)) throw ConfigError("rho delta must be >= 0");
  if (rho.directions != 0 && rho.directions < 8) throw ConfigError("rho directions must be 0 (auto) or >= 8");
  if (!(rho.t_max > 0)) throw ConfigError("rho t_max must be positive");
  for (Regime r : regimes) {
    RegimeSpec s{r, p, constant(r), 2, c_pml};
    s.validate();
  }
  pml.validate();
}

std::vector<const SweepRow*> SweepResult::select(Regime r, SourceKind s) const {
  std::vector<const SweepRow*> out;
  for (const auto& row : rows)
    if (row.regime == r && row.source == s) out.push_back(&row);
  return out;
}

double RhoConfig::spacing() const { return delta > 0 ? delta : TwoWallDims::gap() / 100; }

int RhoConfig::direction_count() const {
  return directions > 0 ? directions : std::max(8, static_cast<int>(std::lround(2 * kPi / spacing())));
}

PhaseSampleGrid measured_grid(const Scene& scene, const RhoConfig& rc) {
  PhaseSampleGrid grid = sample_phase_space(scene, rc.spacing(), rc.direction_count());
  fill_survival(scene, grid, rc.t_max);
  return grid;
}

namespace {

SurvivalProfile measured_profile(const Scene& scene, const RhoConfig& rc) {
  return survival_volume(measured_grid(scene, rc));
}

MeshBudget componentwise_min(const std::vector<MeshBudget>& bs) {
  MeshBudget m = bs.front();
  for (const auto& b : bs) {
    m.hK = std::min(m.hK, b.hK);
    m.hV = std::min(m.hV, b.hV);
    m.hI = std::min(m.hI, b.hI);
    m.hP = std::min(m.hP, b.hP);
  }
  return m;
}

double ratio(double a, double b) { return b > 0 ? a / b : std::numeric_limits<double>::infinity(); }

}  // namespace

double planning_rho(const SweepConfig& cfg, double k, const SurvivalProfile* profile) {
  switch (cfg.rho.source) {
    case RhoSource::Conjectured: return cfg.rho.factor * k * k;
    case RhoSource::User: return cfg.rho.factor * std::pow(k, cfg.rho.exponent);
    case RhoSource::Measured: {
      if (!profile) throw DomainError("measured rho needs a survival profile");
      return cfg.rho.factor * estimate_rho(*profile, k).rho;
    }
  }
  return k;
}

Mesh plan_mesh(const Scene& scene, const MeshBudget& budget, double grading, const MeshOptions& opt) {
  const SizeField h = size_field(scene, budget, grading);
  return generate_mesh(scene, [&h](const Vec2& x) { return h(x); }, opt);
}

SweepResult run_regime_sweep(const SweepConfig& cfg, const std::function<void(const SweepRow&)>& progress) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  SweepResult result;
  result.config = cfg;

  std::optional<SurvivalProfile> profile;
  if (cfg.rho.source == RhoSource::Measured) profile = measured_profile(cfg.scene, cfg.rho);

  const std::array<Region, 3> kvi{Region::K, Region::V, Region::I};
  std::vector<RegionPredicate> preds;
  for (Region r : kvi) preds.push_back([&cover = cfg.scene.cover, r](const Vec2& x) { return cover.in(r, x); });

  for (SourceKind src : cfg.sources) {
    for (int n : cfg.n_values) {
      const double k = cavity_wavenumber(n);
      std::vector<SweepRow> rows(cfg.regimes.size());
      std::vector<MeshBudget> budgets;
      const auto t_start = clock::now();
      try {
        const double rho = std::max(k, planning_rho(cfg, k, profile ? &*profile : nullptr));
        for (std::size_t i = 0; i < cfg.regimes.size(); ++i) {
          SweepRow& row = rows[i];
          row.regime = cfg.regimes[i];
          row.source = src;
          row.n = n;
          row.k = k;
          row.rho = rho;
          RegimeSpec spec{row.regime, cfg.p, cfg.constant(row.regime), 2, cfg.c_pml};
          row.budget = mesh_budgets(spec, k, rho);
          budgets.push_back(row.budget);
        }
        const BeamSpec beam = src == SourceKind::In ? beam_in(k) : beam_out(cfg.scene, k);
        const SourceFunction f = gaussian_beam(beam);

        MeshBudget rb = componentwise_min(budgets);
        rb.hK *= cfg.reference.h_factor;
        rb.hV *= cfg.reference.h_factor;
        rb.hI *= cfg.reference.h_factor;
        rb.hP *= cfg.reference.h_factor;
        Mesh ref_base;
        if (cfg.reference.hk > 0) {
          const double H = cfg.reference.hk / k;
          const double hw = std::min(H, cfg.reference.wall_factor * rb.vec().minCoeff());
          const Scene& sc = cfg.scene;
          const double G = cfg.grading;
          ref_base = generate_mesh(
              sc,
              [&](const Vec2& x) {
                double d = std::numeric_limits<double>::infinity();
                for (const auto& o : sc.obstacles) d = std::min(d, std::max(0.0, o.signed_distance(x)));
                return std::min(H, hw + G * d);
              },
              cfg.mesh);
        } else {
          ref_base = plan_mesh(cfg.scene, rb, cfg.grading, cfg.mesh);
        }
        ReferenceOptions ro;
        ro.degree_increment = cfg.reference.degree - 1;
        ro.refinements = cfg.reference.refinements;
        const FieldFunction ref = reference_solution(ref_base, cfg.pml, k, f, 1, ro);

        for (SweepRow& row : rows) {
          const auto t0 = clock::now();
          try {
            auto mesh = std::make_shared<const Mesh>(plan_mesh(cfg.scene, row.budget, cfg.grading, cfg.mesh));
            auto space = std::make_shared<const FESpace>(mesh, cfg.p);
            row.triangles = static_cast<long>(mesh->num_triangles());
            row.dofs = space->num_dofs();
            row.reference_dofs = ref.space->num_dofs();
            const FieldFunction uh = galerkin_solve(space, cfg.pml, k, f);
            const ReferenceComparison cmp = compare_with_reference(ref, uh, k, preds);
            row.global = cmp.global;
            row.qo_global = ratio(cmp.global.galerkin, cmp.global.best);
            row.rel_global = ratio(cmp.global.galerkin, cmp.global.reference);
            for (std::size_t r = 0; r < 3; ++r) {
              row.local[r] = cmp.regions[r];
              row.qo_local[r] = ratio(cmp.regions[r].galerkin, cmp.regions[r].best);
              row.rel_local[r] = ratio(cmp.regions[r].galerkin, cmp.global.reference);
            }
            row.ok = true;
          } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
          }
          row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        }
      } catch (const std::exception& e) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
          rows[i].regime = cfg.regimes[i];
          rows[i].source = src;
          rows[i].n = n;
          rows[i].k = k;
          rows[i].ok = false;
          rows[i].error = std::string("reference: ") + e.what();
        }
      }
      const double total = std::chrono::duration<double>(clock::now() - t_start).count();
      double cells = 0;
      for (const auto& r : rows) cells += r.seconds;
      // The shared reference cost is spread evenly over the cells.
      for (auto& r : rows) r.seconds += (total - cells) / static_cast<double>(rows.size());
      for (auto& r : rows) {
        if (progress) progress(r);
        result.rows.push_back(std::move(r));
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace {

json budget_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Scene scene_from_config(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "two_wall") return build_two_wall_scene(false);
    if (s == "two_wall_shifted") return build_two_wall_scene(true);
    return scene_from_json(read_json_file(s));
  }
  if (j.is_object()) {
    if (j.contains("builtin")) {
      reject_unknown_keys(j, {"builtin", "shift"}, "scene");
      const std::string b = get_required<std::string>(j, "builtin", "scene");
      std::optional<double> shift;
      if (j.contains("shift")) shift = get_or<double>(j, "shift", 0.0);
      if (b == "two_wall") return build_two_wall_scene(false);
      if (b == "two_wall_shifted") return build_two_wall_scene(true, shift);
      throw ConfigError("unknown builtin scene '" + b + "'");
    }
    return scene_from_json(j);
  }
  throw ConfigError("scene must be a builtin name, a JSON path or an object");
}

PmlFormulation pml_formulation_from_name(const std::string& s) {
  if (s == "divergence") return PmlFormulation::DivergenceForm;
  if (s == "unmultiplied") return PmlFormulation::Unmultiplied;
  throw ConfigError("unknown PML formulation '" + s + "' (expected divergence or unmultiplied)");
}

const char* pml_formulation_name(PmlFormulation f) {
  return f == PmlFormulation::DivergenceForm ? "divergence" : "unmultiplied";
}

json sweep_config_to_json(const SweepConfig& c) {
  json regimes = json::array(), cs = json::object();
  for (Regime r : c.regimes) regimes.push_back(regime_name(r));
  for (const auto& [r, v] : c.c) cs[regime_name(r)] = v;
  json sources = json::array();
  for (SourceKind s : c.sources) sources.push_back(source_name(s));
  return {{"format_version", kFormatVersion},
          {"scene", scene_to_json(c.scene)},
          {"regimes", regimes},
          {"n", c.n_values},
          {"sources", sources},
          {"p", c.p},
          {"c", cs},
          {"c_default", c.c_default},
          {"c_pml", budget_or_null(c.c_pml)},
          {"rho",
           {{"source", rho_source_name(c.rho.source)},
            {"factor", c.rho.factor},
            {"exponent", c.rho.exponent},
            {"delta", c.rho.delta},
            {"directions", c.rho.directions},
            {"t_max", c.rho.t_max}}},
          {"reference",
           {{"degree", c.reference.degree},
            {"refinements", c.reference.refinements},
            {"hk", c.reference.hk},
            {"wall_factor", c.reference.wall_factor},
            {"h_factor", c.reference.h_factor}}},
          {"grading", c.grading},
          {"pml",
           {{"formulation", pml_formulation_name(c.pml.formulation)},
            {"amplitude", c.pml.amplitude}}},
          {"seed", c.seed}};
}

SweepConfig sweep_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
  reject_unknown_keys(j,
                      {"format_version", "scene", "regimes", "n", "n_range", "sources", "p", "c", "c_default", "c_pml",
                       "rho", "reference", "grading", "pml", "seed"},
                      "sweep config");
  SweepConfig c;
  c.scene = j.contains("scene") ? scene_from_config(j["scene"]) : build_two_wall_scene(false);
  c.pml.r_minus = c.scene.r_pml_minus;
  c.pml.r_tr = c.scene.r_tr;
  if (!j.contains("regimes") || !j["regimes"].is_array()) throw ConfigError("sweep config needs a regimes array");
  for (const auto& r : j["regimes"]) {
    if (!r.is_string()) throw ConfigError("regimes must be strings");
    c.regimes.push_back(regime_from_name(r.get<std::string>()));
  }
  if (j.contains("n")) {
    c.n_values = get_or<std::vector<int>>(j, "n", {});
  } else if (j.contains("n_range")) {
    const auto r = get_or<std::vector<int>>(j, "n_range", {});
    if (r.size() != 2 || r[0] > r[1]) throw ConfigError("n_range must be [first, last]");
    for (int n = r[0]; n <= r[1]; ++n) c.n_values.push_back(n);
  } else {
    throw ConfigError("sweep config needs n or n_range");
  }
  if (j.contains("sources")) {
    c.sources.clear();
    for (const auto& s : j["sources"]) {
      if (!s.is_string()) throw ConfigError("sources must be strings");
      c.sources.push_back(source_from_name(s.get<std::string>()));
    }
  }
  c.p = get_or<int>(j, "p", c.p);
  if (j.contains("c")) {
    if (!j["c"].is_object()) throw ConfigError("c must map regime names to constants");
    for (const auto& [name, v] : j["c"].items()) {
      if (!v.is_number()) throw ConfigError("c." + name + " must be a number");
      c.c[regime_from_name(name)] = v.get<double>();
    }
  }
  c.c_default = get_or<double>(j, "c_default", c.c_default);
  if (j.contains("c_pml") && !j["c_pml"].is_null()) c.c_pml = get_or<double>(j, "c_pml", 1.0);
  if (j.contains("rho")) {
    const json& r = j["rho"];
    reject_unknown_keys(r, {"source", "factor", "exponent", "delta", "directions", "t_max"}, "rho");
    c.rho.source = rho_source_from_name(get_or<std::string>(r, "source", "conjectured"));
    c.rho.factor = get_or<double>(r, "factor", c.rho.factor);
    c.rho.exponent = get_or<double>(r, "exponent", c.rho.exponent);
    c.rho.delta = get_or<double>(r, "delta", c.rho.delta);
    c.rho.directions = get_or<int>(r, "directions", c.rho.directions);
    c.rho.t_max = get_or<double>(r, "t_max", c.rho.t_max);
  }
  if (j.contains("reference")) {
    const json& r = j["reference"];
    reject_unknown_keys(r, {"degree", "refinements", "hk", "h_factor", "wall_factor"}, "reference");
    c.reference.degree = get_or<int>(r, "degree", c.reference.degree);
    c.reference.refinements = get_or<int>(r, "refinements", c.reference.refinements);
    c.reference.hk = get_or<double>(r, "hk", c.reference.hk);
    c.reference.wall_factor = get_or<double>(r, "wall_factor", c.reference.wall_factor);
    c.reference.h_factor = get_or<double>(r, "h_factor", c.reference.h_factor);
  }
  c.grading = get_or<double>(j, "grading", c.grading);
  if (j.contains("pml")) {
    const json& r = j["pml"];
    reject_unknown_keys(r, {"formulation", "amplitude"}, "pml");
    c.pml.formulation = pml_formulation_from_name(get_or<std::string>(r, "formulation", "divergence"));
    c.pml.amplitude = get_or<double>(r, "amplitude", c.pml.amplitude);
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.validate();
  return c;
}

}  // namespace helm
