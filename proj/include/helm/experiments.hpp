#pragma once

#include "helm/assembly.hpp"
#include "helm/billiards.hpp"
#include "helm/geometry.hpp"
#include "helm/mesh.hpp"
#include "helm/norms.hpp"
#include "helm/planner.hpp"
#include "helm/pml.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace helm {

// ---------------------------------------------------------------------------
// Sources

struct BeamSpec {
  Vec2 x0 = Vec2::Zero();
  Vec2 xi0 = Vec2(1, 0);
  double k = 1;
  double r_bump = 0.4;
  // Set by beam_out: false when the segment from x0 to the target wall point
  // crosses another obstacle first.
  bool clear_path = true;
  Vec2 target = Vec2::Zero();
};

// exp(-|x|^2 / (2 (r^2 - |x|^2))) inside the disk of radius r, zero outside.
double beam_bump(const Vec2& x, double r);

// Normalization constant C with ||f||_{L^2(R^2)} = 1, computed by polar
// quadrature of the unnormalized profile.
double beam_normalization(const BeamSpec& b);

// f(x) = C k^{1/4} chi(x - x0) exp(-k ((x - x0) . xi0_perp)^2) exp(i k x . xi0).
SourceFunction gaussian_beam(const BeamSpec& b);

// Beam at the origin travelling along +x.
BeamSpec beam_in(double k);

// Beam from outside aimed at the lowest point of the flat left face of the
// right-hand obstacle, xi0 = (cos(3/sqrt k), sin(3/sqrt k)), x0 at `distance`
// from that point along -xi0.
BeamSpec beam_out(const Scene& scene, double k, double distance = 1.8);

// k_n = n pi / L_gap.
double cavity_wavenumber(int n);

// ---------------------------------------------------------------------------
// Rates

struct RateFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 1;
};

// Least-squares slope of log(values) against log(ks).
RateFit fit_rate(const std::vector<double>& ks, const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Regime sweeps

enum class SourceKind { In, Out };
const char* source_name(SourceKind s);
SourceKind source_from_name(const std::string& s);

enum class RhoSource { Conjectured, Measured, User };
const char* rho_source_name(RhoSource r);
RhoSource rho_source_from_name(const std::string& s);

struct RhoConfig {
  RhoSource source = RhoSource::Conjectured;
  double factor = 1.0;    // rho = factor * k^exponent for Conjectured/User
  double exponent = 2.0;  // User only; Conjectured always uses 2
  // Ray sampling used by Measured.
  double delta = 0;     // 0 picks L_gap / 100
  int directions = 0;   // 0 picks round(2 pi / delta), matching the delta^3 cell weight
  double t_max = 500;

  double spacing() const;
  int direction_count() const;
};

// Phase-space grid with survival times filled according to `rc`.
PhaseSampleGrid measured_grid(const Scene& scene, const RhoConfig& rc);

struct ReferenceConfig {
  int degree = 5;       // absolute polynomial degree of the reference space
  int refinements = 0;  // uniform refinements of the reference mesh
  // When positive the reference mesh is uniform with h = hk / k. Otherwise it
  // follows the componentwise-smallest budget of all regimes run at the same
  // (k, source), scaled by h_factor.
  double hk = 2.0;
  double h_factor = 1.0;
  // Near obstacles the uniform reference mesh is graded down to
  // wall_factor * (smallest planned meshwidth) so that curved walls are
  // resolved at least as finely as in any compared mesh.
  double wall_factor = 0.5;
};

struct SweepConfig {
  Scene scene;
  std::vector<Regime> regimes;
  std::vector<int> n_values;
  std::vector<SourceKind> sources{SourceKind::In};
  int p = 2;
  std::map<Regime, double> c;  // threshold constant per regime
  double c_default = 1.0;
  std::optional<double> c_pml;
  RhoConfig rho;
  ReferenceConfig reference;
  double grading = 0.3;
  PmlProfile pml;
  MeshOptions mesh;
  std::uint64_t seed = 0;  // recorded only; every step is deterministic

  double constant(Regime r) const;
  void validate() const;
};

// Per-region entries are ordered K, V, I.
struct SweepRow {
  Regime regime = Regime::U1;
  SourceKind source = SourceKind::In;
  int n = 0;
  double k = 0;
  double rho = 0;
  MeshBudget budget;
  long triangles = 0;
  long dofs = 0;
  long reference_dofs = 0;
  std::array<RegionErrors, 3> local{};
  RegionErrors global;
  std::array<double, 3> qo_local{};
  double qo_global = 0;
  std::array<double, 3> rel_local{};  // ||u - u_h||_{region} / ||u||_Omega
  double rel_global = 0;              // ||u - u_h||_Omega / ||u||_Omega
  double seconds = 0;
  bool ok = false;
  std::string error;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;

  std::vector<const SweepRow*> select(Regime r, SourceKind s) const;
};

// Solution-operator norm used for planning at wavenumber k.
double planning_rho(const SweepConfig& cfg, double k, const SurvivalProfile* profile = nullptr);

// Plans, meshes and solves each (source, n, regime) cell, computes the shared
// reference solution per (source, n) and all error ratios. Cell failures are
// recorded in the row and the sweep continues.
SweepResult run_regime_sweep(const SweepConfig& cfg, const std::function<void(const SweepRow&)>& progress = {});

// Mesh produced by the planner for one regime.
Mesh plan_mesh(const Scene& scene, const MeshBudget& budget, double grading, const MeshOptions& opt = {});

// ---------------------------------------------------------------------------
// Adaptive loop

struct AdaptiveConfig {
  Scene scene;
  SourceFunction f;
  double k = 0;
  int p = 2;
  Region target = Region::K;
  double tol = 0.1;
  int max_iters = 5;
  MeshBudget initial;  // starting budget (all positive)
  RhoConfig rho{RhoSource::Measured};
  double grading = 0.3;
  PmlProfile pml;
  MeshOptions mesh;
  // Coordinate descent: each step divides one meshwidth by `shrink`.
  double shrink = 1.25;
  int max_descent_steps = 200;
  // Descent moves whose projected DoF count exceeds this are refused. The
  // projection scales the DoFs of the last solve by the change in
  // sum_R area_R / h_R^2.
  long max_dofs = 1'000'000;
};

struct AdaptiveStep {
  MeshBudget budget;
  long dofs = 0;
  std::array<double, 4> norms{};  // ||u_h||_{H^1_k(region)}, K V I P
  std::array<double, 4> proxy{};  // (h k)^p ||u_h||_{H^1_k(region)}
  std::array<double, 4> predicted{};
  double target_error = 0;  // predicted error in the target region
};

struct AdaptiveResult {
  double rho = 0;
  TrappedRegions regions;
  std::vector<AdaptiveStep> steps;
  bool converged = false;
  // "converged", "max_iters", "dof_limit" or "no_progress".
  std::string stop_reason;
  FieldFunction solution;
};

// Predicted regional errors (M applied to the proxy best-approximation errors
// with all constants one) for a candidate budget.
Eigen::Vector4d predicted_errors(const MeshBudget& b, double k, double rho, int p, const Eigen::Vector4d& norms);

AdaptiveResult adaptive_refine(const AdaptiveConfig& cfg);

// ---------------------------------------------------------------------------
// Reports

struct AcceptanceCheck {
  std::string id;
  std::string description;
  bool pass = false;
  double value = 0;
  std::string detail;
};

struct RegimeCheckLimits {
  double qo_max = 5.0;          // U1 global QO constant over the sweep
  double u1_slope = -2.0;       // U1 cavity local-global relative error
  double u1_slope_tol = 0.5;
  double re_slope_max = 0.3;    // RE global relative error
};

// Checks on a sweep for every listed source: U1 global QO bound, U1 cavity
// error slope and RE global error slope. Checks whose regime is absent are
// skipped; failed cells make the corresponding check fail.
std::vector<AcceptanceCheck> regime_checks(const SweepResult& result, const RegimeCheckLimits& lim = {});

// CSV tables (QO constants and relative errors per source, DoFs), SVG
// log-log plots with fitted slopes, and summary.json with the checks.
std::vector<std::filesystem::path> emit_report(const SweepResult& result, const std::vector<AcceptanceCheck>& checks,
                                               const std::filesystem::path& out_dir);

// Sweep rows as a CSV with one row per cell.
void write_sweep_csv(const std::filesystem::path& p, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& p);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};
// Log-log SVG line plot; each series is annotated with its fitted slope.
void write_loglog_svg(const std::filesystem::path& p, const std::string& title, const std::string& ylabel,
                      const std::vector<PlotSeries>& series);

nlohmann::json sweep_config_to_json(const SweepConfig& c);
SweepConfig sweep_config_from_json(const nlohmann::json& j);

// "two_wall", "two_wall_shifted", a path to a scene JSON file, an object
// {"builtin": name, "shift": s} or an inline scene object.
Scene scene_from_config(const nlohmann::json& j);
PmlFormulation pml_formulation_from_name(const std::string& s);
const char* pml_formulation_name(PmlFormulation f);

// Keys: scene, k or n, p, target, tol, max_iters, initial ({h_K, h_V, h_I,
// h_P} or {regime, c, c_pml}), rho, source ("in" | "out"), grading, pml,
// shrink, max_descent_steps, max_dofs.
AdaptiveConfig adaptive_config_from_json(const nlohmann::json& j);
nlohmann::json adaptive_result_to_json(const AdaptiveResult& r);

}  // namespace helm
