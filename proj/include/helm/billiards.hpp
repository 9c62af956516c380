#pragma once

#include "helm/geometry.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace helm {

struct RayState {
  Vec2 x = Vec2::Zero();
  Vec2 xi = Vec2(1, 0);
};

struct ReflectionEvent {
  double time = 0;
  Vec2 point = Vec2::Zero();
  Vec2 xi_in = Vec2::Zero();
  Vec2 xi_out = Vec2::Zero();
};

struct Trajectory {
  RayState start;
  std::vector<ReflectionEvent> events;
  double exit_time = 0;   // first time with r >= r_pml_minus, or t_max
  bool survived = false;  // true when exit_time is the t_max sentinel
  Vec2 end_point = Vec2::Zero();
  Vec2 end_xi = Vec2::Zero();
};

struct TraceOptions {
  long max_bounce = 1000000;
  bool record_events = true;
};

Trajectory trace_ray(const Scene& scene, const RayState& state, double t_max, const TraceOptions& opt = {});

// min(t_max, first PML-entry time) without recording events.
double survival_time(const Scene& scene, const RayState& state, double t_max, long max_bounce = 1000000);

struct PhaseSampleGrid {
  double delta = 0;
  int M = 0;
  std::vector<Vec2> points;
  std::vector<Vec2> directions;
  Eigen::MatrixXf survival;  // points x directions, empty until filled
  double t_max = 0;

  bool filled() const { return survival.rows() == static_cast<Eigen::Index>(points.size()) && survival.cols() == M; }
};

// Square lattice of spacing delta (containing the origin) clipped to
// {r < r_pml_minus} minus obstacles and minus points within hit_eps of a
// wall; directions 2 pi j / M.
PhaseSampleGrid sample_phase_space(const Scene& scene, double delta, int M);

// `threads` workers split the point range; results do not depend on it.
void fill_survival(const Scene& scene, PhaseSampleGrid& grid, double t_max, int threads = 1);

struct TrappedRegions {
  std::vector<Vec2> K_hat;
  std::vector<Vec2> V_hat;
  double inflation = 0;
};

// K_hat: points with some direction surviving to t_max. V_hat: lattice points
// (outside the inflated K_hat) crossed by the escaping rays launched from K_hat.
TrappedRegions classify_regions(const Scene& scene, const PhaseSampleGrid& grid, double inflation = -1);

struct SurvivalProfile {
  std::vector<double> times;   // ascending distinct survival times
  std::vector<double> volume;  // V~(times[i]) = delta^3 #{t_ij >= times[i]}
  double total = 0;            // V~(0)
  double t_max = 0;            // sentinel survival time of the grid
  double trapped = 0;          // V~(t_max): rays still inside at t_max
  double at(double t) const;
};

SurvivalProfile survival_volume(const PhaseSampleGrid& grid);

struct RhoEstimate {
  double rho = 0;
  double t_star = 0;
  bool clamped = false;
  std::string warning;
};

// rho = k * sup{t : V~(t) >= k^-1}, clamped below by k. With discount_trapped
// the rays that reach t_max are treated as samples of the forward-trapped set
// (Liouville measure zero): their volume V~(t_max) is subtracted and only
// t < t_max is searched.
RhoEstimate estimate_rho(const SurvivalProfile& profile, double k, bool discount_trapped = true);

void write_survival_csv(const std::filesystem::path& p, const PhaseSampleGrid& grid);
nlohmann::json regions_to_json(const TrappedRegions& r);

}  // namespace helm
