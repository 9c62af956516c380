#include "helm/billiards.hpp"

#include "helm/io.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace helm {

namespace {

// Distance along d from x (|x| < R) to the circle |y| = R.
double exit_distance(const Vec2& x, const Vec2& d, double R) {
  const double b = x.dot(d);
  const double c = x.squaredNorm() - R * R;
  return -b + std::sqrt(std::max(0.0, b * b - c));
}

struct Step {
  bool hit = false;
  Hit h;
};

Step next_hit(const Scene& scene, const Vec2& x, const Vec2& d, double eps) {
  Step s;
  for (const auto& o : scene.obstacles) {
    if (auto h = o.intersect(x, d, eps); h && (!s.hit || h->t < s.h.t)) {
      s.hit = true;
      s.h = *h;
    }
  }
  return s;
}

template <typename OnEvent>
double run_ray(const Scene& scene, Vec2 x, Vec2 d, double t_max, long max_bounce, bool& survived, Vec2& end_x,
               Vec2& end_d, OnEvent&& on_event) {
  const double eps = scene.hit_eps();
  const double R = scene.r_pml_minus;
  double t = 0;
  long bounces = 0;
  for (;;) {
    const double s_exit = exit_distance(x, d, R);
    const Step st = next_hit(scene, x, d, eps);
    if (st.hit && st.h.t < s_exit) {
      if (t + st.h.t >= t_max) {
        survived = true;
        end_x = x + (t_max - t) * d;
        end_d = d;
        return t_max;
      }
      t += st.h.t;
      x = st.h.point;
      Vec2 dn = d - 2.0 * d.dot(st.h.normal) * st.h.normal;
      dn.normalize();
      on_event(t, x, d, dn);
      d = dn;
      if (++bounces > max_bounce)
        throw DomainError("ray exceeded " + std::to_string(max_bounce) + " reflections (degenerate corner trap?)");
      continue;
    }
    if (t + s_exit >= t_max) {
      survived = true;
      end_x = x + (t_max - t) * d;
      end_d = d;
      return t_max;
    }
    survived = false;
    end_x = x + s_exit * d;
    end_d = d;
    return t + s_exit;
  }
}

}  // namespace

Trajectory trace_ray(const Scene& scene, const RayState& state, double t_max, const TraceOptions& opt) {
  if (!(state.x.norm() < scene.r_pml_minus) || scene.inside_obstacle(state.x))
    throw DomainError("ray must start in the domain inside the PML onset radius");
  Trajectory tr;
  tr.start = state;
  const Vec2 d0 = state.xi.normalized();
  tr.exit_time = run_ray(scene, state.x, d0, t_max, opt.max_bounce, tr.survived, tr.end_point, tr.end_xi,
                         [&](double t, const Vec2& p, const Vec2& din, const Vec2& dout) {
                           if (opt.record_events) tr.events.push_back({t, p, din, dout});
                         });
  return tr;
}

double survival_time(const Scene& scene, const RayState& state, double t_max, long max_bounce) {
  bool survived = false;
  Vec2 ex, ed;
  return run_ray(scene, state.x, state.xi, t_max, max_bounce, survived, ex, ed,
                 [](double, const Vec2&, const Vec2&, const Vec2&) {});
}

PhaseSampleGrid sample_phase_space(const Scene& scene, double delta, int M) {
  if (!(delta > 0) || !std::isfinite(delta)) throw DomainError("sample spacing must be positive");
  if (M < 8) throw DomainError("at least 8 directions are required");
  PhaseSampleGrid g;
  g.delta = delta;
  g.M = M;
  const double R = scene.r_pml_minus;
  const int n = static_cast<int>(std::floor(R / delta));
  for (int j = -n; j <= n; ++j) {
    for (int i = -n; i <= n; ++i) {
      const Vec2 x(i * delta, j * delta);
      if (!(x.norm() < R) || scene.inside_obstacle(x)) continue;
      // Points on a wall (lattice-aligned faces) would start the tracer inside the obstacle.
      bool on_wall = false;
      for (const auto& o : scene.obstacles) on_wall = on_wall || o.signed_distance(x) <= scene.hit_eps();
      if (!on_wall) g.points.push_back(x);
    }
  }
  for (int j = 0; j < M; ++j) {
    const double a = 2 * kPi * j / M;
    g.directions.emplace_back(std::cos(a), std::sin(a));
  }
  return g;
}

void fill_survival(const Scene& scene, PhaseSampleGrid& grid, double t_max, int threads) {
  if (!(t_max > 0)) throw DomainError("t_max must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(grid.points.size());
  grid.survival.resize(n, grid.M);
  grid.t_max = t_max;
  auto work = [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i)
      for (int j = 0; j < grid.M; ++j)
        grid.survival(i, j) = static_cast<float>(survival_time(scene, {grid.points[i], grid.directions[j]}, t_max));
  };
  threads = std::max(1, threads);
  if (threads == 1 || n < 64) {
    work(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex m;
  const Eigen::Index chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const Eigen::Index lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        work(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> g(m);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

TrappedRegions classify_regions(const Scene& scene, const PhaseSampleGrid& grid, double inflation) {
  if (!grid.filled()) throw DomainError("survival matrix has not been filled");
  TrappedRegions out;
  const double delta = grid.delta;
  out.inflation = inflation >= 0 ? inflation : 2 * delta;
  const float tmax = static_cast<float>(grid.t_max);

  // Dense lattice bitmaps indexed like the sample grid.
  const int n = static_cast<int>(std::floor(scene.r_pml_minus / delta)) + 1;
  const int side = 2 * n + 1;
  auto index = [&](const Vec2& x) -> long {
    const long i = std::lround(x.x() / delta) + n, j = std::lround(x.y() / delta) + n;
    if (i < 0 || j < 0 || i >= side || j >= side) return -1;
    return j * side + i;
  };
  std::vector<char> near_k(static_cast<std::size_t>(side) * side, 0), visited(near_k.size(), 0);

  std::vector<std::size_t> trapped;
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    if (grid.survival.row(static_cast<Eigen::Index>(i)).maxCoeff() >= tmax) {
      trapped.push_back(i);
      out.K_hat.push_back(grid.points[i]);
    }
  }
  const int reach = static_cast<int>(std::ceil(out.inflation / delta));
  for (std::size_t i : trapped) {
    const Vec2& x = grid.points[i];
    for (int dj = -reach; dj <= reach; ++dj)
      for (int di = -reach; di <= reach; ++di) {
        const Vec2 y = x + delta * Vec2(di, dj);
        if ((y - x).norm() > out.inflation + 1e-12) continue;
        if (long id = index(y); id >= 0) near_k[id] = 1;
      }
  }

  TraceOptions opt;
  for (std::size_t i : trapped) {
    for (int j = 0; j < grid.M; ++j) {
      if (grid.survival(static_cast<Eigen::Index>(i), j) >= tmax) continue;  // stays in the trapped set
      const Trajectory tr = trace_ray(scene, {grid.points[i], grid.directions[j]}, grid.t_max, opt);
      std::vector<Vec2> verts{tr.start.x};
      for (const auto& e : tr.events) verts.push_back(e.point);
      verts.push_back(tr.end_point);
      for (std::size_t s = 0; s + 1 < verts.size(); ++s) {
        const Vec2 a = verts[s], b = verts[s + 1];
        const int steps = std::max(1, static_cast<int>(std::ceil((b - a).norm() / (0.5 * delta))));
        for (int q = 0; q <= steps; ++q) {
          const Vec2 y = a + (b - a) * (double(q) / steps);
          if (long id = index(y); id >= 0 && !near_k[id]) visited[id] = 1;
        }
      }
    }
  }
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i)
      if (visited[static_cast<std::size_t>(j) * side + i]) {
        const Vec2 y((i - n) * delta, (j - n) * delta);
        if (y.norm() < scene.r_pml_minus && !scene.inside_obstacle(y)) out.V_hat.push_back(y);
      }
  return out;
}

double SurvivalProfile::at(double t) const {
  if (times.empty()) return 0.0;
  if (t <= times.front()) return total;
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return 0.0;
  return volume[static_cast<std::size_t>(it - times.begin())];
}

SurvivalProfile survival_volume(const PhaseSampleGrid& grid) {
  if (!grid.filled()) throw DomainError("survival matrix has not been filled");
  SurvivalProfile p;
  const double w = grid.delta * grid.delta * grid.delta;  // delta^(2d-1), d = 2
  std::vector<float> t(grid.survival.data(), grid.survival.data() + grid.survival.size());
  std::sort(t.begin(), t.end());
  const std::size_t N = t.size();
  p.total = w * static_cast<double>(N);
  p.t_max = grid.t_max;
  p.trapped = w * static_cast<double>(std::count_if(t.begin(), t.end(), [&](float v) { return v >= static_cast<float>(grid.t_max); }));
  for (std::size_t i = 0; i < N;) {
    std::size_t j = i;
    while (j < N && t[j] == t[i]) ++j;
    p.times.push_back(t[i]);
    p.volume.push_back(w * static_cast<double>(N - i));
    i = j;
  }
  return p;
}

RhoEstimate estimate_rho(const SurvivalProfile& profile, double k, bool discount_trapped) {
  if (!(k > 0) || !std::isfinite(k)) throw DomainError("k must be positive");
  RhoEstimate r;
  const double s = 1.0 / k;  // k^{-(d-1)}, d = 2
  const double floor = discount_trapped ? profile.trapped : 0.0;
  const double t_cut = discount_trapped && profile.trapped > 0 ? static_cast<double>(static_cast<float>(profile.t_max))
                                                                : std::numeric_limits<double>::infinity();
  // volume is non-increasing, so the admissible indices form a prefix.
  std::size_t count = 0;
  while (count < profile.times.size() && profile.times[count] < t_cut && profile.volume[count] - floor >= s) ++count;
  if (count == 0) {
    r.rho = k;
    r.clamped = true;
    r.warning = "k^-1 exceeds the sampled escaping phase-space volume; rho clamped to k";
    return r;
  }
  r.t_star = profile.times[count - 1];
  r.rho = k * r.t_star;
  if (r.rho < k) {
    r.rho = k;
    r.clamped = true;
  }
  if (discount_trapped && profile.trapped > 0 && r.t_star > 0.9 * profile.t_max)
    r.warning = "t* is close to t_max; increase t_max";
  return r;
}

void write_survival_csv(const std::filesystem::path& p, const PhaseSampleGrid& grid) {
  if (!grid.filled()) throw DomainError("survival matrix has not been filled");
  CsvWriter w(p, {"x", "y", "xi_angle", "t"});
  for (std::size_t i = 0; i < grid.points.size(); ++i)
    for (int j = 0; j < grid.M; ++j)
      w.row({grid.points[i].x(), grid.points[i].y(), 2 * kPi * j / grid.M,
             static_cast<double>(grid.survival(static_cast<Eigen::Index>(i), j))});
}

nlohmann::json regions_to_json(const TrappedRegions& r) {
  auto pts = [](const std::vector<Vec2>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back({x.x(), x.y()});
    return a;
  };
  return {{"format_version", kFormatVersion}, {"inflation", r.inflation}, {"K_hat", pts(r.K_hat)}, {"V_hat", pts(r.V_hat)}};
}

}  // namespace helm
