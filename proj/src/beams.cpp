#include "helm/experiments.hpp"

#include "helm/quadrature.hpp"

#include <cmath>
#include <limits>

namespace helm {

double beam_bump(const Vec2& x, double r) {
  const double s = x.squaredNorm();
  if (s >= r * r) return 0.0;
  return std::exp(-0.5 * s / (r * r - s));
}

double beam_normalization(const BeamSpec& b) {
  if (!(b.k > 0) || !(b.r_bump > 0)) throw DomainError("beam needs k > 0 and a positive bump radius");
  // int_0^{2 pi} exp(-a sin^2 phi) dphi = 2 pi exp(-a/2) I0(a/2) removes the
  // angular integral; the radial one uses composite Gauss-Legendre panels.
  const LineRule gl = gauss_legendre(40);
  const int panels = 16;
  const double r = b.r_bump;
  double total = 0;
  for (int j = 0; j < panels; ++j) {
    const double a0 = r * j / panels, len = r / panels;
    for (std::size_t q = 0; q < gl.points.size(); ++q) {
      const double rho = a0 + len * gl.points[q];
      const double chi = beam_bump(Vec2(rho, 0), r);
      const double a = 2.0 * b.k * rho * rho;
      const double ang = 2.0 * kPi * std::exp(-0.5 * a) * std::cyl_bessel_i(0.0, 0.5 * a);
      total += len * gl.weights[q] * chi * chi * ang * rho;
    }
  }
  return 1.0 / (std::pow(b.k, 0.25) * std::sqrt(total));
}

SourceFunction gaussian_beam(const BeamSpec& b) {
  const double C = beam_normalization(b) * std::pow(b.k, 0.25);
  const Vec2 xi = b.xi0.normalized();
  const Vec2 perp(-xi.y(), xi.x());
  const BeamSpec s = b;
  return [C, xi, perp, s](const Vec2& x) -> cplx {
    const Vec2 y = x - s.x0;
    const double chi = beam_bump(y, s.r_bump);
    if (chi == 0.0) return 0.0;
    const double t = y.dot(perp);
    return C * chi * std::exp(-s.k * t * t) * std::polar(1.0, s.k * x.dot(xi));
  };
}

BeamSpec beam_in(double k) {
  BeamSpec b;
  b.k = k;
  b.target = Vec2(TwoWallDims::gap() / 2, 0);
  return b;
}

BeamSpec beam_out(const Scene& scene, double k, double distance) {
  if (scene.obstacles.size() < 2) throw DomainError("beam_out needs a two-wall scene");
  if (!(k > 0)) throw DomainError("k must be positive");
  // Right-hand obstacle: the one with the largest center x.
  const ClosedCurve* right = &scene.obstacles.front();
  for (const auto& o : scene.obstacles)
    if (o.center().x() > right->center().x()) right = &o;
  const double x_face = right->center().x() - right->half().x();
  const double y_low = right->center().y() - right->half().y() + right->corner();

  BeamSpec b;
  b.k = k;
  const double th = 3.0 / std::sqrt(k);
  b.xi0 = Vec2(std::cos(th), std::sin(th));
  b.target = Vec2(x_face, y_low);
  b.x0 = b.target - distance * b.xi0;

  b.clear_path = !scene.inside_obstacle(b.x0);
  if (b.clear_path) {
    double t_first = std::numeric_limits<double>::infinity();
    const ClosedCurve* first = nullptr;
    for (const auto& o : scene.obstacles)
      if (auto h = o.intersect(b.x0, b.xi0, scene.hit_eps()); h && h->t < t_first) {
        t_first = h->t;
        first = &o;
      }
    b.clear_path = first == right && std::abs(t_first - distance) < 1e-6 * distance;
  }
  return b;
}

double cavity_wavenumber(int n) { return n * kPi / TwoWallDims::gap(); }

RateFit fit_rate(const std::vector<double>& ks, const std::vector<double>& values) {
  if (ks.size() != values.size()) throw DomainError("fit_rate: size mismatch");
  if (ks.size() < 3) throw DomainError("fit_rate needs at least 3 samples");
  const std::size_t n = ks.size();
  Eigen::VectorXd x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ks[i] > 0) || !(values[i] > 0) || !std::isfinite(values[i]))
      throw DomainError("fit_rate needs positive finite samples");
    x[static_cast<Eigen::Index>(i)] = std::log(ks[i]);
    y[static_cast<Eigen::Index>(i)] = std::log(values[i]);
  }
  const double mx = x.mean(), my = y.mean();
  const Eigen::VectorXd dx = x.array() - mx, dy = y.array() - my;
  const double sxx = dx.squaredNorm();
  if (!(sxx > 0)) throw DomainError("fit_rate needs at least two distinct k");
  RateFit f;
  f.slope = dx.dot(dy) / sxx;
  f.intercept = my - f.slope * mx;
  const double syy = dy.squaredNorm();
  const double res = (dy - f.slope * dx).squaredNorm();
  f.r2 = syy > 0 ? 1.0 - res / syy : 1.0;
  return f;
}

}  // namespace helm
