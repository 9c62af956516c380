#pragma once

// Radial PML coefficients in two dimensions.
//
// With the complex radius r~ = r + i f(r), alpha = 1 + i f'(r) and
// beta = 1 + i f(r)/r, the stretched operator written in the polar frame is
//
//   divergence form  : -k^-2 div(A grad u) - alpha*beta u,   A = H diag(beta/alpha, alpha/beta) H^T
//   unmultiplied form: -k^-2 div(A grad u) + k^-2 b.grad u - u,
//                      A = H diag(alpha^-2, beta^-2) H^T,
//                      b = -H (alpha^-2 (log alpha beta)', 0)^T
//
// where H rotates by the polar angle. Both are consistent with the form
// a(u, v) = int k^-2 A grad u . grad conj(v) + k^-2 (b . grad u) conj(v) - n u conj(v).
//
// In three dimensions the divergence-form matrix would be
// H diag(beta^2/alpha, alpha, alpha) H^T with n = alpha beta^2; only d = 2 is
// implemented here.

#include "helm/common.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace helm {

enum class PmlFormulation { DivergenceForm, Unmultiplied };

struct PmlProfile {
  double r_minus = 2.2;
  double r_tr = 2.7;
  PmlFormulation formulation = PmlFormulation::DivergenceForm;
  double amplitude = 1.0;  // multiplies the cubic ramp
  bool enabled = true;     // false forces (I, 0, 1) everywhere

  void validate() const {
    if (!(r_minus > 0.0) || !(r_tr > r_minus)) throw ConfigError("PML radii must satisfy 0 < r_minus < r_tr");
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw ConfigError("PML amplitude must be >= 0");
  }
};

template <typename Real>
struct PmlScaling {
  Real f{0}, df{0}, d2f{0};
  std::complex<Real> alpha{1}, beta{1};
};

template <typename Real>
struct PmlCoefficients {
  Eigen::Matrix<std::complex<Real>, 2, 2> A = Eigen::Matrix<std::complex<Real>, 2, 2>::Identity();
  Eigen::Matrix<std::complex<Real>, 2, 1> b = Eigen::Matrix<std::complex<Real>, 2, 1>::Zero();
  std::complex<Real> n{1};
};

// f(r) = a (r - R)^3 / (3 (R_tr - R)^2) beyond R = r_minus, zero inside.
template <typename Real>
PmlScaling<Real> scaling(const PmlProfile& pr, Real r) {
  if (!(r < Real(pr.r_tr))) throw DomainError("PML scaling evaluated at r >= r_tr");
  if (r <= Real(0)) throw DomainError("PML scaling requires r > 0");
  PmlScaling<Real> s;
  const Real R = Real(pr.r_minus);
  if (!pr.enabled || r <= R) return s;
  const Real w2 = (Real(pr.r_tr) - R) * (Real(pr.r_tr) - R);
  const Real a = Real(pr.amplitude);
  const Real t = r - R;
  s.f = a * t * t * t / (Real(3) * w2);
  s.df = a * t * t / w2;
  s.d2f = Real(2) * a * t / w2;
  const std::complex<Real> I(0, 1);
  s.alpha = Real(1) + I * s.df;
  s.beta = Real(1) + I * (s.f / r);
  return s;
}

template <typename Real>
PmlCoefficients<Real> coefficients(const PmlProfile& pr, const Eigen::Matrix<Real, 2, 1>& x) {
  using C = std::complex<Real>;
  PmlCoefficients<Real> out;
  const Real r = x.norm();
  if (!pr.enabled || r <= Real(pr.r_minus)) return out;
  const PmlScaling<Real> s = scaling(pr, r);
  const Real c = x(0) / r, sn = x(1) / r;
  Eigen::Matrix<Real, 2, 2> H;
  H << c, -sn, sn, c;
  const C a = s.alpha, b = s.beta;
  Eigen::Matrix<C, 2, 2> D = Eigen::Matrix<C, 2, 2>::Zero();
  if (pr.formulation == PmlFormulation::DivergenceForm) {
    D(0, 0) = b / a;
    D(1, 1) = a / b;
    out.n = a * b;
  } else {
    D(0, 0) = Real(1) / (a * a);
    D(1, 1) = Real(1) / (b * b);
    out.n = C(1);
    const C I(0, 1);
    const C dalpha = I * s.d2f;
    const C dbeta = (a - b) / r;
    const C dlog = dalpha / a + dbeta / b;
    const C radial = -dlog / (a * a);
    out.b = H.template cast<C>() * Eigen::Matrix<C, 2, 1>(radial, C(0));
  }
  const Eigen::Matrix<C, 2, 2> Hc = H.template cast<C>();
  out.A = Hc * D * Hc.transpose();
  return out;
}

struct GardingSample {
  Vec2 x;
  Eigen::Vector2cd xi;
};

struct GardingResult {
  double min_ratio = 0.0;
  double omega = 0.0;
};

// min over samples of Re(e^{i omega} A xi . conj(xi)) / |xi|^2. The
// divergence form uses omega = 0; the unmultiplied form scans omega over
// (-pi/2, pi/2) and keeps the best minimum.
inline GardingResult garding_check(const PmlProfile& pr, const std::vector<GardingSample>& samples,
                                   int omega_steps = 181) {
  auto min_for = [&](double omega) {
    const cplx rot = std::polar(1.0, omega);
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
      const auto co = coefficients<double>(pr, s.x);
      const double nrm2 = s.xi.squaredNorm();
      if (nrm2 == 0.0) continue;
      const cplx q = s.xi.dot(co.A * s.xi);  // conj(xi)^T A xi
      m = std::min(m, (rot * q).real() / nrm2);
    }
    return m;
  };
  if (pr.formulation == PmlFormulation::DivergenceForm) return {min_for(0.0), 0.0};
  GardingResult best{-std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 1; i < omega_steps; ++i) {
    const double omega = -kPi / 2 + kPi * i / omega_steps;
    const double m = min_for(omega);
    if (m > best.min_ratio) best = {m, omega};
  }
  return best;
}

}  // namespace helm
