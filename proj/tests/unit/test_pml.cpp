#include <doctest.h>

#include "helm/pml.hpp"

#include <random>

using namespace helm;
using doctest::Approx;

namespace {

using Vec2c = Eigen::Vector2cd;

// Smooth test function u = exp(i k x . d) (1 + x y) with analytic gradient.
struct Smooth {
  double k = 3;
  Vec2 d = Vec2(0.6, 0.8);
  cplx value(const Vec2& x) const { return std::exp(cplx(0, k * x.dot(d))) * (1.0 + x(0) * x(1)); }
  Vec2c grad(const Vec2& x) const {
    const cplx e = std::exp(cplx(0, k * x.dot(d)));
    const cplx w = 1.0 + x(0) * x(1);
    return Vec2c(e * (cplx(0, k * d(0)) * w + x(1)), e * (cplx(0, k * d(1)) * w + x(0)));
  }
};

// -k^-2 div(A grad u) + k^-2 b . grad u - n u with the divergence taken by
// central differences of the flux.
cplx apply_operator(const PmlProfile& pr, const Smooth& u, const Vec2& x, double k) {
  const double h = 1e-5;
  auto flux = [&](const Vec2& y) -> Vec2c { return coefficients<double>(pr, y).A * u.grad(y); };
  const cplx div = (flux(x + Vec2(h, 0))(0) - flux(x - Vec2(h, 0))(0) + flux(x + Vec2(0, h))(1) -
                    flux(x - Vec2(0, h))(1)) /
                   (2 * h);
  const auto co = coefficients<double>(pr, x);
  return -div / (k * k) + (co.b.transpose() * u.grad(x))(0) / (k * k) -
         co.n * u.value(x);
}

}  // namespace

TEST_CASE("scaling vanishes inside r_minus and follows the cubic ramp outside") {
  PmlProfile pr;
  const auto in = scaling<double>(pr, 1.5);
  CHECK(in.f == 0.0);
  CHECK(in.alpha == cplx(1, 0));
  const double r = 2.45, t = r - pr.r_minus, w = pr.r_tr - pr.r_minus;
  const auto s = scaling<double>(pr, r);
  CHECK(s.f == Approx(t * t * t / (3 * w * w)));
  CHECK(s.df == Approx(t * t / (w * w)));
  CHECK(s.alpha.imag() == Approx(s.df));
  CHECK(s.beta.imag() == Approx(s.f / r));
  CHECK_THROWS_AS(scaling<double>(pr, 2.7), DomainError);
  PmlProfile bad;
  bad.r_tr = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("coefficients are continuous across r_minus for both formulations") {
  for (auto form : {PmlFormulation::DivergenceForm, PmlFormulation::Unmultiplied}) {
    PmlProfile pr;
    pr.formulation = form;
    for (double ang : {0.0, 0.7, 2.0, 4.4}) {
      const Vec2 dir(std::cos(ang), std::sin(ang));
      const auto a = coefficients<double>(pr, Vec2((pr.r_minus * (1 - 1e-9)) * dir));
      const auto b = coefficients<double>(pr, Vec2((pr.r_minus * (1 + 1e-9)) * dir));
      CHECK((a.A - b.A).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((a.b - b.b).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(std::abs(a.n - b.n) < 1e-6);
    }
  }
}

TEST_CASE("disabled PML gives the plain Helmholtz coefficients") {
  PmlProfile pr;
  pr.enabled = false;
  const auto co = coefficients<double>(pr, Vec2(2.5, 0.1));
  CHECK((co.A - Eigen::Matrix2cd::Identity()).norm() == 0.0);
  CHECK(co.b.norm() == 0.0);
  CHECK(co.n == cplx(1, 0));
}

TEST_CASE("unmultiplied operator equals the divergence-form operator divided by alpha beta") {
  PmlProfile div, unm;
  unm.formulation = PmlFormulation::Unmultiplied;
  const Smooth u;
  const double k = 3;
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> R(2.25, 2.65), T(0, 2 * kPi);
  for (int i = 0; i < 40; ++i) {
    const double r = R(rng), t = T(rng);
    const Vec2 x(r * std::cos(t), r * std::sin(t));
    const auto s = scaling<double>(div, r);
    const cplx Ld = apply_operator(div, u, x, k);
    const cplx Lu = apply_operator(unm, u, x, k);
    CHECK(std::abs(Lu * s.alpha * s.beta - Ld) < 1e-5 * (1 + std::abs(Ld)));
  }
}

TEST_CASE("divergence-form Garding ratio is positive on random samples") {
  PmlProfile pr;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1), R(0.05, 2.69), T(0, 2 * kPi);
  std::vector<GardingSample> samples;
  for (int i = 0; i < 2000; ++i) {
    const double r = R(rng), t = T(rng);
    samples.push_back({Vec2(r * std::cos(t), r * std::sin(t)), Eigen::Vector2cd(cplx(U(rng), U(rng)), cplx(U(rng), U(rng)))});
  }
  const GardingResult g = garding_check(pr, samples);
  CHECK(g.min_ratio > 0);
  pr.formulation = PmlFormulation::Unmultiplied;
  CHECK(garding_check(pr, samples).min_ratio > 0);
}
