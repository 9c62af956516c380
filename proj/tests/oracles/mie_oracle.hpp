#pragma once

// Scattered field of exp(i k x) by the sound-soft disk of radius a centred at
// the origin:
//   u_s(r, t) = - sum_{n=-N..N} i^n J_n(ka) / H_n(ka) H_n(kr) e^{i n t},
// H_n = J_n + i Y_n. Negative orders use J_{-n} = (-1)^n J_n and the same
// relation for Y_n, so the ratio J_n/H_n is even in n while H_n(kr) picks up
// the sign.

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

struct MieValue {
  std::complex<double> u;
  std::complex<double> du_dx, du_dy;
};

class SoundSoftDisk {
 public:
  SoundSoftDisk(double k, double a, int terms) : k_(k), a_(a), N_(terms) {
    for (int m = 0; m <= N_; ++m) ratio_.push_back(std::cyl_bessel_j(double(m), k_ * a_) / hankel(m, k_ * a_));
  }

  MieValue operator()(double x, double y) const {
    using C = std::complex<double>;
    const C I(0, 1);
    const double r = std::hypot(x, y), t = std::atan2(y, x);
    std::vector<C> H(static_cast<std::size_t>(N_) + 2);
    for (int m = 0; m <= N_ + 1; ++m) H[static_cast<std::size_t>(m)] = hankel(m, k_ * r);
    C u = 0, ur = 0, ut = 0;
    for (int n = -N_; n <= N_; ++n) {
      const int m = std::abs(n);
      const double sg = (n < 0 && (m % 2)) ? -1.0 : 1.0;
      const C hm1 = m == 0 ? -H[1] : H[static_cast<std::size_t>(m) - 1];
      const C Hr = sg * H[static_cast<std::size_t>(m)];
      const C dHr = sg * k_ * 0.5 * (hm1 - H[static_cast<std::size_t>(m) + 1]);
      const C coef = -std::pow(I, n) * ratio_[static_cast<std::size_t>(m)];
      const C e = std::exp(I * static_cast<double>(n) * t);
      u += coef * Hr * e;
      ur += coef * dHr * e;
      ut += coef * Hr * I * static_cast<double>(n) * e;
    }
    const double c = std::cos(t), s = std::sin(t);
    return {u, c * ur - s * ut / r, s * ur + c * ut / r};
  }

  static std::complex<double> hankel(int m, double z) {
    return {std::cyl_bessel_j(static_cast<double>(m), z), std::cyl_neumann(static_cast<double>(m), z)};
  }

 private:
  double k_, a_;
  int N_;
  std::vector<std::complex<double>> ratio_;
};

}  // namespace oracle
