#include "helm/quadrature.hpp"

#include "helm/common.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>

namespace helm {

LineRule gauss_legendre(int n) {
  if (n < 1 || n > 64) throw DomainError("Gauss-Legendre order must lie in [1, 64]");
  // Golub-Welsch: eigenvalues of the symmetric Jacobi matrix.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  LineRule r;
  for (int i = 0; i < n; ++i) {
    const double x = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    r.points.push_back(0.5 * (x + 1.0));
    r.weights.push_back(v * v);  // 2 v^2 on [-1, 1], halved for [0, 1]
  }
  return r;
}

TriangleRule triangle_rule(int degree) {
  if (degree < 0 || degree > 40) throw DomainError("triangle quadrature degree " + std::to_string(degree) +
                                                   " is unavailable (supported: 0..40)");
  static std::mutex m;
  static std::map<int, TriangleRule> cache;
  std::lock_guard<std::mutex> lock(m);
  if (auto it = cache.find(degree); it != cache.end()) return it->second;

  // (u, v) in [0,1]^2 -> (s, t) = (u, (1 - u) v), Jacobian 1 - u; the
  // integrand in u has degree at most degree + 1.
  const int n = (degree + 2 + 1) / 2;
  const LineRule g = gauss_legendre(n);
  TriangleRule r;
  r.degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = g.points[i], v = g.points[j];
      r.points.emplace_back(u, (1.0 - u) * v);
      r.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
    }
  cache.emplace(degree, r);
  return r;
}

}  // namespace helm
