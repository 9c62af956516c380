#pragma once

#include <Eigen/Core>

#include <vector>

namespace helm {

// Gauss-Legendre rule on [0, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

LineRule gauss_legendre(int n);

// Rule on the reference triangle {(s, t) : s, t >= 0, s + t <= 1}; weights sum to 1/2.
struct TriangleRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

// Collapsed (Duffy) tensor Gauss rule exact for polynomials of total degree <= `degree`.
TriangleRule triangle_rule(int degree);

}  // namespace helm
