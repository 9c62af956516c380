#pragma once

#include "helm/assembly.hpp"

#include <string>

namespace helm {

struct SolveReport {
  double relative_residual = 0;
  std::string backend;
};

// Sparse direct solve of the reduced system; returns the full global
// coefficient vector (Dirichlet values included). Throws DomainError when the
// factorization fails or the relative residual exceeds `max_residual`.
Eigen::VectorXcd solve(const ComplexSystem& sys, SolveReport* report = nullptr, double max_residual = 1e-8);

// Name of the compiled-in sparse LU backend.
const char* solver_backend();

}  // namespace helm
