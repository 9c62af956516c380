#pragma once

#include "helm/fe_space.hpp"
#include "helm/pml.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace helm {

using SourceFunction = std::function<cplx(const Vec2&)>;
// Dirichlet data g(x, tag) on boundary DoFs.
using DirichletFunction = std::function<cplx(const Vec2&, BoundaryTag)>;

// Galerkin system restricted to the free (non-Dirichlet) DoFs; the Dirichlet
// lift has been moved to the right-hand side.
struct ComplexSystem {
  Eigen::SparseMatrix<cplx> A;  // compressed, symmetric sparsity pattern
  Eigen::VectorXcd rhs;
  std::vector<int> free_dofs;    // reduced index -> global DoF
  Eigen::VectorXcd lift;         // global vector holding the Dirichlet values
  int num_dofs = 0;

  Eigen::VectorXcd expand(const Eigen::VectorXcd& reduced) const;
};

struct AssemblyOptions {
  // Quadrature degree; 2p + 2 when negative.
  int quadrature_degree = -1;
};

// Matrix of a(u, v) = int k^-2 A grad u . grad v + k^-2 (b . grad u) v - n u v
// against the real Lagrange basis, load int f v, Dirichlet values from `g`
// (zero when empty).
ComplexSystem assemble(const FESpace& space, const PmlProfile& pml, double k, const SourceFunction& f,
                       const DirichletFunction& g = {}, const AssemblyOptions& opt = {});

// Compressed symmetric sparsity pattern of the given DoF subset. `index`
// maps global DoFs to rows (-1 when excluded).
struct SparsityPattern {
  std::vector<int> outer;  // size n + 1
  std::vector<int> inner;  // sorted per column
};
SparsityPattern build_pattern(const FESpace& space, const std::vector<int>& index, int n);

// Position of row i inside column j of the pattern.
int pattern_find(const SparsityPattern& p, int i, int j);

}  // namespace helm
