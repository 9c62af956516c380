#pragma once

#include "helm/assembly.hpp"
#include "helm/fe_space.hpp"
#include "helm/linear_solve.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace helm {

// Element membership is decided by the barycenter.
using RegionPredicate = std::function<bool(const Vec2&)>;

inline RegionPredicate whole_domain() {
  return [](const Vec2&) { return true; };
}

struct NormPair {
  double l2 = 0;
  double h1k = 0;  // (||u||^2 + k^-2 ||grad u||^2)^(1/2)
};

// (sum_{|a| <= m} k^{-2|a|} ||d^a u||^2)^{1/2} over the elements in `region`, m in {0, 1}.
double local_norm(const FieldFunction& u, const RegionPredicate& region, int m, double k);

// Norms of u - uh on uh's mesh; `u` is sampled at quadrature points of degree
// 2p + 2 + extra_degree. Pass an empty coefficient vector to get norms of u.
NormPair error_norms(const FieldFunction& uh, const ExactFunction& u, const RegionPredicate& region, double k,
                     int extra_degree = 4);

struct RegionErrors {
  double reference = 0;  // ||u||_{H^1_k(region)}
  double galerkin = 0;   // ||u - u_h||
  double best = 0;       // ||u - w_h||
};

struct ReferenceComparison {
  RegionErrors global;
  std::vector<RegionErrors> regions;
  Eigen::VectorXcd best;  // coefficients of w_h in u_h's space
};

// H^1_k-orthogonal projection of `ref` onto the space of `uh`, keeping the
// Dirichlet values of `uh`. All integrals use quadrature on whichever of the
// two meshes has more elements; each field is taken as zero outside its own
// mesh.
Eigen::VectorXcd best_approximation(const FieldFunction& ref, const FieldFunction& uh, double k);
FieldFunction best_approximation(const FieldFunction& ref, std::shared_ptr<const FESpace> coarse, double k);

// Best approximation plus H^1_k norms of u, u - u_h, u - w_h globally and per region.
ReferenceComparison compare_with_reference(const FieldFunction& ref, const FieldFunction& uh, double k,
                                           const std::vector<RegionPredicate>& regions);

struct ReferenceOptions {
  int degree_increment = 1;  // p_ref = p + degree_increment
  int refinements = 1;       // uniform red refinements of the base mesh (each halves h)
};

// Galerkin solution on the refined, higher-degree space built from `base`.
FieldFunction reference_solution(const Mesh& base, const PmlProfile& pml, double k, const SourceFunction& f, int p,
                                 const ReferenceOptions& opt = {}, const DirichletFunction& g = {},
                                 SolveReport* report = nullptr);

// Assembles and solves on `space`.
FieldFunction galerkin_solve(std::shared_ptr<const FESpace> space, const PmlProfile& pml, double k,
                             const SourceFunction& f, const DirichletFunction& g = {}, SolveReport* report = nullptr);

}  // namespace helm
