#include "helm/assembly.hpp"

#include "helm/quadrature.hpp"

#include <algorithm>

namespace helm {

Eigen::VectorXcd ComplexSystem::expand(const Eigen::VectorXcd& reduced) const {
  if (reduced.size() != static_cast<Eigen::Index>(free_dofs.size()))
    throw DomainError("reduced vector has the wrong length");
  Eigen::VectorXcd u = lift;
  for (std::size_t i = 0; i < free_dofs.size(); ++i) u[free_dofs[i]] = reduced[static_cast<Eigen::Index>(i)];
  return u;
}

SparsityPattern build_pattern(const FESpace& space, const std::vector<int>& index, int n) {
  const std::size_t nt = space.mesh().num_triangles();
  const int nloc = space.local_size();
  // DoF -> element incidence.
  std::vector<int> start(static_cast<std::size_t>(space.num_dofs()) + 1, 0);
  for (std::size_t t = 0; t < nt; ++t) {
    const int* d = space.element_dofs(t);
    for (int i = 0; i < nloc; ++i) ++start[static_cast<std::size_t>(d[i]) + 1];
  }
  for (std::size_t i = 1; i < start.size(); ++i) start[i] += start[i - 1];
  std::vector<int> elems(static_cast<std::size_t>(start.back()));
  {
    std::vector<int> pos(start.begin(), start.end() - 1);
    for (std::size_t t = 0; t < nt; ++t) {
      const int* d = space.element_dofs(t);
      for (int i = 0; i < nloc; ++i) elems[static_cast<std::size_t>(pos[static_cast<std::size_t>(d[i])]++)] = static_cast<int>(t);
    }
  }
  std::vector<int> col_of(static_cast<std::size_t>(n), -1);
  for (int g = 0; g < space.num_dofs(); ++g)
    if (index[static_cast<std::size_t>(g)] >= 0) col_of[static_cast<std::size_t>(index[static_cast<std::size_t>(g)])] = g;

  SparsityPattern p;
  p.outer.assign(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> scratch;
  for (int c = 0; c < n; ++c) {
    const int g = col_of[static_cast<std::size_t>(c)];
    scratch.clear();
    for (int e = start[static_cast<std::size_t>(g)]; e < start[static_cast<std::size_t>(g) + 1]; ++e) {
      const int* d = space.element_dofs(static_cast<std::size_t>(elems[static_cast<std::size_t>(e)]));
      for (int i = 0; i < nloc; ++i) {
        const int r = index[static_cast<std::size_t>(d[i])];
        if (r >= 0) scratch.push_back(r);
      }
    }
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    p.inner.insert(p.inner.end(), scratch.begin(), scratch.end());
    p.outer[static_cast<std::size_t>(c) + 1] = static_cast<int>(p.inner.size());
  }
  return p;
}

int pattern_find(const SparsityPattern& p, int i, int j) {
  const auto b = p.inner.begin() + p.outer[static_cast<std::size_t>(j)];
  const auto e = p.inner.begin() + p.outer[static_cast<std::size_t>(j) + 1];
  const auto it = std::lower_bound(b, e, i);
  if (it == e || *it != i) throw DomainError("entry outside the sparsity pattern");
  return static_cast<int>(it - p.inner.begin());
}

ComplexSystem assemble(const FESpace& space, const PmlProfile& pml, double k, const SourceFunction& f,
                       const DirichletFunction& g, const AssemblyOptions& opt) {
  if (!(k > 0) || !std::isfinite(k)) throw DomainError("k must be positive");
  const Mesh& mesh = space.mesh();
  const int nloc = space.local_size();
  const int qdeg = opt.quadrature_degree >= 0 ? opt.quadrature_degree : 2 * space.degree() + 2;
  const TriangleRule rule = triangle_rule(qdeg);
  const int nq = static_cast<int>(rule.size());

  ComplexSystem sys;
  sys.num_dofs = space.num_dofs();
  std::vector<int> index(static_cast<std::size_t>(space.num_dofs()), -1);
  sys.lift = Eigen::VectorXcd::Zero(space.num_dofs());
  for (int i = 0; i < space.num_dofs(); ++i) {
    if (space.dirichlet()[static_cast<std::size_t>(i)]) {
      if (g) sys.lift[i] = g(space.dof_points()[static_cast<std::size_t>(i)],
                             static_cast<BoundaryTag>(space.boundary_tag()[static_cast<std::size_t>(i)]));
      continue;
    }
    index[static_cast<std::size_t>(i)] = static_cast<int>(sys.free_dofs.size());
    sys.free_dofs.push_back(i);
  }
  const int n = static_cast<int>(sys.free_dofs.size());
  const SparsityPattern pat = build_pattern(space, index, n);

  sys.A.resize(n, n);
  sys.A.resizeNonZeros(static_cast<Eigen::Index>(pat.inner.size()));
  std::copy(pat.outer.begin(), pat.outer.end(), sys.A.outerIndexPtr());
  std::copy(pat.inner.begin(), pat.inner.end(), sys.A.innerIndexPtr());
  std::fill(sys.A.valuePtr(), sys.A.valuePtr() + pat.inner.size(), cplx(0));
  sys.rhs = Eigen::VectorXcd::Zero(n);

  // Reference basis tables.
  Eigen::MatrixXd phi(nloc, nq), dphi_s(nloc, nq), dphi_t(nloc, nq);
  for (int q = 0; q < nq; ++q)
    space.basis().eval(rule.points[static_cast<std::size_t>(q)], phi.col(q).data(), dphi_s.col(q).data(),
                       dphi_t.col(q).data());

  const double k2 = 1.0 / (k * k);
  Eigen::MatrixXcd K(nloc, nloc);
  Eigen::VectorXcd F(nloc);
  Eigen::Matrix<double, 2, Eigen::Dynamic> G(2, nloc);
  Eigen::Matrix<cplx, 2, Eigen::Dynamic> AG(2, nloc);
  Eigen::Matrix<cplx, 1, Eigen::Dynamic> bG(1, nloc);
  std::vector<int> pos(static_cast<std::size_t>(nloc * nloc));

  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const ElementMap map(mesh, t);
    const double jac = std::abs(map.det);
    K.setZero();
    F.setZero();
    for (int q = 0; q < nq; ++q) {
      const Vec2 x = map(rule.points[static_cast<std::size_t>(q)]);
      const double w = rule.weights[static_cast<std::size_t>(q)] * jac;
      const auto co = coefficients<double>(pml, x);
      G.row(0) = dphi_s.col(q).transpose();
      G.row(1) = dphi_t.col(q).transpose();
      G = map.JinvT * G;
      AG.noalias() = co.A * G.cast<cplx>();
      const auto ph = phi.col(q);
      K.noalias() += (w * k2) * (G.transpose().cast<cplx>() * AG);
      if (co.b.squaredNorm() > 0) {
        bG.noalias() = co.b.transpose() * G.cast<cplx>();
        K.noalias() += (w * k2) * (ph.cast<cplx>() * bG);
      }
      K.noalias() -= (w * co.n) * (ph * ph.transpose()).cast<cplx>();
      if (f) F += (w * f(x)) * ph.cast<cplx>();
    }
    const int* d = space.element_dofs(t);
    for (int i = 0; i < nloc; ++i) {
      const int ri = index[static_cast<std::size_t>(d[i])];
      if (ri < 0) continue;
      sys.rhs[ri] += F[i];
      for (int j = 0; j < nloc; ++j) {
        const int cj = index[static_cast<std::size_t>(d[j])];
        if (cj < 0) {
          sys.rhs[ri] -= K(i, j) * sys.lift[d[j]];
          continue;
        }
        sys.A.valuePtr()[pattern_find(pat, ri, cj)] += K(i, j);
      }
    }
  }
  return sys;
}

}  // namespace helm
