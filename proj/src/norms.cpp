#include "helm/norms.hpp"

#include "helm/quadrature.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace helm {

namespace {

struct BasisTables {
  Eigen::MatrixXd phi, ds, dt;  // nloc x nq
};

BasisTables tabulate(const LagrangeBasis& b, const TriangleRule& rule) {
  const int n = b.size(), nq = static_cast<int>(rule.size());
  BasisTables t{Eigen::MatrixXd(n, nq), Eigen::MatrixXd(n, nq), Eigen::MatrixXd(n, nq)};
  for (int q = 0; q < nq; ++q)
    b.eval(rule.points[static_cast<std::size_t>(q)], t.phi.col(q).data(), t.ds.col(q).data(), t.dt.col(q).data());
  return t;
}

// Value and gradient of a field at quadrature point q of element t.
PointValue eval_table(const FieldFunction& f, std::size_t t, const ElementMap& map, const BasisTables& tb, int q) {
  const int* d = f.space->element_dofs(t);
  PointValue pv;
  Eigen::Vector2cd g = Eigen::Vector2cd::Zero();
  for (int i = 0; i < tb.phi.rows(); ++i) {
    const cplx c = f.coeffs[d[i]];
    pv.u += c * tb.phi(i, q);
    g += c * Eigen::Vector2d(tb.ds(i, q), tb.dt(i, q));
  }
  pv.grad = map.JinvT * g;
  return pv;
}

double h1k_sq(const PointValue& v, double k) {
  return std::norm(v.u) + (std::norm(v.grad(0)) + std::norm(v.grad(1))) / (k * k);
}

// Walks quadrature points of the finer of the two meshes (by element count)
// and hands each one, with the value of `ref` and the coarse element
// containing it (or -1) plus its reference coordinates, to `visit`. A field
// is taken as zero outside its own mesh.
template <typename Visit>
void sample_pairs(const FieldFunction& ref, const FESpace& coarse, Visit&& visit) {
  const FESpace& fs = *ref.space;
  const TriangleRule rule = triangle_rule(2 * std::max(fs.degree(), coarse.degree()) + 2);
  if (coarse.mesh().num_triangles() > fs.mesh().num_triangles()) {
    const PointLocator loc(fs.mesh());
    int hint = -1;
    for (std::size_t t = 0; t < coarse.mesh().num_triangles(); ++t) {
      const ElementMap map(coarse.mesh(), t);
      const Vec2 bary = coarse.mesh().centroid(t);
      for (int q = 0; q < static_cast<int>(rule.size()); ++q) {
        const Eigen::Vector2d& xi = rule.points[static_cast<std::size_t>(q)];
        const Vec2 x = map(xi);
        const double w = rule.weights[static_cast<std::size_t>(q)] * std::abs(map.det);
        PointValue u;
        if (const auto where = loc.locate(x, hint)) {
          hint = where->triangle;
          u = ref.eval_local(static_cast<std::size_t>(where->triangle), where->ref);
        }
        visit(t, bary, x, w, u, static_cast<int>(t), xi);
      }
    }
    return;
  }
  const BasisTables tb = tabulate(fs.basis(), rule);
  const PointLocator loc(coarse.mesh());
  int hint = -1;
  for (std::size_t t = 0; t < fs.mesh().num_triangles(); ++t) {
    const ElementMap map(fs.mesh(), t);
    const Vec2 bary = fs.mesh().centroid(t);
    for (int q = 0; q < static_cast<int>(rule.size()); ++q) {
      const Vec2 x = map(rule.points[static_cast<std::size_t>(q)]);
      const double w = rule.weights[static_cast<std::size_t>(q)] * std::abs(map.det);
      const PointValue u = eval_table(ref, t, map, tb, q);
      const auto where = loc.locate(x, hint);
      if (where) hint = where->triangle;
      visit(t, bary, x, w, u, where ? where->triangle : -1, where ? where->ref : Eigen::Vector2d::Zero());
    }
  }
}

}  // namespace

double local_norm(const FieldFunction& u, const RegionPredicate& region, int m, double k) {
  if (m < 0 || m > 1) throw DomainError("local_norm supports Sobolev order 0 or 1");
  if (!(k > 0)) throw DomainError("k must be positive");
  const FESpace& S = *u.space;
  const TriangleRule rule = triangle_rule(2 * S.degree() + 2);
  const BasisTables tb = tabulate(S.basis(), rule);
  double s = 0;
  for (std::size_t t = 0; t < S.mesh().num_triangles(); ++t) {
    if (region && !region(S.mesh().centroid(t))) continue;
    const ElementMap map(S.mesh(), t);
    for (int q = 0; q < static_cast<int>(rule.size()); ++q) {
      const PointValue v = eval_table(u, t, map, tb, q);
      const double w = rule.weights[static_cast<std::size_t>(q)] * std::abs(map.det);
      s += w * (m == 0 ? std::norm(v.u) : h1k_sq(v, k));
    }
  }
  return std::sqrt(s);
}

NormPair error_norms(const FieldFunction& uh, const ExactFunction& u, const RegionPredicate& region, double k,
                     int extra_degree) {
  if (!(k > 0)) throw DomainError("k must be positive");
  const FESpace& S = *uh.space;
  const TriangleRule rule = triangle_rule(2 * S.degree() + 2 + std::max(0, extra_degree));
  const BasisTables tb = tabulate(S.basis(), rule);
  const bool has_uh = uh.coeffs.size() == S.num_dofs();
  double l2 = 0, grad = 0;
  for (std::size_t t = 0; t < S.mesh().num_triangles(); ++t) {
    if (region && !region(S.mesh().centroid(t))) continue;
    const ElementMap map(S.mesh(), t);
    for (int q = 0; q < static_cast<int>(rule.size()); ++q) {
      const Vec2 x = map(rule.points[static_cast<std::size_t>(q)]);
      const double w = rule.weights[static_cast<std::size_t>(q)] * std::abs(map.det);
      PointValue e = u(x);
      if (has_uh) {
        const PointValue v = eval_table(uh, t, map, tb, q);
        e.u -= v.u;
        e.grad -= v.grad;
      }
      l2 += w * std::norm(e.u);
      grad += w * e.grad.squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(l2 + grad / (k * k))};
}

Eigen::VectorXcd best_approximation(const FieldFunction& ref, const FieldFunction& uh, double k) {
  if (!(k > 0)) throw DomainError("k must be positive");
  const FESpace& C = *uh.space;
  const int nloc = C.local_size();
  const std::size_t nt = C.mesh().num_triangles();
  const double k2 = 1.0 / (k * k);
  std::vector<double> gram(nt * static_cast<std::size_t>(nloc * nloc), 0.0);
  std::vector<cplx> load(nt * static_cast<std::size_t>(nloc), cplx(0));
  double v[64], ds[64], dt[64];
  sample_pairs(ref, C, [&](std::size_t, const Vec2&, const Vec2&, double w, const PointValue& u, int tc,
                           const Eigen::Vector2d& xi) {
    if (tc < 0) return;
    C.basis().eval(xi, v, ds, dt);
    const ElementMap map(C.mesh(), static_cast<std::size_t>(tc));
    double gx[64], gy[64];
    for (int i = 0; i < nloc; ++i) {
      const Eigen::Vector2d g = map.JinvT * Eigen::Vector2d(ds[i], dt[i]);
      gx[i] = g.x();
      gy[i] = g.y();
    }
    double* G = &gram[static_cast<std::size_t>(tc) * nloc * nloc];
    cplx* L = &load[static_cast<std::size_t>(tc) * nloc];
    for (int i = 0; i < nloc; ++i) {
      L[i] += w * (u.u * v[i] + k2 * (u.grad(0) * gx[i] + u.grad(1) * gy[i]));
      for (int j = 0; j < nloc; ++j) G[i * nloc + j] += w * (v[i] * v[j] + k2 * (gx[i] * gx[j] + gy[i] * gy[j]));
    }
  });

  std::vector<int> index(static_cast<std::size_t>(C.num_dofs()), -1);
  std::vector<int> free;
  for (int i = 0; i < C.num_dofs(); ++i)
    if (!C.dirichlet()[static_cast<std::size_t>(i)]) {
      index[static_cast<std::size_t>(i)] = static_cast<int>(free.size());
      free.push_back(i);
    }
  const int n = static_cast<int>(free.size());
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(C.num_dofs());
  for (int i = 0; i < C.num_dofs(); ++i)
    if (C.dirichlet()[static_cast<std::size_t>(i)]) out[i] = uh.coeffs[i];
  if (n == 0) return out;

  const SparsityPattern pat = build_pattern(C, index, n);
  Eigen::SparseMatrix<double> A(n, n);
  A.resizeNonZeros(static_cast<Eigen::Index>(pat.inner.size()));
  std::copy(pat.outer.begin(), pat.outer.end(), A.outerIndexPtr());
  std::copy(pat.inner.begin(), pat.inner.end(), A.innerIndexPtr());
  std::fill(A.valuePtr(), A.valuePtr() + pat.inner.size(), 0.0);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
  for (std::size_t t = 0; t < nt; ++t) {
    const int* d = C.element_dofs(t);
    const double* G = &gram[t * static_cast<std::size_t>(nloc * nloc)];
    const cplx* L = &load[t * static_cast<std::size_t>(nloc)];
    for (int i = 0; i < nloc; ++i) {
      const int ri = index[static_cast<std::size_t>(d[i])];
      if (ri < 0) continue;
      b[ri] += L[i];
      for (int j = 0; j < nloc; ++j) {
        const int cj = index[static_cast<std::size_t>(d[j])];
        if (cj < 0)
          b[ri] -= G[i * nloc + j] * out[d[j]];
        else
          A.valuePtr()[pattern_find(pat, ri, cj)] += G[i * nloc + j];
      }
    }
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw DomainError("Gram matrix factorization failed");
  const Eigen::VectorXd re = ldlt.solve(b.real()), im = ldlt.solve(b.imag());
  if (ldlt.info() != Eigen::Success) throw DomainError("Gram solve failed");
  for (int i = 0; i < n; ++i) out[free[static_cast<std::size_t>(i)]] = cplx(re[i], im[i]);
  return out;
}

FieldFunction best_approximation(const FieldFunction& ref, std::shared_ptr<const FESpace> coarse, double k) {
  FieldFunction zero{coarse, Eigen::VectorXcd::Zero(coarse->num_dofs())};
  return {coarse, best_approximation(ref, zero, k)};
}

ReferenceComparison compare_with_reference(const FieldFunction& ref, const FieldFunction& uh, double k,
                                           const std::vector<RegionPredicate>& regions) {
  ReferenceComparison out;
  out.best = best_approximation(ref, uh, k);
  const FESpace& C = *uh.space;
  const FieldFunction wh{uh.space, out.best};
  const std::size_t nr = regions.size();
  std::vector<std::array<double, 3>> acc(nr + 1, {0, 0, 0});
  std::vector<char> member(nr);
  std::size_t current = static_cast<std::size_t>(-1);
  sample_pairs(ref, C, [&](std::size_t t, const Vec2& bary, const Vec2&, double w, const PointValue& u, int tc,
                           const Eigen::Vector2d& xi) {
    if (t != current) {
      current = t;
      for (std::size_t r = 0; r < nr; ++r) member[r] = regions[r](bary) ? 1 : 0;
    }
    PointValue a, b;
    if (tc >= 0) {
      a = uh.eval_local(static_cast<std::size_t>(tc), xi);
      b = wh.eval_local(static_cast<std::size_t>(tc), xi);
    }
    PointValue ea{u.u - a.u, u.grad - a.grad}, eb{u.u - b.u, u.grad - b.grad};
    const std::array<double, 3> s{w * h1k_sq(u, k), w * h1k_sq(ea, k), w * h1k_sq(eb, k)};
    for (int i = 0; i < 3; ++i) acc[0][i] += s[i];
    for (std::size_t r = 0; r < nr; ++r)
      if (member[r])
        for (int i = 0; i < 3; ++i) acc[r + 1][i] += s[i];
  });
  auto pack = [](const std::array<double, 3>& a) { return RegionErrors{std::sqrt(a[0]), std::sqrt(a[1]), std::sqrt(a[2])}; };
  out.global = pack(acc[0]);
  for (std::size_t r = 0; r < nr; ++r) out.regions.push_back(pack(acc[r + 1]));
  return out;
}

FieldFunction galerkin_solve(std::shared_ptr<const FESpace> space, const PmlProfile& pml, double k,
                             const SourceFunction& f, const DirichletFunction& g, SolveReport* report) {
  const ComplexSystem sys = assemble(*space, pml, k, f, g);
  return {space, solve(sys, report)};
}

FieldFunction reference_solution(const Mesh& base, const PmlProfile& pml, double k, const SourceFunction& f, int p,
                                 const ReferenceOptions& opt, const DirichletFunction& g, SolveReport* report) {
  if (opt.degree_increment < 0 || opt.refinements < 0) throw DomainError("reference options must be nonnegative");
  Mesh m = base;
  for (int i = 0; i < opt.refinements; ++i) m = refine_uniform(m);
  auto mesh = std::make_shared<const Mesh>(std::move(m));
  auto space = std::make_shared<const FESpace>(mesh, p + opt.degree_increment);
  return galerkin_solve(space, pml, k, f, g, report);
}

}  // namespace helm
