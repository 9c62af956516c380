#include <doctest.h>

#include "helm/norms.hpp"
#include "helm/quadrature.hpp"
#include "oracles/mie_oracle.hpp"
#include "oracles/plane_wave.hpp"

#include <filesystem>
#include <memory>
#include <random>

using namespace helm;
using doctest::Approx;

namespace {

Scene annulus(double inner, double outer) {
  Scene s;
  s.r_tr = outer;
  s.r_pml_minus = 0.9 * outer;
  s.obstacles.push_back(ClosedCurve::disk(Vec2::Zero(), inner));
  s.cover = make_trivial_cover(s.r_pml_minus);
  return s;
}

ExactFunction plane_wave(double k, double angle) {
  const oracle::PlaneWave w{k, angle};
  return [w](const Vec2& x) {
    PointValue p;
    p.u = w.value(x(0), x(1));
    p.grad = Eigen::Vector2cd(w.dx(x(0), x(1)), w.dy(x(0), x(1)));
    return p;
  };
}

}  // namespace

TEST_CASE("triangle rules integrate monomials exactly up to their degree") {
  for (int deg = 0; deg <= 14; ++deg) {
    const TriangleRule q = triangle_rule(deg);
    double wsum = 0;
    for (double w : q.weights) wsum += w;
    CHECK(wsum == Approx(0.5).epsilon(1e-14));
    for (int a = 0; a <= deg; ++a) {
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0;
        for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.points[i](0), a) * std::pow(q.points[i](1), b);
        CHECK(s == Approx(oracle::monomial_integral(a, b)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("Gauss-Legendre on [0, 1] is exact to degree 2n - 1") {
  for (int n = 1; n <= 10; ++n) {
    const LineRule g = gauss_legendre(n);
    for (int m = 0; m < 2 * n; ++m) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.points[i], m);
      CHECK(s == Approx(1.0 / (m + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("Lagrange bases are nodal partitions of unity") {
  for (int p = 1; p <= LagrangeBasis::kMaxDegree; ++p) {
    const LagrangeBasis B(p);
    CHECK(B.size() == (p + 1) * (p + 2) / 2);
    std::vector<double> v(B.size()), ds(B.size()), dt(B.size());
    for (int i = 0; i < B.size(); ++i) {
      B.eval(B.node_point(i), v.data(), ds.data(), dt.data());
      for (int j = 0; j < B.size(); ++j) CHECK(v[j] == Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
    }
    B.eval(Eigen::Vector2d(0.21, 0.37), v.data(), ds.data(), dt.data());
    double sv = 0, sds = 0, sdt = 0;
    for (int j = 0; j < B.size(); ++j) sv += v[j], sds += ds[j], sdt += dt[j];
    CHECK(sv == Approx(1.0));
    CHECK(std::abs(sds) < 1e-10);
    CHECK(std::abs(sdt) < 1e-10);
    // Derivatives against central differences.
    std::vector<double> vp(B.size()), vm(B.size());
    const double h = 1e-6;
    B.eval(Eigen::Vector2d(0.21 + h, 0.37), vp.data(), ds.data(), dt.data());
    B.eval(Eigen::Vector2d(0.21 - h, 0.37), vm.data(), ds.data(), dt.data());
    B.eval(Eigen::Vector2d(0.21, 0.37), v.data(), ds.data(), dt.data());
    for (int j = 0; j < B.size(); ++j) CHECK(ds[j] == Approx((vp[j] - vm[j]) / (2 * h)).epsilon(1e-6));
  }
  CHECK_THROWS(LagrangeBasis(0));
  CHECK_THROWS(LagrangeBasis(LagrangeBasis::kMaxDegree + 1));
}

TEST_CASE("generated meshes satisfy the size field and the angle bound") {
  const Scene s = annulus(0.3, 0.6);
  const SizeFunction h = [](const Vec2& x) { return 0.02 + 0.1 * std::abs(x(0)); };
  const Mesh m = generate_mesh(s, h);
  const MeshStats st = mesh_stats(m, h);
  CHECK(st.min_angle_deg >= 20.5 - 1e-9);
  CHECK(st.max_size_ratio <= 1.0 + 1e-9);
  CHECK(st.conforming);
  CHECK(st.positive_orientation);
  CHECK(st.area == Approx(kPi * (0.36 - 0.09)).epsilon(2e-3));
  for (const auto& e : m.boundary) {
    const double r = m.nodes[e.a].norm();
    CHECK(std::abs(r - (e.tag == BoundaryTag::Obstacle ? 0.3 : 0.6)) < 1e-12);
  }

  const Mesh r = refine_uniform(m);
  const MeshStats rs = mesh_stats(r);
  CHECK(rs.triangles == 4 * st.triangles);
  CHECK(rs.area == Approx(st.area).epsilon(1e-12));
  CHECK(rs.conforming);
  CHECK(rs.min_angle_deg == Approx(st.min_angle_deg).epsilon(1e-9));
}

TEST_CASE("mesh files round-trip") {
  const Mesh m = generate_mesh(annulus(0.3, 0.6), [](const Vec2&) { return 0.08; });
  const auto path = std::filesystem::temp_directory_path() / "helm_mesh_roundtrip.txt";
  write_mesh(path, m);
  const Mesh back = read_mesh(path);
  std::filesystem::remove(path);
  REQUIRE(back.num_nodes() == m.num_nodes());
  REQUIRE(back.num_triangles() == m.num_triangles());
  for (std::size_t i = 0; i < m.num_nodes(); ++i) CHECK((back.nodes[i] - m.nodes[i]).norm() == 0.0);
  CHECK(back.triangles == m.triangles);
  CHECK(back.regions == m.regions);
  CHECK(back.boundary.size() == m.boundary.size());
}

TEST_CASE("point location finds the containing element") {
  const Mesh m = generate_mesh(annulus(0.3, 0.6), [](const Vec2&) { return 0.05; });
  const PointLocator loc(m);
  for (std::size_t t = 0; t < m.num_triangles(); t += 7) {
    const auto l = loc.locate(m.centroid(t));
    REQUIRE(l);
    CHECK(l->triangle == static_cast<int>(t));
    CHECK(l->ref(0) == Approx(1.0 / 3));
  }
  CHECK_FALSE(loc.locate(Vec2(0, 0)));
}

TEST_CASE("interpolation reproduces polynomials of the space degree") {
  auto mesh = std::make_shared<const Mesh>(generate_mesh(annulus(0.3, 0.6), [](const Vec2&) { return 0.1; }));
  for (int p = 1; p <= 4; ++p) {
    auto V = std::make_shared<const FESpace>(mesh, p);
    auto poly = [p](const Vec2& x) { return cplx(std::pow(x(0) + 0.5 * x(1), p), std::pow(x(1), p)); };
    auto exact = [p](const Vec2& x) {
      PointValue v;
      const double a = x(0) + 0.5 * x(1);
      v.u = cplx(std::pow(a, p), std::pow(x(1), p));
      v.grad = Eigen::Vector2cd(cplx(p * std::pow(a, p - 1), 0), cplx(0.5 * p * std::pow(a, p - 1), p * std::pow(x(1), p - 1)));
      return v;
    };
    FieldFunction f{V, interpolate(*V, poly)};
    const NormPair e = error_norms(f, exact, whole_domain(), 3.0);
    CHECK(e.h1k < 1e-10);
  }
}

TEST_CASE("a plane wave is recovered with the expected accuracy and the Galerkin error dominates the best one") {
  const double k = 8;
  const auto exact = plane_wave(k, 0.4);
  PmlProfile off;
  off.enabled = false;
  auto mesh = std::make_shared<const Mesh>(generate_mesh(annulus(0.3, 0.6), [](const Vec2&) { return 0.04; }));
  auto V = std::make_shared<const FESpace>(mesh, 2);
  SolveReport rep;
  const FieldFunction uh = galerkin_solve(V, off, k, {}, [&](const Vec2& x, BoundaryTag) { return exact(x).u; }, &rep);
  CHECK(rep.relative_residual < 1e-10);
  const NormPair e = error_norms(uh, exact, whole_domain(), k);
  const NormPair n = error_norms(FieldFunction{V, Eigen::VectorXcd()}, exact, whole_domain(), k);
  CHECK(e.h1k / n.h1k < 5e-3);
  CHECK(e.l2 <= e.h1k);

  // A finer P3 solution acts as reference; the P2 solution cannot beat its
  // own best approximation.
  const FieldFunction ref = reference_solution(*mesh, off, k, {}, 2, {}, [&](const Vec2& x, BoundaryTag) { return exact(x).u; });
  const ReferenceComparison cmp = compare_with_reference(ref, uh, k, {whole_domain()});
  CHECK(cmp.global.galerkin >= (1 - 1e-9) * cmp.global.best);
  CHECK(cmp.regions[0].galerkin == Approx(cmp.global.galerkin));
  CHECK(cmp.global.reference == Approx(n.h1k).epsilon(1e-3));
}

TEST_CASE("source-driven problem with PML solves and assembles symmetric systems") {
  Scene s = annulus(0.5, 1.5);
  s.r_pml_minus = 1.2;
  PmlProfile pml;
  pml.r_minus = 1.2;
  pml.r_tr = 1.5;
  auto mesh = std::make_shared<const Mesh>(generate_mesh(s, [](const Vec2&) { return 0.08; }));
  const FESpace V(mesh, 2);
  const double k = 6;
  const SourceFunction f = [](const Vec2& x) { return cplx(std::exp(-20 * (x - Vec2(0.8, 0)).squaredNorm()), 0); };
  const ComplexSystem sys = assemble(V, pml, k, f);
  CHECK(sys.A.rows() == static_cast<Eigen::Index>(sys.free_dofs.size()));
  const Eigen::SparseMatrix<cplx> At = sys.A.transpose();
  CHECK((sys.A - At).norm() < 1e-10 * sys.A.norm());
  const Eigen::VectorXcd u = solve(sys);
  CHECK(u.size() == V.num_dofs());
  for (int i = 0; i < V.num_dofs(); ++i)
    if (V.dirichlet()[i]) CHECK(std::abs(u[i]) == 0.0);
}

TEST_CASE("series oracle for the sound-soft disk cancels the incident wave and solves Helmholtz") {
  const double k = 10;
  const oracle::SoundSoftDisk mie(k, 1.0, 40);
  for (int i = 0; i < 12; ++i) {
    const double t = 2 * kPi * i / 12;
    const auto v = mie(std::cos(t), std::sin(t));
    CHECK(std::abs(v.u + std::polar(1.0, k * std::cos(t))) < 1e-10);
  }
  const double h = 1e-3;
  for (const Vec2 x : {Vec2(1.5, 0.2), Vec2(-0.3, 1.7), Vec2(-2.1, -0.9)}) {
    auto u = [&](double dx, double dy) { return mie(x(0) + dx, x(1) + dy).u; };
    const cplx lap = (u(h, 0) + u(-h, 0) + u(0, h) + u(0, -h) - 4.0 * u(0, 0)) / (h * h);
    CHECK(std::abs(lap + k * k * u(0, 0)) < 1e-3 * k * k * std::abs(u(0, 0)) + 1e-4);
    const auto v = mie(x(0), x(1));
    CHECK(std::abs(v.du_dx - (u(h, 0) - u(-h, 0)) / (2 * h)) < 1e-4 * k);
    CHECK(std::abs(v.du_dy - (u(0, h) - u(0, -h)) / (2 * h)) < 1e-4 * k);
  }
}
