#include "helm/fe_space.hpp"

#include "helm/io.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cstdint>
#include <unordered_map>

namespace helm {

namespace {

// R_m(l) = prod_{j<m} (p l - j) / (j + 1) and its derivative.
void silvester(int p, int m, double l, double& r, double& dr) {
  r = 1;
  dr = 0;
  for (int j = 0; j < m; ++j) {
    const double f = (p * l - j) / (j + 1);
    const double df = double(p) / (j + 1);
    dr = dr * f + r * df;
    r *= f;
  }
}

}  // namespace

LagrangeBasis::LagrangeBasis(int p) : p_(p) {
  if (p < 1 || p > kMaxDegree)
    throw DomainError("Lagrange degree must lie in [1, " + std::to_string(kMaxDegree) + "]");
  nodes_.push_back({p, 0, 0});
  nodes_.push_back({0, p, 0});
  nodes_.push_back({0, 0, p});
  const int ends[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (const auto& e : ends)
    for (int j = 1; j < p; ++j) {
      std::array<int, 3> n{0, 0, 0};
      n[e[0]] = p - j;
      n[e[1]] = j;
      nodes_.push_back(n);
    }
  for (int i1 = 1; i1 < p; ++i1)
    for (int i2 = 1; i1 + i2 < p; ++i2) nodes_.push_back({p - i1 - i2, i1, i2});
}

Eigen::Vector2d LagrangeBasis::node_point(int i) const {
  const auto& n = nodes_[static_cast<std::size_t>(i)];
  return Eigen::Vector2d(double(n[1]) / p_, double(n[2]) / p_);
}

void LagrangeBasis::eval(const Eigen::Vector2d& ref, double* values, double* ds, double* dt) const {
  const double l[3] = {1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
  double R[3][kMaxDegree + 1], D[3][kMaxDegree + 1];
  for (int a = 0; a < 3; ++a)
    for (int m = 0; m <= p_; ++m) silvester(p_, m, l[a], R[a][m], D[a][m]);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    const double r0 = R[0][n[0]], r1 = R[1][n[1]], r2 = R[2][n[2]];
    if (values) values[i] = r0 * r1 * r2;
    const double d0 = D[0][n[0]] * r1 * r2, d1 = r0 * D[1][n[1]] * r2, d2 = r0 * r1 * D[2][n[2]];
    if (ds) ds[i] = d1 - d0;
    if (dt) dt[i] = d2 - d0;
  }
}

ElementMap::ElementMap(const Mesh& m, std::size_t t) {
  const auto& v = m.triangles[t];
  x0 = m.nodes[v[0]];
  J.col(0) = m.nodes[v[1]] - x0;
  J.col(1) = m.nodes[v[2]] - x0;
  det = J.determinant();
  JinvT = J.inverse().transpose();
}

FESpace::FESpace(std::shared_ptr<const Mesh> mesh, int p) : mesh_(std::move(mesh)), basis_(p) {
  const Mesh& m = *mesh_;
  const int nloc = basis_.size();
  const int per_edge = p - 1;
  const int per_cell = (p - 1) * (p - 2) / 2;
  const int nv = static_cast<int>(m.nodes.size());

  std::unordered_map<std::uint64_t, int> edge_id;
  edge_id.reserve(3 * m.triangles.size());
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
  };
  for (const auto& t : m.triangles)
    for (int i = 0; i < 3; ++i) edge_id.try_emplace(key(t[i], t[(i + 1) % 3]), static_cast<int>(edge_id.size()));
  const int ne = static_cast<int>(edge_id.size());
  const int edge_base = nv, cell_base = nv + ne * per_edge;
  ndofs_ = cell_base + static_cast<int>(m.triangles.size()) * per_cell;

  dofs_.resize(m.triangles.size() * static_cast<std::size_t>(nloc));
  points_.assign(static_cast<std::size_t>(ndofs_), Vec2::Zero());
  const int ends[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& v = m.triangles[t];
    int* d = &dofs_[t * static_cast<std::size_t>(nloc)];
    int k = 0;
    for (int i = 0; i < 3; ++i) d[k++] = v[i];
    for (const auto& e : ends) {
      const int a = v[e[0]], b = v[e[1]];
      const int base = edge_base + edge_id.at(key(a, b)) * per_edge;
      for (int j = 1; j < p; ++j) d[k++] = base + (a < b ? j : p - j) - 1;
    }
    for (int j = 0; j < per_cell; ++j) d[k++] = cell_base + static_cast<int>(t) * per_cell + j;
    const ElementMap map(m, t);
    for (int i = 0; i < nloc; ++i) points_[static_cast<std::size_t>(d[i])] = map(basis_.node_point(i));
  }

  dirichlet_.assign(static_cast<std::size_t>(ndofs_), 0);
  bd_tag_.assign(static_cast<std::size_t>(ndofs_), -1);
  for (const auto& e : m.boundary) {
    const int tag = static_cast<int>(e.tag);
    for (int v : {e.a, e.b}) {
      dirichlet_[static_cast<std::size_t>(v)] = 1;
      bd_tag_[static_cast<std::size_t>(v)] = tag;
    }
    auto it = edge_id.find(key(e.a, e.b));
    if (it == edge_id.end()) throw DomainError("boundary edge is not an edge of the mesh");
    for (int j = 0; j < per_edge; ++j) {
      const std::size_t dof = static_cast<std::size_t>(edge_base + it->second * per_edge + j);
      dirichlet_[dof] = 1;
      bd_tag_[dof] = tag;
    }
  }
}

PointValue FieldFunction::eval_local(std::size_t t, const Eigen::Vector2d& ref) const {
  const FESpace& S = *space;
  const int n = S.local_size();
  double v[64], ds[64], dt[64];
  S.basis().eval(ref, v, ds, dt);
  const ElementMap map(S.mesh(), t);
  const int* d = S.element_dofs(t);
  PointValue pv;
  Eigen::Vector2cd gref = Eigen::Vector2cd::Zero();
  for (int i = 0; i < n; ++i) {
    const cplx c = coeffs[d[i]];
    pv.u += c * v[i];
    gref += c * Eigen::Vector2d(ds[i], dt[i]);
  }
  pv.grad = map.JinvT * gref;
  return pv;
}

Eigen::VectorXcd interpolate(const FESpace& space, const std::function<cplx(const Vec2&)>& f) {
  Eigen::VectorXcd c(space.num_dofs());
  for (int i = 0; i < space.num_dofs(); ++i) c[i] = f(space.dof_points()[static_cast<std::size_t>(i)]);
  return c;
}

void write_field_csv(const std::filesystem::path& p, const FieldFunction& f) {
  CsvWriter w(p, {"x", "y", "re", "im"});
  const auto& pts = f.space->dof_points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    w.row({pts[i].x(), pts[i].y(), f.coeffs[static_cast<Eigen::Index>(i)].real(),
           f.coeffs[static_cast<Eigen::Index>(i)].imag()});
}

}  // namespace helm
