#pragma once

#include "helm/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

namespace helm {

// Degree-p Lagrange shape functions on the reference triangle with
// barycentric coordinates (1 - s - t, s, t). Nodes: the three vertices, then
// the interior nodes of edges (0,1), (1,2), (2,0) running from the first to
// the second vertex, then the cell interior.
class LagrangeBasis {
 public:
  static constexpr int kMaxDegree = 6;

  explicit LagrangeBasis(int p);

  int degree() const { return p_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<std::array<int, 3>>& nodes() const { return nodes_; }
  Eigen::Vector2d node_point(int i) const;

  // values[i], ds[i] = d/ds, dt[i] = d/dt; arrays of length size().
  void eval(const Eigen::Vector2d& ref, double* values, double* ds, double* dt) const;

 private:
  int p_;
  std::vector<std::array<int, 3>> nodes_;
};

// Affine map from the reference triangle.
struct ElementMap {
  Vec2 x0 = Vec2::Zero();
  Eigen::Matrix2d J = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d JinvT = Eigen::Matrix2d::Identity();
  double det = 1;

  ElementMap() = default;
  ElementMap(const Mesh& m, std::size_t t);
  Vec2 operator()(const Eigen::Vector2d& ref) const { return x0 + J * ref; }
  Eigen::Vector2d inverse(const Vec2& x) const { return J.inverse() * (x - x0); }
};

class FESpace {
 public:
  FESpace(std::shared_ptr<const Mesh> mesh, int p);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  int degree() const { return basis_.degree(); }
  const LagrangeBasis& basis() const { return basis_; }
  int num_dofs() const { return ndofs_; }
  int local_size() const { return basis_.size(); }
  const int* element_dofs(std::size_t t) const { return &dofs_[t * static_cast<std::size_t>(local_size())]; }
  // True for DoFs on the obstacle or truncation boundary.
  const std::vector<char>& dirichlet() const { return dirichlet_; }
  // Boundary tag of each DoF, -1 for interior ones.
  const std::vector<int>& boundary_tag() const { return bd_tag_; }
  const std::vector<Vec2>& dof_points() const { return points_; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  LagrangeBasis basis_;
  int ndofs_ = 0;
  std::vector<int> dofs_;
  std::vector<char> dirichlet_;
  std::vector<int> bd_tag_;
  std::vector<Vec2> points_;
};

struct PointValue {
  cplx u{0, 0};
  Eigen::Vector2cd grad = Eigen::Vector2cd::Zero();
};

using ExactFunction = std::function<PointValue(const Vec2&)>;

struct FieldFunction {
  std::shared_ptr<const FESpace> space;
  Eigen::VectorXcd coeffs;

  PointValue eval_local(std::size_t t, const Eigen::Vector2d& ref) const;
};

// Nodal interpolant of `f` (only the value is used).
Eigen::VectorXcd interpolate(const FESpace& space, const std::function<cplx(const Vec2&)>& f);

// CSV x, y, re, im at the DoF points.
void write_field_csv(const std::filesystem::path& p, const FieldFunction& f);

}  // namespace helm
