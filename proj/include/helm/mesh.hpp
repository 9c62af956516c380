#pragma once

#include "helm/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace helm {

enum class BoundaryTag : int { Obstacle = 0, Truncation = 1 };

struct BoundaryEdge {
  int a = 0, b = 0;
  BoundaryTag tag = BoundaryTag::Truncation;
};

// Straight-sided triangulation; triangles are counter-clockwise.
struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<RegionSet> regions;  // cover membership of each triangle's barycenter
  std::vector<BoundaryEdge> boundary;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  Vec2 centroid(std::size_t t) const;
  double area(std::size_t t) const;  // signed
  double diameter(std::size_t t) const;
  double min_angle(std::size_t t) const;  // radians
};

struct MeshStats {
  std::size_t nodes = 0, triangles = 0;
  double min_angle_deg = 0;
  double max_size_ratio = 0;  // max over elements of diameter / h(barycenter)
  double area = 0;
  bool conforming = false;
  bool positive_orientation = false;
};

using SizeFunction = std::function<double(const Vec2&)>;

struct MeshOptions {
  double min_angle_deg = 20.5;
  // Refuse size fields below this fraction of the scene diameter.
  double min_size_fraction = 1e-5;
  std::size_t max_nodes = 30'000'000;
};

// Constrained Delaunay refinement of {r < r_tr} minus the obstacles. Every
// triangle ends up with diameter <= h(centroid) and minimum angle at least
// `min_angle_deg`; boundary vertices lie on the exact curves.
Mesh generate_mesh(const Scene& scene, const SizeFunction& h, const MeshOptions& opt = {});

// Splits every triangle into four through its edge midpoints; children keep
// the parent's region tags.
Mesh refine_uniform(const Mesh& m);

// When `h` is given, max_size_ratio is computed against it.
MeshStats mesh_stats(const Mesh& m, const SizeFunction& h = {});

// Line-based text format:
//   # helm mesh format_version=1
//   nodes N        followed by N lines "x y"
//   triangles M    followed by M lines "i j k region-bitmask"
//   boundary B     followed by B lines "i j tag" (0 obstacle, 1 truncation)
void write_mesh(const std::filesystem::path& p, const Mesh& m);
Mesh read_mesh(const std::filesystem::path& p);

// Uniform bucket grid over triangle bounding boxes.
class PointLocator {
 public:
  struct Location {
    int triangle = -1;
    Eigen::Vector2d ref = Eigen::Vector2d::Zero();  // reference coordinates (s, t)
  };

  explicit PointLocator(const Mesh& m, double tol = 1e-10);
  std::optional<Location> locate(const Vec2& x, int hint = -1) const;

 private:
  bool try_triangle(int t, const Vec2& x, Location& out) const;

  const Mesh* mesh_;
  double tol_;
  Vec2 lo_ = Vec2::Zero();
  double cell_ = 1;
  int nx_ = 1, ny_ = 1;
  std::vector<int> start_, items_;
};

}  // namespace helm
