#pragma once

#include "helm/common.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace helm {

// Boundary piece of a closed curve, traversed counter-clockwise so that the
// outward normal of the enclosed obstacle is the tangent rotated by -90 deg.
struct CurvePiece {
  enum class Kind { Line, Arc } kind = Kind::Line;
  Vec2 a = Vec2::Zero(), b = Vec2::Zero();  // line endpoints
  Vec2 center = Vec2::Zero();               // arc data
  double radius = 0.0, theta0 = 0.0, theta1 = 0.0;
  double length = 0.0;

  Vec2 point(double s) const;   // s in [0, length]
  Vec2 normal(double s) const;  // outward unit normal
};

struct Hit {
  double t = 0.0;
  Vec2 point = Vec2::Zero();
  Vec2 normal = Vec2::Zero();
};

inline constexpr double kTangencyTol = 1e-8;

// Rounded rectangle (corner radius r <= min half-width). A disk is the case
// half = (R, R), corner = R.
class ClosedCurve {
 public:
  ClosedCurve() = default;
  ClosedCurve(Vec2 center, Vec2 half, double corner);

  static ClosedCurve disk(Vec2 center, double radius) { return ClosedCurve(center, Vec2(radius, radius), radius); }

  const Vec2& center() const { return center_; }
  const Vec2& half() const { return half_; }
  double corner() const { return corner_; }
  const std::vector<CurvePiece>& pieces() const { return pieces_; }
  double length() const { return length_; }
  double bounding_radius() const { return bound_r_; }

  // Arc-length parameterization, s taken modulo the perimeter.
  Vec2 point(double s) const;
  Vec2 normal(double s) const;

  double signed_distance(const Vec2& p) const;
  bool contains(const Vec2& p) const { return signed_distance(p) < 0.0; }

  // Smallest t > eps with origin + t dir on the curve. Grazing hits with
  // |dir . n| < kTangencyTol are passed through.
  std::optional<Hit> intersect(const Vec2& origin, const Vec2& dir, double eps) const;

  // Closed polyline through curve points with spacing at most `max_len`;
  // every arc gets at least `min_arc_pieces` pieces. Returns arc-length
  // parameters of the vertices (CCW).
  std::vector<double> sample_parameters(double max_len, int min_arc_pieces = 4) const;

 private:
  Vec2 center_ = Vec2::Zero(), half_ = Vec2::Zero();
  double corner_ = 0.0;
  std::vector<CurvePiece> pieces_;
  std::vector<double> offsets_;
  double length_ = 0.0;
  double bound_r_ = 0.0;
};

std::optional<Hit> boundary_hit(const ClosedCurve& curve, const Vec2& origin, const Vec2& dir, double eps);

enum class Region : int { K = 0, V = 1, I = 2, P = 3 };
inline constexpr std::array<Region, 4> kAllRegions{Region::K, Region::V, Region::I, Region::P};
const char* region_name(Region r);
Region region_from_name(const std::string& s);

// Bitmask over {K, V, I, P} (bit i for Region i).
struct RegionSet {
  std::uint8_t bits = 0;
  bool has(Region r) const { return bits & (1u << static_cast<int>(r)); }
  void add(Region r) { bits |= static_cast<std::uint8_t>(1u << static_cast<int>(r)); }
  bool empty() const { return bits == 0; }
  friend bool operator==(RegionSet a, RegionSet b) { return a.bits == b.bits; }
};

struct Polygon {
  std::vector<Vec2> v;
  double area() const;  // signed, positive for CCW
  bool contains(const Vec2& p) const;
};

// Membership described by polygons: inside some `include`, outside every
// `exclude`. Excludes are convex.
struct RegionOutline {
  std::vector<Polygon> include;
  std::vector<Polygon> exclude;
  bool contains(const Vec2& p) const;
  double area() const;
};

// Parametric overlapping cover.
//   K: inside the cavity box
//   V: y outside (vis_lo, vis_hi), r < inner_radius
//   I: x outside (inv_lo, inv_hi), r < inner_radius
//   P: r > pml_radius
// Without a cavity K and V are empty and I is the whole disk r < inner_radius.
struct RegionCover {
  bool has_cavity = false;
  double box_x0 = 0, box_x1 = 0, box_y0 = 0, box_y1 = 0;
  double vis_lo = 0, vis_hi = 0;
  double inv_lo = 0, inv_hi = 0;
  double inner_radius = 0;
  double pml_radius = 0;
  double delta = 0;  // informational: offset used to build the bands

  bool in(Region r, const Vec2& x) const;
  // Euclidean distance from x to the region's closure (0 inside).
  double distance(Region r, const Vec2& x) const;
};

struct Scene {
  std::vector<ClosedCurve> obstacles;
  double r_pml_minus = 2.2;
  double r_tr = 2.7;
  RegionCover cover;

  double diameter() const { return 2.0 * r_tr; }
  double hit_eps() const { return 1e-9 * diameter(); }
  bool inside_obstacle(const Vec2& x) const;
  bool in_domain(const Vec2& x) const { return x.norm() < r_tr && !inside_obstacle(x); }
  bool in_region(Region r, const Vec2& x) const { return in_domain(x) && cover.in(r, x); }
  RegionOutline outline(Region r, int circle_pieces = 512) const;

  void validate() const;
};

// Fixed dimensions of the two-wall benchmark.
struct TwoWallDims {
  static double L1();
  static double L2();
  static double X1();
  static double gap();
  static double delta();
};

Scene build_two_wall_scene(bool shifted, std::optional<double> shift = std::nullopt);

// Cover for an axis-aligned cavity box [x0, x1] x [y0, y1]; bands are offset
// inwards by delta as in the two-wall construction.
RegionCover make_box_cover(double x0, double x1, double y0, double y1, double delta, double r_pml_minus);
RegionCover make_trivial_cover(double r_pml_minus);

RegionSet classify_point(const Scene& scene, const Vec2& x);

// Convex hull of a point set (CCW, no collinear points).
Polygon convex_hull(std::vector<Vec2> pts);
Polygon polygonize(const ClosedCurve& c, int pieces);

nlohmann::json scene_to_json(const Scene& s);
Scene scene_from_json(const nlohmann::json& j);

}  // namespace helm
