#include "helm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace helm {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double wrap_angle(double a, double lo) {
  // returns a + 2 pi m in [lo, lo + 2 pi)
  const double two_pi = 2 * kPi;
  double r = std::fmod(a - lo, two_pi);
  if (r < 0) r += two_pi;
  return lo + r;
}

CurvePiece make_line(const Vec2& a, const Vec2& b) {
  CurvePiece p;
  p.kind = CurvePiece::Kind::Line;
  p.a = a;
  p.b = b;
  p.length = (b - a).norm();
  return p;
}

CurvePiece make_arc(const Vec2& c, double r, double t0, double t1) {
  CurvePiece p;
  p.kind = CurvePiece::Kind::Arc;
  p.center = c;
  p.radius = r;
  p.theta0 = t0;
  p.theta1 = t1;
  p.length = r * (t1 - t0);
  return p;
}

// Keeps the part of `poly` with n . x >= c.
Polygon clip_halfplane(const Polygon& poly, const Vec2& n, double c) {
  Polygon out;
  const std::size_t m = poly.v.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& p = poly.v[i];
    const Vec2& q = poly.v[(i + 1) % m];
    const double dp = n.dot(p) - c, dq = n.dot(q) - c;
    if (dp >= 0) out.v.push_back(p);
    if ((dp >= 0) != (dq >= 0)) {
      const double t = dp / (dp - dq);
      out.v.push_back(p + t * (q - p));
    }
  }
  return out;
}

// Intersection of an arbitrary polygon with a convex CCW polygon.
Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  Polygon out = subject;
  const std::size_t m = clip.v.size();
  for (std::size_t i = 0; i < m && !out.v.empty(); ++i) {
    const Vec2& a = clip.v[i];
    const Vec2& b = clip.v[(i + 1) % m];
    const Vec2 e = b - a;
    const Vec2 n(-e.y(), e.x());  // inward for CCW
    out = clip_halfplane(out, n, n.dot(a));
  }
  return out;
}

Polygon circle_polygon(double R, int pieces) {
  Polygon p;
  p.v.reserve(pieces);
  for (int i = 0; i < pieces; ++i) {
    const double t = 2 * kPi * i / pieces;
    p.v.emplace_back(R * std::cos(t), R * std::sin(t));
  }
  return p;
}

Polygon box_polygon(double x0, double x1, double y0, double y1) {
  Polygon p;
  p.v = {Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)};
  return p;
}

// Distance from x to {n . y >= c} intersected with the disk |y| <= R.
double distance_halfplane_disk(const Vec2& x, const Vec2& n, double c, double R) {
  const double r = x.norm();
  const bool in_half = n.dot(x) >= c;
  if (in_half && r <= R) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  if (r > R) {
    const Vec2 proj = x * (R / r);
    if (n.dot(proj) >= c) best = std::min(best, r - R);
  }
  if (!in_half) {
    const Vec2 proj = x - (n.dot(x) - c) * n;
    if (proj.norm() <= R) best = std::min(best, c - n.dot(x));
  }
  // corners: line n . y = c meets the circle
  if (std::abs(c) <= R) {
    const Vec2 foot = c * n;
    const Vec2 t(-n.y(), n.x());
    const double s = std::sqrt(std::max(0.0, R * R - c * c));
    best = std::min(best, (x - (foot + s * t)).norm());
    best = std::min(best, (x - (foot - s * t)).norm());
  }
  return best;
}

}  // namespace

Vec2 CurvePiece::point(double s) const {
  if (kind == Kind::Line) return a + (length > 0 ? s / length : 0.0) * (b - a);
  const double t = theta0 + s / radius;
  return center + radius * Vec2(std::cos(t), std::sin(t));
}

Vec2 CurvePiece::normal(double s) const {
  if (kind == Kind::Line) {
    const Vec2 t = (b - a).normalized();
    return Vec2(t.y(), -t.x());
  }
  const double t = theta0 + s / radius;
  return Vec2(std::cos(t), std::sin(t));
}

ClosedCurve::ClosedCurve(Vec2 center, Vec2 half, double corner) : center_(center), half_(half), corner_(corner) {
  if (!(half.x() > 0) || !(half.y() > 0)) throw ConfigError("obstacle half-widths must be positive");
  if (!(corner > 0) || corner > std::min(half.x(), half.y()) * (1 + 1e-12))
    throw ConfigError("corner radius must lie in (0, min half-width]");
  corner_ = std::min(corner, std::min(half.x(), half.y()));
  const double r = corner_;
  const double cx = center.x(), cy = center.y(), hx = half.x(), hy = half.y();
  auto add_line = [&](Vec2 a, Vec2 b) {
    if ((b - a).norm() > 1e-14 * (hx + hy)) pieces_.push_back(make_line(a, b));
  };
  add_line(Vec2(cx - hx + r, cy - hy), Vec2(cx + hx - r, cy - hy));
  pieces_.push_back(make_arc(Vec2(cx + hx - r, cy - hy + r), r, -kPi / 2, 0));
  add_line(Vec2(cx + hx, cy - hy + r), Vec2(cx + hx, cy + hy - r));
  pieces_.push_back(make_arc(Vec2(cx + hx - r, cy + hy - r), r, 0, kPi / 2));
  add_line(Vec2(cx + hx - r, cy + hy), Vec2(cx - hx + r, cy + hy));
  pieces_.push_back(make_arc(Vec2(cx - hx + r, cy + hy - r), r, kPi / 2, kPi));
  add_line(Vec2(cx - hx, cy + hy - r), Vec2(cx - hx, cy - hy + r));
  pieces_.push_back(make_arc(Vec2(cx - hx + r, cy - hy + r), r, kPi, 3 * kPi / 2));

  offsets_.clear();
  length_ = 0;
  for (const auto& p : pieces_) {
    offsets_.push_back(length_);
    length_ += p.length;
  }
  bound_r_ = Vec2(hx - r, hy - r).norm() + r;
}

Vec2 ClosedCurve::point(double s) const {
  s = std::fmod(s, length_);
  if (s < 0) s += length_;
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), s);
  const std::size_t i = static_cast<std::size_t>(std::distance(offsets_.begin(), it)) - 1;
  return pieces_[i].point(std::min(s - offsets_[i], pieces_[i].length));
}

Vec2 ClosedCurve::normal(double s) const {
  s = std::fmod(s, length_);
  if (s < 0) s += length_;
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), s);
  const std::size_t i = static_cast<std::size_t>(std::distance(offsets_.begin(), it)) - 1;
  return pieces_[i].normal(std::min(s - offsets_[i], pieces_[i].length));
}

double ClosedCurve::signed_distance(const Vec2& p) const {
  const Vec2 inner = half_ - Vec2(corner_, corner_);
  const Vec2 q = (p - center_).cwiseAbs() - inner;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(std::max(q.x(), q.y()), 0.0);
  return outside + inside - corner_;
}

std::optional<Hit> ClosedCurve::intersect(const Vec2& o, const Vec2& d, double eps) const {
  // Cheap rejection with the bounding circle.
  const Vec2 oc = o - center_;
  const double b = oc.dot(d);
  const double cc = oc.squaredNorm() - bound_r_ * bound_r_;
  if (cc > 0 && (b > 0 || b * b < cc)) return std::nullopt;

  std::optional<Hit> best;
  auto consider = [&](double t, const Vec2& n) {
    if (!(t > eps)) return;
    if (best && t >= best->t) return;
    if (std::abs(d.dot(n)) < kTangencyTol) return;
    best = Hit{t, o + t * d, n};
  };
  for (const auto& p : pieces_) {
    if (p.kind == CurvePiece::Kind::Line) {
      const Vec2 e = p.b - p.a;
      const double den = cross(d, e);
      if (den == 0.0) continue;
      const Vec2 w = p.a - o;
      const double t = cross(w, e) / den;
      const double s = cross(w, d) / den;
      if (s < 0.0 || s > 1.0) continue;
      const Vec2 te = e / p.length;
      consider(t, Vec2(te.y(), -te.x()));
    } else {
      const Vec2 w = o - p.center;
      const double bb = w.dot(d);
      const double c2 = w.squaredNorm() - p.radius * p.radius;
      const double disc = bb * bb - c2;
      if (disc < 0) continue;
      const double sq = std::sqrt(disc);
      for (double t : {-bb - sq, -bb + sq}) {
        const Vec2 x = o + t * d;
        const Vec2 rel = x - p.center;
        const double ang = wrap_angle(std::atan2(rel.y(), rel.x()), p.theta0 - 1e-12);
        if (ang > p.theta1 + 1e-12) continue;
        consider(t, rel / p.radius);
      }
    }
  }
  return best;
}

std::vector<double> ClosedCurve::sample_parameters(double max_len, int min_arc_pieces) const {
  if (!(max_len > 0)) throw std::invalid_argument("sample spacing must be positive");
  std::vector<double> s;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    int n = static_cast<int>(std::ceil(p.length / max_len));
    if (p.kind == CurvePiece::Kind::Arc) n = std::max(n, min_arc_pieces);
    n = std::max(n, 1);
    for (int j = 0; j < n; ++j) s.push_back(offsets_[i] + p.length * j / n);
  }
  return s;
}

std::optional<Hit> boundary_hit(const ClosedCurve& curve, const Vec2& origin, const Vec2& dir, double eps) {
  return curve.intersect(origin, dir, eps);
}

const char* region_name(Region r) {
  switch (r) {
    case Region::K: return "K";
    case Region::V: return "V";
    case Region::I: return "I";
    case Region::P: return "P";
  }
  return "?";
}

Region region_from_name(const std::string& s) {
  if (s == "K") return Region::K;
  if (s == "V") return Region::V;
  if (s == "I") return Region::I;
  if (s == "P") return Region::P;
  throw ConfigError("unknown region tag '" + s + "'");
}

double Polygon::area() const {
  double a = 0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

bool Polygon::contains(const Vec2& p) const {
  bool in = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    const Vec2& a = v[i];
    const Vec2& b = v[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) in = !in;
    }
  }
  return in;
}

bool RegionOutline::contains(const Vec2& p) const {
  bool in = false;
  for (const auto& q : include) in = in || q.contains(p);
  if (!in) return false;
  for (const auto& q : exclude)
    if (q.contains(p)) return false;
  return true;
}

double RegionOutline::area() const {
  double a = 0;
  for (const auto& inc : include) {
    a += std::abs(inc.area());
    for (const auto& exc : exclude) {
      const Polygon cut = clip_convex(inc, exc);
      if (cut.v.size() >= 3) a -= std::abs(cut.area());
    }
  }
  return a;
}

bool RegionCover::in(Region r, const Vec2& x) const {
  const double rad = x.norm();
  switch (r) {
    case Region::K:
      return has_cavity && x.x() > box_x0 && x.x() < box_x1 && x.y() > box_y0 && x.y() < box_y1;
    case Region::V:
      return has_cavity && rad < inner_radius && (x.y() > vis_hi || x.y() < vis_lo);
    case Region::I:
      if (!has_cavity) return rad < inner_radius;
      return rad < inner_radius && (x.x() > inv_hi || x.x() < inv_lo);
    case Region::P:
      return rad > pml_radius;
  }
  return false;
}

double RegionCover::distance(Region r, const Vec2& x) const {
  const double inf = std::numeric_limits<double>::infinity();
  switch (r) {
    case Region::K: {
      if (!has_cavity) return inf;
      const double dx = std::max({box_x0 - x.x(), 0.0, x.x() - box_x1});
      const double dy = std::max({box_y0 - x.y(), 0.0, x.y() - box_y1});
      return std::hypot(dx, dy);
    }
    case Region::V:
      if (!has_cavity) return inf;
      return std::min(distance_halfplane_disk(x, Vec2(0, 1), vis_hi, inner_radius),
                      distance_halfplane_disk(x, Vec2(0, -1), -vis_lo, inner_radius));
    case Region::I:
      if (!has_cavity) return std::max(0.0, x.norm() - inner_radius);
      return std::min(distance_halfplane_disk(x, Vec2(1, 0), inv_hi, inner_radius),
                      distance_halfplane_disk(x, Vec2(-1, 0), -inv_lo, inner_radius));
    case Region::P:
      return std::max(0.0, pml_radius - x.norm());
  }
  return inf;
}

bool Scene::inside_obstacle(const Vec2& x) const {
  for (const auto& o : obstacles)
    if (o.contains(x)) return true;
  return false;
}

RegionOutline Scene::outline(Region r, int pieces) const {
  RegionOutline out;
  const Polygon disk = circle_polygon(cover.inner_radius, pieces);
  switch (r) {
    case Region::K:
      if (cover.has_cavity) out.include.push_back(box_polygon(cover.box_x0, cover.box_x1, cover.box_y0, cover.box_y1));
      break;
    case Region::V:
      if (cover.has_cavity) {
        out.include.push_back(clip_halfplane(disk, Vec2(0, 1), cover.vis_hi));
        out.include.push_back(clip_halfplane(disk, Vec2(0, -1), -cover.vis_lo));
      }
      break;
    case Region::I:
      if (cover.has_cavity) {
        out.include.push_back(clip_halfplane(disk, Vec2(1, 0), cover.inv_hi));
        out.include.push_back(clip_halfplane(disk, Vec2(-1, 0), -cover.inv_lo));
      } else {
        out.include.push_back(disk);
      }
      break;
    case Region::P:
      out.include.push_back(circle_polygon(r_tr, pieces));
      out.exclude.push_back(circle_polygon(cover.pml_radius, pieces));
      return out;
  }
  for (const auto& o : obstacles) out.exclude.push_back(polygonize(o, pieces));
  return out;
}

void Scene::validate() const {
  if (!(r_pml_minus > 0) || !(r_tr > r_pml_minus)) throw ConfigError("scene radii must satisfy 0 < r_pml_minus < r_tr");
  for (const auto& o : obstacles) {
    // farthest point of a rounded rectangle from the origin lies on a corner arc
    const Vec2 inner = o.center().cwiseAbs() + o.half() - Vec2(o.corner(), o.corner());
    const double reach = inner.norm() + o.corner();
    if (!(reach < r_pml_minus)) throw ConfigError("obstacle reaches the PML onset radius");
  }
  if (!(cover.pml_radius > r_pml_minus) || !(cover.pml_radius < r_tr))
    throw ConfigError("cover P threshold must lie strictly inside the PML annulus");
  if (!(cover.inner_radius < r_tr)) throw ConfigError("cover inner radius must be below r_tr");
  if (!(cover.inner_radius > cover.pml_radius))
    throw ConfigError("cover inner radius must exceed the P threshold so the cover overlaps");
}

double TwoWallDims::L1() { return 0.7 * std::sqrt(2.0); }
double TwoWallDims::L2() { return 1.3 * std::sqrt(2.0); }
double TwoWallDims::X1() { return 1.5 * std::sqrt(2.0); }
double TwoWallDims::gap() { return X1() - L1(); }
double TwoWallDims::delta() { return std::sqrt(2.0) / 8.0; }

RegionCover make_box_cover(double x0, double x1, double y0, double y1, double delta, double r_pml_minus) {
  RegionCover c;
  c.has_cavity = true;
  c.box_x0 = x0 - delta;
  c.box_x1 = x1 + delta;
  c.box_y0 = y0;
  c.box_y1 = y1;
  c.vis_lo = y0 + delta;
  c.vis_hi = y1 - delta;
  c.inv_lo = x0 - delta;
  c.inv_hi = x1 + delta;
  c.pml_radius = 1.05 * r_pml_minus;
  c.inner_radius = 1.05 * r_pml_minus + 0.1;
  c.delta = delta;
  return c;
}

RegionCover make_trivial_cover(double r_pml_minus) {
  RegionCover c;
  c.has_cavity = false;
  c.pml_radius = 1.05 * r_pml_minus;
  c.inner_radius = 1.05 * r_pml_minus + 0.1;
  return c;
}

Scene build_two_wall_scene(bool shifted, std::optional<double> shift) {
  using D = TwoWallDims;
  Scene s;
  s.r_pml_minus = 2.2;
  s.r_tr = 2.7;
  const double up = shifted ? shift.value_or(0.3 * D::L2()) : 0.0;
  const Vec2 half(D::L1() / 2, D::L2() / 2);
  const double corner = 0.05 * D::L1();
  s.obstacles.emplace_back(Vec2(-D::X1() / 2, 0.0), half, corner);
  s.obstacles.emplace_back(Vec2(D::X1() / 2, up), half, corner);
  const double y0 = std::max(-D::L2() / 2, -D::L2() / 2 + up);
  const double y1 = std::min(D::L2() / 2, D::L2() / 2 + up);
  if (!(y1 > y0)) throw ConfigError("shift leaves no overlap between the walls");
  s.cover = make_box_cover(-D::gap() / 2, D::gap() / 2, y0, y1, D::delta(), s.r_pml_minus);
  s.validate();
  return s;
}

RegionSet classify_point(const Scene& scene, const Vec2& x) {
  if (scene.inside_obstacle(x)) throw DomainError("point lies inside an obstacle");
  if (!(x.norm() < scene.r_tr)) throw DomainError("point lies outside the truncation disk");
  RegionSet s;
  for (Region r : kAllRegions)
    if (scene.cover.in(r, x)) s.add(r);
  return s;
}

Polygon convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  Polygon h;
  if (pts.size() < 3) {
    h.v = pts;
    return h;
  }
  std::vector<Vec2> lo, hi;
  for (const auto& p : pts) {
    while (lo.size() >= 2 && cross(lo[lo.size() - 1] - lo[lo.size() - 2], p - lo[lo.size() - 2]) <= 0) lo.pop_back();
    lo.push_back(p);
  }
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (hi.size() >= 2 && cross(hi[hi.size() - 1] - hi[hi.size() - 2], *it - hi[hi.size() - 2]) <= 0) hi.pop_back();
    hi.push_back(*it);
  }
  lo.pop_back();
  hi.pop_back();
  h.v = lo;
  h.v.insert(h.v.end(), hi.begin(), hi.end());
  return h;
}

Polygon polygonize(const ClosedCurve& c, int pieces) {
  Polygon p;
  for (double s : c.sample_parameters(c.length() / pieces, 8)) p.v.push_back(c.point(s));
  return p;
}

}  // namespace helm
