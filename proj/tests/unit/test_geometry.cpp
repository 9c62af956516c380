#include <doctest.h>

#include "helm/geometry.hpp"

#include <random>

using namespace helm;
using doctest::Approx;

TEST_CASE("disk intersection from the left hits at distance 2 with outward normal") {
  const ClosedCurve d = ClosedCurve::disk(Vec2::Zero(), 1.0);
  const auto h = d.intersect(Vec2(-3, 0), Vec2(1, 0), 1e-12);
  REQUIRE(h);
  CHECK(h->t == Approx(2.0).epsilon(1e-12));
  CHECK(h->point.x() == Approx(-1.0));
  CHECK(h->normal.x() == Approx(-1.0));
  CHECK(std::abs(h->normal.y()) < 1e-12);
}

TEST_CASE("grazing ray passes a disk tangentially") {
  const ClosedCurve d = ClosedCurve::disk(Vec2::Zero(), 1.0);
  CHECK_FALSE(d.intersect(Vec2(-3, 1), Vec2(1, 0), 1e-12));
}

TEST_CASE("rounded rectangle signed distance") {
  const ClosedCurve r(Vec2(1, 2), Vec2(0.5, 1.0), 0.1);
  CHECK(r.signed_distance(Vec2(1, 2)) == Approx(-0.5));
  CHECK(r.signed_distance(Vec2(2, 2)) == Approx(0.5));
  CHECK(r.signed_distance(Vec2(1, 3.25)) == Approx(0.25));
  // Corner: distance to the corner arc centre minus the radius.
  const Vec2 c(1.4, 2.9);
  CHECK(r.signed_distance(c + Vec2(0.3, 0.4)) == Approx(0.5 - 0.1));
  CHECK(r.length() == Approx(2 * (0.8 + 1.8) + 2 * kPi * 0.1));
}

TEST_CASE("curve parameterization stays on the curve with unit outward normals") {
  const ClosedCurve r(Vec2(0.3, -0.2), Vec2(0.7, 0.4), 0.15);
  for (int i = 0; i < 200; ++i) {
    const double s = r.length() * i / 200.0;
    CHECK(std::abs(r.signed_distance(r.point(s))) < 1e-12);
    CHECK(r.normal(s).norm() == Approx(1.0));
    CHECK(r.signed_distance(r.point(s) + 1e-6 * r.normal(s)) > 0);
  }
}

TEST_CASE("two-wall scene: gap, cavity and cover") {
  const Scene s = build_two_wall_scene(false);
  s.validate();
  REQUIRE(s.obstacles.size() == 2);
  const double faces = (s.obstacles[1].center().x() - s.obstacles[1].half().x()) -
                       (s.obstacles[0].center().x() + s.obstacles[0].half().x());
  CHECK(faces == Approx(TwoWallDims::gap()));
  CHECK(TwoWallDims::gap() == Approx(20 * kPi / 55.54).epsilon(1e-3));
  CHECK(s.cover.in(Region::K, Vec2::Zero()));
  CHECK(s.cover.in(Region::P, Vec2(2.5, 0)));
  CHECK_FALSE(s.cover.in(Region::P, Vec2(0.5, 0)));
  CHECK(s.in_domain(Vec2::Zero()));
  CHECK_FALSE(s.in_domain(Vec2(3, 0)));
  CHECK_FALSE(s.in_domain(s.obstacles[0].center()));
}

TEST_CASE("shifted two-wall scene moves only the right obstacle") {
  const Scene a = build_two_wall_scene(false), b = build_two_wall_scene(true, 0.2);
  CHECK((a.obstacles[0].center() - b.obstacles[0].center()).norm() < 1e-15);
  CHECK(b.obstacles[1].center().y() - a.obstacles[1].center().y() == Approx(0.2));
}

TEST_CASE("every point of the domain belongs to some cover region") {
  const Scene s = build_two_wall_scene(false);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-2.7, 2.7);
  int tested = 0;
  while (tested < 2000) {
    const Vec2 x(U(rng), U(rng));
    if (!s.in_domain(x)) continue;
    ++tested;
    CHECK_FALSE(classify_point(s, x).empty());
    for (Region r : kAllRegions) CHECK(s.cover.in(r, x) == (s.cover.distance(r, x) == 0.0));
  }
}

TEST_CASE("convex hull drops interior and collinear points") {
  std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}, {0.2, 0.7}};
  const Polygon h = convex_hull(pts);
  CHECK(h.v.size() == 4);
  CHECK(h.area() == Approx(1.0));
  CHECK(h.contains(Vec2(0.3, 0.3)));
  CHECK_FALSE(h.contains(Vec2(1.3, 0.3)));
}

TEST_CASE("scene JSON round trip") {
  const Scene s = build_two_wall_scene(true);
  const Scene t = scene_from_json(scene_to_json(s));
  REQUIRE(t.obstacles.size() == s.obstacles.size());
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    CHECK((t.obstacles[i].center() - s.obstacles[i].center()).norm() < 1e-15);
    CHECK((t.obstacles[i].half() - s.obstacles[i].half()).norm() < 1e-15);
    CHECK(t.obstacles[i].corner() == s.obstacles[i].corner());
  }
  CHECK(t.r_pml_minus == s.r_pml_minus);
  CHECK(t.cover.in(Region::K, Vec2::Zero()) == s.cover.in(Region::K, Vec2::Zero()));
}

TEST_CASE("scene JSON rejects unknown keys") {
  nlohmann::json j = scene_to_json(build_two_wall_scene(false));
  j["colour"] = "red";
  CHECK_THROWS_AS(scene_from_json(j), ConfigError);
}
