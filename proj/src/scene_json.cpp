#include "helm/geometry.hpp"
#include "helm/io.hpp"

namespace helm {

namespace {

Vec2 vec2_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(what + ": expected a two-element numeric array");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

json vec2_to(const Vec2& v) { return json::array({v.x(), v.y()}); }

}  // namespace

json scene_to_json(const Scene& s) {
  json obs = json::array();
  for (const auto& o : s.obstacles) {
    const bool is_disk = o.half().x() == o.half().y() && o.corner() == o.half().x();
    if (is_disk) {
      obs.push_back({{"type", "disk"}, {"center", vec2_to(o.center())}, {"radius", o.corner()}});
    } else {
      obs.push_back({{"type", "rounded_rect"},
                     {"center", vec2_to(o.center())},
                     {"half_widths", vec2_to(o.half())},
                     {"corner_radius", o.corner()}});
    }
  }
  const auto& c = s.cover;
  json cover = {{"has_cavity", c.has_cavity},
                {"inner_radius", c.inner_radius},
                {"pml_radius", c.pml_radius},
                {"delta", c.delta}};
  if (c.has_cavity) {
    cover["box"] = json::array({c.box_x0, c.box_x1, c.box_y0, c.box_y1});
    cover["visible_band"] = json::array({c.vis_lo, c.vis_hi});
    cover["invisible_band"] = json::array({c.inv_lo, c.inv_hi});
  }
  return {{"format_version", kFormatVersion},
          {"obstacles", obs},
          {"r_pml_minus", s.r_pml_minus},
          {"r_tr", s.r_tr},
          {"cover", cover}};
}

Scene scene_from_json(const json& j) {
  reject_unknown_keys(j, {"format_version", "obstacles", "r_pml_minus", "r_tr", "cover"}, "scene");
  Scene s;
  s.r_pml_minus = get_required<double>(j, "r_pml_minus", "scene");
  s.r_tr = get_required<double>(j, "r_tr", "scene");
  if (j.contains("obstacles")) {
    if (!j["obstacles"].is_array()) throw ConfigError("scene.obstacles must be an array");
    for (const auto& o : j["obstacles"]) {
      const std::string type = get_required<std::string>(o, "type", "obstacle");
      if (type == "disk") {
        reject_unknown_keys(o, {"type", "center", "radius"}, "disk obstacle");
        s.obstacles.push_back(ClosedCurve::disk(vec2_from(o.at("center"), "disk.center"),
                                                get_required<double>(o, "radius", "disk obstacle")));
      } else if (type == "rounded_rect") {
        reject_unknown_keys(o, {"type", "center", "half_widths", "corner_radius"}, "rounded_rect obstacle");
        if (!o.contains("center") || !o.contains("half_widths"))
          throw ConfigError("rounded_rect obstacle needs center and half_widths");
        s.obstacles.emplace_back(vec2_from(o["center"], "rounded_rect.center"),
                                 vec2_from(o["half_widths"], "rounded_rect.half_widths"),
                                 get_required<double>(o, "corner_radius", "rounded_rect obstacle"));
      } else {
        throw ConfigError("unknown obstacle type '" + type + "'");
      }
    }
  }
  if (j.contains("cover")) {
    const json& c = j["cover"];
    reject_unknown_keys(c, {"has_cavity", "box", "visible_band", "invisible_band", "inner_radius", "pml_radius", "delta"},
                        "scene.cover");
    RegionCover rc;
    rc.has_cavity = get_or<bool>(c, "has_cavity", false);
    rc.inner_radius = get_or<double>(c, "inner_radius", 1.05 * s.r_pml_minus + 0.1);
    rc.pml_radius = get_or<double>(c, "pml_radius", 1.05 * s.r_pml_minus);
    rc.delta = get_or<double>(c, "delta", 0.0);
    if (rc.has_cavity) {
      const auto box = get_required<std::vector<double>>(c, "box", "scene.cover");
      const auto vis = get_required<std::vector<double>>(c, "visible_band", "scene.cover");
      const auto inv = get_required<std::vector<double>>(c, "invisible_band", "scene.cover");
      if (box.size() != 4 || vis.size() != 2 || inv.size() != 2)
        throw ConfigError("scene.cover: box needs 4 numbers, bands need 2");
      rc.box_x0 = box[0];
      rc.box_x1 = box[1];
      rc.box_y0 = box[2];
      rc.box_y1 = box[3];
      rc.vis_lo = vis[0];
      rc.vis_hi = vis[1];
      rc.inv_lo = inv[0];
      rc.inv_hi = inv[1];
    }
    s.cover = rc;
  } else {
    s.cover = make_trivial_cover(s.r_pml_minus);
  }
  s.validate();
  return s;
}

}  // namespace helm
