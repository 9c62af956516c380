#include "helm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <random>
#include <unordered_map>

namespace helm {

namespace {

inline double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Positive when d lies inside the circumcircle of the CCW triangle abc.
inline double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ba = b - a, ca = c - a;
  const double d = 2.0 * (ba.x() * ca.y() - ba.y() * ca.x());
  const double b2 = ba.squaredNorm(), c2 = ca.squaredNorm();
  return a + Vec2((ca.y() * b2 - ba.y() * c2) / d, (ba.x() * c2 - ca.x() * b2) / d);
}

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> n{-1, -1, -1};  // neighbour across the edge opposite v[i]
  std::array<bool, 3> con{false, false, false};
  bool alive = true;
  bool inside = false;
};

struct Segment {
  int curve = 0;
  double s0 = 0, s1 = 0;
  int a = 0, b = 0;
};

class Refiner {
 public:
  Refiner(const Scene& scene, const SizeFunction& h, const MeshOptions& opt) : scene_(scene), h_(h), opt_(opt) {
    curves_ = scene.obstacles;
    curves_.push_back(ClosedCurve::disk(Vec2::Zero(), scene.r_tr));
    n_obstacles_ = static_cast<int>(scene.obstacles.size());
    h_floor_ = opt.min_size_fraction * 2.0 * scene.r_tr;
    const double B = 1.0 / (2.0 * std::sin(opt.min_angle_deg * kPi / 180.0));
    ratio_sq_ = B * B;
  }

  Mesh run() {
    make_super_triangle();
    insert_boundary();
    recover_segments();
    flood_fill();
    refine();
    return extract();
  }

 private:
  double size(const Vec2& x) const {
    const double v = h_(x);
    if (!(v >= h_floor_) || !std::isfinite(v))
      throw DomainError("size field value " + std::to_string(v) + " at (" + std::to_string(x.x()) + ", " +
                        std::to_string(x.y()) + ") is below the refinement guard " + std::to_string(h_floor_));
    return v;
  }

  int add_vertex(const Vec2& p) {
    if (pts_.size() >= opt_.max_nodes) throw DomainError("mesh generation exceeded the node limit");
    pts_.push_back(p);
    vtri_.push_back(-1);
    return static_cast<int>(pts_.size()) - 1;
  }

  int new_tri() {
    if (!free_.empty()) {
      const int t = free_.back();
      free_.pop_back();
      tris_[t] = Tri{};
      mark_[t] = 0;
      return t;
    }
    tris_.emplace_back();
    mark_.push_back(0);
    return static_cast<int>(tris_.size()) - 1;
  }

  void make_super_triangle() {
    const double R = 50.0 * scene_.r_tr;
    for (int i = 0; i < 3; ++i) {
      const double a = kPi / 2 + 2 * kPi * i / 3;
      add_vertex(R * Vec2(std::cos(a), std::sin(a)));
    }
    const int t = new_tri();
    tris_[t].v = {0, 1, 2};
    for (int i = 0; i < 3; ++i) vtri_[i] = t;
    last_ = t;
  }

  // Visibility walk. When `crossed` is given, the first constrained edge
  // crossed is reported as (triangle, edge index).
  int locate(const Vec2& p, int start, std::pair<int, int>* crossed = nullptr) {
    int t = start;
    if (t < 0 || !tris_[t].alive) t = last_;
    if (!tris_[t].alive) {
      for (t = 0; !tris_[t].alive; ++t) {
      }
    }
    const std::size_t limit = 4 * tris_.size() + 100;
    for (std::size_t it = 0; it < limit; ++it) {
      const Tri& T = tris_[t];
      const int r = static_cast<int>(rng_() % 3);
      bool moved = false;
      for (int q = 0; q < 3; ++q) {
        const int i = (r + q) % 3;
        const Vec2& a = pts_[T.v[(i + 1) % 3]];
        const Vec2& b = pts_[T.v[(i + 2) % 3]];
        if (orient(a, b, p) < 0 && T.n[i] >= 0) {
          if (crossed && T.con[i] && crossed->first < 0) *crossed = {t, i};
          t = T.n[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    throw DomainError("mesh generation: point location did not terminate");
  }

  int index_of(const Tri& T, int v) const {
    for (int i = 0; i < 3; ++i)
      if (T.v[i] == v) return i;
    return -1;
  }

  // Bowyer-Watson cavity of p grown from `seeds`; constrained edges block
  // growth except `open_edge`.
  std::vector<int> cavity(const Vec2& p, const std::vector<int>& seeds, std::uint64_t open_edge) {
    ++stamp_;
    std::vector<int> cav;
    std::vector<int> stack;
    for (int s : seeds) {
      if (mark_[s] == stamp_) continue;
      mark_[s] = stamp_;
      cav.push_back(s);
      stack.push_back(s);
    }
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int i = 0; i < 3; ++i) {
        const int u = tris_[t].n[i];
        if (u < 0 || mark_[u] == stamp_) continue;
        if (tris_[t].con[i] && edge_key(tris_[t].v[(i + 1) % 3], tris_[t].v[(i + 2) % 3]) != open_edge) continue;
        const Tri& U = tris_[u];
        if (incircle(pts_[U.v[0]], pts_[U.v[1]], pts_[U.v[2]], p) > 0) {
          mark_[u] = stamp_;
          cav.push_back(u);
          stack.push_back(u);
        }
      }
    }
    // Make the cavity star-shaped with respect to p.
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t c = 0; c < cav.size(); ++c) {
        const int t = cav[c];
        for (int i = 0; i < 3; ++i) {
          const int u = tris_[t].n[i];
          if (u >= 0 && mark_[u] == stamp_) continue;
          const Vec2& a = pts_[tris_[t].v[(i + 1) % 3]];
          const Vec2& b = pts_[tris_[t].v[(i + 2) % 3]];
          const double scale = (b - a).squaredNorm();
          if (orient(a, b, p) > 1e-12 * scale) continue;
          if (u < 0 || (tris_[t].con[i] && edge_key(tris_[t].v[(i + 1) % 3], tris_[t].v[(i + 2) % 3]) != open_edge))
            throw DomainError("mesh generation: degenerate insertion cavity");
          mark_[u] = stamp_;
          cav.push_back(u);
          changed = true;
        }
      }
    }
    return cav;
  }

  struct BoundaryPiece {
    int a, b, outer, owner;
    bool con;
  };

  std::vector<BoundaryPiece> cavity_boundary(const std::vector<int>& cav, std::uint64_t open_edge) const {
    std::vector<BoundaryPiece> out;
    for (int t : cav)
      for (int i = 0; i < 3; ++i) {
        const int u = tris_[t].n[i];
        if (u >= 0 && mark_[u] == stamp_) continue;
        const int a = tris_[t].v[(i + 1) % 3], b = tris_[t].v[(i + 2) % 3];
        out.push_back({a, b, u, t, tris_[t].con[i] && edge_key(a, b) != open_edge});
      }
    return out;
  }

  // Replaces the cavity by the fan around vertex `pv`; returns new triangles.
  std::vector<int> fill(int pv, const std::vector<int>& cav, const std::vector<BoundaryPiece>& bd) {
    std::vector<int> created;
    created.reserve(bd.size());
    std::unordered_map<int, int> starts, ends;  // boundary vertex -> new triangle
    std::vector<char> inside_of(bd.size());
    for (std::size_t i = 0; i < bd.size(); ++i) inside_of[i] = tris_[bd[i].owner].inside;
    for (int t : cav) {
      tris_[t].alive = false;
      free_.push_back(t);
    }
    for (std::size_t i = 0; i < bd.size(); ++i) {
      const auto& e = bd[i];
      const int T = new_tri();
      Tri& N = tris_[T];
      N.v = {pv, e.a, e.b};
      N.n[0] = e.outer;
      N.con[0] = e.con;
      N.inside = inside_of[i];
      if (e.outer >= 0) {
        Tri& O = tris_[e.outer];
        for (int j = 0; j < 3; ++j) {
          const int oa = O.v[(j + 1) % 3], ob = O.v[(j + 2) % 3];
          if ((oa == e.b && ob == e.a) || (oa == e.a && ob == e.b)) O.n[j] = T;
        }
      }
      starts[e.a] = T;
      ends[e.b] = T;
      created.push_back(T);
      vtri_[pv] = T;
      vtri_[e.a] = T;
      vtri_[e.b] = T;
    }
    for (int T : created) {
      Tri& N = tris_[T];
      N.n[1] = starts.at(N.v[2]);  // edge (b, p)
      N.n[2] = ends.at(N.v[1]);    // edge (p, a)
    }
    last_ = created.front();
    return created;
  }

  std::vector<int> insert_point(const Vec2& p, int hint) {
    const int t = locate(p, hint);
    const auto cav = cavity(p, {t}, 0);
    const auto bd = cavity_boundary(cav, 0);
    const int pv = add_vertex(p);
    auto created = fill(pv, cav, bd);
    after_insert(pv, created);
    return created;
  }

  int find_edge(int a, int b, int* idx = nullptr) const {
    int t = vtri_[a];
    const int first = t;
    for (int guard = 0; guard < 10000 && t >= 0; ++guard) {
      const Tri& T = tris_[t];
      const int i = index_of(T, a);
      const int j = index_of(T, b);
      if (j >= 0) {
        if (idx) *idx = 3 - i - j;
        return t;
      }
      t = T.n[(i + 1) % 3];
      if (t == first) break;
    }
    return -1;
  }

  void set_constraint(int a, int b, bool on) {
    int i = -1;
    const int t = find_edge(a, b, &i);
    if (t < 0) throw DomainError("mesh generation: constrained edge is missing");
    tris_[t].con[i] = on;
    const int u = tris_[t].n[i];
    if (u >= 0)
      for (int j = 0; j < 3; ++j)
        if (tris_[u].n[j] == t) tris_[u].con[j] = on;
  }

  void insert_boundary() {
    for (int c = 0; c < static_cast<int>(curves_.size()); ++c) {
      const ClosedCurve& C = curves_[c];
      const double L = C.length();
      std::vector<double> s{0.0};
      for (;;) {
        const double step = std::min(0.9 * size(C.point(s.back())), L / 12.0);
        if (s.back() + 1.5 * step >= L) {
          if (L - s.back() > step) s.push_back(0.5 * (s.back() + L));
          break;
        }
        s.push_back(s.back() + step);
      }
      std::vector<int> ids;
      for (double si : s) {
        const Vec2 p = C.point(si);
        insert_point(p, last_);
        ids.push_back(static_cast<int>(pts_.size()) - 1);
      }
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t j = (i + 1) % ids.size();
        pending_.push_back({c, s[i], j == 0 ? L : s[j], ids[i], ids[j]});
      }
    }
  }

  int split_missing(const Segment& sg) {
    const double sm = 0.5 * (sg.s0 + sg.s1);
    insert_point(curves_[sg.curve].point(sm), vtri_[sg.a]);
    return static_cast<int>(pts_.size()) - 1;
  }

  void recover_segments() {
    std::size_t guard = 0;
    while (!pending_.empty()) {
      if (++guard > 50'000'000) throw DomainError("mesh generation: segment recovery did not terminate");
      const Segment sg = pending_.back();
      pending_.pop_back();
      if (find_edge(sg.a, sg.b) >= 0) {
        set_constraint(sg.a, sg.b, true);
        segs_[edge_key(sg.a, sg.b)] = sg;
        continue;
      }
      const int m = split_missing(sg);
      pending_.push_back({sg.curve, sg.s0, 0.5 * (sg.s0 + sg.s1), sg.a, m});
      pending_.push_back({sg.curve, 0.5 * (sg.s0 + sg.s1), sg.s1, m, sg.b});
    }
  }

  void flood_fill() {
    std::vector<char> seen(tris_.size(), 0);
    const int start = vtri_[0];
    std::vector<std::pair<int, bool>> stack{{start, false}};
    seen[start] = 1;
    while (!stack.empty()) {
      auto [t, in] = stack.back();
      stack.pop_back();
      tris_[t].inside = in;
      for (int i = 0; i < 3; ++i) {
        const int u = tris_[t].n[i];
        if (u < 0 || !tris_[u].alive || seen[u]) continue;
        seen[u] = 1;
        stack.push_back({u, in != tris_[t].con[i]});
      }
    }
    for (auto& [key, sg] : segs_) seg_queue_.push_back(key);
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      if (tris_[t].alive && tris_[t].inside) push_if_bad(t);
  }

  bool encroached(const Segment& sg) const {
    int i = -1;
    const int t = find_edge(sg.a, sg.b, &i);
    if (t < 0) return false;
    const Vec2& a = pts_[sg.a];
    const Vec2& b = pts_[sg.b];
    for (int side : {t, tris_[t].n[i]}) {
      if (side < 0 || !tris_[side].inside) continue;
      const Tri& T = tris_[side];
      for (int j = 0; j < 3; ++j) {
        if (T.v[j] == sg.a || T.v[j] == sg.b) continue;
        const Vec2& c = pts_[T.v[j]];
        if ((a - c).dot(b - c) < 0) return true;
      }
    }
    const Vec2 mid = 0.5 * (a + b);
    return (b - a).norm() > size(mid);
  }

  void split_segment(std::uint64_t key) {
    const Segment sg = segs_.at(key);
    int i = -1;
    const int t = find_edge(sg.a, sg.b, &i);
    if (t < 0) throw DomainError("mesh generation: segment edge vanished");
    const double sm = 0.5 * (sg.s0 + sg.s1);
    const Vec2 p = curves_[sg.curve].point(sm);
    const int u = tris_[t].n[i];
    std::vector<int> seeds{t};
    if (u >= 0) seeds.push_back(u);
    const auto cav = cavity(p, seeds, key);
    const auto bd = cavity_boundary(cav, key);
    const int pv = add_vertex(p);
    segs_.erase(key);
    auto created = fill(pv, cav, bd);
    set_constraint(sg.a, pv, true);
    set_constraint(pv, sg.b, true);
    const Segment l{sg.curve, sg.s0, sm, sg.a, pv}, r{sg.curve, sm, sg.s1, pv, sg.b};
    segs_[edge_key(sg.a, pv)] = l;
    segs_[edge_key(pv, sg.b)] = r;
    seg_queue_.push_back(edge_key(sg.a, pv));
    seg_queue_.push_back(edge_key(pv, sg.b));
    after_insert(pv, created);
  }

  void after_insert(int /*pv*/, const std::vector<int>& created) {
    if (!refining_) return;
    for (int T : created) {
      const Tri& N = tris_[T];
      if (N.con[0]) seg_queue_.push_back(edge_key(N.v[1], N.v[2]));
      if (N.inside) push_if_bad(T);
    }
  }

  // Priority: larger is worse.
  double badness(int t) const {
    const Tri& T = tris_[t];
    const Vec2 &a = pts_[T.v[0]], &b = pts_[T.v[1]], &c = pts_[T.v[2]];
    const double l0 = (b - c).squaredNorm(), l1 = (c - a).squaredNorm(), l2 = (a - b).squaredNorm();
    const double lmax = std::max({l0, l1, l2}), lmin = std::min({l0, l1, l2});
    const double area2 = orient(a, b, c);
    const double R2 = l0 * l1 * l2 / (area2 * area2);  // (2R)^2
    const double hc = size((a + b + c) / 3.0);
    const double size_excess = lmax / (hc * hc);
    const double shape_excess = R2 / (4.0 * lmin) / ratio_sq_;
    return std::max(size_excess, shape_excess);
  }

  void push_if_bad(int t) {
    const double b = badness(t);
    if (b > 1.0) queue_.push({b, t, tris_[t].v});
  }

  struct Item {
    double bad;
    int t;
    std::array<int, 3> v;
    bool operator<(const Item& o) const { return bad < o.bad || (bad == o.bad && t > o.t); }
  };

  bool drain_segments() {
    bool any = false;
    while (!seg_queue_.empty()) {
      const std::uint64_t key = seg_queue_.front();
      seg_queue_.pop_front();
      auto it = segs_.find(key);
      if (it == segs_.end()) continue;
      if (encroached(it->second)) {
        split_segment(key);
        any = true;
      }
    }
    return any;
  }

  void refine() {
    refining_ = true;
    drain_segments();
    while (!queue_.empty()) {
      const Item it = queue_.top();
      queue_.pop();
      const Tri& T = tris_[it.t];
      if (!T.alive || T.v != it.v || !T.inside) continue;
      const Vec2 &a = pts_[T.v[0]], &b = pts_[T.v[1]], &c = pts_[T.v[2]];
      const Vec2 cc = circumcenter(a, b, c);
      std::pair<int, int> crossed{-1, -1};
      const int loc = locate(cc, it.t, &crossed);
      if (!tris_[loc].inside) {
        if (crossed.first < 0) throw DomainError("mesh generation: circumcenter left the domain unexpectedly");
        const Tri& X = tris_[crossed.first];
        split_segment(edge_key(X.v[(crossed.second + 1) % 3], X.v[(crossed.second + 2) % 3]));
        drain_segments();
        requeue(it);
        continue;
      }
      const auto cav = cavity(cc, {loc}, 0);
      const auto bd = cavity_boundary(cav, 0);
      std::vector<std::uint64_t> hit;
      for (const auto& e : bd) {
        if (!e.con) continue;
        const Vec2 &p = pts_[e.a], &q = pts_[e.b];
        if ((p - cc).dot(q - cc) < 0) hit.push_back(edge_key(e.a, e.b));
      }
      if (!hit.empty()) {
        for (auto key : hit)
          if (segs_.count(key)) split_segment(key);
        drain_segments();
        requeue(it);
        continue;
      }
      const int pv = add_vertex(cc);
      auto created = fill(pv, cav, bd);
      after_insert(pv, created);
      drain_segments();
      requeue(it);
    }
  }

  void requeue(const Item& it) {
    const Tri& T = tris_[it.t];
    if (T.alive && T.v == it.v && T.inside) push_if_bad(it.t);
  }

  Mesh extract() const {
    Mesh m;
    std::vector<int> map(pts_.size(), -1);
    for (const Tri& T : tris_) {
      if (!T.alive || !T.inside) continue;
      std::array<int, 3> v{};
      for (int i = 0; i < 3; ++i) {
        if (map[T.v[i]] < 0) {
          map[T.v[i]] = static_cast<int>(m.nodes.size());
          m.nodes.push_back(pts_[T.v[i]]);
        }
        v[i] = map[T.v[i]];
      }
      m.triangles.push_back(v);
    }
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const Vec2 c = m.centroid(t);
      RegionSet rs;
      for (Region r : kAllRegions)
        if (scene_.cover.in(r, c)) rs.add(r);
      m.regions.push_back(rs);
    }
    std::vector<std::pair<std::uint64_t, Segment>> sorted(segs_.begin(), segs_.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [key, sg] : sorted) {
      if (map[sg.a] < 0 || map[sg.b] < 0) throw DomainError("mesh generation: boundary segment has no interior triangle");
      m.boundary.push_back({map[sg.a], map[sg.b], sg.curve < n_obstacles_ ? BoundaryTag::Obstacle : BoundaryTag::Truncation});
    }
    return m;
  }

  const Scene& scene_;
  const SizeFunction& h_;
  MeshOptions opt_;
  std::vector<ClosedCurve> curves_;
  int n_obstacles_ = 0;
  double h_floor_ = 0;
  double ratio_sq_ = 0;

  std::vector<Vec2> pts_;
  std::vector<int> vtri_;
  std::vector<Tri> tris_;
  std::vector<unsigned> mark_;
  unsigned stamp_ = 0;
  std::vector<int> free_;
  int last_ = 0;
  std::minstd_rand rng_{12345};

  std::vector<Segment> pending_;
  std::unordered_map<std::uint64_t, Segment> segs_;
  std::deque<std::uint64_t> seg_queue_;
  std::priority_queue<Item> queue_;
  bool refining_ = false;
};

}  // namespace

Mesh generate_mesh(const Scene& scene, const SizeFunction& h, const MeshOptions& opt) {
  if (!h) throw DomainError("size field is empty");
  if (!(scene.r_tr > 0)) throw DomainError("truncation radius must be positive");
  Refiner r(scene, h, opt);
  return r.run();
}

}  // namespace helm
