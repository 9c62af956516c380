#include "helm/mesh.hpp"

#include "helm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace helm {

Vec2 Mesh::centroid(std::size_t t) const {
  const auto& v = triangles[t];
  return (nodes[v[0]] + nodes[v[1]] + nodes[v[2]]) / 3.0;
}

double Mesh::area(std::size_t t) const {
  const auto& v = triangles[t];
  const Vec2 a = nodes[v[1]] - nodes[v[0]], b = nodes[v[2]] - nodes[v[0]];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

double Mesh::diameter(std::size_t t) const {
  const auto& v = triangles[t];
  return std::max({(nodes[v[0]] - nodes[v[1]]).norm(), (nodes[v[1]] - nodes[v[2]]).norm(),
                   (nodes[v[2]] - nodes[v[0]]).norm()});
}

double Mesh::min_angle(std::size_t t) const {
  const auto& v = triangles[t];
  double m = kPi;
  for (int i = 0; i < 3; ++i) {
    const Vec2 a = nodes[v[(i + 1) % 3]] - nodes[v[i]], b = nodes[v[(i + 2) % 3]] - nodes[v[i]];
    m = std::min(m, std::atan2(std::abs(a.x() * b.y() - a.y() * b.x()), a.dot(b)));
  }
  return m;
}

Mesh refine_uniform(const Mesh& m) {
  Mesh r;
  r.nodes = m.nodes;
  std::unordered_map<std::uint64_t, int> mid;
  auto midpoint = [&](int a, int b) {
    const std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
    auto [it, fresh] = mid.try_emplace(key, static_cast<int>(r.nodes.size()));
    if (fresh) r.nodes.push_back(0.5 * (m.nodes[a] + m.nodes[b]));
    return it->second;
  };
  r.triangles.reserve(4 * m.triangles.size());
  r.regions.reserve(4 * m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto [a, b, c] = m.triangles[t];
    const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    r.triangles.push_back({a, ab, ca});
    r.triangles.push_back({ab, b, bc});
    r.triangles.push_back({ca, bc, c});
    r.triangles.push_back({ab, bc, ca});
    for (int i = 0; i < 4; ++i) r.regions.push_back(m.regions.empty() ? RegionSet{} : m.regions[t]);
  }
  for (const auto& e : m.boundary) {
    const int c = midpoint(e.a, e.b);
    r.boundary.push_back({e.a, c, e.tag});
    r.boundary.push_back({c, e.b, e.tag});
  }
  return r;
}

MeshStats mesh_stats(const Mesh& m, const SizeFunction& h) {
  MeshStats s;
  s.nodes = m.nodes.size();
  s.triangles = m.triangles.size();
  s.min_angle_deg = 180.0;
  s.positive_orientation = true;
  std::map<std::pair<int, int>, int> edges;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const double a = m.area(t);
    s.area += a;
    if (!(a > 0)) s.positive_orientation = false;
    s.min_angle_deg = std::min(s.min_angle_deg, m.min_angle(t) * 180.0 / kPi);
    if (h) s.max_size_ratio = std::max(s.max_size_ratio, m.diameter(t) / h(m.centroid(t)));
    const auto& v = m.triangles[t];
    for (int i = 0; i < 3; ++i) ++edges[{std::min(v[i], v[(i + 1) % 3]), std::max(v[i], v[(i + 1) % 3])}];
  }
  // Conforming: every edge is shared by two triangles, or by one when it is a boundary edge.
  std::map<std::pair<int, int>, int> bd;
  for (const auto& e : m.boundary) ++bd[{std::min(e.a, e.b), std::max(e.a, e.b)}];
  s.conforming = true;
  for (const auto& [e, n] : edges) {
    const bool is_bd = bd.count(e) > 0;
    if ((is_bd && n != 1) || (!is_bd && n != 2)) s.conforming = false;
  }
  if (bd.size() != m.boundary.size()) s.conforming = false;
  for (const auto& [e, n] : bd)
    if (!edges.count(e)) s.conforming = false;
  return s;
}

void write_mesh(const std::filesystem::path& p, const Mesh& m) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write mesh file " + p.string());
  out << "# helm mesh format_version=" << kFormatVersion << "\n";
  out << "nodes " << m.nodes.size() << "\n";
  for (const auto& x : m.nodes) out << format_double(x.x()) << ' ' << format_double(x.y()) << "\n";
  out << "triangles " << m.triangles.size() << "\n";
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& v = m.triangles[t];
    out << v[0] << ' ' << v[1] << ' ' << v[2] << ' ' << int(m.regions.empty() ? 0 : m.regions[t].bits) << "\n";
  }
  out << "boundary " << m.boundary.size() << "\n";
  for (const auto& e : m.boundary) out << e.a << ' ' << e.b << ' ' << static_cast<int>(e.tag) << "\n";
  if (!out) throw ConfigError("error while writing mesh file " + p.string());
}

Mesh read_mesh(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open mesh file " + p.string());
  std::string line;
  auto next = [&]() -> std::string {
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') return line;
    throw ConfigError("unexpected end of mesh file " + p.string());
  };
  auto header = [&](const char* name) {
    std::istringstream is(next());
    std::string word;
    long n = -1;
    if (!(is >> word >> n) || word != name || n < 0) throw ConfigError(std::string("mesh file: expected '") + name + " N'");
    return static_cast<std::size_t>(n);
  };
  Mesh m;
  const std::size_t nn = header("nodes");
  m.nodes.resize(nn);
  for (auto& x : m.nodes) {
    std::istringstream is(next());
    double a, b;
    if (!(is >> a >> b)) throw ConfigError("mesh file: bad node line");
    x = Vec2(a, b);
  }
  const std::size_t nt = header("triangles");
  m.triangles.resize(nt);
  m.regions.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    std::istringstream is(next());
    int a, b, c, mask;
    if (!(is >> a >> b >> c >> mask)) throw ConfigError("mesh file: bad triangle line");
    for (int v : {a, b, c})
      if (v < 0 || static_cast<std::size_t>(v) >= nn) throw ConfigError("mesh file: node index out of range");
    m.triangles[t] = {a, b, c};
    m.regions[t].bits = static_cast<std::uint8_t>(mask);
  }
  const std::size_t nb = header("boundary");
  for (std::size_t i = 0; i < nb; ++i) {
    std::istringstream is(next());
    int a, b, tag;
    if (!(is >> a >> b >> tag) || tag < 0 || tag > 1) throw ConfigError("mesh file: bad boundary line");
    if (a < 0 || b < 0 || static_cast<std::size_t>(std::max(a, b)) >= nn)
      throw ConfigError("mesh file: node index out of range");
    m.boundary.push_back({a, b, static_cast<BoundaryTag>(tag)});
  }
  return m;
}

PointLocator::PointLocator(const Mesh& m, double tol) : mesh_(&m), tol_(tol) {
  if (m.triangles.empty()) throw DomainError("cannot locate points in an empty mesh");
  Vec2 lo = m.nodes[0], hi = m.nodes[0];
  for (const auto& x : m.nodes) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const Vec2 ext = hi - lo;
  const double area = std::max(ext.x() * ext.y(), 1e-300);
  cell_ = std::sqrt(area / static_cast<double>(m.triangles.size())) * 1.5;
  nx_ = std::max(1, static_cast<int>(std::ceil(ext.x() / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(ext.y() / cell_)));
  lo_ = lo;
  auto cell_range = [&](std::size_t t, int& i0, int& i1, int& j0, int& j1) {
    const auto& v = m.triangles[t];
    Vec2 a = m.nodes[v[0]], b = a;
    for (int k = 1; k < 3; ++k) {
      a = a.cwiseMin(m.nodes[v[k]]);
      b = b.cwiseMax(m.nodes[v[k]]);
    }
    i0 = std::clamp(static_cast<int>((a.x() - lo_.x()) / cell_), 0, nx_ - 1);
    i1 = std::clamp(static_cast<int>((b.x() - lo_.x()) / cell_), 0, nx_ - 1);
    j0 = std::clamp(static_cast<int>((a.y() - lo_.y()) / cell_), 0, ny_ - 1);
    j1 = std::clamp(static_cast<int>((b.y() - lo_.y()) / cell_), 0, ny_ - 1);
  };
  std::vector<int> count(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    int i0, i1, j0, j1;
    cell_range(t, i0, i1, j0, j1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) ++count[static_cast<std::size_t>(j) * nx_ + i + 1];
  }
  for (std::size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
  start_ = count;
  items_.resize(static_cast<std::size_t>(count.back()));
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    int i0, i1, j0, j1;
    cell_range(t, i0, i1, j0, j1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) items_[static_cast<std::size_t>(count[static_cast<std::size_t>(j) * nx_ + i]++)] = static_cast<int>(t);
  }
}

bool PointLocator::try_triangle(int t, const Vec2& x, Location& out) const {
  const auto& v = mesh_->triangles[static_cast<std::size_t>(t)];
  const Vec2& a = mesh_->nodes[v[0]];
  const Vec2 e1 = mesh_->nodes[v[1]] - a, e2 = mesh_->nodes[v[2]] - a, d = x - a;
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  const double s = (d.x() * e2.y() - d.y() * e2.x()) / det;
  const double r = (e1.x() * d.y() - e1.y() * d.x()) / det;
  if (s >= -tol_ && r >= -tol_ && s + r <= 1 + tol_) {
    out.triangle = t;
    out.ref = Eigen::Vector2d(s, r);
    return true;
  }
  return false;
}

std::optional<PointLocator::Location> PointLocator::locate(const Vec2& x, int hint) const {
  Location loc;
  if (hint >= 0 && try_triangle(hint, x, loc)) return loc;
  const double fi = std::floor((x.x() - lo_.x()) / cell_), fj = std::floor((x.y() - lo_.y()) / cell_);
  if (fi < -1 || fj < -1 || fi > nx_ || fj > ny_) return std::nullopt;
  const int i = std::clamp(static_cast<int>(fi), 0, nx_ - 1), j = std::clamp(static_cast<int>(fj), 0, ny_ - 1);
  const std::size_t c = static_cast<std::size_t>(j) * nx_ + i;
  for (int k = start_[c]; k < start_[c + 1]; ++k)
    if (try_triangle(items_[static_cast<std::size_t>(k)], x, loc)) return loc;
  return std::nullopt;
}

}  // namespace helm
