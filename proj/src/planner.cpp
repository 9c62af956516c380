#include "helm/planner.hpp"

#include "helm/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace helm {

namespace {

constexpr std::array<const char*, 6> kRegimeNames{"U1", "QO", "QOaway", "U2", "RE", "REaway"};

void require_finite_positive(double v, const char* what) {
  if (!std::isfinite(v) || !(v > 0)) throw DomainError(std::string(what) + " must be finite and positive");
}

void require_k_rho(double k, double rho) {
  require_finite_positive(k, "k");
  if (!std::isfinite(rho)) throw DomainError("rho must be finite");
  if (rho < k) throw DomainError("rho must satisfy rho >= k");
}

// One threshold term (h k)^exponent * weight.
struct Term {
  double exponent;
  double weight;
};

// K, V, I terms of a regime row.
std::array<Term, 3> regime_terms(Regime r, int p, double k, double rho) {
  const double P = p, P2 = 2.0 * p;
  const double skr = std::sqrt(k * rho);
  switch (r) {
    case Regime::U1:
      return {{{P, rho}, {P, rho}, {P, rho}}};
    case Regime::QO:
      return {{{P, rho}, {P, skr}, {P, k}}};
    case Regime::QOaway:
      return {{{P, skr}, {P, k}, {P, k}}};
    case Regime::U2:
      return {{{P2, rho}, {P2, rho}, {P2, rho}}};
    case Regime::RE:
      return {{{P2, rho}, {P2, skr}, {P2, k}}};
    case Regime::REaway:
      return {{{P2, rho}, {P, k}, {P, k}}};
  }
  throw DomainError("unknown regime");
}

double solve_h(const Term& t, double share, double k) { return std::pow(share / t.weight, 1.0 / t.exponent) / k; }

}  // namespace

const char* regime_name(Regime r) { return kRegimeNames.at(static_cast<std::size_t>(r)); }

Regime regime_from_name(const std::string& s) {
  for (std::size_t i = 0; i < kRegimeNames.size(); ++i)
    if (s == kRegimeNames[i]) return static_cast<Regime>(i);
  if (s == "QO-away" || s == "QO_away") return Regime::QOaway;
  if (s == "RE-away" || s == "RE_away") return Regime::REaway;
  throw ConfigError("unknown regime '" + s + "' (expected U1, QO, QOaway, U2, RE or REaway)");
}

void RegimeSpec::validate() const {
  if (p < 1) throw ConfigError("polynomial degree p must be >= 1");
  if (!(c > 0) || !std::isfinite(c)) throw ConfigError("threshold constant c must be positive");
  if (d != 2) throw ConfigError("only d = 2 is supported");
  if (c_pml && (!(*c_pml > 0) || !std::isfinite(*c_pml))) throw ConfigError("c_pml must be positive");
}

double MeshBudget::h(Region r) const {
  switch (r) {
    case Region::K: return hK;
    case Region::V: return hV;
    case Region::I: return hI;
    case Region::P: return hP;
  }
  return hP;
}

MeshBudget mesh_budgets(const RegimeSpec& spec, double k, double rho) {
  spec.validate();
  require_k_rho(k, rho);
  const auto t = regime_terms(spec.regime, spec.p, k, rho);
  const double share = spec.c / 4.0;
  MeshBudget b;
  b.hK = solve_h(t[0], share, k);
  b.hV = solve_h(t[1], share, k);
  b.hI = solve_h(t[2], share, k);
  b.hP = solve_h({double(spec.p), 1.0}, spec.pml_constant() / 4.0, k);
  // Enforce h_K <= h_V <= h_I <= h_P from the outside in.
  auto clamp = [&](double& h, double cap) {
    if (h > cap) {
      h = cap;
      b.clamped = true;
    }
  };
  clamp(b.hI, b.hP);
  clamp(b.hV, b.hI);
  clamp(b.hK, b.hV);
  return b;
}

double regime_threshold_sum(const RegimeSpec& spec, const MeshBudget& b, double k, double rho) {
  spec.validate();
  require_k_rho(k, rho);
  const auto t = regime_terms(spec.regime, spec.p, k, rho);
  const std::array<double, 3> h{b.hK, b.hV, b.hI};
  double s = 0;
  for (int i = 0; i < 3; ++i) s += std::pow(h[i] * k, t[i].exponent) * t[i].weight;
  s += std::pow(b.hP * k, spec.p) * spec.c / spec.pml_constant();
  return s;
}

const char* corollary_name(Corollary c) {
  switch (c) {
    case Corollary::QOCoarse: return "QOCoarse";
    case Corollary::REcoarse: return "REcoarse";
    case Corollary::U1: return "U1";
    case Corollary::U2: return "U2";
    case Corollary::QO: return "QO";
    case Corollary::RE: return "RE";
    case Corollary::QOaway: return "QOaway";
  }
  return "?";
}

Corollary default_corollary(Regime r) {
  switch (r) {
    case Regime::U1: return Corollary::U1;
    case Regime::QO: return Corollary::QO;
    case Regime::QOaway: return Corollary::QOaway;
    case Regime::U2: return Corollary::U2;
    case Regime::RE: return Corollary::RE;
    case Regime::REaway: return Corollary::REcoarse;
  }
  return Corollary::QO;
}

PredictedBound predicted_bound(Corollary which, double k, double rho, double eps) {
  require_k_rho(k, rho);
  PredictedBound out;
  out.corollary = which;
  Eigen::Matrix4d& m = out.matrix;
  const double kr = k / rho, rk = rho / k;
  const double s = std::sqrt(kr);
  bool has_omega = false;
  switch (which) {
    case Corollary::QOCoarse: {
      const double a = std::sqrt(rho), b = std::sqrt(k);
      m << a, a, a, 0, b, b, b, 0, b, b, b, 0, 0, 0, 0, 1;
      out.omega << a, b, b, 1;
      has_omega = true;
      break;
    }
    case Corollary::REcoarse: {
      const double a = std::sqrt(rk), b = s;
      m << 1, a, a, 0, b, 1, 1, 0, b, 1, 1, 0, 0, 0, 0, 1;
      out.omega << a, 1, 1, 1;
      has_omega = true;
      out.relative_error = true;
      break;
    }
    case Corollary::U1: {
      const double c3 = std::pow(kr, 1.5) / rho;
      m << 1, s, c3, 0, s, 1, kr, 0, c3, kr, 1, 0, 0, 0, 0, 1;
      break;
    }
    case Corollary::U2: {
      const double c3 = std::pow(kr, 1.5), d = kr + 1.0 / std::sqrt(rho);
      m << 1, s, c3, 0, s, d, kr, 0, c3, kr * kr, d, 0, 0, 0, 0, 1.0 / std::sqrt(rho);
      out.relative_error = true;
      break;
    }
    case Corollary::QO:
      m << 1, 1, 1.0 / std::sqrt(k * rho), 0, s, 1, 1, 0, s / rho, s, 1, 0, 0, 0, 0, 1;
      break;
    case Corollary::RE:
      m << 1, 1, 1, 0, s, s + std::pow(rho * k, -0.25), 1, 0, kr, kr, 1, 0, 0, 0, 0, 1;
      out.relative_error = true;
      break;
    case Corollary::QOaway: {
      const double a = std::sqrt(rk);
      m << a, a, a / (k * k), 0, 1, 1, 1, 0, 1.0 / k, 1, 1, 0, 0, 0, 0, 1;
      out.omega << a, 1, 1, 1;
      has_omega = true;
      break;
    }
  }
  if (out.relative_error) {
    const double f = std::sqrt(eps);
    m *= f;
    out.omega *= f;
  }
  if (!has_omega) out.omega = m.rowwise().sum();
  return out;
}

Eigen::MatrixXd hmin_matrix(const CoverMeta& meta, double ell) {
  const Eigen::Index n = meta.h.size();
  if (meta.adjacency.rows() != n || meta.adjacency.cols() != n)
    throw DomainError("adjacency must be " + std::to_string(n) + "x" + std::to_string(n));
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i == j || meta.adjacency(i, j)) H(i, j) = std::pow(std::min(meta.h(i), meta.h(j)), ell);
  return H;
}

GeneralCoverMatrices build_general_matrices(const CoverMeta& meta, const Eigen::MatrixXd& Cmat, double k, int p,
                                            int N) {
  const int MI = meta.M_I, MP = meta.M_P, M = MI + MP;
  if (MI < 0 || MP < 0 || meta.h.size() != M) throw DomainError("h must have M_I + M_P entries");
  if (Cmat.rows() != M || Cmat.cols() != M) throw DomainError("Cmat must be M x M");
  if (meta.adjacency != meta.adjacency.transpose()) throw DomainError("adjacency must be symmetric");
  if ((meta.h.array() <= 0).any()) throw DomainError("meshwidths must be positive");
  require_finite_positive(k, "k");
  if (p < 1 || N < 1) throw DomainError("p and N must be >= 1");

  GeneralCoverMatrices g;
  g.N = N;
  g.Cmat = Cmat;
  g.Hdiag = meta.h.asDiagonal();
  g.Hmin2p = hmin_matrix(meta, 2.0 * p);
  g.HminN = hmin_matrix(meta, N);

  const auto blk = [&](const Eigen::MatrixXd& A, int r0, int c0, int r, int c) { return A.block(r0, c0, r, c); };
  Eigen::MatrixXd HkpI = (meta.h.head(MI) * k).array().pow(p).matrix().asDiagonal();
  Eigen::MatrixXd HkpP = (meta.h.tail(MP) * k).array().pow(p).matrix().asDiagonal();
  Eigen::MatrixXd Hk2pI = (meta.h.head(MI) * k).array().pow(2 * p).matrix().asDiagonal();
  const Eigen::MatrixXd CII = blk(Cmat, 0, 0, MI, MI);
  const double kN = std::pow(k, N), k2p = std::pow(k, 2 * p);

  const int R = 2 * MI + MP;
  g.B = Eigen::MatrixXd::Zero(R, M);
  g.B.block(0, 0, MI, MI) = CII * HkpI;
  g.B.block(MI, 0, MI, MI) = HkpI;
  g.B.block(2 * MI, MI, MP, MP) = HkpP;

  g.W = Eigen::MatrixXd::Zero(R, R);
  g.W.block(0, 0, MI, MI) = CII * Hk2pI;
  g.W.block(0, MI, MI, MI) = CII * Hk2pI;
  g.W.block(0, 2 * MI, MI, MP) = blk(g.HminN, 0, MI, MI, MP) * kN;
  g.W.block(MI, 0, MI, MI) = blk(g.Hmin2p, 0, 0, MI, MI) * k2p;
  g.W.block(MI, MI, MI, MI) = blk(g.HminN, 0, 0, MI, MI) * kN;
  g.W.block(MI, 2 * MI, MI, MP) = blk(g.HminN, 0, MI, MI, MP) * kN;
  g.W.block(2 * MI, 0, MP, MI) = blk(g.HminN, MI, 0, MP, MI) * kN;
  g.W.block(2 * MI, MI, MP, MI) = blk(g.HminN, MI, 0, MP, MI) * kN;
  g.W.block(2 * MI, 2 * MI, MP, MP) = blk(g.HminN, MI, MI, MP, MP) * kN;
  return g;
}

Eigen::Matrix4d propagation_graph(const MeshBudget& b, double k, double rho, int p, int N) {
  require_k_rho(k, rho);
  const Eigen::Matrix4d C = communication_matrix<double>(k, rho);
  const std::array<double, 4> h{b.hK, b.hV, b.hI, b.hP};
  Eigen::Matrix4d W = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) W(i, j) = C(i, j) * std::pow(h[i] * k, 2 * p);
  for (int i = 1; i < 3; ++i) W(i, 3) = W(3, i) = std::pow(std::min(h[i], h[3]) * k, N);
  W(3, 3) = std::pow(h[3] * k, N);
  return W;
}

ConditionReport check_conditions(const MeshBudget& b, double k, double rho, int p, double c, int N) {
  require_k_rho(k, rho);
  if (N < 0) N = 2 * p;
  ConditionReport r;
  r.simple_sum = mesh_condition_sum<double>(b, k, rho, p);
  r.simple_condition = r.simple_sum <= c;
  r.W = propagation_graph(b, k, rho, p, N);
  r.c_loops = simple_loop_sum(WeightedDigraph<double>(r.W));
  r.loop_condition = r.c_loops <= c && r.c_loops < 1.0;
  return r;
}

SizeField::SizeField(const RegionCover& cover, const MeshBudget& budget, double G, double scale)
    : cover_(cover), budget_(budget), G_(G), scale_(scale) {
  if (!(G > 0) || G > 1) throw DomainError("grading G must lie in (0, 1]");
  if (!(scale > 0)) throw DomainError("size-field scale must be positive");
  for (Region r : kAllRegions)
    if (!(budget.h(r) > 0) || !std::isfinite(budget.h(r))) throw DomainError("budget meshwidths must be positive");
}

double SizeField::operator()(const Vec2& x) const {
  double h = std::numeric_limits<double>::infinity();
  for (Region r : kAllRegions) h = std::min(h, budget_.h(r) + G_ * cover_.distance(r, x));
  return scale_ * h;
}

double SizeField::min_value() const {
  double h = budget_.hK;
  for (Region r : kAllRegions) h = std::min(h, budget_.h(r));
  return scale_ * h;
}

SizeField SizeField::scaled(double factor) const {
  SizeField f = *this;
  if (!(factor > 0)) throw DomainError("scale factor must be positive");
  f.scale_ *= factor;
  return f;
}

SizeField size_field(const Scene& scene, const MeshBudget& budget, double G) {
  return SizeField(scene.cover, budget, G);
}

double dof_estimate(const Scene& scene, const MeshBudget& budget, int p, int d, double G) {
  if (d != 2) throw DomainError("only d = 2 is supported");
  if (p < 1) throw DomainError("p must be >= 1");
  const SizeField f = size_field(scene, budget, G);
  // Degree-p Lagrange triangles carry about p^2/2 DoFs each; an equilateral
  // triangle of side h has area sqrt(3)/4 h^2.
  const double per_element = 0.5 * p * p;
  const double tri_area = std::sqrt(3.0) / 4.0;
  const double R = scene.r_tr;
  const int n = 600;
  const double s = 2 * R / n;
  double total = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Vec2 x(-R + (i + 0.5) * s, -R + (j + 0.5) * s);
      if (!scene.in_domain(x)) continue;
      const double h = f(x);
      total += s * s * per_element / (tri_area * h * h);
    }
  return total;
}

json budget_to_json(const MeshBudget& b) {
  return {{"format_version", kFormatVersion}, {"h_K", b.hK}, {"h_V", b.hV}, {"h_I", b.hI}, {"h_P", b.hP},
          {"clamped", b.clamped}};
}

namespace {
json mat_json(const Eigen::Matrix4d& m) {
  json a = json::array();
  for (int i = 0; i < 4; ++i) a.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
  return a;
}
json vec_json(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
}  // namespace

json matrices_to_json(const PropagationMatrices<double>& m) {
  return {{"format_version", kFormatVersion},
          {"C", mat_json(m.C)},
          {"H", mat_json(m.H)},
          {"T", mat_json(m.T)},
          {"F", mat_json(m.F)},
          {"M", mat_json(m.M)},
          {"M_RE", mat_json(m.M_RE)},
          {"M_Omega", vec_json(m.M_Omega)},
          {"M_RE_Omega", vec_json(m.M_RE_Omega)},
          {"mesh_condition_holds", m.mesh_condition_holds}};
}

void write_size_field_csv(const std::filesystem::path& p, const Scene& scene, const SizeField& f, double spacing) {
  if (!(spacing > 0)) throw DomainError("spacing must be positive");
  CsvWriter w(p, {"x", "y", "h"});
  const double R = scene.r_tr;
  const int n = static_cast<int>(std::floor(R / spacing));
  for (int j = -n; j <= n; ++j)
    for (int i = -n; i <= n; ++i) {
      const Vec2 x(i * spacing, j * spacing);
      if (scene.in_domain(x)) w.row({x.x(), x.y(), f(x)});
    }
}

}  // namespace helm
