#pragma once

#include "helm/geometry.hpp"
#include "helm/graph_paths.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>

namespace helm {

enum class Regime { U1, QO, QOaway, U2, RE, REaway };
const char* regime_name(Regime r);
Regime regime_from_name(const std::string& s);

struct RegimeSpec {
  Regime regime = Regime::QO;
  int p = 2;
  double c = 1.0;
  int d = 2;
  // Threshold constant for the PML term alone; defaults to c.
  std::optional<double> c_pml;

  double pml_constant() const { return c_pml.value_or(c); }
  void validate() const;
};

struct MeshBudget {
  double hK = 0, hV = 0, hI = 0, hP = 0;
  // True when a region budget was lowered to keep h_K <= h_V <= h_I <= h_P.
  bool clamped = false;

  double h(Region r) const;
  Eigen::Vector4d vec() const { return {hK, hV, hI, hP}; }
};

// Splits the regime's threshold equally over its four terms (K, V, I, P) and
// solves each term for its meshwidth.
MeshBudget mesh_budgets(const RegimeSpec& spec, double k, double rho);

// Left-hand side of the regime's own threshold row including the PML term
// (h_P k)^p weighted so that an unclamped budget gives exactly c.
double regime_threshold_sum(const RegimeSpec& spec, const MeshBudget& b, double k, double rho);

template <typename Scalar>
struct PropagationMatrices {
  using Mat4 = Eigen::Matrix<Scalar, 4, 4>;
  using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
  Mat4 C, H, T, F, M, M_RE;
  Vec4 M_Omega, M_RE_Omega;
  bool mesh_condition_holds = true;
};

// Communication matrix between K, V, I, P.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> communication_matrix(Scalar k, Scalar rho) {
  using std::sqrt;
  const Scalar s = sqrt(k * rho);
  Eigen::Matrix<Scalar, 4, 4> C;
  C << rho, s, 0, 0,  //
      s, k, k, 0,     //
      0, k, k, 0,     //
      0, 0, 0, 1;
  return C;
}

template <typename Scalar>
Scalar mesh_condition_sum(const MeshBudget& b, Scalar k, Scalar rho, int p) {
  using std::pow;
  const Scalar e = Scalar(2 * p);
  return pow(Scalar(b.hK) * k, e) * rho + pow(Scalar(b.hV) * k, e) * k + pow(Scalar(b.hI) * k, e) * k +
         pow(Scalar(b.hP) * k, e);
}

template <typename Scalar = double>
PropagationMatrices<Scalar> build_matrices(const MeshBudget& b, Scalar k, Scalar rho, int p, Scalar c = Scalar(1)) {
  using std::pow;
  using std::sqrt;
  using Mat4 = typename PropagationMatrices<Scalar>::Mat4;
  PropagationMatrices<Scalar> m;
  m.C = communication_matrix<Scalar>(k, rho);
  m.H = Mat4::Zero();
  m.H.diagonal() << Scalar(b.hK), Scalar(b.hV), Scalar(b.hI), Scalar(b.hP);
  m.F = Mat4::Ones();
  const Scalar e = Scalar(2 * p);
  const Scalar aK = pow(Scalar(b.hK) * k, e), aV = pow(Scalar(b.hV) * k, e), aI = pow(Scalar(b.hI) * k, e);
  const Scalar s = sqrt(k * rho);
  m.T << Scalar(1), aV * s, aV * s * aI * k, Scalar(0),  //
      aK * s, Scalar(1), aI * k, Scalar(0),              //
      aK * s * aV * k, aV * k, Scalar(1), Scalar(0),     //
      Scalar(0), Scalar(0), Scalar(0), Scalar(1);
  Mat4 Hkp = Mat4::Zero();
  for (int i = 0; i < 4; ++i) Hkp(i, i) = pow(m.H(i, i) * k, Scalar(p));
  m.M = Mat4::Identity() + m.T * m.C * Hkp;
  m.M_RE = m.M * Hkp;
  m.M_Omega = m.M.rowwise().sum();
  m.M_RE_Omega = m.M_RE.rowwise().sum();
  m.mesh_condition_holds = mesh_condition_sum<Scalar>(b, k, rho, p) <= c;
  return m;
}

enum class Corollary { QOCoarse, REcoarse, U1, U2, QO, RE, QOaway };
const char* corollary_name(Corollary c);
Corollary default_corollary(Regime r);

struct PredictedBound {
  Corollary corollary = Corollary::QO;
  bool relative_error = false;  // bound on M_RE rather than M
  Eigen::Matrix4d matrix = Eigen::Matrix4d::Zero();
  Eigen::Vector4d omega = Eigen::Vector4d::Zero();  // bound on M_Omega (or M_RE,Omega)
};

// Corollary bound shapes with all constants set to 1; relative-error shapes
// carry the sqrt(eps) prefactor with eps = spec.c.
PredictedBound predicted_bound(Corollary which, double k, double rho, double eps = 1.0);
inline PredictedBound predicted_bound(const RegimeSpec& spec, double k, double rho) {
  return predicted_bound(default_corollary(spec.regime), k, rho, spec.c);
}

struct CoverMeta {
  int M_I = 0;
  int M_P = 0;
  Eigen::MatrixXi adjacency;  // M x M, 1 when the closures of regions i, j intersect
  Eigen::VectorXd h;          // meshwidth per region
};

struct GeneralCoverMatrices {
  Eigen::MatrixXd Hdiag;
  Eigen::MatrixXd Cmat;
  Eigen::MatrixXd Hmin2p;  // Hmin(2p)
  Eigen::MatrixXd HminN;   // Hmin(N)
  Eigen::MatrixXd B;
  Eigen::MatrixXd W;
  int N = 0;
};

Eigen::MatrixXd hmin_matrix(const CoverMeta& meta, double ell);
GeneralCoverMatrices build_general_matrices(const CoverMeta& meta, const Eigen::MatrixXd& Cmat, double k, int p,
                                            int N);

struct ConditionReport {
  double simple_sum = 0;
  bool simple_condition = false;
  double c_loops = 0;
  bool loop_condition = false;
  Eigen::Matrix4d W = Eigen::Matrix4d::Zero();
};

// Weighted adjacency of the K-V-I-P error-propagation graph used for the
// simple-loop condition (no frequency splitting).
Eigen::Matrix4d propagation_graph(const MeshBudget& b, double k, double rho, int p, int N);

ConditionReport check_conditions(const MeshBudget& b, double k, double rho, int p, double c, int N = -1);

// h(x) = min over regions R of (h_R + G dist(x, R)); exactly G-Lipschitz and
// equal to h_R wherever no finer region lies within (h_R - h_min)/G.
class SizeField {
 public:
  SizeField() = default;
  SizeField(const RegionCover& cover, const MeshBudget& budget, double G, double scale = 1.0);

  double operator()(const Vec2& x) const;
  double grading() const { return G_; }
  double min_value() const;
  const MeshBudget& budget() const { return budget_; }
  SizeField scaled(double factor) const;

 private:
  RegionCover cover_;
  MeshBudget budget_;
  double G_ = 0.3;
  double scale_ = 1.0;
};

SizeField size_field(const Scene& scene, const MeshBudget& budget, double G = 0.3);

// Rough DoF count obtained by integrating the size field over the domain.
// Meant for ratios between budgets.
double dof_estimate(const Scene& scene, const MeshBudget& budget, int p, int d = 2, double G = 0.3);

nlohmann::json budget_to_json(const MeshBudget& b);
nlohmann::json matrices_to_json(const PropagationMatrices<double>& m);
void write_size_field_csv(const std::filesystem::path& p, const Scene& scene, const SizeField& f, double spacing);

}  // namespace helm
