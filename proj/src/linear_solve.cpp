#include "helm/linear_solve.hpp"

#include <Eigen/SparseLU>
#ifdef HELM_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <sstream>

namespace helm {

const char* solver_backend() {
#ifdef HELM_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen-sparselu";
#endif
}

Eigen::VectorXcd solve(const ComplexSystem& sys, SolveReport* report, double max_residual) {
  const Eigen::Index n = sys.A.rows();
  if (n == 0) return sys.lift;
#ifdef HELM_HAVE_UMFPACK
  Eigen::UmfPackLU<Eigen::SparseMatrix<cplx>> lu;
#else
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
#endif
  lu.compute(sys.A);
  if (lu.info() != Eigen::Success)
    throw DomainError("sparse factorization failed; the wavenumber may be close to a resonance of the truncated problem");
  const Eigen::VectorXcd x = lu.solve(sys.rhs);
  const double bn = sys.rhs.norm();
  const double res = (sys.A * x - sys.rhs).norm() / (bn > 0 ? bn : 1.0);
  if (report) *report = {res, solver_backend()};
  if (!(res <= max_residual)) {
    std::ostringstream os;
    os << "linear solve residual " << res << " exceeds " << max_residual
       << "; the system is near-singular (possible resonance at this k)";
    throw DomainError(os.str());
  }
  return sys.expand(x);
}

}  // namespace helm
