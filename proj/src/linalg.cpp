#include "sop/linalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <vector>

namespace sop::linalg {

namespace {

double relative_residual(const Mat& m, const Mat& x, const Mat& rhs) {
  const double scale = m.norm() * x.norm() + rhs.norm();
  if (scale == 0.0) return 0.0;
  return (m * x - rhs).norm() / scale;
}

}  // namespace

SpdFactor::SpdFactor(const Mat& m) : llt_(m) {
  if (llt_.info() != Eigen::Success || !llt_.matrixLLT().diagonal().allFinite() ||
      (llt_.matrixLLT().diagonal().array() <= 0.0).any())
    throw SingularSystemError("matrix is not numerically positive definite", INFINITY);
}

Mat SpdFactor::solve(const Mat& rhs) const { return llt_.solve(rhs); }

Mat solve_spd(const Mat& m, const Mat& rhs) { return SpdFactor(m).solve(rhs); }

Mat solve_symmetric(const Mat& m, const Mat& rhs, double residual_tol) {
  const Index n = m.rows();
  if (m.cols() != n || rhs.rows() != n) throw DimensionError("solve_symmetric: shape mismatch");
  Mat a = m;  // column-major; dsysv overwrites it with the factor
  Mat x = rhs;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_dsysv(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(n),
                    static_cast<lapack_int>(rhs.cols()), a.data(), static_cast<lapack_int>(n),
                    ipiv.data(), x.data(), static_cast<lapack_int>(n));
  if (info < 0) throw Error("dsysv: invalid argument " + std::to_string(-info));
  if (info == 0 && x.allFinite() && relative_residual(m, x, rhs) <= residual_tol) return x;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(m);
  x = cod.solve(rhs);
  const double res = relative_residual(m, x, rhs);
  if (!x.allFinite() || res > residual_tol)
    throw SingularSystemError("singular symmetric system (rank " + std::to_string(cod.rank()) +
                                  " of " + std::to_string(n) + ")",
                              res);
  return x;
}

CgResult conjugate_gradient(const std::function<Vec(const Vec&)>& apply, const Vec& rhs,
                            const Vec& x0, double tol, int max_iter) {
  CgResult out;
  out.x = x0.size() == rhs.size() ? x0 : Vec::Zero(rhs.size());
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    out.x.setZero();
    out.converged = true;
    return out;
  }
  Vec r = rhs - apply(out.x);
  Vec p = r;
  double rr = r.squaredNorm();
  out.relative_residual = std::sqrt(rr) / bnorm;
  while (out.relative_residual > tol && out.iterations < max_iter) {
    const Vec ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double step = rr / pap;
    out.x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    ++out.iterations;
    out.relative_residual = std::sqrt(rr) / bnorm;
  }
  out.converged = out.relative_residual <= tol;
  return out;
}

}  // namespace sop::linalg
