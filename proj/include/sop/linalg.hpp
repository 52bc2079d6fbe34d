#pragma once

#include "sop/types.hpp"

#include <functional>

namespace sop::linalg {

// Cholesky solve; throws SingularSystemError when m is not numerically SPD.
Mat solve_spd(const Mat& m, const Mat& rhs);

// Reusable Cholesky factor for repeated solves with one matrix.
class SpdFactor {
 public:
  explicit SpdFactor(const Mat& m);
  Mat solve(const Mat& rhs) const;
  Index size() const { return llt_.rows(); }

 private:
  Eigen::LLT<Mat> llt_;
};

// Symmetric indefinite solve (Bunch-Kaufman). A singular matrix falls back to
// the minimum-norm least-squares solution; if that still leaves a relative
// residual above `residual_tol` a SingularSystemError is thrown.
Mat solve_symmetric(const Mat& m, const Mat& rhs, double residual_tol = 1e-8);

struct CgResult {
  Vec x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Conjugate gradient for an SPD operator given as a matrix-free product.
CgResult conjugate_gradient(const std::function<Vec(const Vec&)>& apply, const Vec& rhs,
                            const Vec& x0, double tol, int max_iter);

}  // namespace sop::linalg
