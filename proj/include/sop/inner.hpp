#pragma once

// Solvers for the concave inner maximization behind the VarPro objective.
//
// Quadratic loss, unknowns (x, alpha, xi), with v_bar the per-row extension
// of the group scalars v over the rows of L:
//   L^T alpha + A^T xi = 0,   lambda xi = A x - y,   L x = v_bar^2 * alpha.
// Robust loss (both terms in quadratic variational form), as in the robust
// section conventions:
//   L^T alpha + A^T xi = 0,   L x = -v_bar^2 * alpha,   A x = y - lambda w_bar^2 * xi.

#include "sop/groups.hpp"
#include "sop/linops.hpp"
#include "sop/types.hpp"

#include <optional>

namespace sop {

enum class InnerMethod { automatic, direct, conjugate_gradient };

struct InnerConfig {
  InnerMethod method = InnerMethod::automatic;
  double cg_tol = 1e-10;
  // 0 means ten times the system size.
  int cg_max_iter = 0;
  // Added to v_bar^2 (and w_bar^2) before solving; 0 disables.
  double epsilon_floor = 0.0;
  // automatic picks direct factorization up to this system size, CG above.
  Index direct_max_size = 2000;
  // Below min|v| < ratio * max|v| the reduced system is abandoned for the
  // extended saddle system.
  double degenerate_ratio = 1e-8;
};

struct InnerSolution {
  Vec x;
  Vec alpha;
  Vec xi;
  // Max-norm of the stationarity equations, divided by 1 + ||y||_inf.
  double kkt_residual = 0.0;
  Index system_size = 0;
  bool extended_system = false;
  int cg_iterations = 0;
};

// Reduced normal equations (A^T A + lambda L^T diag(1/v_bar^2) L) x = A^T y, or
// the extended saddle system when v has (near) zero entries. `reg` groups the
// rows of L. `warm` seeds CG.
InnerSolution solve_quadratic_general(const LinearOperator& a, const LinearOperator& l,
                                      const GroupStructure& reg, const Vec& v, double lambda,
                                      const Vec& y, const InnerConfig& cfg = {},
                                      const Vec* warm = nullptr);

// Always uses the extended saddle system (direct symmetric factorization).
InnerSolution solve_quadratic_extended(const LinearOperator& a, const LinearOperator& l,
                                       const GroupStructure& reg, const Vec& v, double lambda,
                                       const Vec& y, const InnerConfig& cfg = {});

// L = Id: (A diag(v_bar^2) A^T + lambda I) xi = -y.
InnerSolution solve_grouplasso_dual(const LinearOperator& a, const GroupStructure& groups,
                                    const Vec& v, double lambda, const Vec& y,
                                    const InnerConfig& cfg = {}, const Vec* warm = nullptr);

// A = Id: (lambda L L^T + diag(v_bar^2)) alpha = L y, x = y - lambda L^T alpha.
InnerSolution solve_analysis_prox(const LinearOperator& l, const GroupStructure& reg,
                                  const Vec& v, double lambda, const Vec& y,
                                  const InnerConfig& cfg = {}, const Vec* warm = nullptr);

// Overlapping groups with L = block_extract(groups): the n x n system is
// inverted through an m x m one since L^T diag(1/v_bar^2) L is diagonal.
InnerSolution solve_overlap_woodbury(const LinearOperator& a, const GroupStructure& groups,
                                     const Vec& v, double lambda, const Vec& y,
                                     const InnerConfig& cfg = {});

// Diagonal of L^T diag(1/v_bar^2) L for L = block_extract(groups).
Vec woodbury_diagonal(const GroupStructure& groups, const Vec& v);

// Groups over the rows of block_extract(groups): one contiguous block per group.
GroupStructure block_row_groups(const GroupStructure& groups);

// Robust loss: `reg` groups the rows of L (scalars v), `loss` groups the rows
// of A (scalars w).
InnerSolution solve_robust(const LinearOperator& a, const LinearOperator& l,
                           const GroupStructure& reg, const Vec& v, const GroupStructure& loss,
                           const Vec& w, double lambda, const Vec& y, const InnerConfig& cfg = {});

// Robust loss with A = Id: (diag(v_bar^2) + lambda L diag(w_bar^2) L^T) alpha = -L y.
InnerSolution solve_robust_denoise(const LinearOperator& l, const GroupStructure& reg,
                                   const Vec& v, const GroupStructure& loss, const Vec& w,
                                   double lambda, const Vec& y, const InnerConfig& cfg = {});

// Equality constrained: maximize -1/2 ||v_bar alpha||^2 + <alpha, L x0> over
// L^T alpha in range(A^T); returns x with A x = y and L x = v_bar^2 alpha.
InnerSolution solve_basis_pursuit(const LinearOperator& a, const LinearOperator& l,
                                  const GroupStructure& reg, const Vec& v, const Vec& y,
                                  const InnerConfig& cfg = {});

struct MultitaskSolution {
  Mat alpha;  // m x T
  Mat x;      // n x T
  double residual = 0.0;
};

// (A diag(v^2) A^T + W W^T / lambda + eps I) alpha = -Y, X = -diag(v^2) A^T alpha.
MultitaskSolution solve_multitask_nuclear(const RowMat& a, const Vec& v, const Mat& w,
                                          double lambda, const Mat& y, double eps_floor = 0.0);

// Inner objective values for the quadratic loss at a returned solution.
// primal: 1/2 ||v_bar alpha||^2 + 1/(2 lambda) ||A x - y||^2
// dual:  -1/2 ||v_bar alpha||^2 - lambda/2 ||xi||^2 - <xi, y>
double inner_primal_value(const LinearOperator& a, const GroupStructure& reg, const Vec& v,
                          double lambda, const Vec& y, const InnerSolution& s);
double inner_dual_value(const GroupStructure& reg, const Vec& v, double lambda, const Vec& y,
                        const InnerSolution& s);

// Recomputes the quadratic-loss KKT residual of a candidate solution.
double quadratic_kkt_residual(const LinearOperator& a, const LinearOperator& l,
                              const GroupStructure& reg, const Vec& v, double lambda,
                              const Vec& y, const InnerSolution& s);

}  // namespace sop
