#pragma once

// Classical reference solvers for the problems handled by VarPro. They all
// report the same normalized objective as primal_objective().

#include "sop/groups.hpp"
#include "sop/lbfgs.hpp"
#include "sop/trace.hpp"
#include "sop/types.hpp"
#include "sop/varpro.hpp"

namespace sop {

enum class IstaAcceleration { none, fista, bb };

struct IstaOptions {
  // 0 selects lambda / ||A||^2, the inverse Lipschitz constant of grad F.
  double step = 0.0;
  IstaAcceleration accel = IstaAcceleration::none;
  long iterations = 1000;
  // Stop once ||x+ - x|| / step falls below this; 0 runs all iterations.
  double tol = 0.0;
  Vec x0;  // empty: zeros
};

// Proximal gradient on ||x||_{1,2} + 1/(2 lambda) ||A x - y||^2 (L = Id,
// quadratic loss). Singleton groups use the scalar soft threshold.
SolverTrace run_ista(const VarProProblem& p, const IstaOptions& opt = {});

struct AdmmOptions {
  double tau = 1.0;
  long iterations = 10000;
  // Stop when both the primal residual ||z - L x|| and the dual residual
  // tau ||L^T (z - z_prev)|| fall below tol.
  double tol = 1e-10;
};

struct AdmmRun {
  SolverTrace trace;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  long iterations = 0;
};

// Quadratic loss: splitting z = L x with the x-update
//   (A^T A + lambda tau L^T L) x = A^T y + lambda L^T psi + lambda tau L^T z.
// Robust loss: z = (L x, A x - y) with the analogous x-update. The x-system is
// factorized once per run.
AdmmRun run_admm(const VarProProblem& p, const AdmmOptions& opt = {});

struct PrimalDualOptions {
  // 0 selects 0.99 / ||K|| with ||K|| from 50 power iterations.
  double sigma = 0.0;
  double tau = 0.0;
  double theta = 1.0;
  long iterations = 10000;
  // Stop when the primal iterate moves less than tol (relative); 0 runs all.
  double tol = 0.0;
  // Diagonal steps sigma_i = 1 / sum_j |K_ij|, tau_j = 1 / sum_i |K_ij|
  // (Pock-Chambolle, alpha = 1) instead of the scalar sigma and tau. Builds
  // dense copies of A and L.
  bool precondition = false;
};

struct PrimalDualRun {
  SolverTrace trace;
  double k_norm = 0.0;
  double sigma = 0.0;
  double tau = 0.0;
};

// Quadratic loss: K = L, F = ||.||_{1,2}, G = 1/(2 lambda) ||A x - y||^2.
// Robust loss: K = [L -I 0; A 0 -I] acting on (x, z1, z2),
// G = ||z1||_{1,2} + 1/lambda ||z2||_{1,2}, F*(xi) = <(0, y), xi>.
PrimalDualRun run_primal_dual(const VarProProblem& p, const PrimalDualOptions& opt = {});

struct IrlsOptions {
  double eps0 = 1.0;
  double decay = 10.0;
  double eps_floor = 1e-8;
  int max_iter = 1000;
};

// Iteratively reweighted least squares for
//   (1/q) sum_g ||X_g||^q + 1/(2 lambda) ||A X - Y||^2,
// or the equality constrained problem A X = Y when lambda == 0. Each step is
//   X = D A^T (A D A^T + lambda I)^{-1} Y,  D_g = (||X_g||^2 + eps)^{1 - q/2}.
// eps shrinks by `decay` whenever ||X+ - X|| < sqrt(eps) / 100.
LqResult run_irls(const RowMat& a, const Mat& y, const GroupStructure& groups, double q,
                  double lambda, const IrlsOptions& opt = {});

struct ReweightedOptions {
  int outer_iterations = 10;
  double eps = 1e-3;
  OuterConfig inner;  // VarPro settings for each weighted group lasso
};

struct ReweightedRun {
  LqResult result;
  // (1/q) sum_g (||x_g|| + eps)^q + 1/(2 lambda) ||A x - y||^2 after each outer step.
  std::vector<double> surrogate;
};

// Majorize-minimize on (1/q) sum_g ||x_g||^q + 1/(2 lambda) ||A x - y||^2:
// each outer step solves a group lasso weighted by (||x_g|| + eps)^(q - 1)
// (all ones in the first step) with VarPro.
ReweightedRun run_reweighted_l1(const RowMat& a, const Vec& y, const GroupStructure& groups,
                                double q, double lambda, const ReweightedOptions& opt = {});

struct ScaledLassoOptions {
  int iterations = 50;
  // Stop when |eta_{k+1} - eta_k| <= tol * eta_k.
  double tol = 1e-12;
  OuterConfig inner;
};

struct ScaledLassoRun {
  SolverTrace trace;
  std::vector<double> eta;  // ||A x_k - y||, starting from x_0 = 0
  bool interpolated = false;  // eta reached 0
};

// Alternating scheme for ||x||_1 + 1/(lambda sqrt(m)) ||A x - y||:
// eta_k = ||A x_k - y||, then x_{k+1} solves the lasso with data weight
// 1/(2 lambda sqrt(m) eta_k).
ScaledLassoRun run_scaled_lasso(const RowMat& a, const Vec& y, double lambda,
                                const ScaledLassoOptions& opt = {});

}  // namespace sop
