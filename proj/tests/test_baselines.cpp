#include "sop/baselines.hpp"
#include "sop/mirror.hpp"
#include "sop/problems.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace sop {
namespace {

using testing::random_matrix;
using testing::random_normal;
using testing::random_vector;

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

VarProProblem lasso_1d() {
  return VarProProblem::group_lasso(LinearOperator::identity(1), GroupStructure::singletons(1), 1.0,
                                    Vec::Constant(1, 2.0));
}

OuterConfig tight() {
  OuterConfig c;
  c.grad_tol = 1e-10;
  c.max_iter = 5000;
  return c;
}

TEST(Baselines, IstaOneDimensional) {
  IstaOptions opt;
  opt.iterations = 1000;
  const auto tr = run_ista(lasso_1d(), opt);
  EXPECT_NEAR(tr.x[0], 1.0, 1e-8);
}

TEST(Baselines, IstaAboveLambdaMaxGivesZero) {
  const RowMat a = random_matrix(10, 20, 1);
  const Vec y = random_normal(10, 2);
  const double lm = lambda_max(a, y, LambdaFlavor::lasso);
  const auto p = VarProProblem::group_lasso(LinearOperator::dense(a), GroupStructure::singletons(20), 1.01 * lm, y);
  for (auto accel : {IstaAcceleration::none, IstaAcceleration::fista, IstaAcceleration::bb}) {
    IstaOptions opt;
    opt.accel = accel;
    opt.iterations = 2000;
    EXPECT_LT(run_ista(p, opt).x.norm(), 1e-10);
  }
}

TEST(Baselines, IstaIsMonotone) {
  const RowMat a = random_matrix(10, 20, 3);
  const Vec y = random_normal(10, 4);
  const auto p = VarProProblem::group_lasso(LinearOperator::dense(a), GroupStructure::contiguous(20, 4),
                                            0.2 * lambda_max(a, y, LambdaFlavor::group_lasso,
                                                             GroupStructure::contiguous(20, 4)),
                                            y);
  for (auto accel : {IstaAcceleration::none, IstaAcceleration::bb}) {
    IstaOptions opt;
    opt.accel = accel;
    opt.iterations = 500;
    const auto tr = run_ista(p, opt);
    for (std::size_t k = 1; k < tr.records.size(); ++k)
      EXPECT_LE(tr.records[k].objective, tr.records[k - 1].objective + 1e-12);
  }
}

TEST(Baselines, AdmmTvDenoise) {
  const ImageShape shape{8, 8, 1};
  const Vec y = random_vector(64, 5, 0.0, 1.0);
  const auto p = VarProProblem::analysis(LinearOperator::identity(64), LinearOperator::grad2d(shape),
                                         tv_groups(shape), 0.1, y);
  AdmmOptions opt;
  opt.iterations = 10000;
  const auto admm = run_admm(p, opt);
  const auto vp = lbfgs_minimize(p, tight());
  const double ref = primal_objective(p, vp.x);
  EXPECT_LT(rel(admm.trace.final_objective(), ref), 1e-4);
  EXPECT_LT(admm.primal_residual, 1e-6);
  EXPECT_LT(admm.dual_residual, 1e-6);
}

TEST(Baselines, AdmmSingleStepIsProxUpdate) {
  // With A = L = Id, tau = 1 and psi = z = 0, x = y / (1 + lambda) and z is
  // the soft threshold of x at 1.
  const Vec y = (Vec(3) << 3.0, -0.5, 1.2).finished();
  const double lambda = 0.5;
  const auto p = VarProProblem::group_lasso(LinearOperator::identity(3), GroupStructure::singletons(3), lambda, y);
  AdmmOptions opt;
  opt.iterations = 1;
  const auto run = run_admm(p, opt);
  const Vec x = y / (1.0 + lambda);
  EXPECT_LT((run.trace.x - x).norm(), 1e-14);
  const Vec z = soft_threshold(x, 1.0);
  EXPECT_NEAR(run.primal_residual, (z - x).norm(), 1e-14);
}

TEST(Baselines, PrimalDualQuadraticAndRobust) {
  const ImageShape shape{4, 4, 3};
  const Vec y = random_vector(shape.size(), 6, 0.0, 1.0);
  const auto p = VarProProblem::robust(LinearOperator::identity(shape.size()), LinearOperator::grad2d(shape),
                                       tv_groups(shape), pixel_groups(shape), 1.0, y);
  PrimalDualOptions opt;
  opt.iterations = 100000;
  const auto pd = run_primal_dual(p, opt);
  EXPECT_LE(pd.sigma * pd.tau * pd.k_norm * pd.k_norm, 1.0);
  const auto vp = lbfgs_minimize(p, tight());
  EXPECT_LT(std::abs(pd.trace.final_objective() - primal_objective(p, vp.x)), 1e-3);
}

TEST(Baselines, PrimalDualRejectsLargeSteps) {
  const auto p = lasso_1d();
  PrimalDualOptions opt;
  opt.sigma = 2.0;
  opt.tau = 2.0;
  EXPECT_THROW(run_primal_dual(p, opt), ConfigError);
}

TEST(Baselines, PrimalDualSwappedStepsAgree) {
  const RowMat a = random_matrix(6, 10, 7);
  const Vec y = random_normal(6, 8);
  const auto p = VarProProblem::group_lasso(LinearOperator::dense(a), GroupStructure::singletons(10), 0.3, y);
  PrimalDualOptions o1, o2;
  o1.sigma = 0.5;
  o1.tau = 1.5;
  o2.sigma = 1.5;
  o2.tau = 0.5;
  o1.iterations = o2.iterations = 20000;
  const double f1 = run_primal_dual(p, o1).trace.final_objective();
  const double f2 = run_primal_dual(p, o2).trace.final_objective();
  EXPECT_LT(rel(f1, f2), 1e-8);
}

TEST(Baselines, PreconditionedPrimalDualMatchesVarPro) {
  const RowMat a = random_matrix(10, 24, 31);
  const Vec y = random_normal(10, 32);
  const auto lasso = VarProProblem::group_lasso(LinearOperator::dense(a), GroupStructure::contiguous(24, 3), 0.3, y);
  const auto sq = VarProProblem::sqrt_lasso(LinearOperator::dense(a),
                                            0.6 * lambda_max(a, y, LambdaFlavor::sqrt_lasso), y);
  for (const VarProProblem* p : {&lasso, &sq}) {
    PrimalDualOptions o;
    o.precondition = true;
    o.iterations = 50000;
    const auto pd = run_primal_dual(*p, o);
    EXPECT_EQ(pd.k_norm, 0.0);
    const double ref = primal_objective(*p, lbfgs_minimize(*p, tight()).x);
    EXPECT_LT(rel(primal_objective(*p, pd.trace.x), ref), 1e-8);
  }
}

TEST(Baselines, IrlsRecoversOneSparse) {
  const RowMat a = random_matrix(8, 32, 9);
  Vec x = Vec::Zero(32);
  x[11] = 1.3;
  const Vec y = a * x;
  const auto r = run_irls(a, y, GroupStructure::singletons(32), 2.0 / 3.0, 0.0);
  EXPECT_LT((r.x.col(0) - x).norm() / x.norm(), 0.01);
}

TEST(Baselines, IrlsWithFixedLargeEpsIsRidge) {
  // q = 2 gives constant weights D = I; the step is the ridge solution.
  const RowMat a = random_matrix(6, 9, 10);
  const Vec y = random_normal(6, 11);
  IrlsOptions opt;
  opt.eps0 = 1e6;
  opt.decay = 1.0;
  opt.max_iter = 3;
  const double lambda = 0.7;
  const auto r = run_irls(a, y, GroupStructure::singletons(9), 2.0, lambda, opt);
  const Vec ridge = (a.transpose() * a + lambda * Mat::Identity(9, 9)).ldlt().solve(a.transpose() * y);
  EXPECT_LT((r.x.col(0) - ridge).norm(), 1e-10);
}

TEST(Baselines, ReweightedFirstStepIsGroupLasso) {
  const RowMat a = random_matrix(8, 16, 12);
  const Vec y = random_normal(8, 13);
  const auto gs = GroupStructure::contiguous(16, 2);
  ReweightedOptions opt;
  opt.outer_iterations = 1;
  opt.inner = tight();
  const auto rw = run_reweighted_l1(a, y, gs, 0.5, 0.3, opt);
  const auto gl = lbfgs_minimize(VarProProblem::group_lasso(LinearOperator::dense(a), gs, 0.3, y), tight());
  EXPECT_LT((rw.result.x.col(0) - gl.x).norm(), 1e-6);
}

TEST(Baselines, ReweightedSurrogateDecreasesAndRecovers) {
  const RowMat a = random_matrix(16, 40, 14);
  Vec x = Vec::Zero(40);
  x[3] = 1.0;
  x[17] = -0.8;
  x[30] = 0.6;
  const Vec y = a * x;
  ReweightedOptions opt;
  opt.outer_iterations = 8;
  opt.inner = tight();
  const auto rw = run_reweighted_l1(a, y, GroupStructure::singletons(40), 0.5, 1e-4, opt);
  for (std::size_t k = 1; k < rw.surrogate.size(); ++k) EXPECT_LE(rw.surrogate[k], rw.surrogate[k - 1] + 1e-8);
  EXPECT_LT((rw.result.x.col(0) - x).norm() / x.norm(), 0.01);
}

TEST(Baselines, ScaledLassoZeroAboveLambdaMax) {
  const RowMat a = random_matrix(10, 20, 15);
  const Vec y = random_normal(10, 16);
  const double lm = lambda_max(a, y, LambdaFlavor::sqrt_lasso);
  ScaledLassoOptions opt;
  opt.inner = tight();
  const auto run = run_scaled_lasso(a, y, 1.01 * lm, opt);
  EXPECT_LT(run.trace.x.norm(), 1e-8);
}

TEST(Baselines, ScaledLassoMatchesSqrtLassoVarPro) {
  const RowMat a = random_matrix(12, 20, 17);
  const Vec y = random_normal(12, 18);
  const double lambda = 0.4 * lambda_max(a, y, LambdaFlavor::sqrt_lasso);
  ScaledLassoOptions opt;
  opt.inner = tight();
  opt.iterations = 200;
  opt.tol = 1e-9;
  const auto sl = run_scaled_lasso(a, y, lambda, opt);
  EXPECT_TRUE(sl.trace.converged);
  // eta is monotone up to the inner solver's accuracy
  for (std::size_t k = 2; k < sl.eta.size(); ++k)
    EXPECT_GE((sl.eta[k] - sl.eta[k - 1]) * (sl.eta[1] - sl.eta[0]), -1e-7);
  const auto p = VarProProblem::sqrt_lasso(LinearOperator::dense(a), lambda, y);
  const auto vp = lbfgs_minimize(p, tight());
  EXPECT_LT(rel(sl.trace.final_objective(), primal_objective(p, vp.x)), 1e-6);
}

TEST(Baselines, ScaledLassoInterpolationFlag) {
  const RowMat a = RowMat::Identity(3, 3);
  ScaledLassoOptions opt;
  opt.inner = tight();
  const auto run = run_scaled_lasso(a, Vec::Zero(3), 1.0, opt);
  EXPECT_TRUE(run.interpolated);
}

}  // namespace
}  // namespace sop
