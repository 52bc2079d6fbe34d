#include "sop/baselines.hpp"
#include "sop/mirror.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace sop {
namespace {

using testing::random_matrix;
using testing::random_normal;
using testing::random_vector;

TEST(Mirror, EntropyGradients) {
  EXPECT_EQ(entropy_grad(Entropy::hyperbolic(1.0), Vec::Zero(2)), Vec::Zero(2));
  EXPECT_EQ(entropy_grad(Entropy::quadratic(2.0), (Vec(2) << 1, 3).finished()), (Vec(2) << 2, 6).finished());
  EXPECT_THROW(Entropy::hyperbolic(0.0), ConfigError);
}

TEST(Mirror, MirrorMapRoundTrip) {
  for (double c : {1.0, 1e-2, 1.0 / 300.0}) {
    const Entropy e = Entropy::hyperbolic(c);
    const Vec x = random_normal(50, 1);
    EXPECT_LT((entropy_grad_inverse(e, entropy_grad(e, x)) - x).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff()));
  }
  const Entropy q = Entropy::quadratic(7.0);
  const Vec x = random_normal(20, 2);
  EXPECT_LT((entropy_grad_inverse(q, entropy_grad(q, x)) - x).norm(), 1e-14);
}

TEST(Mirror, BregmanDivergence) {
  const Vec a = random_normal(5, 3);
  EXPECT_EQ(bregman_div(Entropy::hyperbolic(0.3), a, a), 0.0);
  EXPECT_DOUBLE_EQ(bregman_div(Entropy::quadratic(2.0), (Vec(2) << 1, 0).finished(), Vec::Zero(2)), 1.0);
}

TEST(Mirror, PinskerOnUnitL1Ball) {
  // eta_c is (1 / sqrt(s^2 + c^2))-strongly convex, so on the unit l1 ball
  // D(a, b) >= ||a - b||_1^2 / (2 (1 + c n)).
  const Index n = 30;
  const double c = 1.0 / double(n);
  const Entropy e = Entropy::hyperbolic(c);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto ball_point = [&]() {
    Vec x = random_normal(n, rng());
    return Vec(x / x.lpNorm<1>() * unif(rng));
  };
  for (int t = 0; t < 1000; ++t) {
    const Vec a = ball_point(), b = ball_point();
    const double l1 = (a - b).lpNorm<1>();
    EXPECT_GE(bregman_div(e, a, b), l1 * l1 / (2.0 * (1.0 + c * double(n))) - 1e-12);
  }
}

TEST(Mirror, SoftThreshold) {
  EXPECT_EQ(soft_threshold(Vec::Constant(1, -3.0), 1.0)[0], -2.0);
  EXPECT_EQ(soft_threshold(Vec::Constant(1, 0.3), 0.5)[0], 0.0);
  const Vec z = random_normal(8, 5);
  EXPECT_EQ(soft_threshold(z, 0.0), z);
}

L1Problem random_lasso(Index m, Index n, std::uint64_t seed) {
  RowMat a = random_matrix(m, n, seed);
  a.colwise().normalize();
  const Vec y = random_normal(m, seed + 1);
  const double lmax = (a.transpose() * y).cwiseAbs().maxCoeff();
  return {a, y, 0.2 * lmax};
}

TEST(Mirror, QuadraticEntropyBitMatchesIsta) {
  // With n a power of two the mirror-space scaling by n is exact in floating
  // point, so the two updates round identically.
  const Index n = 64;
  const L1Problem p = random_lasso(20, n, 6);
  const double ista_step = p.lambda / std::pow(Eigen::JacobiSVD<Mat>(p.a).singularValues()[0], 2);
  BpgdOptions opt;
  opt.step = ista_step * double(n);
  opt.iterations = 1000;
  opt.x0 = Vec::Zero(n);
  const BpgdRun b = run_bpgd(p, Entropy::quadratic(double(n)), opt);
  IstaOptions io;
  io.step = ista_step;
  io.iterations = 1000;
  const auto ista = run_ista(VarProProblem::group_lasso(LinearOperator::dense(p.a), GroupStructure::singletons(n),
                                                        p.lambda, p.y),
                             io);
  EXPECT_EQ(b.trace.x, ista.x);
  ASSERT_EQ(b.trace.records.size(), ista.records.size());
  for (std::size_t k = 0; k < ista.records.size(); ++k)
    EXPECT_DOUBLE_EQ(b.trace.records[k].objective, ista.records[k].objective);
}

TEST(Mirror, HyperbolicDescentAndTsengBound) {
  const Index n = 12;
  const L1Problem p = random_lasso(6, n, 7);
  const Entropy e = Entropy::hyperbolic(1.0 / double(n));
  const Vec x0 = Vec::Constant(n, 1.0 / double(n));
  BpgdOptions opt;
  opt.step = certified_bpgd_step(p, e, x0);
  opt.iterations = 2000;
  const BpgdRun run = run_bpgd(p, e, opt);
  EXPECT_TRUE(run.descent_held);
  EXPECT_FALSE(run.clamped);

  IstaOptions fo;
  fo.accel = IstaAcceleration::fista;
  fo.iterations = 100000;
  const auto ref = run_ista(VarProProblem::group_lasso(LinearOperator::dense(p.a), GroupStructure::singletons(n),
                                                       p.lambda, p.y),
                            fo);
  const double best = p.objective(ref.x);
  const double bound_const = bregman_div(e, ref.x, x0) / opt.step;
  for (std::size_t k = 1; k < run.trace.records.size(); ++k)
    EXPECT_LE(run.trace.records[k].objective - best, bound_const / double(k) + 1e-10);
}

TEST(Mirror, ZeroIsFixedPointForLargeLambda) {
  L1Problem p = random_lasso(6, 10, 8);
  p.lambda = 1.01 * (p.a.transpose() * p.y).cwiseAbs().maxCoeff();
  BpgdOptions opt;
  opt.iterations = 5000;
  opt.step = certified_bpgd_step(p, Entropy::hyperbolic(0.1), Vec::Constant(10, 0.1));
  const BpgdRun run = run_bpgd(p, Entropy::hyperbolic(0.1), opt);
  EXPECT_LT(run.trace.x.cwiseAbs().maxCoeff(), 1e-6);
  opt.x0 = Vec::Zero(10);
  const BpgdRun fixed = run_bpgd(p, Entropy::hyperbolic(0.1), opt);
  EXPECT_EQ(fixed.trace.x, Vec::Zero(10));
}

}  // namespace
}  // namespace sop
