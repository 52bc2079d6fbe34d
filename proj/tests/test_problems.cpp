#include "sop/problems.hpp"
#include "sop/varpro.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace sop {
namespace {

TEST(Problems, GaussianNoiselessAndDeterministic) {
  GaussianSpec spec;
  spec.m = 30;
  spec.n = 64;
  spec.sparsity = 8;
  spec.tasks = 3;
  spec.seed = 1;
  const auto a = gen_gaussian_instance(spec);
  const auto b = gen_gaussian_instance(spec);
  EXPECT_EQ(a.dense_a(), b.dense_a());
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.y.cols(), 3);
  EXPECT_LT((a.dense_a() * a.x_star - a.y).norm(), 1e-12);
  Index rows = 0;
  for (Index i = 0; i < spec.n; ++i) rows += a.x_star.row(i).norm() > 0 ? 1 : 0;
  EXPECT_EQ(rows, 8);
  EXPECT_NEAR(max_column_norm(a.a), 1.0, 1e-12);
}

TEST(Problems, GaussianNoiseIsRecorded) {
  GaussianSpec spec;
  spec.noise_std = 0.1;
  spec.seed = 2;
  const auto inst = gen_gaussian_instance(spec);
  EXPECT_GT(inst.noise.norm(), 0.0);
  EXPECT_LT(std::abs((inst.dense_a() * inst.x_star - inst.y).norm() - inst.noise.norm()), 1e-12);
}

TEST(Problems, PhaseFamilyShape) {
  GaussianSpec spec;
  spec.m = 100;
  spec.n = 256;
  spec.sparsity = 40;
  spec.tasks = 50;
  const auto inst = gen_gaussian_instance(spec);
  EXPECT_EQ(inst.x_star.rows(), 256);
  EXPECT_EQ(inst.x_star.cols(), 50);
}

TEST(Problems, OverlappingBlocksCover) {
  const auto gs = overlapping_blocks(300, 3, 4);
  EXPECT_TRUE(gs.covers());
  for (Index g = 0; g + 1 < gs.count(); ++g) {
    EXPECT_GE(gs.group_size(g), 4);
    EXPECT_LE(gs.group_size(g), 20);
    EXPECT_EQ(gs.group(g + 1).front(), gs.group(g).back() - 2);
  }
}

TEST(Problems, FourierInstance) {
  FourierInstanceSpec spec;
  spec.seed = 5;
  const auto inst = gen_fourier_instance(spec);
  EXPECT_EQ(inst.a.cols(), 300);
  EXPECT_EQ((inst.x_star.array() != 0.0).count(), 1);
  const double lm = lambda_max(inst.dense_a(), inst.y, LambdaFlavor::lasso);
  EXPECT_NEAR(inst.lambda, 0.1 * lm, 1e-14 * lm);
}

TEST(Problems, LambdaMaxArithmetic) {
  RowMat a(1, 2);
  a << 3, 4;
  const Mat y = Mat::Constant(1, 1, 5.0);
  EXPECT_DOUBLE_EQ(lambda_max(a, y, LambdaFlavor::lasso), 20.0);
  EXPECT_DOUBLE_EQ(lambda_max(a, y, LambdaFlavor::sqrt_lasso), 4.0);
  EXPECT_DOUBLE_EQ(lambda_max(a, y, LambdaFlavor::group_lasso, GroupStructure::contiguous(2, 2)), 25.0);
  EXPECT_THROW(lambda_max(a, Mat::Zero(1, 1), LambdaFlavor::sqrt_lasso), ConfigError);
}

TEST(Problems, LambdaMaxIsTheZeroThreshold) {
  GaussianSpec spec;
  spec.seed = 6;
  spec.noise_std = 0.05;
  const auto inst = gen_gaussian_instance(spec);
  const double lm = lambda_max(inst.dense_a(), inst.y, LambdaFlavor::lasso);
  OuterConfig cfg;
  cfg.grad_tol = 1e-11;
  const auto above = lbfgs_minimize(
      VarProProblem::group_lasso(inst.a, GroupStructure::singletons(spec.n), 1.01 * lm, inst.y_vec()), cfg);
  EXPECT_LT(above.x.norm(), 1e-8);
  const auto below = lbfgs_minimize(
      VarProProblem::group_lasso(inst.a, GroupStructure::singletons(spec.n), 0.99 * lm, inst.y_vec()), cfg);
  EXPECT_GT(below.x.norm(), 1e-8);
}

TEST(Problems, SaltPepper) {
  const ImageShape s{10, 12, 3};
  const ImageTensor img{s, testing::random_vector(s.size(), 7, 0.2, 0.8)};
  EXPECT_EQ(add_salt_pepper(img, 0.0, 1).data, img.data);
  const auto all = add_salt_pepper(img, 1.0, 1);
  EXPECT_TRUE(((all.data.array() == 0.0) || (all.data.array() == 1.0)).all());
  const auto some = add_salt_pepper(img, 0.25, 1);
  Index changed = 0;
  for (Index pix = 0; pix < s.pixels(); ++pix) {
    bool any = false;
    for (Index c = 0; c < 3; ++c) any = any || some.data[c * s.pixels() + pix] != img.data[c * s.pixels() + pix];
    changed += any ? 1 : 0;
  }
  EXPECT_EQ(changed, 30);
}

TEST(Problems, InpaintingMask) {
  const ImageShape s{10, 10, 3};
  const auto full = make_inpainting_mask(s, 1.0, 1);
  EXPECT_EQ(full.rows(), s.size());
  const auto m = make_inpainting_mask(s, 0.3, 2);
  EXPECT_EQ(m.rows(), 3 * 30);
  const Vec y = testing::random_normal(m.rows(), 3);
  EXPECT_EQ(m.apply(m.adjoint(y)), y);
  // The same pixels are kept in every channel.
  const auto& keep = m.kept_indices();
  for (Index k = 0; k < 30; ++k) {
    EXPECT_EQ(keep[static_cast<std::size_t>(30 + k)], keep[static_cast<std::size_t>(k)] + s.pixels());
  }
}

TEST(Problems, TvAndPixelGroups) {
  const ImageShape s{3, 4, 3};
  const auto tv = tv_groups(s);
  EXPECT_EQ(tv.count(), 12);
  EXPECT_EQ(tv.group_size(0), 6);
  EXPECT_EQ(tv.dim(), 2 * s.size());
  const auto px = pixel_groups(s);
  EXPECT_EQ(px.count(), 12);
  EXPECT_EQ(px.group(1), (std::vector<Index>{1, 13, 25}));
}

}  // namespace
}  // namespace sop
