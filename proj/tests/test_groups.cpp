#include "sop/groups.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace sop {
namespace {

using testing::random_normal;

TEST(Groups, Norm12Examples) {
  EXPECT_DOUBLE_EQ(group_norm_12((Vec(2) << 3, 4).finished(), GroupStructure::contiguous(2, 2)), 5.0);
  EXPECT_DOUBLE_EQ(group_norm_12((Vec(3) << 1, -2, 3).finished(), GroupStructure::singletons(3)), 6.0);
  const auto gs = GroupStructure::partition({{0, 1}, {2, 3}}, 4);
  EXPECT_DOUBLE_EQ(group_norm_12((Vec(4) << 3, 4, 5, 12).finished(), gs), 18.0);
}

TEST(Groups, Norm12TrivialGroupsIsL1Exactly) {
  const auto gs = GroupStructure::singletons(17);
  for (int t = 0; t < 1000; ++t) {
    const Vec z = random_normal(17, 40 + t);
    EXPECT_EQ(group_norm_12(z, gs), z.lpNorm<1>());
  }
}

TEST(Groups, Norm12RejectsOverlap) {
  const auto gs = GroupStructure::overlapping({{0, 1}, {1, 2}}, 3);
  EXPECT_THROW(group_norm_12(Vec::Ones(3), gs), ConfigError);
}

TEST(Groups, PartitionValidation) {
  EXPECT_THROW(GroupStructure::partition({{0, 1}, {1, 2}}, 3), ConfigError);
  EXPECT_THROW(GroupStructure::partition({{0, 1}}, 3), ConfigError);
  EXPECT_THROW(GroupStructure::partition({{0, 5}}, 2), ConfigError);
  EXPECT_NO_THROW(GroupStructure::partition({{2}, {0, 1}}, 3));
}

TEST(Groups, OverlappingDefaultWeights) {
  const auto gs = GroupStructure::overlapping({{0, 1}, {1, 2, 3}}, 4);
  EXPECT_DOUBLE_EQ(gs.weights()[0], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(gs.weights()[1], std::sqrt(3.0));
  EXPECT_TRUE(gs.covers());
  EXPECT_FALSE(GroupStructure::overlapping({{0, 1}}, 3).covers());
}

TEST(Groups, HadamardExamples) {
  EXPECT_EQ(hadamard_group(Vec::LinSpaced(3, 1, 3), Vec::Constant(3, 2.0), GroupStructure::singletons(3)),
            (Vec(3) << 2, 4, 6).finished());
  EXPECT_EQ(hadamard_group((Vec(2) << 1, 2).finished(), (Vec(1) << 3).finished(),
                           GroupStructure::contiguous(2, 2)),
            (Vec(2) << 3, 6).finished());
}

TEST(Groups, FactorizationIdentity) {
  const auto gs = GroupStructure::partition({{0, 3}, {1}, {2, 4, 5}}, 6);
  const Vec z = random_normal(6, 9);
  const Vec norms = group_norms(z, gs);
  const Vec v = norms.cwiseSqrt();
  Vec u(6);
  for (Index i = 0; i < 6; ++i) u[i] = z[i] / v[gs.group_of(i)];
  EXPECT_LT((hadamard_group(u, v, gs) - z).norm(), 1e-14);
  EXPECT_NEAR(0.5 * u.squaredNorm() + 0.5 * v.squaredNorm(), group_norm_12(z, gs), 1e-13);
}

TEST(Groups, VariationalUpperBound) {
  const auto gs = GroupStructure::contiguous(12, 5);
  for (int t = 0; t < 200; ++t) {
    const Vec u = random_normal(12, 3 * t);
    const Vec v = random_normal(gs.count(), 3 * t + 1);
    EXPECT_LE(group_norm_12(hadamard_group(u, v, gs), gs),
              0.5 * u.squaredNorm() + 0.5 * v.squaredNorm() + 1e-12);
  }
}

TEST(Groups, ExtendExamples) {
  const auto gs = GroupStructure::partition({{0, 1}, {2}}, 3);
  EXPECT_EQ(extend((Vec(2) << 2, 3).finished(), gs), (Vec(3) << 2, 2, 3).finished());
  const Vec v = random_normal(4, 1);
  EXPECT_EQ(extend(v, GroupStructure::singletons(4)), v);
}

TEST(Groups, ExtendMatchesHadamardExactly) {
  const auto gs = GroupStructure::contiguous(11, 3);
  const Vec v = random_normal(gs.count(), 4);
  const Vec alpha = random_normal(11, 5);
  const Vec lhs = extend(v, gs).cwiseProduct(alpha);
  EXPECT_EQ((lhs - hadamard_group(alpha, v, gs)).norm(), 0.0);
}

TEST(Groups, NormInf2) {
  const auto gs = GroupStructure::contiguous(4, 2);
  EXPECT_DOUBLE_EQ(group_norm_inf2((Vec(4) << 3, 4, 0, 1).finished(), gs), 5.0);
  const Vec z = random_normal(6, 2);
  EXPECT_EQ(group_norm_inf2(z, GroupStructure::singletons(6)), z.lpNorm<Eigen::Infinity>());
  EXPECT_EQ(group_norm_inf2(Vec::Zero(4), gs), 0.0);
}

TEST(Groups, MatrixRowsFormGroups) {
  const auto gs = GroupStructure::contiguous(2, 2);
  Mat x(2, 2);
  x << 1, 2, 2, 4;
  EXPECT_DOUBLE_EQ(group_norm_12(x, gs), 5.0);
}

TEST(Groups, SoftThresholdAndProjection) {
  const auto gs = GroupStructure::contiguous(4, 2);
  const Vec z = (Vec(4) << 3, 4, 0.3, 0.4).finished();
  const Mat st = group_soft_threshold(z, 1.0, gs);
  EXPECT_LT((st.col(0) - (Vec(4) << 2.4, 3.2, 0, 0).finished()).norm(), 1e-14);
  const Mat pr = group_project_ball(z, 1.0, gs);
  EXPECT_LT((pr.col(0) - (Vec(4) << 0.6, 0.8, 0.3, 0.4).finished()).norm(), 1e-14);
}

TEST(Groups, FileRoundTripIsOneBased) {
  const auto path = std::filesystem::temp_directory_path() / "sop_groups_test.txt";
  const auto gs = GroupStructure::overlapping({{0, 1}, {1, 2}}, 3);
  write_groups(path, gs);
  {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "1 2");
  }
  const auto back = read_groups(path, 3, GroupMode::overlapping);
  ASSERT_EQ(back.count(), 2);
  EXPECT_EQ(back.group(1), (std::vector<Index>{1, 2}));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace sop
