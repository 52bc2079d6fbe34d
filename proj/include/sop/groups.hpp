#pragma once

#include "sop/types.hpp"

#include <filesystem>
#include <vector>

namespace sop {

enum class GroupMode { partition, overlapping };

// Blocks of coordinates over [0, dim). Indices are 0-based internally; group
// files on disk are 1-based.
class GroupStructure {
 public:
  // Throws ConfigError unless the groups are disjoint and cover [0, dim).
  static GroupStructure partition(std::vector<std::vector<Index>> groups, Index dim);
  // Weights default to sqrt(group size).
  static GroupStructure overlapping(std::vector<std::vector<Index>> groups, Index dim,
                                    Vec weights = Vec());
  static GroupStructure singletons(Index dim);
  // Consecutive blocks of `size` (the last one may be shorter).
  static GroupStructure contiguous(Index dim, Index size);

  Index dim() const { return dim_; }
  Index count() const { return static_cast<Index>(groups_.size()); }
  GroupMode mode() const { return mode_; }
  bool is_partition() const { return mode_ == GroupMode::partition; }
  const std::vector<Index>& group(Index g) const { return groups_[static_cast<std::size_t>(g)]; }
  Index group_size(Index g) const { return static_cast<Index>(group(g).size()); }
  const Vec& weights() const { return weights_; }
  // Partition mode only.
  Index group_of(Index i) const { return owner_[static_cast<std::size_t>(i)]; }
  // True when every index is covered by at least one group.
  bool covers() const;
  Index total_members() const;

 private:
  GroupStructure() = default;
  static void validate_indices(const std::vector<std::vector<Index>>& groups, Index dim);

  std::vector<std::vector<Index>> groups_;
  Index dim_ = 0;
  GroupMode mode_ = GroupMode::partition;
  Vec weights_;
  std::vector<Index> owner_;
};

// Row-grouped helpers: a vector is the one-column case. For a matrix X the
// group g collects the rows of X indexed by the group.
Vec group_sq_norms(const Eigen::Ref<const Mat>& x, const GroupStructure& gs);
Vec group_norms(const Eigen::Ref<const Mat>& x, const GroupStructure& gs);
double group_norm_12(const Eigen::Ref<const Mat>& x, const GroupStructure& gs);
double group_norm_inf2(const Eigen::Ref<const Mat>& x, const GroupStructure& gs);

// v_bar: the per-group scalars broadcast to their coordinates.
Vec extend(const Vec& v, const GroupStructure& gs);
// Entry i in group g becomes u_i * v_g.
Vec hadamard_group(const Vec& u, const Vec& v, const GroupStructure& gs);
// Group-wise soft thresholding: z_g * max(0, 1 - t / ||z_g||).
Mat group_soft_threshold(const Eigen::Ref<const Mat>& z, double t, const GroupStructure& gs);
// Projection onto { ||z_g|| <= radius for every g }.
Mat group_project_ball(const Eigen::Ref<const Mat>& z, double radius, const GroupStructure& gs);

GroupStructure read_groups(const std::filesystem::path& path, Index dim, GroupMode mode);
void write_groups(const std::filesystem::path& path, const GroupStructure& gs);

}  // namespace sop
