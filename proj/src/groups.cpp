#include "sop/groups.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace sop {

void GroupStructure::validate_indices(const std::vector<std::vector<Index>>& groups, Index dim) {
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError("empty group");
    for (Index i : g) {
      if (i < 0 || i >= dim) {
        throw ConfigError("group index " + std::to_string(i + 1) + " outside [1," +
                          std::to_string(dim) + "]");
      }
    }
  }
}

GroupStructure GroupStructure::partition(std::vector<std::vector<Index>> groups, Index dim) {
  validate_indices(groups, dim);
  GroupStructure gs;
  gs.dim_ = dim;
  gs.mode_ = GroupMode::partition;
  gs.owner_.assign(static_cast<std::size_t>(dim), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::sort(groups[g].begin(), groups[g].end());
    for (Index i : groups[g]) {
      auto& o = gs.owner_[static_cast<std::size_t>(i)];
      if (o != -1) throw ConfigError("groups overlap at index " + std::to_string(i + 1));
      o = static_cast<Index>(g);
    }
  }
  if (std::find(gs.owner_.begin(), gs.owner_.end(), -1) != gs.owner_.end())
    throw ConfigError("groups do not cover every index");
  gs.groups_ = std::move(groups);
  gs.weights_ = Vec::Ones(gs.count());
  return gs;
}

GroupStructure GroupStructure::overlapping(std::vector<std::vector<Index>> groups, Index dim,
                                           Vec weights) {
  validate_indices(groups, dim);
  GroupStructure gs;
  gs.dim_ = dim;
  gs.mode_ = GroupMode::overlapping;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }
  gs.groups_ = std::move(groups);
  if (weights.size() == 0) {
    weights.resize(gs.count());
    for (Index g = 0; g < gs.count(); ++g) weights[g] = std::sqrt(double(gs.group_size(g)));
  }
  require_size(weights.size(), gs.count(), "group weights");
  if ((weights.array() <= 0.0).any()) throw ConfigError("group weights must be positive");
  gs.weights_ = std::move(weights);
  return gs;
}

GroupStructure GroupStructure::singletons(Index dim) { return contiguous(dim, 1); }

GroupStructure GroupStructure::contiguous(Index dim, Index size) {
  if (size < 1) throw ConfigError("group size must be positive");
  std::vector<std::vector<Index>> groups;
  for (Index start = 0; start < dim; start += size) {
    std::vector<Index> g;
    for (Index i = start; i < std::min(dim, start + size); ++i) g.push_back(i);
    groups.push_back(std::move(g));
  }
  return partition(std::move(groups), dim);
}

bool GroupStructure::covers() const {
  std::vector<bool> seen(static_cast<std::size_t>(dim_), false);
  for (const auto& g : groups_)
    for (Index i : g) seen[static_cast<std::size_t>(i)] = true;
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

Index GroupStructure::total_members() const {
  Index n = 0;
  for (const auto& g : groups_) n += static_cast<Index>(g.size());
  return n;
}

Vec group_sq_norms(const Eigen::Ref<const Mat>& x, const GroupStructure& gs) {
  require_size(x.rows(), gs.dim(), "group_sq_norms");
  Vec out(gs.count());
  for (Index g = 0; g < gs.count(); ++g) {
    double s = 0.0;
    for (Index i : gs.group(g)) s += x.row(i).squaredNorm();
    out[g] = s;
  }
  return out;
}

Vec group_norms(const Eigen::Ref<const Mat>& x, const GroupStructure& gs) {
  return group_sq_norms(x, gs).cwiseSqrt();
}

double group_norm_12(const Eigen::Ref<const Mat>& x, const GroupStructure& gs) {
  if (!gs.is_partition()) throw ConfigError("group_norm_12 needs a partition");
  return group_norms(x, gs).sum();
}

double group_norm_inf2(const Eigen::Ref<const Mat>& x, const GroupStructure& gs) {
  if (gs.count() == 0) return 0.0;
  return group_norms(x, gs).maxCoeff();
}

Vec extend(const Vec& v, const GroupStructure& gs) {
  require_size(v.size(), gs.count(), "extend");
  Vec out(gs.dim());
  for (Index g = 0; g < gs.count(); ++g)
    for (Index i : gs.group(g)) out[i] = v[g];
  return out;
}

Vec hadamard_group(const Vec& u, const Vec& v, const GroupStructure& gs) {
  if (!gs.is_partition()) throw ConfigError("hadamard_group needs a partition");
  require_size(u.size(), gs.dim(), "hadamard_group u");
  return u.cwiseProduct(extend(v, gs));
}

Mat group_soft_threshold(const Eigen::Ref<const Mat>& z, double t, const GroupStructure& gs) {
  Mat out = z;
  const Vec norms = group_norms(z, gs);
  for (Index g = 0; g < gs.count(); ++g) {
    const double scale = norms[g] > t ? 1.0 - t / norms[g] : 0.0;
    for (Index i : gs.group(g)) out.row(i) *= scale;
  }
  return out;
}

Mat group_project_ball(const Eigen::Ref<const Mat>& z, double radius, const GroupStructure& gs) {
  Mat out = z;
  const Vec norms = group_norms(z, gs);
  for (Index g = 0; g < gs.count(); ++g) {
    if (norms[g] > radius) {
      const double scale = radius / norms[g];
      for (Index i : gs.group(g)) out.row(i) *= scale;
    }
  }
  return out;
}

GroupStructure read_groups(const std::filesystem::path& path, Index dim, GroupMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open group file " + path.string());
  std::vector<std::vector<Index>> groups;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<Index> g;
    long long idx = 0;
    while (ls >> idx) g.push_back(static_cast<Index>(idx - 1));
    if (!ls.eof()) throw IoError("malformed group line: " + line);
    if (!g.empty()) groups.push_back(std::move(g));
  }
  return mode == GroupMode::partition ? GroupStructure::partition(std::move(groups), dim)
                                      : GroupStructure::overlapping(std::move(groups), dim);
}

void write_groups(const std::filesystem::path& path, const GroupStructure& gs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write group file " + path.string());
  for (Index g = 0; g < gs.count(); ++g) {
    const auto& members = gs.group(g);
    for (std::size_t k = 0; k < members.size(); ++k) out << (k ? " " : "") << members[k] + 1;
    out << '\n';
  }
}

}  // namespace sop
