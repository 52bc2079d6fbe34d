#include "sop/problems.hpp"

#include "sop/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sop {

const RowMat& ProblemInstance::dense_a() const {
  const RowMat* m = a.matrix();
  if (!m) throw ConfigError("instance operator is not stored densely");
  return *m;
}

namespace {

std::vector<Index> sample_without_replacement(Index n, Index k, std::mt19937_64& rng) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(k));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

GroupStructure overlapping_blocks(Index n, Index overlap, std::uint64_t seed) {
  if (overlap < 0 || overlap >= 20) throw ConfigError("overlap must lie in [0, 20)");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> size_dist(overlap + 1, 20);
  std::vector<std::vector<Index>> groups;
  Index start = 0;
  while (true) {
    const Index end = std::min(n, start + size_dist(rng));
    std::vector<Index> block(static_cast<std::size_t>(end - start));
    std::iota(block.begin(), block.end(), start);
    groups.push_back(std::move(block));
    if (end == n) break;
    start = end - overlap;
  }
  return GroupStructure::overlapping(std::move(groups), n);
}

ProblemInstance gen_gaussian_instance(const GaussianSpec& spec) {
  if (spec.m <= 0 || spec.n <= 0 || spec.tasks <= 0) throw ConfigError("sizes must be positive");
  if (spec.sparsity < 0 || spec.sparsity > spec.n) throw ConfigError("sparsity must lie in [0, n]");
  if (spec.noise_std < 0.0) throw ConfigError("noise_std must be nonnegative");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  RowMat a(spec.m, spec.n);
  for (Index i = 0; i < spec.m; ++i)
    for (Index j = 0; j < spec.n; ++j) a(i, j) = normal(rng);
  if (spec.normalize_columns) {
    for (Index j = 0; j < spec.n; ++j) {
      const double c = a.col(j).norm();
      if (c > 0.0) a.col(j) /= c;
    }
  }
  Mat x = Mat::Zero(spec.n, spec.tasks);
  for (Index i : sample_without_replacement(spec.n, spec.sparsity, rng))
    for (Index t = 0; t < spec.tasks; ++t) x(i, t) = normal(rng);
  Mat noise = Mat::Zero(spec.m, spec.tasks);
  if (spec.noise_std > 0.0)
    for (Index t = 0; t < spec.tasks; ++t)
      for (Index i = 0; i < spec.m; ++i) noise(i, t) = spec.noise_std * normal(rng);
  Mat y = a * x + noise;

  GroupStructure groups = spec.overlap > 0
                              ? overlapping_blocks(spec.n, spec.overlap, spec.seed + 1)
                              : GroupStructure::contiguous(spec.n, std::max<Index>(1, spec.group_size));
  return ProblemInstance{LinearOperator::dense(std::move(a)),
                         LinearOperator::identity(spec.n),
                         std::move(y),
                         std::move(x),
                         std::move(noise),
                         std::move(groups),
                         0.0,
                         spec.seed};
}

ProblemInstance gen_fourier_instance(const FourierInstanceSpec& spec) {
  if (spec.spikes < 1) throw ConfigError("need at least one spike");
  if (!(spec.lambda_frac > 0.0)) throw ConfigError("lambda_frac must be positive");
  LinearOperator a = fourier_system({spec.dimension, spec.cutoff, spec.grid});
  const Index n = a.cols();
  if (spec.spikes > n) throw ConfigError("more spikes than grid points");
  std::mt19937_64 rng(spec.seed);
  Mat x = Mat::Zero(n, 1);
  for (Index i : sample_without_replacement(n, spec.spikes, rng)) x(i, 0) = 1.0;
  Mat y = a.to_dense() * x;
  const double lam = spec.lambda_frac * lambda_max(*a.matrix(), y, LambdaFlavor::lasso);
  const Index m = a.rows();
  return ProblemInstance{std::move(a),
                         LinearOperator::identity(n),
                         std::move(y),
                         std::move(x),
                         Mat::Zero(m, 1),
                         GroupStructure::singletons(n),
                         lam,
                         spec.seed};
}

double lambda_max(const RowMat& a, const Mat& y, LambdaFlavor flavor,
                  const std::optional<GroupStructure>& groups) {
  require_size(y.rows(), a.rows(), "lambda_max observations");
  if (y.norm() == 0.0) throw ConfigError("lambda_max is undefined for y = 0");
  const Mat aty = a.transpose() * y;
  switch (flavor) {
    case LambdaFlavor::lasso:
      return aty.cwiseAbs().maxCoeff();
    case LambdaFlavor::group_lasso: {
      const GroupStructure gs = groups ? *groups : GroupStructure::singletons(a.cols());
      return group_norm_inf2(aty, gs);
    }
    case LambdaFlavor::sqrt_lasso:
      return aty.cwiseAbs().maxCoeff() / (y.norm() * std::sqrt(double(a.rows())));
  }
  return 0.0;
}

GroupStructure tv_groups(const ImageShape& shape) {
  const Index pixels = shape.pixels();
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(pixels));
  for (Index pix = 0; pix < pixels; ++pix)
    for (Index block = 0; block < 2 * shape.channels; ++block)
      groups[static_cast<std::size_t>(pix)].push_back(block * pixels + pix);
  return GroupStructure::partition(std::move(groups), 2 * shape.size());
}

GroupStructure pixel_groups(const ImageShape& shape) {
  const Index pixels = shape.pixels();
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(pixels));
  for (Index pix = 0; pix < pixels; ++pix)
    for (Index c = 0; c < shape.channels; ++c)
      groups[static_cast<std::size_t>(pix)].push_back(c * pixels + pix);
  return GroupStructure::partition(std::move(groups), shape.size());
}

ImageTensor add_salt_pepper(const ImageTensor& img, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in [0, 1]");
  const Index pixels = img.shape.pixels();
  const auto count = static_cast<Index>(std::llround(fraction * double(pixels)));
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  ImageTensor out = img;
  for (Index pix : sample_without_replacement(pixels, count, rng)) {
    const double value = coin(rng) ? 1.0 : 0.0;
    for (Index c = 0; c < img.shape.channels; ++c) out.data[c * pixels + pix] = value;
  }
  return out;
}

LinearOperator make_inpainting_mask(const ImageShape& shape, double keep_fraction,
                                    std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ConfigError("keep_fraction must lie in (0, 1]");
  const Index pixels = shape.pixels();
  const auto count = static_cast<Index>(std::floor(keep_fraction * double(pixels)));
  std::mt19937_64 rng(seed);
  const std::vector<Index> kept = sample_without_replacement(pixels, count, rng);
  std::vector<Index> keep;
  keep.reserve(kept.size() * static_cast<std::size_t>(shape.channels));
  for (Index c = 0; c < shape.channels; ++c)
    for (Index pix : kept) keep.push_back(c * pixels + pix);
  return LinearOperator::mask(std::move(keep), shape.size());
}

}  // namespace sop
