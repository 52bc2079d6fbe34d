#pragma once

// Instance generators, noise models and lambda_max.

#include "sop/groups.hpp"
#include "sop/io.hpp"
#include "sop/linops.hpp"
#include "sop/types.hpp"

#include <cstdint>
#include <optional>

namespace sop {

struct ProblemInstance {
  LinearOperator a;
  LinearOperator l;
  Mat y;       // m x T (T = 1 for vector problems)
  Mat x_star;  // planted signal, n x T
  Mat noise;   // y - A x_star
  GroupStructure groups;  // over the rows of x
  double lambda = 0.0;
  std::uint64_t seed = 0;

  Vec y_vec() const { return y.col(0); }
  Vec x_star_vec() const { return x_star.col(0); }
  const RowMat& dense_a() const;
};

struct GaussianSpec {
  Index m = 20;
  Index n = 60;
  Index sparsity = 5;  // nonzero rows of x_star
  Index tasks = 1;
  // 0: singleton groups (or contiguous blocks of `group_size`). >0: overlapping
  // consecutive blocks of random size 1..20 sharing `overlap` indices.
  Index overlap = 0;
  Index group_size = 1;
  double noise_std = 0.0;
  bool normalize_columns = true;
  std::uint64_t seed = 0;
};

// I.i.d. standard normal A (unit-norm columns by default), planted x_star with
// standard normal nonzero rows, y = A x_star + noise. lambda is left at 0.
ProblemInstance gen_gaussian_instance(const GaussianSpec& spec);

// Consecutive blocks of random length 1..20 where neighbours share `overlap`
// indices; the blocks cover [0, n).
GroupStructure overlapping_blocks(Index n, Index overlap, std::uint64_t seed);

struct FourierInstanceSpec {
  Index dimension = 1;
  Index cutoff = 8;
  Index grid = 300;
  Index spikes = 1;
  double lambda_frac = 0.1;
  std::uint64_t seed = 0;
};

// Low-pass Fourier measurements of unit spikes at distinct random grid
// points; lambda = lambda_frac * lambda_max (lasso).
ProblemInstance gen_fourier_instance(const FourierInstanceSpec& spec);

enum class LambdaFlavor { lasso, group_lasso, sqrt_lasso };

// lasso: ||A^T y||_inf. group_lasso: max_g ||(A^T Y)_g|| over row groups.
// sqrt_lasso: ||A^T y||_inf / (||y|| sqrt(m)). Throws ConfigError for y = 0.
double lambda_max(const RowMat& a, const Mat& y, LambdaFlavor flavor,
                  const std::optional<GroupStructure>& groups = std::nullopt);

// Rows of grad2d(shape) grouped per pixel: both directions of every channel
// (2 * channels entries), the vectorial TV groups.
GroupStructure tv_groups(const ImageShape& shape);
// Coordinates of an image grouped per pixel across channels.
GroupStructure pixel_groups(const ImageShape& shape);

// Sets round(fraction * H * W) pixels (all channels jointly) to 0 or 1 with
// equal probability.
ImageTensor add_salt_pepper(const ImageTensor& img, double fraction, std::uint64_t seed);

// Keeps floor(keep_fraction * H * W) uniformly chosen pixels, the same ones in
// every channel.
LinearOperator make_inpainting_mask(const ImageShape& shape, double keep_fraction,
                                    std::uint64_t seed);

}  // namespace sop
