#pragma once

#include "sop/groups.hpp"
#include "sop/kernels.hpp"
#include "sop/types.hpp"

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

namespace sop {

enum class OperatorKind {
  dense,
  identity,
  mask,
  grad2d,
  multichannel_grad,
  block_extract,
  partial_fourier_real,
};

const char* to_string(OperatorKind k);

// Immutable linear map with apply/adjoint. Copies share the underlying storage.
class LinearOperator {
 public:
  // `tag` lets structured constructions that end up dense keep their identity.
  static LinearOperator dense(RowMat a, OperatorKind tag = OperatorKind::dense);
  static LinearOperator identity(Index n);
  // Keeps the listed (0-based) coordinates of a length-n vector, in sorted order.
  static LinearOperator mask(std::vector<Index> keep, Index n);
  // Stacked forward differences per channel: [D_h x_0; D_v x_0; D_h x_1; ...].
  static LinearOperator grad2d(const ImageShape& shape);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  OperatorKind kind() const { return kind_; }

  Vec apply(const Vec& x) const;
  Vec adjoint(const Vec& y) const;
  RowMat to_dense() const;
  // Null unless the operator stores an explicit matrix.
  const RowMat* matrix() const;
  const std::vector<Index>& kept_indices() const;

 private:
  struct DenseRep {
    std::shared_ptr<const RowMat> a;
  };
  struct IdentityRep {};
  struct MaskRep {
    std::shared_ptr<const std::vector<Index>> keep;
  };
  struct GradRep {
    ImageShape shape;
  };
  struct BlockRep {
    std::shared_ptr<const std::vector<Index>> source;  // source coordinate of each row
    std::shared_ptr<const Vec> scale;
  };
  using Rep = std::variant<DenseRep, IdentityRep, MaskRep, GradRep, BlockRep>;

  LinearOperator(Rep rep, Index rows, Index cols, OperatorKind kind)
      : rep_(std::move(rep)), rows_(rows), cols_(cols), kind_(kind) {}

  friend LinearOperator block_extract(const GroupStructure& groups, Index n);

  Rep rep_;
  Index rows_;
  Index cols_;
  OperatorKind kind_;
};

struct FourierSystemSpec {
  Index dimension = 1;
  // Frequencies l with |l_k| <= cutoff / 2 on every axis.
  Index cutoff = 2;
  // Grid points theta = k / grid per axis; these index the columns.
  Index grid = 300;
};

// Low-pass Fourier measurements of a signal on a regular grid, real-stacked
// (all real parts, then all imaginary parts). Entries are
// exp(2 pi i <theta, l>) / cutoff^(d/2).
LinearOperator fourier_system(const FourierSystemSpec& spec);

// Stacks weight_g * x[I_g] for every group (weights default to sqrt(|I_g|)
// for overlapping structures, 1 for partitions).
LinearOperator block_extract(const GroupStructure& groups, Index n);

// Power iteration estimate of the spectral norm.
double spectral_norm(const LinearOperator& op, int iterations = 100, std::uint64_t seed = 7);

// Largest Euclidean column norm, i.e. the 1 -> 2 operator norm.
double max_column_norm(const LinearOperator& op);

}  // namespace sop
