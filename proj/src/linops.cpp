#include "sop/linops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace sop {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

const char* to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::dense: return "dense";
    case OperatorKind::identity: return "identity";
    case OperatorKind::mask: return "mask";
    case OperatorKind::grad2d: return "grad2d";
    case OperatorKind::multichannel_grad: return "multichannel-grad";
    case OperatorKind::block_extract: return "block-extract";
    case OperatorKind::partial_fourier_real: return "partial-fourier-real";
  }
  return "unknown";
}

LinearOperator LinearOperator::dense(RowMat a, OperatorKind tag) {
  const Index r = a.rows();
  const Index c = a.cols();
  return LinearOperator(DenseRep{std::make_shared<const RowMat>(std::move(a))}, r, c, tag);
}

LinearOperator LinearOperator::identity(Index n) {
  return LinearOperator(IdentityRep{}, n, n, OperatorKind::identity);
}

LinearOperator LinearOperator::mask(std::vector<Index> keep, Index n) {
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw ConfigError("mask indices must be distinct");
  if (!keep.empty() && (keep.front() < 0 || keep.back() >= n))
    throw DimensionError("mask index out of range");
  const Index r = static_cast<Index>(keep.size());
  return LinearOperator(MaskRep{std::make_shared<const std::vector<Index>>(std::move(keep))}, r,
                        n, OperatorKind::mask);
}

LinearOperator LinearOperator::grad2d(const ImageShape& shape) {
  if (shape.height < 1 || shape.width < 1 || shape.channels < 1)
    throw ConfigError("grad2d needs a nonempty image shape");
  const auto kind = shape.channels > 1 ? OperatorKind::multichannel_grad : OperatorKind::grad2d;
  return LinearOperator(GradRep{shape}, 2 * shape.size(), shape.size(), kind);
}

Vec LinearOperator::apply(const Vec& x) const {
  require_size(x.size(), cols_, "apply");
  return std::visit(
      overloaded{
          [&](const DenseRep& d) -> Vec { return kernels::gemv(*d.a, x); },
          [&](const IdentityRep&) -> Vec { return x; },
          [&](const MaskRep& m) -> Vec {
            Vec out(rows_);
            for (Index k = 0; k < rows_; ++k) out[k] = x[(*m.keep)[static_cast<std::size_t>(k)]];
            return out;
          },
          [&](const GradRep& g) -> Vec { return kernels::grad2d_apply(g.shape, x); },
          [&](const BlockRep& b) -> Vec {
            Vec out(rows_);
            for (Index k = 0; k < rows_; ++k)
              out[k] = (*b.scale)[k] * x[(*b.source)[static_cast<std::size_t>(k)]];
            return out;
          },
      },
      rep_);
}

Vec LinearOperator::adjoint(const Vec& y) const {
  require_size(y.size(), rows_, "adjoint");
  return std::visit(
      overloaded{
          [&](const DenseRep& d) -> Vec { return kernels::gemv_t(*d.a, y); },
          [&](const IdentityRep&) -> Vec { return y; },
          [&](const MaskRep& m) -> Vec {
            Vec out = Vec::Zero(cols_);
            for (Index k = 0; k < rows_; ++k) out[(*m.keep)[static_cast<std::size_t>(k)]] = y[k];
            return out;
          },
          [&](const GradRep& g) -> Vec { return kernels::grad2d_adjoint(g.shape, y); },
          [&](const BlockRep& b) -> Vec {
            Vec out = Vec::Zero(cols_);
            for (Index k = 0; k < rows_; ++k)
              out[(*b.source)[static_cast<std::size_t>(k)]] += (*b.scale)[k] * y[k];
            return out;
          },
      },
      rep_);
}

RowMat LinearOperator::to_dense() const {
  if (const auto* d = std::get_if<DenseRep>(&rep_)) return *d->a;
  RowMat out = RowMat::Zero(rows_, cols_);
  std::visit(overloaded{
                 [&](const DenseRep&) {},
                 [&](const IdentityRep&) { out.setIdentity(); },
                 [&](const MaskRep& m) {
                   for (Index k = 0; k < rows_; ++k) out(k, (*m.keep)[static_cast<std::size_t>(k)]) = 1.0;
                 },
                 [&](const GradRep&) {
                   Vec e = Vec::Zero(cols_);
                   for (Index j = 0; j < cols_; ++j) {
                     e[j] = 1.0;
                     out.col(j) = apply(e);
                     e[j] = 0.0;
                   }
                 },
                 [&](const BlockRep& b) {
                   for (Index k = 0; k < rows_; ++k)
                     out(k, (*b.source)[static_cast<std::size_t>(k)]) = (*b.scale)[k];
                 },
             },
             rep_);
  return out;
}

const RowMat* LinearOperator::matrix() const {
  if (const auto* d = std::get_if<DenseRep>(&rep_)) return d->a.get();
  return nullptr;
}

const std::vector<Index>& LinearOperator::kept_indices() const {
  if (const auto* m = std::get_if<MaskRep>(&rep_)) return *m->keep;
  throw ConfigError("kept_indices on a non-mask operator");
}

LinearOperator fourier_system(const FourierSystemSpec& spec) {
  if (spec.cutoff < 1 || spec.grid < 1 || spec.dimension < 1)
    throw ConfigError("fourier_system needs cutoff, grid and dimension >= 1");
  const Index d = spec.dimension;
  const Index half = spec.cutoff / 2;
  const Index per_axis = 2 * half + 1;
  Index nfreq = 1;
  Index npts = 1;
  for (Index k = 0; k < d; ++k) {
    nfreq *= per_axis;
    npts *= spec.grid;
  }
  const double scale = std::pow(double(spec.cutoff), -0.5 * double(d));
  RowMat a(2 * nfreq, npts);
  std::vector<Index> l(static_cast<std::size_t>(d));
  std::vector<Index> t(static_cast<std::size_t>(d));
  for (Index r = 0; r < nfreq; ++r) {
    Index rem = r;
    for (Index k = d - 1; k >= 0; --k) {
      l[static_cast<std::size_t>(k)] = rem % per_axis - half;
      rem /= per_axis;
    }
    for (Index c = 0; c < npts; ++c) {
      Index crem = c;
      for (Index k = d - 1; k >= 0; --k) {
        t[static_cast<std::size_t>(k)] = crem % spec.grid;
        crem /= spec.grid;
      }
      // Reduce <theta, l> modulo 1 exactly in integers before the trig call.
      double phase = 0.0;
      for (Index k = 0; k < d; ++k) {
        const Index num = (l[static_cast<std::size_t>(k)] * t[static_cast<std::size_t>(k)]) % spec.grid;
        phase += double(num) / double(spec.grid);
      }
      const double ang = 2.0 * std::numbers::pi * phase;
      a(r, c) = scale * std::cos(ang);
      a(nfreq + r, c) = scale * std::sin(ang);
    }
  }
  return LinearOperator::dense(std::move(a), OperatorKind::partial_fourier_real);
}

LinearOperator block_extract(const GroupStructure& groups, Index n) {
  if (groups.dim() != n) throw DimensionError("block_extract: group dimension mismatch");
  auto source = std::make_shared<std::vector<Index>>();
  auto scale = std::make_shared<Vec>(groups.total_members());
  Index row = 0;
  for (Index g = 0; g < groups.count(); ++g) {
    for (Index i : groups.group(g)) {
      source->push_back(i);
      (*scale)[row++] = groups.weights()[g];
    }
  }
  return LinearOperator(LinearOperator::BlockRep{std::move(source), std::move(scale)}, row, n,
                        OperatorKind::block_extract);
}

double spectral_norm(const LinearOperator& op, int iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec x(op.cols());
  for (Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
  double sigma = 0.0;
  for (int k = 0; k < iterations; ++k) {
    const double nx = x.norm();
    if (nx == 0.0) return 0.0;
    x /= nx;
    Vec y = op.adjoint(op.apply(x));
    sigma = std::sqrt(y.norm());
    x = std::move(y);
  }
  return sigma;
}

double max_column_norm(const LinearOperator& op) {
  if (const RowMat* a = op.matrix()) return a->colwise().norm().maxCoeff();
  return op.to_dense().colwise().norm().maxCoeff();
}

}  // namespace sop
