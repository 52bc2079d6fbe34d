#pragma once

// Hot dense and stencil kernels. Every kernel has a serial reference and an
// OpenMP version; both compute each output entry with the same summation
// order, so their results are bit-identical for any thread count.

#include "sop/types.hpp"

namespace sop {

struct ImageShape {
  Index height = 0;
  Index width = 0;
  Index channels = 1;

  Index pixels() const { return height * width; }
  Index size() const { return height * width * channels; }
};

namespace kernels {

namespace serial {
Vec gemv(const RowMat& a, const Vec& x);
Vec gemv_t(const RowMat& a, const Vec& y);
// a * diag(d) * a^T
Mat weighted_outer(const RowMat& a, const Vec& d);
// a^T * diag(d) * a
Mat weighted_inner(const RowMat& a, const Vec& d);
Vec grad2d_apply(const ImageShape& s, const Vec& x);
Vec grad2d_adjoint(const ImageShape& s, const Vec& p);
}  // namespace serial

namespace parallel {
Vec gemv(const RowMat& a, const Vec& x);
Vec gemv_t(const RowMat& a, const Vec& y);
Mat weighted_outer(const RowMat& a, const Vec& d);
Mat weighted_inner(const RowMat& a, const Vec& d);
Vec grad2d_apply(const ImageShape& s, const Vec& x);
Vec grad2d_adjoint(const ImageShape& s, const Vec& p);
}  // namespace parallel

// Library code calls these; they forward to the parallel kernels.
using parallel::gemv;
using parallel::gemv_t;
using parallel::grad2d_adjoint;
using parallel::grad2d_apply;
using parallel::weighted_inner;
using parallel::weighted_outer;

void set_num_threads(int n);
int num_threads();

}  // namespace kernels
}  // namespace sop
