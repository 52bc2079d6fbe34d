#include "sop/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace sop::kernels {

namespace {

// Below this many flops the thread fork costs more than it saves.
constexpr Index kParallelFlops = 1 << 14;

// Shared per-entry bodies. Serial and parallel drivers call exactly these, which
// is what makes the two paths bit-identical.
inline double row_dot(const RowMat& a, Index i, const Vec& x) { return a.row(i).dot(x); }

inline void gemv_t_block(const RowMat& a, const Vec& y, Index j0, Index j1, Vec& out) {
  const Index len = j1 - j0;
  for (Index i = 0; i < a.rows(); ++i) {
    const double yi = y[i];
    out.segment(j0, len) += yi * a.row(i).segment(j0, len).transpose();
  }
}

inline double outer_entry(const RowMat& a, const Vec& d, Index i, Index j) {
  return a.row(i).cwiseProduct(d.transpose()).dot(a.row(j));
}

inline double inner_entry(const RowMat& a, const Vec& d, Index i, Index j) {
  double s = 0.0;
  for (Index k = 0; k < a.rows(); ++k) s += a(k, i) * d[k] * a(k, j);
  return s;
}

inline double grad_entry(const ImageShape& s, const Vec& x, Index out) {
  const Index hw = s.pixels();
  const Index block = out / hw;
  const Index pix = out % hw;
  const Index c = block / 2;
  const Index dir = block % 2;
  const Index i = pix / s.width;
  const Index j = pix % s.width;
  const Index base = c * hw;
  if (dir == 0) {
    if (i + 1 >= s.height) return 0.0;
    return x[base + pix] - x[base + pix + s.width];
  }
  if (j + 1 >= s.width) return 0.0;
  return x[base + pix] - x[base + pix + 1];
}

inline double grad_adjoint_entry(const ImageShape& s, const Vec& p, Index out) {
  const Index hw = s.pixels();
  const Index c = out / hw;
  const Index pix = out % hw;
  const Index i = pix / s.width;
  const Index j = pix % s.width;
  const Index h0 = (2 * c) * hw;
  const Index v0 = (2 * c + 1) * hw;
  double r = 0.0;
  if (i + 1 < s.height) r += p[h0 + pix];
  if (i > 0) r -= p[h0 + pix - s.width];
  if (j + 1 < s.width) r += p[v0 + pix];
  if (j > 0) r -= p[v0 + pix - 1];
  return r;
}

void check_gemv(const RowMat& a, const Vec& x) { require_size(x.size(), a.cols(), "gemv"); }
void check_gemv_t(const RowMat& a, const Vec& y) { require_size(y.size(), a.rows(), "gemv_t"); }

void check_grad(const ImageShape& s, const Vec& x) { require_size(x.size(), s.size(), "grad2d"); }
void check_grad_adj(const ImageShape& s, const Vec& p) {
  require_size(p.size(), 2 * s.size(), "grad2d adjoint");
}

}  // namespace

namespace serial {

Vec gemv(const RowMat& a, const Vec& x) {
  check_gemv(a, x);
  Vec out(a.rows());
  for (Index i = 0; i < a.rows(); ++i) out[i] = row_dot(a, i, x);
  return out;
}

Vec gemv_t(const RowMat& a, const Vec& y) {
  check_gemv_t(a, y);
  Vec out = Vec::Zero(a.cols());
  gemv_t_block(a, y, 0, a.cols(), out);
  return out;
}

Mat weighted_outer(const RowMat& a, const Vec& d) {
  require_size(d.size(), a.cols(), "weighted_outer");
  const Index m = a.rows();
  Mat out(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i; j < m; ++j) out(i, j) = out(j, i) = outer_entry(a, d, i, j);
  return out;
}

Mat weighted_inner(const RowMat& a, const Vec& d) {
  require_size(d.size(), a.rows(), "weighted_inner");
  const Index n = a.cols();
  Mat out(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) out(i, j) = out(j, i) = inner_entry(a, d, i, j);
  return out;
}

Vec grad2d_apply(const ImageShape& s, const Vec& x) {
  check_grad(s, x);
  Vec out(2 * s.size());
  for (Index k = 0; k < out.size(); ++k) out[k] = grad_entry(s, x, k);
  return out;
}

Vec grad2d_adjoint(const ImageShape& s, const Vec& p) {
  check_grad_adj(s, p);
  Vec out(s.size());
  for (Index k = 0; k < out.size(); ++k) out[k] = grad_adjoint_entry(s, p, k);
  return out;
}

}  // namespace serial

namespace parallel {

Vec gemv(const RowMat& a, const Vec& x) {
  check_gemv(a, x);
  Vec out(a.rows());
  const Index m = a.rows();
#pragma omp parallel for schedule(static) if (a.size() > kParallelFlops)
  for (Index i = 0; i < m; ++i) out[i] = row_dot(a, i, x);
  return out;
}

Vec gemv_t(const RowMat& a, const Vec& y) {
  check_gemv_t(a, y);
  Vec out = Vec::Zero(a.cols());
  const Index n = a.cols();
  const Index chunk = 64;
  const Index nblocks = (n + chunk - 1) / chunk;
#pragma omp parallel for schedule(static) if (a.size() > kParallelFlops)
  for (Index b = 0; b < nblocks; ++b) {
    const Index j0 = b * chunk;
    gemv_t_block(a, y, j0, std::min(n, j0 + chunk), out);
  }
  return out;
}

Mat weighted_outer(const RowMat& a, const Vec& d) {
  require_size(d.size(), a.cols(), "weighted_outer");
  const Index m = a.rows();
  Mat out(m, m);
#pragma omp parallel for schedule(dynamic, 4) if (m * m * a.cols() > kParallelFlops)
  for (Index i = 0; i < m; ++i)
    for (Index j = i; j < m; ++j) out(i, j) = out(j, i) = outer_entry(a, d, i, j);
  return out;
}

Mat weighted_inner(const RowMat& a, const Vec& d) {
  require_size(d.size(), a.rows(), "weighted_inner");
  const Index n = a.cols();
  Mat out(n, n);
#pragma omp parallel for schedule(dynamic, 4) if (n * n * a.rows() > kParallelFlops)
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) out(i, j) = out(j, i) = inner_entry(a, d, i, j);
  return out;
}

Vec grad2d_apply(const ImageShape& s, const Vec& x) {
  check_grad(s, x);
  Vec out(2 * s.size());
  const Index len = out.size();
#pragma omp parallel for schedule(static) if (len > kParallelFlops)
  for (Index k = 0; k < len; ++k) out[k] = grad_entry(s, x, k);
  return out;
}

Vec grad2d_adjoint(const ImageShape& s, const Vec& p) {
  check_grad_adj(s, p);
  Vec out(s.size());
  const Index len = out.size();
#pragma omp parallel for schedule(static) if (len > kParallelFlops)
  for (Index k = 0; k < len; ++k) out[k] = grad_adjoint_entry(s, p, k);
  return out;
}

}  // namespace parallel

void set_num_threads(int n) { omp_set_num_threads(std::max(1, n)); }
int num_threads() { return omp_get_max_threads(); }

}  // namespace sop::kernels
