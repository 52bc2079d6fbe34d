#include "sop/inner.hpp"

#include "sop/kernels.hpp"
#include "sop/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace sop {

namespace {

// Borrow an operator's matrix when it has one, otherwise densify once.
class DenseView {
 public:
  explicit DenseView(const LinearOperator& op) : ptr_(op.matrix()) {
    if (!ptr_) {
      owned_ = op.to_dense();
      ptr_ = &owned_;
    }
  }
  const RowMat& operator*() const { return *ptr_; }
  const RowMat* operator->() const { return ptr_; }

 private:
  const RowMat* ptr_;
  RowMat owned_;
};

Vec squared_extension(const GroupStructure& gs, const Vec& v, double floor) {
  Vec e = extend(v, gs);
  return e.cwiseAbs2().array() + floor;
}

bool degenerate(const Vec& v, double ratio) {
  if (v.size() == 0) return false;
  const double vmax = v.cwiseAbs().maxCoeff();
  return vmax == 0.0 || v.cwiseAbs().minCoeff() < ratio * vmax;
}

bool use_cg(const InnerConfig& cfg, Index size) {
  if (cfg.method == InnerMethod::conjugate_gradient) return true;
  if (cfg.method == InnerMethod::direct) return false;
  return size > cfg.direct_max_size;
}

int cg_budget(const InnerConfig& cfg, Index size) {
  return cfg.cg_max_iter > 0 ? cfg.cg_max_iter : static_cast<int>(10 * std::max<Index>(size, 1));
}

linalg::CgResult run_cg(const std::function<Vec(const Vec&)>& apply, const Vec& rhs,
                        const Vec* warm, const InnerConfig& cfg) {
  const Vec x0 = warm && warm->size() == rhs.size() ? *warm : Vec::Zero(rhs.size());
  auto res = linalg::conjugate_gradient(apply, rhs, x0, cfg.cg_tol, cg_budget(cfg, rhs.size()));
  if (!res.converged)
    throw ConvergenceError("inner CG stalled at relative residual " +
                               std::to_string(res.relative_residual),
                           res.relative_residual);
  return res;
}

double data_scale(const Vec& y) { return 1.0 + (y.size() ? y.cwiseAbs().maxCoeff() : 0.0); }

double inf_norm(const Vec& r) { return r.size() ? r.cwiseAbs().maxCoeff() : 0.0; }

double robust_kkt(const LinearOperator& a, const LinearOperator& l, const Vec& vb2,
                  const Vec& wb2, double lambda, const Vec& y, const InnerSolution& s) {
  const double r1 = inf_norm(l.adjoint(s.alpha) + a.adjoint(s.xi));
  const double r2 = inf_norm(l.apply(s.x) + vb2.cwiseProduct(s.alpha));
  const double r3 = inf_norm(a.apply(s.x) - y + lambda * wb2.cwiseProduct(s.xi));
  return std::max({r1, r2, r3}) / data_scale(y);
}

void check_common(const LinearOperator& a, const LinearOperator& l, const GroupStructure& reg,
                  const Vec& v, double lambda, const Vec& y) {
  if (a.cols() != l.cols()) throw DimensionError("A and L must share their column count");
  require_size(y.size(), a.rows(), "observations");
  require_size(reg.dim(), l.rows(), "regularizer groups");
  require_size(v.size(), reg.count(), "group scalars v");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
}

}  // namespace

double quadratic_kkt_residual(const LinearOperator& a, const LinearOperator& l,
                              const GroupStructure& reg, const Vec& v, double lambda,
                              const Vec& y, const InnerSolution& s) {
  const Vec vb2 = squared_extension(reg, v, 0.0);
  const double r1 = inf_norm(l.adjoint(s.alpha) + a.adjoint(s.xi));
  const double r2 = inf_norm(lambda * s.xi - (a.apply(s.x) - y));
  const double r3 = inf_norm(l.apply(s.x) - vb2.cwiseProduct(s.alpha));
  return std::max({r1, r2, r3}) / data_scale(y);
}

InnerSolution solve_quadratic_extended(const LinearOperator& a, const LinearOperator& l,
                                       const GroupStructure& reg, const Vec& v, double lambda,
                                       const Vec& y, const InnerConfig& cfg) {
  check_common(a, l, reg, v, lambda, y);
  const Index m = a.rows(), p = l.rows(), n = a.cols();
  const Vec vb2 = squared_extension(reg, v, cfg.epsilon_floor);
  const DenseView ad(a);
  const DenseView ld(l);
  // Unknowns (xi, alpha, x); rhs (-y, 0, 0).
  Mat k = Mat::Zero(m + p + n, m + p + n);
  k.topLeftCorner(m, m).diagonal().setConstant(lambda);
  k.block(m, m, p, p).diagonal() = vb2;
  k.block(0, m + p, m, n) = -*ad;
  k.block(m + p, 0, n, m) = -ad->transpose();
  k.block(m, m + p, p, n) = -*ld;
  k.block(m + p, m, n, p) = -ld->transpose();
  Vec rhs = Vec::Zero(m + p + n);
  rhs.head(m) = -y;
  const Vec sol = linalg::solve_symmetric(k, rhs);
  InnerSolution s;
  s.xi = sol.head(m);
  s.alpha = sol.segment(m, p);
  s.x = sol.tail(n);
  s.system_size = m + p + n;
  s.extended_system = true;
  s.kkt_residual = quadratic_kkt_residual(a, l, reg, v, lambda, y, s);
  return s;
}

InnerSolution solve_quadratic_general(const LinearOperator& a, const LinearOperator& l,
                                      const GroupStructure& reg, const Vec& v, double lambda,
                                      const Vec& y, const InnerConfig& cfg, const Vec* warm) {
  check_common(a, l, reg, v, lambda, y);
  if (cfg.epsilon_floor == 0.0 && degenerate(v, cfg.degenerate_ratio))
    return solve_quadratic_extended(a, l, reg, v, lambda, y, cfg);
  const Vec vb2 = squared_extension(reg, v, cfg.epsilon_floor);
  const Vec inv = vb2.cwiseInverse();
  const Index n = a.cols();
  const Vec rhs = a.adjoint(y);
  InnerSolution s;
  s.system_size = n;
  if (use_cg(cfg, n)) {
    auto apply = [&](const Vec& x) -> Vec {
      return a.adjoint(a.apply(x)) + lambda * l.adjoint(inv.cwiseProduct(l.apply(x)));
    };
    auto res = run_cg(apply, rhs, warm, cfg);
    s.x = std::move(res.x);
    s.cg_iterations = res.iterations;
  } else {
    Mat m = a.kind() == OperatorKind::identity ? Mat(Mat::Identity(n, n))
                                               : kernels::weighted_inner(*DenseView(a), Vec::Ones(a.rows()));
    if (l.kind() == OperatorKind::identity) {
      m.diagonal() += lambda * inv;
    } else {
      m += lambda * kernels::weighted_inner(*DenseView(l), inv);
    }
    try {
      s.x = linalg::solve_spd(m, rhs);
    } catch (const SingularSystemError&) {
      return solve_quadratic_extended(a, l, reg, v, lambda, y, cfg);
    }
  }
  s.alpha = l.apply(s.x).cwiseProduct(inv);
  s.xi = (a.apply(s.x) - y) / lambda;
  s.kkt_residual = quadratic_kkt_residual(a, l, reg, v, lambda, y, s);
  return s;
}

InnerSolution solve_grouplasso_dual(const LinearOperator& a, const GroupStructure& groups,
                                    const Vec& v, double lambda, const Vec& y,
                                    const InnerConfig& cfg, const Vec* warm) {
  const auto id = LinearOperator::identity(a.cols());
  check_common(a, id, groups, v, lambda, y);
  const Vec vb2 = squared_extension(groups, v, cfg.epsilon_floor);
  const Index m = a.rows();
  InnerSolution s;
  s.system_size = m;
  if (use_cg(cfg, m)) {
    auto apply = [&](const Vec& g) -> Vec {
      return a.apply(vb2.cwiseProduct(a.adjoint(g))) + lambda * g;
    };
    auto res = run_cg(apply, -y, warm, cfg);
    s.xi = std::move(res.x);
    s.cg_iterations = res.iterations;
  } else {
    Mat k = kernels::weighted_outer(*DenseView(a), vb2);
    k.diagonal().array() += lambda;
    s.xi = linalg::solve_spd(k, -y);
  }
  s.alpha = -a.adjoint(s.xi);
  s.x = vb2.cwiseProduct(s.alpha);
  s.kkt_residual = quadratic_kkt_residual(a, id, groups, v, lambda, y, s);
  return s;
}

InnerSolution solve_analysis_prox(const LinearOperator& l, const GroupStructure& reg,
                                  const Vec& v, double lambda, const Vec& y,
                                  const InnerConfig& cfg, const Vec* warm) {
  const auto id = LinearOperator::identity(l.cols());
  check_common(id, l, reg, v, lambda, y);
  const Vec vb2 = squared_extension(reg, v, cfg.epsilon_floor);
  const Index p = l.rows();
  const Vec rhs = l.apply(y);
  InnerSolution s;
  s.system_size = p;
  if (use_cg(cfg, p)) {
    auto apply = [&](const Vec& al) -> Vec {
      return lambda * l.apply(l.adjoint(al)) + vb2.cwiseProduct(al);
    };
    auto res = run_cg(apply, rhs, warm, cfg);
    s.alpha = std::move(res.x);
    s.cg_iterations = res.iterations;
  } else {
    Mat k = lambda * kernels::weighted_outer(*DenseView(l), Vec::Ones(l.cols()));
    k.diagonal() += vb2;
    try {
      s.alpha = linalg::solve_spd(k, rhs);
    } catch (const SingularSystemError&) {
      return solve_quadratic_extended(id, l, reg, v, lambda, y, cfg);
    }
  }
  s.x = y - lambda * l.adjoint(s.alpha);
  s.xi = (s.x - y) / lambda;
  s.kkt_residual = quadratic_kkt_residual(id, l, reg, v, lambda, y, s);
  return s;
}

Vec woodbury_diagonal(const GroupStructure& groups, const Vec& v) {
  require_size(v.size(), groups.count(), "group scalars v");
  Vec w = Vec::Zero(groups.dim());
  for (Index g = 0; g < groups.count(); ++g) {
    const double c = groups.weights()[g] * groups.weights()[g] / (v[g] * v[g]);
    for (Index i : groups.group(g)) w[i] += c;
  }
  return w;
}

GroupStructure block_row_groups(const GroupStructure& groups) {
  std::vector<std::vector<Index>> rows;
  Index next = 0;
  for (Index g = 0; g < groups.count(); ++g) {
    std::vector<Index> block;
    for (Index k = 0; k < groups.group_size(g); ++k) block.push_back(next++);
    rows.push_back(std::move(block));
  }
  return GroupStructure::partition(std::move(rows), next);
}

InnerSolution solve_overlap_woodbury(const LinearOperator& a, const GroupStructure& groups,
                                     const Vec& v, double lambda, const Vec& y,
                                     const InnerConfig& cfg) {
  const auto l = block_extract(groups, a.cols());
  const auto rows = block_row_groups(groups);
  if (!groups.covers()) throw ConfigError("Woodbury path needs groups covering every index");
  if (degenerate(v, cfg.degenerate_ratio))
    return solve_quadratic_extended(a, l, rows, v, lambda, y, cfg);
  check_common(a, l, rows, v, lambda, y);
  const Vec d = woodbury_diagonal(groups, v).cwiseInverse();
  const Index m = a.rows();
  Mat k = kernels::weighted_outer(*DenseView(a), d);
  k.diagonal().array() += lambda;
  const Vec g = linalg::solve_spd(k, y);
  InnerSolution s;
  s.system_size = m;
  s.x = d.cwiseProduct(a.adjoint(g));
  s.xi = -g;
  s.alpha = l.apply(s.x).cwiseProduct(squared_extension(rows, v, 0.0).cwiseInverse());
  s.kkt_residual = quadratic_kkt_residual(a, l, rows, v, lambda, y, s);
  return s;
}

InnerSolution solve_robust(const LinearOperator& a, const LinearOperator& l,
                           const GroupStructure& reg, const Vec& v, const GroupStructure& loss,
                           const Vec& w, double lambda, const Vec& y, const InnerConfig& cfg) {
  check_common(a, l, reg, v, lambda, y);
  require_size(loss.dim(), a.rows(), "loss groups");
  require_size(w.size(), loss.count(), "loss scalars w");
  const Vec vb2 = squared_extension(reg, v, cfg.epsilon_floor);
  const Vec wb2 = squared_extension(loss, w, cfg.epsilon_floor);
  const Index m = a.rows(), p = l.rows(), n = a.cols();
  const DenseView ad(a);
  const DenseView ld(l);
  InnerSolution s;
  const bool reduced =
      cfg.epsilon_floor > 0.0 ||
      (!degenerate(v, cfg.degenerate_ratio) && !degenerate(w, cfg.degenerate_ratio));
  if (reduced) {
    // (lambda L^T V^-2 L + A^T W^-2 A) x = A^T W^-2 y
    const Vec vi = vb2.cwiseInverse();
    const Vec wi = wb2.cwiseInverse();
    Mat k = lambda * kernels::weighted_inner(*ld, vi) + kernels::weighted_inner(*ad, wi);
    const Vec rhs = a.adjoint(wi.cwiseProduct(y));
    try {
      s.x = linalg::solve_spd(k, rhs);
      s.alpha = -l.apply(s.x).cwiseProduct(vi);
      s.xi = (y - a.apply(s.x)).cwiseProduct(wi) / lambda;
      s.system_size = n;
      s.kkt_residual = robust_kkt(a, l, vb2, wb2, lambda, y, s);
      return s;
    } catch (const SingularSystemError&) {
    }
  }
  // Unknowns (alpha, xi, x); rhs (0, y, 0).
  Mat k = Mat::Zero(p + m + n, p + m + n);
  k.topLeftCorner(p, p).diagonal() = vb2;
  k.block(p, p, m, m).diagonal() = lambda * wb2;
  k.block(0, p + m, p, n) = *ld;
  k.block(p + m, 0, n, p) = ld->transpose();
  k.block(p, p + m, m, n) = *ad;
  k.block(p + m, p, n, m) = ad->transpose();
  Vec rhs = Vec::Zero(p + m + n);
  rhs.segment(p, m) = y;
  const Vec sol = linalg::solve_symmetric(k, rhs);
  s.alpha = sol.head(p);
  s.xi = sol.segment(p, m);
  s.x = sol.tail(n);
  s.system_size = p + m + n;
  s.extended_system = true;
  s.kkt_residual = robust_kkt(a, l, vb2, wb2, lambda, y, s);
  return s;
}

InnerSolution solve_robust_denoise(const LinearOperator& l, const GroupStructure& reg,
                                   const Vec& v, const GroupStructure& loss, const Vec& w,
                                   double lambda, const Vec& y, const InnerConfig& cfg) {
  const auto id = LinearOperator::identity(l.cols());
  check_common(id, l, reg, v, lambda, y);
  require_size(loss.dim(), l.cols(), "loss groups");
  require_size(w.size(), loss.count(), "loss scalars w");
  const Vec vb2 = squared_extension(reg, v, cfg.epsilon_floor);
  const Vec wb2 = squared_extension(loss, w, cfg.epsilon_floor);
  Mat k = lambda * kernels::weighted_outer(*DenseView(l), wb2);
  k.diagonal() += vb2;
  InnerSolution s;
  try {
    s.alpha = linalg::solve_spd(k, -l.apply(y));
  } catch (const SingularSystemError&) {
    return solve_robust(id, l, reg, v, loss, w, lambda, y, cfg);
  }
  s.xi = -l.adjoint(s.alpha);
  s.x = y - lambda * wb2.cwiseProduct(s.xi);
  s.system_size = l.rows();
  s.kkt_residual = robust_kkt(id, l, vb2, wb2, lambda, y, s);
  return s;
}

InnerSolution solve_basis_pursuit(const LinearOperator& a, const LinearOperator& l,
                                  const GroupStructure& reg, const Vec& v, const Vec& y,
                                  const InnerConfig& cfg) {
  check_common(a, l, reg, v, 1.0, y);
  if (v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0)
    throw ConfigError("basis pursuit inner solve needs v != 0");
  const Vec vb2 = squared_extension(reg, v, cfg.epsilon_floor);
  const Index m = a.rows(), p = l.rows(), n = a.cols();
  const DenseView ad(a);
  const DenseView ld(l);
  // Unknowns (alpha, xi, x); rhs (0, -y, 0).
  Mat k = Mat::Zero(p + m + n, p + m + n);
  k.topLeftCorner(p, p).diagonal() = vb2;
  k.block(0, p + m, p, n) = -*ld;
  k.block(p + m, 0, n, p) = -ld->transpose();
  k.block(p, p + m, m, n) = -*ad;
  k.block(p + m, p, n, m) = -ad->transpose();
  Vec rhs = Vec::Zero(p + m + n);
  rhs.segment(p, m) = -y;
  Vec sol;
  try {
    sol = linalg::solve_symmetric(k, rhs);
  } catch (const SingularSystemError& e) {
    throw SingularSystemError(std::string("basis pursuit: infeasible data or rank-deficient "
                                          "constraints: ") + e.what(),
                              e.residual());
  }
  InnerSolution s;
  s.alpha = sol.head(p);
  s.xi = sol.segment(p, m);
  s.x = sol.tail(n);
  s.system_size = p + m + n;
  s.extended_system = true;
  const double r1 = inf_norm(l.adjoint(s.alpha) + a.adjoint(s.xi));
  const double r2 = inf_norm(a.apply(s.x) - y);
  const double r3 = inf_norm(l.apply(s.x) - vb2.cwiseProduct(s.alpha));
  s.kkt_residual = std::max({r1, r2, r3}) / data_scale(y);
  return s;
}

MultitaskSolution solve_multitask_nuclear(const RowMat& a, const Vec& v, const Mat& w,
                                          double lambda, const Mat& y, double eps_floor) {
  require_size(v.size(), a.cols(), "multitask v");
  if (w.rows() != a.rows() || w.cols() != a.rows()) throw DimensionError("W must be m x m");
  require_size(y.rows(), a.rows(), "multitask Y");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  Mat k = kernels::weighted_outer(a, v.cwiseAbs2()) + (w * w.transpose()) / lambda;
  k.diagonal().array() += eps_floor;
  MultitaskSolution s;
  s.alpha = linalg::solve_spd(k, -y);
  s.x = -(v.cwiseAbs2().asDiagonal() * (a.transpose() * s.alpha));
  const double scale = 1.0 + (y.size() ? y.cwiseAbs().maxCoeff() : 0.0);
  s.residual = (k * s.alpha + y).cwiseAbs().maxCoeff() / scale;
  return s;
}

double inner_primal_value(const LinearOperator& a, const GroupStructure& reg, const Vec& v,
                          double lambda, const Vec& y, const InnerSolution& s) {
  const Vec va = extend(v, reg).cwiseProduct(s.alpha);
  return 0.5 * va.squaredNorm() + (a.apply(s.x) - y).squaredNorm() / (2.0 * lambda);
}

double inner_dual_value(const GroupStructure& reg, const Vec& v, double lambda, const Vec& y,
                        const InnerSolution& s) {
  const Vec va = extend(v, reg).cwiseProduct(s.alpha);
  return -0.5 * va.squaredNorm() - 0.5 * lambda * s.xi.squaredNorm() - s.xi.dot(y);
}

}  // namespace sop
