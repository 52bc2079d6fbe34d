#include "sop/varpro.hpp"

#include "sop/kernels.hpp"
#include "sop/linalg.hpp"

#include <cmath>
#include <limits>

namespace sop {

namespace {

const QuadraticLoss& quad(const VarProProblem& p) { return std::get<QuadraticLoss>(p.loss); }

void check_shapes(const VarProProblem& p, Index y_rows) {
  if (p.a.cols() != p.l.cols()) throw DimensionError("A and L must share their column count");
  require_size(p.reg_groups.dim(), p.l.rows(), "regularizer groups");
  require_size(y_rows, p.a.rows(), "observations");
  if (!p.reg_groups.is_partition()) throw ConfigError("regularizer groups must partition rows of L");
}

double positive_lambda(double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  return lambda;
}

InnerSolution solve_quadratic_inner(const VarProProblem& p, const Vec& v, const Vec* warm) {
  const auto& q = quad(p);
  const bool underdetermined = p.a.rows() < p.a.cols();
  InnerStrategy s = p.strategy;
  if (s == InnerStrategy::automatic) {
    if (p.overlap && underdetermined) s = InnerStrategy::woodbury;
    else if (p.a.kind() == OperatorKind::identity) s = InnerStrategy::analysis_prox;
    else if (p.l.kind() == OperatorKind::identity && underdetermined) s = InnerStrategy::grouplasso_dual;
    else s = InnerStrategy::general;
  }
  switch (s) {
    case InnerStrategy::grouplasso_dual:
      return solve_grouplasso_dual(p.a, p.reg_groups, v, q.lambda, q.y, p.inner, warm);
    case InnerStrategy::analysis_prox:
      return solve_analysis_prox(p.l, p.reg_groups, v, q.lambda, q.y, p.inner, warm);
    case InnerStrategy::woodbury:
      if (!p.overlap) throw ConfigError("Woodbury strategy needs an overlapping group structure");
      return solve_overlap_woodbury(p.a, *p.overlap, v, q.lambda, q.y, p.inner);
    case InnerStrategy::general:
    case InnerStrategy::automatic: break;
  }
  return solve_quadratic_general(p.a, p.l, p.reg_groups, v, q.lambda, q.y, p.inner, warm);
}

// Row-wise squared norms of the per-group blocks of B (n x T).
Vec row_group_sq(const Mat& b, const GroupStructure& gs) { return group_sq_norms(b, gs); }

}  // namespace

VarProProblem VarProProblem::group_lasso(LinearOperator a, GroupStructure groups, double lambda,
                                         Vec y) {
  const Index n = a.cols();
  VarProProblem p{a, LinearOperator::identity(n), std::move(groups),
                  QuadraticLoss{positive_lambda(lambda), std::move(y)}, std::nullopt, InnerStrategy::automatic, {}};
  check_shapes(p, quad(p).y.size());
  return p;
}

VarProProblem VarProProblem::analysis(LinearOperator a, LinearOperator l, GroupStructure reg,
                                      double lambda, Vec y) {
  VarProProblem p{std::move(a), std::move(l), std::move(reg),
                  QuadraticLoss{positive_lambda(lambda), std::move(y)}, std::nullopt, InnerStrategy::automatic, {}};
  check_shapes(p, quad(p).y.size());
  return p;
}

VarProProblem VarProProblem::overlapping(LinearOperator a, GroupStructure groups, double lambda,
                                         Vec y) {
  const Index n = a.cols();
  auto l = block_extract(groups, n);
  auto rows = block_row_groups(groups);
  VarProProblem p{std::move(a), std::move(l), std::move(rows),
                  QuadraticLoss{positive_lambda(lambda), std::move(y)}, std::nullopt,
                  InnerStrategy::automatic, {}};
  p.overlap = std::move(groups);
  check_shapes(p, quad(p).y.size());
  return p;
}

VarProProblem VarProProblem::robust(LinearOperator a, LinearOperator l, GroupStructure reg,
                                    GroupStructure loss_groups, double lambda, Vec y) {
  require_size(loss_groups.dim(), a.rows(), "loss groups");
  VarProProblem p{std::move(a), std::move(l), std::move(reg),
                  RobustLoss{std::move(loss_groups), positive_lambda(lambda), std::move(y)}, std::nullopt, InnerStrategy::automatic, {}};
  check_shapes(p, std::get<RobustLoss>(p.loss).y.size());
  return p;
}

VarProProblem VarProProblem::sqrt_lasso(LinearOperator a, double lambda, Vec y) {
  const Index m = a.rows(), n = a.cols();
  return robust(std::move(a), LinearOperator::identity(n), GroupStructure::singletons(n),
                GroupStructure::contiguous(m, m), positive_lambda(lambda) * std::sqrt(double(m)),
                std::move(y));
}

VarProProblem VarProProblem::basis_pursuit(LinearOperator a, LinearOperator l, GroupStructure reg,
                                           Vec y) {
  VarProProblem p{std::move(a), std::move(l), std::move(reg), BasisPursuitLoss{std::move(y)}, std::nullopt, InnerStrategy::automatic, {}};
  check_shapes(p, std::get<BasisPursuitLoss>(p.loss).y.size());
  return p;
}

VarProProblem VarProProblem::multitask(const RowMat& a, double lambda, Mat y) {
  VarProProblem p{LinearOperator::dense(a), LinearOperator::identity(a.cols()),
                  GroupStructure::singletons(a.cols()),
                  MultitaskLoss{positive_lambda(lambda), std::move(y)}, std::nullopt, InnerStrategy::automatic, {}};
  check_shapes(p, std::get<MultitaskLoss>(p.loss).y.rows());
  return p;
}

Index VarProProblem::outer_size() const { return reg_groups.count(); }

Index VarProProblem::second_block_size() const {
  if (const auto* r = std::get_if<RobustLoss>(&loss)) return r->groups.count();
  if (is_multitask()) return a.rows() * a.rows();
  return 0;
}

FGrad eval_f_grad(const VarProProblem& p, const Vec& v, const Vec* warm) {
  require_size(v.size(), p.outer_size(), "v");
  FGrad out;
  if (p.is_quadratic()) {
    const auto& q = quad(p);
    out.inner = solve_quadratic_inner(p, v, warm);
    out.f = 0.5 * v.squaredNorm() + inner_primal_value(p.a, p.reg_groups, v, q.lambda, q.y, out.inner);
  } else if (p.is_basis_pursuit()) {
    const auto& bp = std::get<BasisPursuitLoss>(p.loss);
    out.inner = solve_basis_pursuit(p.a, p.l, p.reg_groups, v, bp.y, p.inner);
    out.f = 0.5 * v.squaredNorm() + 0.5 * extend(v, p.reg_groups).cwiseProduct(out.inner.alpha).squaredNorm();
  } else {
    throw ConfigError("eval_f_grad handles quadratic and basis-pursuit losses");
  }
  out.grad = v - v.cwiseProduct(group_sq_norms(out.inner.alpha, p.reg_groups));
  return out;
}

FGrad2 eval_f_grad_robust(const VarProProblem& p, const Vec& v, const Vec& w) {
  const auto* r = std::get_if<RobustLoss>(&p.loss);
  if (!r) throw ConfigError("eval_f_grad_robust needs a robust loss");
  require_size(v.size(), p.outer_size(), "v");
  require_size(w.size(), r->groups.count(), "w");
  FGrad2 out;
  out.inner = p.a.kind() == OperatorKind::identity
                  ? solve_robust_denoise(p.l, p.reg_groups, v, r->groups, w, r->lambda, r->y, p.inner)
                  : solve_robust(p.a, p.l, p.reg_groups, v, r->groups, w, r->lambda, r->y, p.inner);
  const Vec va = extend(v, p.reg_groups).cwiseProduct(out.inner.alpha);
  const Vec wx = extend(w, r->groups).cwiseProduct(out.inner.xi);
  out.f = 0.5 * v.squaredNorm() + w.squaredNorm() / (2.0 * r->lambda) + 0.5 * va.squaredNorm() +
          0.5 * r->lambda * wx.squaredNorm();
  out.grad_v = v - v.cwiseProduct(group_sq_norms(out.inner.alpha, p.reg_groups));
  out.grad_w = w / r->lambda - r->lambda * w.cwiseProduct(group_sq_norms(out.inner.xi, r->groups));
  return out;
}

MultitaskFGrad eval_multitask(const VarProProblem& p, const Vec& v, const Mat& w, double eps_floor) {
  const auto* mt = std::get_if<MultitaskLoss>(&p.loss);
  if (!mt) throw ConfigError("eval_multitask needs a multitask loss");
  const RowMat* a = p.a.matrix();
  MultitaskFGrad out;
  out.inner = solve_multitask_nuclear(*a, v, w, mt->lambda, mt->y, eps_floor);
  const Mat at_alpha = a->transpose() * out.inner.alpha;  // n x T
  const Vec row_sq = at_alpha.rowwise().squaredNorm();
  const Mat wt_alpha = w.transpose() * out.inner.alpha;
  out.f = 0.5 * v.squaredNorm() + 0.5 * mt->lambda * w.squaredNorm() +
          0.5 * v.cwiseAbs2().dot(row_sq) + wt_alpha.squaredNorm() / (2.0 * mt->lambda);
  out.grad_v = v - v.cwiseProduct(row_sq);
  out.grad_w = mt->lambda * w - (out.inner.alpha * (out.inner.alpha.transpose() * w)) / mt->lambda;
  return out;
}

double primal_objective(const VarProProblem& p, const Vec& x) {
  if (const auto* mt = std::get_if<MultitaskLoss>(&p.loss)) {
    const Index n = p.a.cols(), t = mt->y.cols();
    require_size(x.size(), n * t, "multitask x");
    const Eigen::Map<const Mat> xm(x.data(), n, t);
    const Mat r = *p.a.matrix() * xm - mt->y;
    Eigen::JacobiSVD<Mat> svd(r);
    return xm.rowwise().norm().sum() + mt->lambda * svd.singularValues().sum();
  }
  const double reg = group_norm_12(p.l.apply(x), p.reg_groups);
  if (const auto* q = std::get_if<QuadraticLoss>(&p.loss))
    return reg + (p.a.apply(x) - q->y).squaredNorm() / (2.0 * q->lambda);
  if (const auto* r = std::get_if<RobustLoss>(&p.loss))
    return reg + group_norm_12(p.a.apply(x) - r->y, r->groups) / r->lambda;
  return reg;
}

SolverTrace lbfgs_minimize(const VarProProblem& p, const OuterConfig& cfg) {
  const Index nv = p.outer_size();
  const Index nw = p.second_block_size();
  SolverTrace trace;
  Vec warm;
  SmoothObjective fn;
  if (p.is_robust()) {
    fn = [&](const Vec& z, Vec& g) {
      auto r = eval_f_grad_robust(p, z.head(nv), z.tail(nw));
      g.head(nv) = r.grad_v;
      g.tail(nw) = r.grad_w;
      return r.f;
    };
  } else if (p.is_multitask()) {
    const Index m = p.a.rows();
    fn = [&, m](const Vec& z, Vec& g) {
      const Eigen::Map<const Mat> w(z.data() + nv, m, m);
      auto r = eval_multitask(p, z.head(nv), w);
      g.head(nv) = r.grad_v;
      g.tail(nw) = Eigen::Map<const Vec>(r.grad_w.data(), nw);
      return r.f;
    };
  } else {
    fn = [&](const Vec& z, Vec& g) {
      auto r = eval_f_grad(p, z, warm.size() ? &warm : nullptr);
      g = r.grad;
      if (r.inner.cg_iterations > 0) warm = r.inner.extended_system ? Vec() : r.inner.x;
      return r.f;
    };
  }
  const Vec z0 = initial_point(nv + nw, cfg);
  MinimizeResult res = minimize(fn, z0, cfg);
  trace.records = std::move(res.trace);
  trace.converged = res.converged;
  trace.failed = res.line_search_failed;
  trace.message = res.line_search_failed ? "line search failed; best iterate returned"
                  : res.stalled           ? "stalled at the rounding floor of f"
                                          : "";
  trace.v = res.z.head(nv);
  trace.w = res.z.tail(nw);
  if (p.is_robust()) {
    trace.x = eval_f_grad_robust(p, trace.v, trace.w).inner.x;
  } else if (p.is_multitask()) {
    const Eigen::Map<const Mat> w(trace.w.data(), p.a.rows(), p.a.rows());
    const Mat x = eval_multitask(p, trace.v, w).inner.x;
    trace.x = Eigen::Map<const Vec>(x.data(), x.size());
  } else {
    trace.x = eval_f_grad(p, trace.v).inner.x;
  }
  return trace;
}

// ---- l_q -----------------------------------------------------------------

double lq_objective(const LqProblem& p, const Mat& x) {
  const Vec norms = group_norms(x, p.groups);
  double reg = 0.0;
  for (Index g = 0; g < norms.size(); ++g) reg += std::pow(norms[g], 2.0 / 3.0);
  return 1.5 * reg + (p.a * x - p.y).squaredNorm() / (2.0 * p.lambda);
}

LqFGrad2 eval_lq_option2(const LqProblem& p, const Vec& v, const Vec& w) {
  require_size(v.size(), p.groups.count(), "v");
  require_size(w.size(), p.groups.count(), "w");
  require_size(p.y.rows(), p.a.rows(), "Y");
  const Vec d = extend(v.cwiseProduct(w), p.groups);  // per-row factor v_g w_g
  const Vec d2 = d.cwiseAbs2();
  Mat k = kernels::weighted_outer(p.a, d2);
  k.diagonal().array() += p.lambda;
  LqFGrad2 out;
  out.alpha = linalg::solve_spd(k, -p.y);
  const Mat b = p.a.transpose() * out.alpha;  // n x T
  const Vec bsq = row_group_sq(b, p.groups);  // sum over the group's rows
  out.x = -(d2.asDiagonal() * b);
  const Vec vw2 = v.cwiseProduct(w).cwiseAbs2();
  out.f = 0.5 * v.squaredNorm() + 0.5 * w.squaredNorm() + 0.5 * vw2.dot(bsq) +
          0.5 * p.lambda * out.alpha.squaredNorm();
  out.grad_v = v - v.cwiseProduct(w.cwiseAbs2()).cwiseProduct(bsq);
  out.grad_w = w - w.cwiseProduct(v.cwiseAbs2()).cwiseProduct(bsq);
  return out;
}

LqFGrad3 eval_lq_option3(const LqProblem& p, const Vec& v, double inner_grad_tol, const Vec* warm) {
  require_size(v.size(), p.groups.count(), "v");
  const Index m = p.a.rows(), n = p.a.cols(), t = p.y.cols();
  const Vec vb = extend(v, p.groups);
  // Inner group lasso on the design A diag(v_bar), expanded over the T columns.
  RowMat design = RowMat::Zero(m * t, n * t);
  const RowMat scaled = p.a * vb.asDiagonal();
  for (Index c = 0; c < t; ++c) design.block(c * m, c * n, m, n) = scaled;
  std::vector<std::vector<Index>> groups;
  for (Index g = 0; g < p.groups.count(); ++g) {
    std::vector<Index> members;
    for (Index c = 0; c < t; ++c)
      for (Index i : p.groups.group(g)) members.push_back(c * n + i);
    groups.push_back(std::move(members));
  }
  const Vec yv = Eigen::Map<const Vec>(p.y.data(), m * t);
  auto inner = VarProProblem::group_lasso(LinearOperator::dense(std::move(design)),
                                          GroupStructure::partition(std::move(groups), n * t),
                                          p.lambda, yv);
  OuterConfig cfg;
  cfg.grad_tol = inner_grad_tol;
  cfg.max_iter = 5000;
  if (warm && warm->size() == p.groups.count()) {
    cfg.init = InitKind::user;
    cfg.user_init = warm->cwiseAbs().cwiseMax(1e-3);
  } else {
    cfg.init = InitKind::ones;
  }
  const SolverTrace tr = lbfgs_minimize(inner, cfg);
  LqFGrad3 out;
  out.inner_grad_norm = tr.records.empty() ? 0.0 : tr.records.back().grad_norm;
  out.z = Eigen::Map<const Mat>(tr.x.data(), n, t);
  out.x = vb.asDiagonal() * out.z;
  out.alpha = (p.a * out.x - p.y) / p.lambda;
  const Mat b = p.a.transpose() * out.alpha;
  out.f = 0.5 * v.squaredNorm() + group_norms(out.z, p.groups).sum() +
          (p.a * out.x - p.y).squaredNorm() / (2.0 * p.lambda);
  out.grad_v = v;
  for (Index g = 0; g < p.groups.count(); ++g)
    for (Index i : p.groups.group(g)) out.grad_v[g] += out.z.row(i).dot(b.row(i));
  return out;
}

LqResult solve_lq_option2(const LqProblem& p, const OuterConfig& cfg, int restarts) {
  const Index ng = p.groups.count();
  LqResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    OuterConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r) * 7919u;
    SmoothObjective fn = [&](const Vec& z, Vec& g) {
      auto e = eval_lq_option2(p, z.head(ng), z.tail(ng));
      g.head(ng) = e.grad_v;
      g.tail(ng) = e.grad_w;
      return e.f;
    };
    const MinimizeResult res = minimize(fn, initial_point(2 * ng, c), c);
    const Mat x = eval_lq_option2(p, res.z.head(ng), res.z.tail(ng)).x;
    const double obj = lq_objective(p, x);
    if (obj < best.objective) {
      best.objective = obj;
      best.x = x;
      best.trace.records = res.trace;
      best.trace.v = res.z.head(ng);
      best.trace.w = res.z.tail(ng);
      best.trace.x = Eigen::Map<const Vec>(x.data(), x.size());
      best.trace.converged = res.converged;
      best.trace.failed = res.line_search_failed;
    }
  }
  return best;
}

LqResult solve_lq_option3(const LqProblem& p, const OuterConfig& cfg) {
  const Index ng = p.groups.count();
  const double inner_tol = std::max(1e-10, 1e-2 * cfg.grad_tol);
  SmoothObjective fn = [&](const Vec& z, Vec& g) {
    auto e = eval_lq_option3(p, z, inner_tol);
    g = e.grad_v;
    return e.f;
  };
  const MinimizeResult res = minimize(fn, initial_point(ng, cfg), cfg);
  LqResult out;
  out.x = eval_lq_option3(p, res.z, inner_tol).x;
  out.objective = lq_objective(p, out.x);
  out.trace.records = res.trace;
  out.trace.v = res.z;
  out.trace.x = Eigen::Map<const Vec>(out.x.data(), out.x.size());
  out.trace.converged = res.converged;
  out.trace.failed = res.line_search_failed;
  return out;
}

}  // namespace sop
