#include "sop/baselines.hpp"

#include "sop/kernels.hpp"
#include "sop/linalg.hpp"
#include "sop/linops.hpp"
#include "sop/mirror.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace sop {

namespace {

const QuadraticLoss& require_quadratic(const VarProProblem& p, const char* who) {
  const auto* q = std::get_if<QuadraticLoss>(&p.loss);
  if (!q) throw ConfigError(std::string(who) + " needs a quadratic loss");
  return *q;
}

// Singleton groups go through the scalar threshold so that ISTA and the
// quadratic-entropy BPGD perform identical floating point operations.
Vec prox_l12(const Vec& z, double t, const GroupStructure& gs) {
  if (gs.count() == gs.dim()) return soft_threshold(z, t);
  return group_soft_threshold(z, t, gs);
}

double power_norm(const std::function<Vec(const Vec&)>& k, const std::function<Vec(const Vec&)>& kt,
                  Index cols, int iterations) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  Vec x(cols);
  for (Index i = 0; i < cols; ++i) x[i] = normal(rng);
  x.normalize();
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec z = kt(k(x));
    const double nz = z.norm();
    if (nz == 0.0) return 0.0;
    est = std::sqrt(nz);
    x = z / nz;
  }
  return est;
}

}  // namespace

SolverTrace run_ista(const VarProProblem& p, const IstaOptions& opt) {
  const auto& q = require_quadratic(p, "ISTA");
  if (p.l.kind() != OperatorKind::identity) throw ConfigError("ISTA needs L = Id");
  const Index n = p.a.cols();
  const double lip = std::pow(spectral_norm(p.a), 2) / q.lambda;
  const double base = opt.step > 0.0 ? opt.step : 1.0 / lip;
  auto grad = [&](const Vec& x) -> Vec { return p.a.adjoint(p.a.apply(x) - q.y) / q.lambda; };

  SolverTrace trace;
  Stopwatch clock;
  Vec x = opt.x0.size() ? opt.x0 : Vec::Zero(n);
  require_size(x.size(), n, "ISTA x0");
  double obj = primal_objective(p, x);
  trace.records.push_back({0, obj, 0.0, clock.seconds()});

  Vec z = x;       // FISTA extrapolation point
  double t = 1.0;  // FISTA momentum
  Vec prev_x, prev_g;
  for (long k = 1; k <= opt.iterations; ++k) {
    Vec next;
    double step = base;
    if (opt.accel == IstaAcceleration::fista) {
      next = prox_l12(z - step * grad(z), step, p.reg_groups);
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z = next + ((t - 1.0) / tn) * (next - x);
      t = tn;
    } else {
      const Vec g = grad(x);
      if (opt.accel == IstaAcceleration::bb && prev_x.size()) {
        const Vec ds = x - prev_x;
        const double sy = ds.dot(g - prev_g);
        if (sy > 0.0) step = std::clamp(ds.squaredNorm() / sy, base, 1e6 * base);
      }
      prev_x = x;
      prev_g = g;
      next = prox_l12(x - step * g, step, p.reg_groups);
      // BB steps are accepted only when they do not increase the objective.
      while (opt.accel == IstaAcceleration::bb && step > base &&
             primal_objective(p, next) > obj) {
        step = std::max(base, 0.5 * step);
        next = prox_l12(x - step * g, step, p.reg_groups);
      }
    }
    const double move = (next - x).norm() / step;
    x = std::move(next);
    obj = primal_objective(p, x);
    trace.records.push_back({static_cast<int>(k), obj, move, clock.seconds()});
    if (!std::isfinite(obj)) {
      trace.failed = true;
      trace.message = "ISTA diverged";
      break;
    }
    if (opt.tol > 0.0 && move < opt.tol) {
      trace.converged = true;
      break;
    }
  }
  trace.x = x;
  return trace;
}

AdmmRun run_admm(const VarProProblem& p, const AdmmOptions& opt) {
  if (!(opt.tau > 0.0)) throw ConfigError("ADMM tau must be positive");
  const Index n = p.a.cols();
  const Mat a = p.a.to_dense();
  const Mat l = p.l.to_dense();
  AdmmRun run;
  Stopwatch clock;
  const double tau = opt.tau;

  if (const auto* q = std::get_if<QuadraticLoss>(&p.loss)) {
    const double lam = q->lambda;
    const linalg::SpdFactor factor(a.transpose() * a + lam * tau * l.transpose() * l);
    const Vec aty = a.transpose() * q->y;
    Vec x = Vec::Zero(n);
    Vec z = Vec::Zero(l.rows());
    Vec psi = Vec::Zero(l.rows());
    run.trace.records.push_back({0, primal_objective(p, x), 0.0, clock.seconds()});
    for (long k = 1; k <= opt.iterations; ++k) {
      x = factor.solve(aty + lam * l.transpose() * (psi + tau * z));
      const Vec lx = l * x;
      const Vec z_prev = z;
      z = group_soft_threshold(lx - psi / tau, 1.0 / tau, p.reg_groups);
      psi += tau * (z - lx);
      run.primal_residual = (z - lx).norm();
      run.dual_residual = tau * (l.transpose() * (z - z_prev)).norm();
      run.iterations = k;
      run.trace.records.push_back({static_cast<int>(k), primal_objective(p, x),
                                   run.primal_residual + run.dual_residual, clock.seconds()});
      if (run.primal_residual < opt.tol && run.dual_residual < opt.tol) {
        run.trace.converged = true;
        break;
      }
    }
    run.trace.x = x;
    return run;
  }

  const auto* r = std::get_if<RobustLoss>(&p.loss);
  if (!r) throw ConfigError("ADMM handles quadratic and robust losses");
  const Index pr = l.rows(), m = a.rows();
  const linalg::SpdFactor factor(tau * (l.transpose() * l + a.transpose() * a));
  Vec x = Vec::Zero(n);
  Vec z1 = Vec::Zero(pr), z2 = Vec::Zero(m);
  Vec psi1 = Vec::Zero(pr), psi2 = Vec::Zero(m);
  run.trace.records.push_back({0, primal_objective(p, x), 0.0, clock.seconds()});
  for (long k = 1; k <= opt.iterations; ++k) {
    x = factor.solve(l.transpose() * (psi1 + tau * z1) + a.transpose() * (psi2 + tau * (z2 + r->y)));
    const Vec lx = l * x;
    const Vec res = a * x - r->y;
    const Vec z1_prev = z1, z2_prev = z2;
    z1 = group_soft_threshold(lx - psi1 / tau, 1.0 / tau, p.reg_groups);
    z2 = group_soft_threshold(res - psi2 / tau, 1.0 / (r->lambda * tau), r->groups);
    psi1 += tau * (z1 - lx);
    psi2 += tau * (z2 - res);
    run.primal_residual = std::sqrt((z1 - lx).squaredNorm() + (z2 - res).squaredNorm());
    run.dual_residual =
        tau * (l.transpose() * (z1 - z1_prev) + a.transpose() * (z2 - z2_prev)).norm();
    run.iterations = k;
    run.trace.records.push_back({static_cast<int>(k), primal_objective(p, x),
                                 run.primal_residual + run.dual_residual, clock.seconds()});
    if (run.primal_residual < opt.tol && run.dual_residual < opt.tol) {
      run.trace.converged = true;
      break;
    }
  }
  run.trace.x = x;
  return run;
}

PrimalDualRun run_primal_dual(const VarProProblem& p, const PrimalDualOptions& opt) {
  const Index n = p.a.cols();
  PrimalDualRun run;
  Stopwatch clock;
  auto pick_steps = [&](double k_norm) {
    run.k_norm = k_norm;
    run.sigma = opt.sigma > 0.0 ? opt.sigma : 0.99 / k_norm;
    run.tau = opt.tau > 0.0 ? opt.tau : 0.99 / k_norm;
    if (run.sigma * run.tau * k_norm * k_norm > 1.0 + 1e-12)
      throw ConfigError("primal-dual steps violate sigma tau ||K||^2 <= 1");
  };

  // Reciprocal absolute row and column sums; empty rows or columns get 1.
  auto inverse_sums = [](const Vec& sums) {
    return sums.unaryExpr([](double t) { return t > 0.0 ? 1.0 / t : 1.0; }).eval();
  };

  if (const auto* q = std::get_if<QuadraticLoss>(&p.loss); q && opt.precondition) {
    const Mat a = p.a.to_dense();
    const Mat l_abs = p.l.to_dense().cwiseAbs();
    const Vec sig = inverse_sums(l_abs.rowwise().sum());
    const Vec tau_inv = l_abs.colwise().sum().transpose().unaryExpr([](double t) { return t > 0.0 ? t : 1.0; });
    Mat prox = a.transpose() * a / q->lambda;
    prox.diagonal() += tau_inv;
    const linalg::SpdFactor factor(prox);
    const Vec aty = a.transpose() * q->y / q->lambda;
    Vec x = Vec::Zero(n), xbar = x;
    Vec z = Vec::Zero(p.l.rows());
    run.trace.records.push_back({0, primal_objective(p, x), 0.0, clock.seconds()});
    for (long k = 1; k <= opt.iterations; ++k) {
      z = group_project_ball(z + sig.cwiseProduct(p.l.apply(xbar)), 1.0, p.reg_groups);
      const Vec next = factor.solve(aty + tau_inv.cwiseProduct(x) - p.l.adjoint(z));
      const double move = (next - x).norm();
      xbar = next + opt.theta * (next - x);
      x = next;
      run.trace.records.push_back({static_cast<int>(k), primal_objective(p, x), move, clock.seconds()});
      if (opt.tol > 0.0 && move <= opt.tol * std::max(1.0, x.norm())) {
        run.trace.converged = true;
        break;
      }
    }
    run.trace.x = x;
    return run;
  }

  if (const auto* q = std::get_if<QuadraticLoss>(&p.loss)) {
    pick_steps(spectral_norm(p.l, 50));
    const double sigma = run.sigma, tau = run.tau;
    const Mat a = p.a.to_dense();
    Mat prox = (tau / q->lambda) * (a.transpose() * a);
    prox.diagonal().array() += 1.0;
    const linalg::SpdFactor factor(prox);
    const Vec aty_scaled = (tau / q->lambda) * (a.transpose() * q->y);
    Vec x = Vec::Zero(n), xbar = x;
    Vec z = Vec::Zero(p.l.rows());
    run.trace.records.push_back({0, primal_objective(p, x), 0.0, clock.seconds()});
    for (long k = 1; k <= opt.iterations; ++k) {
      z = group_project_ball(z + sigma * p.l.apply(xbar), 1.0, p.reg_groups);
      const Vec next = factor.solve(aty_scaled + x - tau * p.l.adjoint(z));
      const double move = (next - x).norm();
      xbar = next + opt.theta * (next - x);
      x = next;
      run.trace.records.push_back({static_cast<int>(k), primal_objective(p, x), move / tau,
                                   clock.seconds()});
      if (opt.tol > 0.0 && move <= opt.tol * std::max(1.0, x.norm())) {
        run.trace.converged = true;
        break;
      }
    }
    run.trace.x = x;
    return run;
  }

  const auto* r = std::get_if<RobustLoss>(&p.loss);
  if (!r) throw ConfigError("primal-dual handles quadratic and robust losses");
  const Index pr = p.l.rows(), m = p.a.rows();
  // Primal variable (x, z1, z2), dual variable (xi1, xi2).
  auto k_apply = [&](const Vec& u) -> Vec {
    Vec out(pr + m);
    out.head(pr) = p.l.apply(u.head(n)) - u.segment(n, pr);
    out.tail(m) = p.a.apply(u.head(n)) - u.tail(m);
    return out;
  };
  auto k_adjoint = [&](const Vec& xi) -> Vec {
    Vec out(n + pr + m);
    out.head(n) = p.l.adjoint(xi.head(pr)) + p.a.adjoint(xi.tail(m));
    out.segment(n, pr) = -xi.head(pr);
    out.tail(m) = -xi.tail(m);
    return out;
  };
  // Diagonal steps. The slack blocks z1, z2 have unit column sums, so their
  // steps stay 1 and the group soft thresholds remain exact.
  Vec sig, tau_vec;
  if (opt.precondition) {
    const Mat l_abs = p.l.to_dense().cwiseAbs();
    const Mat a_abs = p.a.to_dense().cwiseAbs();
    sig.resize(pr + m);
    sig.head(pr) = inverse_sums(l_abs.rowwise().sum().array() + 1.0);
    sig.tail(m) = inverse_sums(a_abs.rowwise().sum().array() + 1.0);
    tau_vec = Vec::Ones(n + pr + m);
    tau_vec.head(n) = inverse_sums((l_abs.colwise().sum() + a_abs.colwise().sum()).transpose());
  } else {
    pick_steps(power_norm(k_apply, k_adjoint, n + pr + m, 50));
    sig = Vec::Constant(pr + m, run.sigma);
    tau_vec = Vec::Constant(n + pr + m, run.tau);
  }
  const double tau1 = pr > 0 ? tau_vec[n] : 1.0;
  const double tau2 = m > 0 ? tau_vec[n + pr] : 1.0;
  const double move_scale = opt.precondition ? 1.0 : 1.0 / run.tau;
  Vec shift = Vec::Zero(pr + m);
  shift.tail(m) = r->y;
  Vec u = Vec::Zero(n + pr + m), ubar = u;
  Vec xi = Vec::Zero(pr + m);
  run.trace.records.push_back({0, primal_objective(p, u.head(n)), 0.0, clock.seconds()});
  for (long k = 1; k <= opt.iterations; ++k) {
    xi += sig.cwiseProduct(k_apply(ubar) - shift);
    Vec next = u - tau_vec.cwiseProduct(k_adjoint(xi));
    next.segment(n, pr) = group_soft_threshold(next.segment(n, pr), tau1, p.reg_groups);
    next.tail(m) = group_soft_threshold(next.tail(m), tau2 / r->lambda, r->groups);
    const double move = (next - u).norm();
    ubar = next + opt.theta * (next - u);
    u = std::move(next);
    run.trace.records.push_back({static_cast<int>(k), primal_objective(p, u.head(n)), move * move_scale,
                                 clock.seconds()});
    if (opt.tol > 0.0 && move <= opt.tol * std::max(1.0, u.norm())) {
      run.trace.converged = true;
      break;
    }
  }
  run.trace.x = u.head(n);
  return run;
}

namespace {

double lq_penalty(const Mat& x, const GroupStructure& gs, double q) {
  const Vec norms = group_norms(x, gs);
  double s = 0.0;
  for (Index g = 0; g < norms.size(); ++g) s += std::pow(norms[g], q);
  return s / q;
}

Mat weighted_least_norm(const RowMat& a, const Mat& y, const Vec& d, double lambda) {
  Mat k = kernels::weighted_outer(a, d);
  if (lambda > 0.0) k.diagonal().array() += lambda;
  Mat alpha;
  try {
    alpha = linalg::solve_spd(k, y);
  } catch (const SingularSystemError&) {
    alpha = linalg::solve_symmetric(k, y);
  }
  return d.asDiagonal() * (a.transpose() * alpha);
}

}  // namespace

LqResult run_irls(const RowMat& a, const Mat& y, const GroupStructure& groups, double q,
                  double lambda, const IrlsOptions& opt) {
  if (!(q > 0.0 && q <= 2.0)) throw ConfigError("IRLS needs q in (0, 2]");
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (!(opt.decay >= 1.0) || !(opt.eps0 > 0.0)) throw ConfigError("invalid IRLS epsilon schedule");
  require_size(y.rows(), a.rows(), "IRLS observations");
  require_size(groups.dim(), a.cols(), "IRLS groups");
  auto objective = [&](const Mat& x) {
    double v = lq_penalty(x, groups, q);
    if (lambda > 0.0) v += (a * x - y).squaredNorm() / (2.0 * lambda);
    return v;
  };
  LqResult out;
  Stopwatch clock;
  double eps = opt.eps0;
  Mat x = weighted_least_norm(a, y, Vec::Ones(a.cols()), lambda);
  out.trace.records.push_back({0, objective(x), 0.0, clock.seconds()});
  for (int k = 1; k <= opt.max_iter; ++k) {
    const Vec sq = group_sq_norms(x, groups);
    Vec dg(sq.size());
    for (Index g = 0; g < sq.size(); ++g) dg[g] = std::pow(sq[g] + eps, 1.0 - 0.5 * q);
    const Mat next = weighted_least_norm(a, y, extend(dg, groups), lambda);
    const double move = (next - x).norm();
    x = next;
    out.trace.records.push_back({k, objective(x), move, clock.seconds()});
    if (move < std::sqrt(eps) / 100.0) {
      if (eps <= opt.eps_floor || opt.decay == 1.0) {
        out.trace.converged = true;
        break;
      }
      eps = std::max(eps / opt.decay, opt.eps_floor);
    }
  }
  out.x = x;
  out.objective = objective(x);
  out.trace.x = Eigen::Map<const Vec>(x.data(), x.size());
  return out;
}

ReweightedRun run_reweighted_l1(const RowMat& a, const Vec& y, const GroupStructure& groups,
                                double q, double lambda, const ReweightedOptions& opt) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("reweighted l1 needs q in (0, 1)");
  if (!(opt.eps > 0.0)) throw ConfigError("reweighted l1 needs eps > 0");
  require_size(groups.dim(), a.cols(), "reweighted l1 groups");
  auto fit = [&](const Vec& x) { return (kernels::gemv(a, x) - y).squaredNorm() / (2.0 * lambda); };
  auto surrogate = [&](const Vec& x) {
    const Vec norms = group_norms(x, groups);
    double s = 0.0;
    for (Index g = 0; g < norms.size(); ++g) s += std::pow(norms[g] + opt.eps, q);
    return s / q + fit(x);
  };
  ReweightedRun run;
  Stopwatch clock;
  Vec x = Vec::Zero(a.cols());
  Vec omega = Vec::Ones(groups.count());
  for (int k = 1; k <= opt.outer_iterations; ++k) {
    const Vec scale = extend(omega, groups).cwiseInverse();
    RowMat design = a * scale.asDiagonal();
    const auto inner = VarProProblem::group_lasso(LinearOperator::dense(std::move(design)), groups,
                                                  lambda, y);
    const SolverTrace tr = lbfgs_minimize(inner, opt.inner);
    if (tr.failed) {
      run.result.trace.failed = true;
      run.result.trace.message = "inner VarPro failed: " + tr.message;
    }
    x = scale.cwiseProduct(tr.x);
    const Vec norms = group_norms(x, groups);
    for (Index g = 0; g < norms.size(); ++g) omega[g] = std::pow(norms[g] + opt.eps, q - 1.0);
    run.surrogate.push_back(surrogate(x));
    run.result.trace.records.push_back({k, lq_penalty(x, groups, q) + fit(x), 0.0, clock.seconds()});
  }
  run.result.x = x;
  run.result.objective = lq_penalty(x, groups, q) + fit(x);
  run.result.trace.x = x;
  return run;
}

ScaledLassoRun run_scaled_lasso(const RowMat& a, const Vec& y, double lambda,
                                const ScaledLassoOptions& opt) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  require_size(y.size(), a.rows(), "scaled lasso observations");
  const double root_m = std::sqrt(double(a.rows()));
  const LinearOperator op = LinearOperator::dense(a);
  auto objective = [&](const Vec& x) {
    return x.lpNorm<1>() + (kernels::gemv(a, x) - y).norm() / (lambda * root_m);
  };
  ScaledLassoRun run;
  Stopwatch clock;
  Vec x = Vec::Zero(a.cols());
  double eta = y.norm();
  run.eta.push_back(eta);
  run.trace.records.push_back({0, objective(x), 0.0, clock.seconds()});
  for (int k = 1; k <= opt.iterations; ++k) {
    if (eta == 0.0) {
      run.interpolated = true;
      run.trace.failed = true;
      run.trace.message = "residual vanished; the lasso weight is undefined";
      break;
    }
    const auto lasso = VarProProblem::group_lasso(op, GroupStructure::singletons(a.cols()),
                                                  lambda * root_m * eta, y);
    const SolverTrace tr = lbfgs_minimize(lasso, opt.inner);
    if (tr.failed) {
      run.trace.failed = true;
      run.trace.message = "inner VarPro failed: " + tr.message;
    }
    x = tr.x;
    const double next = (kernels::gemv(a, x) - y).norm();
    run.eta.push_back(next);
    run.trace.records.push_back({k, objective(x), std::abs(next - eta), clock.seconds()});
    const bool settled = std::abs(next - eta) <= opt.tol * eta;
    eta = next;
    if (settled) {
      run.trace.converged = true;
      break;
    }
  }
  run.trace.x = x;
  return run;
}

}  // namespace sop
