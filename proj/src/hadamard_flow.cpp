#include "sop/hadamard_flow.hpp"

#include "sop/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace sop {

double FlowProblem::data_fit(const Vec& x) const {
  return (kernels::gemv(a, x) - y).squaredNorm() / (2.0 * lambda);
}

Vec FlowProblem::data_grad(const Vec& x) const {
  return kernels::gemv_t(a, kernels::gemv(a, x) - y) / lambda;
}

double FlowProblem::objective(const Vec& x) const {
  return rho * group_norm_12(x, groups) + data_fit(x);
}

namespace {

Vec group_inner(const Vec& u, const Vec& g, const GroupStructure& gs) {
  Vec out(gs.count());
  for (Index k = 0; k < gs.count(); ++k) {
    double s = 0.0;
    for (Index i : gs.group(k)) s += u[i] * g[i];
    out[k] = s;
  }
  return out;
}

struct Eval {
  Vec x;
  Vec grad_f;
  double fit = 0.0;
  double g_value = 0.0;
  FlowGradient grad;
};

Eval evaluate(const FlowProblem& p, const FlowState& s) {
  Eval e;
  const Vec vb = extend(s.v, p.groups);
  e.x = s.u.cwiseProduct(vb);
  const Vec r = kernels::gemv(p.a, e.x) - p.y;
  e.fit = r.squaredNorm() / (2.0 * p.lambda);
  e.grad_f = kernels::gemv_t(p.a, r) / p.lambda;
  e.g_value = 0.5 * p.rho * (s.u.squaredNorm() + s.v.squaredNorm()) + e.fit;
  e.grad.u = p.rho * s.u + vb.cwiseProduct(e.grad_f);
  e.grad.v = p.rho * s.v + group_inner(s.u, e.grad_f, p.groups);
  return e;
}

void check_state(const FlowProblem& p, const FlowState& s) {
  require_size(s.u.size(), p.groups.dim(), "flow u");
  require_size(s.v.size(), p.groups.count(), "flow v");
  require_size(p.a.cols(), p.groups.dim(), "flow design");
}

}  // namespace

double flow_value(const FlowProblem& p, const FlowState& s) {
  check_state(p, s);
  return evaluate(p, s).g_value;
}

FlowGradient flow_gradient(const FlowProblem& p, const FlowState& s) {
  check_state(p, s);
  return evaluate(p, s).grad;
}

FlowState gd_step(const FlowProblem& p, const FlowState& s, double tau) {
  if (!(tau > 0.0)) throw ConfigError("step must be positive");
  check_state(p, s);
  const FlowGradient g = evaluate(p, s).grad;
  return {s.u - tau * g.u, s.v - tau * g.v, s.iteration + 1};
}

LipschitzBounds make_bounds(double m_f, double k, double b) {
  LipschitzBounds lb;
  lb.m_f = m_f;
  lb.k = k;
  lb.b = b;
  lb.m_g = 2.0 * (k + m_f * b * b);
  lb.kappa = std::max(1.0, (1.0 + k * k) / lb.m_g);
  lb.rho = 1.0 - 1.0 / (lb.kappa * lb.m_g);
  return lb;
}

LipschitzBounds lipschitz_bounds(const FlowProblem& p, const Vec& u0, const Vec& v0,
                                 GradientBound kb, std::uint64_t seed) {
  const FlowState s0{u0, v0, 0};
  check_state(p, s0);
  const GroupStructure& gs = p.groups;
  double a_max2 = 0.0;
  double aty_max = 0.0;
  const Vec aty = kernels::gemv_t(p.a, p.y);
  for (Index g = 0; g < gs.count(); ++g) {
    Mat block(p.a.rows(), gs.group_size(g));
    for (Index k = 0; k < gs.group_size(g); ++k) block.col(k) = p.a.col(gs.group(g)[static_cast<std::size_t>(k)]);
    const double s = gs.group_size(g) == 1 ? block.squaredNorm()
                                           : std::pow(Eigen::JacobiSVD<Mat>(block).singularValues()[0], 2);
    a_max2 = std::max(a_max2, s);
    double t = 0.0;
    for (Index i : gs.group(g)) t += aty[i] * aty[i];
    aty_max = std::max(aty_max, std::sqrt(t));
  }
  const double m_f = a_max2 / p.lambda;
  const double g0 = evaluate(p, s0).g_value;
  const double b = std::sqrt(2.0 * g0);
  double k = 0.0;
  if (kb == GradientBound::certified) {
    k = (a_max2 * b * b / 2.0 + aty_max) / p.lambda;
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double radius = b * b / 2.0;
    double worst = group_norm_inf2(p.data_grad(u0.cwiseProduct(extend(v0, gs))), gs);
    for (int trial = 0; trial < 100; ++trial) {
      Vec d(gs.dim());
      for (Index i = 0; i < d.size(); ++i) d[i] = normal(rng);
      const double dn = group_norm_12(d, gs);
      if (dn == 0.0) continue;
      const Vec x = d * (unif(rng) * radius / dn);
      worst = std::max(worst, group_norm_inf2(p.data_grad(x), gs));
    }
    k = 2.0 * worst;
  }
  return make_bounds(m_f, k, b);
}

FlowRun run_gd(const FlowProblem& p, const FlowState& start, const LipschitzBounds& bounds,
               const FlowOptions& opt) {
  check_state(p, start);
  double base_step = 0.0;
  switch (opt.rule) {
    case StepRule::inverse_mg: base_step = 1.0 / bounds.m_g; break;
    case StepRule::inverse_kappa_mg:
    case StepRule::barzilai_borwein: base_step = 1.0 / (bounds.kappa * bounds.m_g); break;
    case StepRule::fixed: base_step = opt.fixed_step; break;
  }
  if (!(base_step > 0.0) || !std::isfinite(base_step)) throw ConfigError("invalid flow step");

  FlowRun run;
  Stopwatch clock;
  FlowState s = start;
  Eval e = evaluate(p, s);
  const double g0 = e.g_value;
  Vec prev_z, prev_g;
  auto record = [&](const Eval& ev, const FlowState& st) {
    const double gn = ev.grad.norm();
    const double objective = p.rho * group_norm_12(ev.x, p.groups) + ev.fit;
    run.trace.records.push_back({static_cast<int>(st.iteration), objective, gn, clock.seconds()});
    if (!opt.record_diagnostics) return;
    auto& d = run.diagnostics;
    d.grad_norm.push_back(gn);
    d.imbalance.push_back(std::abs(st.u.squaredNorm() - st.v.squaredNorm()));
    const Vec xn2 = group_sq_norms(ev.x, p.groups);
    const Vec un2 = group_sq_norms(st.u, p.groups);
    double quad = 0.0;
    for (Index g = 0; g < xn2.size(); ++g) {
      const double den = un2[g] + st.v[g] * st.v[g];
      if (den > 0.0) quad += xn2[g] / den;
    }
    d.surrogate.push_back(ev.fit + 2.0 * p.rho * quad);
    d.objective.push_back(objective);
    d.g_value.push_back(ev.g_value);
  };
  record(e, s);
  for (long k = 0; k < opt.iterations; ++k) {
    double tau = base_step;
    Vec z(s.u.size() + s.v.size());
    z << s.u, s.v;
    Vec gz(z.size());
    gz << e.grad.u, e.grad.v;
    if (opt.rule == StepRule::barzilai_borwein && prev_z.size()) {
      const Vec ds = z - prev_z;
      const Vec dg = gz - prev_g;
      // Geometric mean of the two BB steps, ||ds|| / ||dg||. It stays
      // meaningful under negative curvature, where s'y <= 0.
      const double bb = ds.norm() / dg.norm();
      tau = std::isfinite(bb) ? std::clamp(bb, 1e-8 / bounds.m_g, 1e8 / bounds.m_g) : base_step;
    }
    prev_z = std::move(z);
    prev_g = std::move(gz);
    if (opt.record_diagnostics) run.diagnostics.step.push_back(tau);
    s = FlowState{s.u - tau * e.grad.u, s.v - tau * e.grad.v, s.iteration + 1};
    e = evaluate(p, s);
    if (!std::isfinite(e.g_value) ||
        (opt.rule == StepRule::barzilai_borwein && e.g_value > 10.0 * std::max(g0, 1e-300))) {
      run.diverged = true;
      run.trace.failed = true;
      run.trace.message = "flow diverged";
      record(e, s);
      break;
    }
    record(e, s);
  }
  run.final = s;
  run.trace.v = s.v;
  run.trace.w = s.u;
  run.trace.x = s.u.cwiseProduct(extend(s.v, p.groups));
  return run;
}

double mirror_equivalence_residual(const FlowProblem& p,
                                   const std::vector<std::pair<FlowState, FlowState>>& pairs,
                                   double tau, const Vec& c) {
  if (p.groups.count() != p.groups.dim())
    throw ConfigError("mirror equivalence is defined for singleton groups");
  require_size(c.size(), p.groups.dim(), "entropy scale c");
  if ((c.array() == 0.0).any())
    throw ConfigError("mirror equivalence needs |u0| != |v0| in every coordinate");
  double worst = 0.0;
  for (const auto& [s0, s1] : pairs) {
    const double t0 = double(s0.iteration) * tau;
    const double t1 = double(s1.iteration) * tau;
    const Vec x0 = s0.u.cwiseProduct(s0.v);
    const Vec x1 = s1.u.cwiseProduct(s1.v);
    const Vec gam0 = c * std::exp(-2.0 * p.rho * t0);
    const Vec gam1 = c * std::exp(-2.0 * p.rho * t1);
    const Vec m0 = x0.cwiseQuotient(gam0).array().asinh();
    const Vec m1 = x1.cwiseQuotient(gam1).array().asinh();
    const Vec drive = 2.0 * p.data_grad(x0);
    const Vec res = (m1 - m0) / (t1 - t0) + drive;
    worst = std::max(worst, res.cwiseAbs().maxCoeff() / std::max(1.0, drive.cwiseAbs().maxCoeff()));
  }
  return worst;
}

MirrorCheck mirror_equivalence(const FlowProblem& p, const Vec& u0, const Vec& v0, double tau,
                               double horizon, int checkpoints) {
  const Vec d0 = u0.cwiseAbs2() - v0.cwiseAbs2();
  const Vec c = 0.5 * d0.cwiseAbs();
  const long steps = std::lround(horizon / tau);
  std::vector<long> marks;
  for (int j = 1; j <= checkpoints; ++j) marks.push_back(std::lround(double(j) * double(steps) / checkpoints) - 1);
  std::vector<std::pair<FlowState, FlowState>> pairs;
  FlowState s{u0, v0, 0};
  MirrorCheck out;
  const double scale = d0.cwiseAbs().maxCoeff();
  std::size_t next = 0;
  for (long k = 0; k < steps; ++k) {
    FlowState n = gd_step(p, s, tau);
    if (next < marks.size() && k == marks[next]) {
      pairs.emplace_back(s, n);
      ++next;
    }
    const double t = double(n.iteration) * tau;
    const Vec d = n.u.cwiseAbs2() - n.v.cwiseAbs2();
    const double drift = (d - d0 * std::exp(-2.0 * p.rho * t)).cwiseAbs().maxCoeff() / (t * scale);
    out.drift_per_time = std::max(out.drift_per_time, drift);
    s = std::move(n);
  }
  out.residual = mirror_equivalence_residual(p, pairs, tau, c);
  return out;
}

}  // namespace sop
