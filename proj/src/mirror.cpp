#include "sop/mirror.hpp"

#include "sop/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace sop {

namespace {
// sinh overflows a double just above 710.
constexpr double kMirrorClamp = 700.0;
}  // namespace

Entropy Entropy::hyperbolic(double c) {
  if (!(c > 0.0)) throw ConfigError("hyperbolic entropy needs c > 0");
  return {EntropyKind::hyperbolic, c};
}

double entropy_value(const Entropy& e, const Vec& x) {
  if (e.kind == EntropyKind::quadratic) return 0.5 * e.scale * x.squaredNorm();
  const double c = e.scale;
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i)
    s += x[i] * std::asinh(x[i] / c) - std::hypot(x[i], c) + c;
  return s;
}

Vec entropy_grad(const Entropy& e, const Vec& x) {
  if (e.kind == EntropyKind::quadratic) return e.scale * x;
  return (x / e.scale).array().asinh();
}

Vec entropy_grad_inverse(const Entropy& e, const Vec& t) {
  if (e.kind == EntropyKind::quadratic) return t / e.scale;
  return e.scale * t.array().sinh();
}

double bregman_div(const Entropy& e, const Vec& a, const Vec& b) {
  require_size(a.size(), b.size(), "bregman_div");
  return entropy_value(e, a) - entropy_value(e, b) - entropy_grad(e, b).dot(a - b);
}

Vec soft_threshold(const Vec& z, double t) {
  if (t < 0.0) throw ConfigError("threshold must be nonnegative");
  Vec out(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    const double m = std::abs(z[i]) - t;
    out[i] = m > 0.0 ? std::copysign(m, z[i]) : 0.0;
  }
  return out;
}

Vec L1Problem::data_grad(const Vec& x) const {
  return kernels::gemv_t(a, kernels::gemv(a, x) - y) / lambda;
}

double L1Problem::objective(const Vec& x) const {
  return x.lpNorm<1>() + (kernels::gemv(a, x) - y).squaredNorm() / (2.0 * lambda);
}

BpgdRun run_bpgd(const L1Problem& p, const Entropy& e, const BpgdOptions& opt) {
  if (!(opt.step > 0.0)) throw ConfigError("BPGD step must be positive");
  const Index n = p.a.cols();
  Vec x = opt.x0.size() ? opt.x0 : Vec::Constant(n, 1.0 / double(n));
  require_size(x.size(), n, "BPGD x0");
  const double grad_step = opt.scaling == BpgdScaling::literal ? opt.step / double(n) : opt.step;
  BpgdRun run;
  Stopwatch clock;
  double obj = p.objective(x);
  run.trace.records.push_back({0, obj, 0.0, clock.seconds()});
  for (long k = 1; k <= opt.iterations; ++k) {
    const Vec g = p.data_grad(x);
    Vec t = entropy_grad(e, x) - grad_step * g;
    t = soft_threshold(t, opt.step);
    if (e.kind == EntropyKind::hyperbolic && t.cwiseAbs().maxCoeff() > kMirrorClamp) {
      t = t.cwiseMax(-kMirrorClamp).cwiseMin(kMirrorClamp);
      run.clamped = true;
    }
    const Vec next = entropy_grad_inverse(e, t);
    const double step_norm = (next - x).norm();
    x = next;
    const double nobj = p.objective(x);
    if (nobj > obj + opt.descent_slack * std::max(1.0, std::abs(obj))) run.descent_held = false;
    obj = nobj;
    run.trace.records.push_back({static_cast<int>(k), obj, step_norm / opt.step, clock.seconds()});
  }
  run.trace.x = x;
  if (run.clamped) run.trace.message = "mirror coordinates clamped";
  if (!run.descent_held) run.trace.message += run.trace.message.empty() ? "descent violated" : "; descent violated";
  return run;
}

double certified_bpgd_step(const L1Problem& p, const Entropy& e, const Vec& x0) {
  const Mat h = kernels::weighted_inner(p.a, Vec::Ones(p.a.rows())) / p.lambda;
  const double m1 = h.cwiseAbs().maxCoeff();
  const double r = p.objective(x0);
  const double nc = e.kind == EntropyKind::hyperbolic ? double(p.a.cols()) * e.scale : 0.0;
  if (e.kind == EntropyKind::quadratic) {
    // eta = n/2 ||.||^2 dominates 1/2 ||.||_1^2, so the l1 constant applies directly
    return e.scale / (double(p.a.cols()) * m1);
  }
  return 1.0 / ((r + nc) * m1);
}

}  // namespace sop
