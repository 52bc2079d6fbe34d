#include "sop/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

namespace sop {

void validate(const OuterConfig& cfg) {
  if (cfg.memory < 1) throw ConfigError("L-BFGS memory must be at least 1");
  if (!(cfg.grad_tol > 0.0)) throw ConfigError("grad_tol must be positive");
  if (cfg.stall_iterations < 0) throw ConfigError("stall_iterations must be nonnegative");
  if (cfg.max_iter < 0) throw ConfigError("max_iter must be nonnegative");
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0)) throw ConfigError("backtrack factor in (0,1)");
}

Vec initial_point(Index n, const OuterConfig& cfg) {
  switch (cfg.init) {
    case InitKind::ones: return Vec::Ones(n);
    case InitKind::user:
      require_size(cfg.user_init.size(), n, "user initial point");
      return cfg.user_init;
    case InitKind::random_uniform: break;
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(cfg.init_low, cfg.init_high);
  Vec z(n);
  for (Index i = 0; i < n; ++i) z[i] = unif(rng);
  return z;
}

namespace {

struct Pair {
  Vec s;
  Vec y;
  double rho;
};

Vec two_loop(const std::deque<Pair>& mem, const Vec& g) {
  Vec q = g;
  std::vector<double> a(mem.size());
  for (std::size_t k = mem.size(); k-- > 0;) {
    a[k] = mem[k].rho * mem[k].s.dot(q);
    q -= a[k] * mem[k].y;
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double b = mem[k].rho * mem[k].y.dot(q);
    q += (a[k] - b) * mem[k].s;
  }
  return -q;
}

// Objective evaluation that maps exceptions and non-finite values to +inf so
// the line search simply backtracks past them.
double safe_eval(const SmoothObjective& fn, const Vec& z, Vec& g) {
  try {
    const double f = fn(z, g);
    if (std::isfinite(f) && g.allFinite()) return f;
  } catch (const Error&) {
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

MinimizeResult minimize(const SmoothObjective& fn, Vec z0, const OuterConfig& cfg) {
  validate(cfg);
  Stopwatch clock;
  MinimizeResult r;
  r.z = std::move(z0);
  r.grad = Vec::Zero(r.z.size());
  r.f = fn(r.z, r.grad);
  r.trace.push_back({0, r.f, r.grad.norm(), clock.seconds()});
  std::deque<Pair> mem;
  double bb_step = 0.0;
  Vec g_new(r.z.size());
  int flat_steps = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const double gnorm = r.grad.norm();
    if (gnorm <= cfg.grad_tol) {
      r.converged = true;
      break;
    }
    if (clock.seconds() > cfg.max_seconds) break;

    Vec d;
    double step = 1.0;
    if (cfg.algorithm == OuterAlgorithm::lbfgs) {
      d = two_loop(mem, r.grad);
      if (!(d.dot(r.grad) < 0.0)) {
        mem.clear();
        d = -r.grad;
      }
      if (mem.empty()) step = std::min(1.0, 1.0 / gnorm);
    } else {
      d = -r.grad;
      step = bb_step > 0.0 ? bb_step : std::min(1.0, 1.0 / gnorm);
    }

    const double slope = r.grad.dot(d);
    double f_new = std::numeric_limits<double>::infinity();
    Vec z_new;
    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      z_new = r.z + step * d;
      f_new = safe_eval(fn, z_new, g_new);
      if (f_new <= r.f + cfg.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) {
      // A quasi-Newton direction can be poor after a sharp curvature change;
      // retry once from steepest descent before giving up.
      if (cfg.algorithm == OuterAlgorithm::lbfgs && !mem.empty()) {
        mem.clear();
        --it;
        continue;
      }
      // A predicted decrease below the rounding of f cannot be resolved.
      if (std::abs(slope) <= 1e-14 * std::max(1.0, std::abs(r.f))) r.stalled = true;
      else r.line_search_failed = true;
      break;
    }

    Vec s = z_new - r.z;
    Vec y = g_new - r.grad;
    const double sy = s.dot(y);
    if (cfg.algorithm == OuterAlgorithm::lbfgs) {
      if (sy > 1e-12 * s.norm() * y.norm()) {
        mem.push_back({std::move(s), std::move(y), 1.0 / sy});
        if (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
      }
    } else {
      const double ss = s.squaredNorm();
      bb_step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : 0.0;
    }
    flat_steps = r.f - f_new <= cfg.stall_rtol * std::abs(r.f) ? flat_steps + 1 : 0;
    r.z = std::move(z_new);
    r.f = f_new;
    r.grad = g_new;
    r.iterations = it;
    r.trace.push_back({it, r.f, r.grad.norm(), clock.seconds()});
    if (cfg.stall_iterations > 0 && flat_steps >= cfg.stall_iterations) {
      r.stalled = true;
      break;
    }
  }
  if (!r.converged && r.grad.norm() <= cfg.grad_tol) r.converged = true;
  return r;
}

}  // namespace sop
