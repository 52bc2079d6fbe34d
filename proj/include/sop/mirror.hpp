#pragma once

// Bregman proximal gradient descent for  ||x||_1 + F(x),  F(x) = 1/(2 lambda) ||A x - y||^2.

#include "sop/trace.hpp"
#include "sop/types.hpp"

namespace sop {

enum class EntropyKind { quadratic, hyperbolic };

struct Entropy {
  EntropyKind kind = EntropyKind::hyperbolic;
  // quadratic: eta(x) = scale/2 ||x||^2; hyperbolic: c = scale,
  // eta(x) = sum x arcsinh(x/c) - sqrt(x^2 + c^2).
  double scale = 1.0;

  static Entropy quadratic(double n) { return {EntropyKind::quadratic, n}; }
  static Entropy hyperbolic(double c);
};

double entropy_value(const Entropy& e, const Vec& x);
Vec entropy_grad(const Entropy& e, const Vec& x);
Vec entropy_grad_inverse(const Entropy& e, const Vec& t);
double bregman_div(const Entropy& e, const Vec& a, const Vec& b);

// max(|z| - t, 0) sign(z), componentwise.
Vec soft_threshold(const Vec& z, double t);

struct L1Problem {
  RowMat a;
  Vec y;
  double lambda = 1.0;

  Vec data_grad(const Vec& x) const;
  double objective(const Vec& x) const;
};

enum class BpgdScaling {
  // grad eta(x+) = T_tau(grad eta(x) - tau grad F(x))
  consistent,
  // grad eta(x+) = T_tau(grad eta(x) - (tau / n) grad F(x))
  literal,
};

struct BpgdOptions {
  double step = 0.0;
  long iterations = 1000;
  BpgdScaling scaling = BpgdScaling::consistent;
  Vec x0;  // empty: (1/n) ones
  // Relative slack allowed before an objective increase counts as a violation.
  double descent_slack = 1e-12;
};

struct BpgdRun {
  SolverTrace trace;
  bool descent_held = true;
  bool clamped = false;  // mirror coordinates were clamped to avoid sinh overflow
};

BpgdRun run_bpgd(const L1Problem& p, const Entropy& e, const BpgdOptions& opt);

// 1 / ((R + n c) M1) with R = objective(x0) and M1 = max_ij |A^T A|_ij / lambda:
// the relative-smoothness step certified on the sublevel set.
double certified_bpgd_step(const L1Problem& p, const Entropy& e, const Vec& x0);

}  // namespace sop
