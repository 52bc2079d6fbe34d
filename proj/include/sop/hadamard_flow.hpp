#pragma once

// Plain gradient descent on the factorized objective
//   G(u, v) = rho/2 (||u||^2 + ||v||^2) + F(u (.) v),   F(x) = 1/(2 lambda) ||A x - y||^2,
// with the stepsize theory and per-iteration diagnostics.

#include "sop/groups.hpp"
#include "sop/trace.hpp"
#include "sop/types.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace sop {

struct FlowProblem {
  RowMat a;
  Vec y;
  double lambda = 1.0;
  GroupStructure groups;
  // Weight of the quadratic penalty; 1 is the l_{1,2} problem, 0 the pure
  // data-fit flow.
  double rho = 1.0;

  double data_fit(const Vec& x) const;
  Vec data_grad(const Vec& x) const;
  // rho ||x||_{1,2} + F(x)
  double objective(const Vec& x) const;
};

struct FlowState {
  Vec u;
  Vec v;
  long iteration = 0;
};

struct FlowGradient {
  Vec u;
  Vec v;
  double norm() const { return std::sqrt(u.squaredNorm() + v.squaredNorm()); }
};

double flow_value(const FlowProblem& p, const FlowState& s);
FlowGradient flow_gradient(const FlowProblem& p, const FlowState& s);

// u+ = u - tau (rho u + v_bar (.) grad F),  v+ = v - tau (rho v + (u_g^T grad F_g)_g).
FlowState gd_step(const FlowProblem& p, const FlowState& s, double tau);

struct LipschitzBounds {
  double m_f = 0.0;
  double k = 0.0;
  double b = 0.0;
  double m_g = 0.0;
  double kappa = 1.0;
  double rho = 0.0;  // contraction factor 1 - 1/(kappa m_g)
};

enum class GradientBound {
  // max of ||grad F||_{inf,2} over 100 random sublevel points and the start, doubled
  sampled,
  // (max_g ||A_g||^2 B^2 / 2 + max_g ||A_g^T y||) / lambda
  certified,
};

// m_g = 2 (k + m_f b^2) from m_f = max_g ||A_g||_2^2 / lambda and b^2 = 2 G(u0, v0).
LipschitzBounds lipschitz_bounds(const FlowProblem& p, const Vec& u0, const Vec& v0,
                                 GradientBound kb = GradientBound::sampled,
                                 std::uint64_t seed = 11);
LipschitzBounds make_bounds(double m_f, double k, double b);

enum class StepRule { inverse_mg, inverse_kappa_mg, fixed, barzilai_borwein };

struct FlowOptions {
  StepRule rule = StepRule::inverse_kappa_mg;
  double fixed_step = 0.0;  // used by StepRule::fixed
  long iterations = 1000;
  bool record_diagnostics = true;
};

struct FlowDiagnostics {
  std::vector<double> grad_norm;      // ||grad G(u_k, v_k)||
  std::vector<double> imbalance;      // | ||u_k||^2 - ||v_k||^2 |
  std::vector<double> surrogate;      // F(x_k) + 2 rho sum_g ||x_g||^2 / (||u_g||^2 + v_g^2)
  std::vector<double> objective;      // rho ||x_k||_{1,2} + F(x_k)
  std::vector<double> g_value;        // G(u_k, v_k)
  std::vector<double> step;           // step used from k to k+1
};

struct FlowRun {
  FlowState final;
  FlowDiagnostics diagnostics;
  SolverTrace trace;
  bool diverged = false;
};

// Entry k of the diagnostics describes iterate k (k = 0 .. iterations).
FlowRun run_gd(const FlowProblem& p, const FlowState& start, const LipschitzBounds& bounds,
               const FlowOptions& opt);

// Discrete residual of d/dt arcsinh(x / gamma(t)) + 2 grad F(x) with
// gamma(t) = c e^{-2 rho t}, t_k = k tau. `pairs` holds consecutive states
// (k, k+1); the result is the max over pairs of the sup-norm residual divided
// by max(1, ||2 grad F(x_k)||_inf). Throws ConfigError if any c_i is 0.
double mirror_equivalence_residual(const FlowProblem& p,
                                   const std::vector<std::pair<FlowState, FlowState>>& pairs,
                                   double tau, const Vec& c);

struct MirrorCheck {
  double residual = 0.0;
  // max_i,k |(u_k^2 - v_k^2) - (u0^2 - v0^2) e^{-2 rho t_k}| / (t_k |u0^2 - v0^2|_inf)
  double drift_per_time = 0.0;
};

// Runs the singleton-group flow to physical time `horizon` with step tau and
// evaluates the residual at `checkpoints` evenly spaced times.
MirrorCheck mirror_equivalence(const FlowProblem& p, const Vec& u0, const Vec& v0, double tau,
                               double horizon, int checkpoints);

}  // namespace sop
