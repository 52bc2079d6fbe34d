#pragma once

// Quadratic variational forms of the group l_q penalty (1/q) sum_g ||x_g||^q
// and the three-factor parameterization x = u (.) (v w).

#include "sop/groups.hpp"
#include "sop/types.hpp"
#include "sop/varpro.hpp"

#include <functional>

namespace sop {

class LqSpec {
 public:
  // q = 2 beta / (1 + beta); q in (0, 2).
  static LqSpec two_factor(double q);
  // q = 2 beta / (1 + 2 beta), i.e. beta = q / (2 - 2q); q in (0, 1).
  static LqSpec three_factor(double q);

  double q() const { return q_; }
  double beta() const { return beta_; }
  int factors() const { return factors_; }
  // Two factors: q > 2/3. Three factors: 2 beta > 1, i.e. q > 1/2.
  bool differentiable() const { return 2.0 * beta_ > 1.0; }

 private:
  LqSpec(double q, double beta, int factors) : q_(q), beta_(beta), factors_(factors) {}
  double q_;
  double beta_;
  int factors_;
};

// (1/q) sum_g ||x_g||^q, groups over the rows of x.
double lq_value(const Eigen::Ref<const Mat>& x, const GroupStructure& groups, double q);

// 1/2 sum_g ||x_g||^2 / eta_g + 1/(2 beta) sum_g eta_g^beta - lq_value, with
// beta from the two-factor relation. 0/0 counts as 0.
double lq_eta_gap(const Vec& x, const GroupStructure& groups, const LqSpec& spec, const Vec& eta);

struct TwoFactors {
  Vec u;  // per coordinate
  Vec v;  // per group
};

struct ThreeFactors {
  Vec u;  // per coordinate
  Vec v;  // per group
  Vec w;  // per group
};

// 1/2 ||u||^2 + 1/(2 beta) sum_g |v_g|^(2 beta)
double two_factor_value(const TwoFactors& f, const LqSpec& spec);
// 1/2 ||u||^2 + 1/2 ||v||^2 + 1/(2 beta) sum_g |w_g|^(2 beta)
double three_factor_value(const ThreeFactors& f, const LqSpec& spec);

// Variational value at the given factors minus lq_value of the product.
double lq_factor_gap(const TwoFactors& f, const GroupStructure& groups, const LqSpec& spec);
double lq_factor_gap(const ThreeFactors& f, const GroupStructure& groups, const LqSpec& spec);

// Minimizers of the variational forms for a fixed x: eta_g = ||x_g||^(2 - q).
Vec optimal_eta(const Vec& x, const GroupStructure& groups, const LqSpec& spec);
TwoFactors optimal_two_factors(const Vec& x, const GroupStructure& groups, const LqSpec& spec);
ThreeFactors optimal_three_factors(const Vec& x, const GroupStructure& groups,
                                   const LqSpec& spec);

// Stacked (v, w) start for the Option 2 outer problem (q = 2/3) built from a
// warm-start x: v_g = w_g = ||x_g||^(1/3), floored at `floor`.
Vec lq_warm_start(const Mat& x, const GroupStructure& groups, double floor = 1e-3);

struct ThreeFactorEval {
  double value = 0.0;
  Mat grad_u;
  Vec grad_v;
  Vec grad_w;
};

// Option 1 objective for q = 2/3:
//   1/2 (||U||^2 + ||v||^2 + ||w||^2) + 1/(2 lambda) ||A X - Y||^2,
// with X = diag(v_bar w_bar) U.
ThreeFactorEval three_factor_objective(const LqProblem& p, const Mat& u, const Vec& v,
                                       const Vec& w);

// Condition number of the central-difference Hessian of a smooth function at z.
double fd_hessian_condition(const SmoothObjective& fn, const Vec& z, double h = 1e-5);

}  // namespace sop
