#pragma once

// Smooth outer objectives obtained by marginalizing the Hadamard factor, and
// the quasi-Newton driver that minimizes them.
//
// Normalized objectives (regularizer weight 1, data weight 1/lambda):
//   quadratic      ||L x||_{1,2} + 1/(2 lambda) ||A x - y||^2
//   robust         ||L x||_{1,2} + 1/lambda sum_h ||(A x - y)_h||
//   basis pursuit  ||L x||_{1,2}  subject to  A x = y
//   multitask      ||X||_{1,2} (rows) + lambda ||A X - Y||_*

#include "sop/groups.hpp"
#include "sop/inner.hpp"
#include "sop/lbfgs.hpp"
#include "sop/linops.hpp"
#include "sop/trace.hpp"

#include <optional>
#include <variant>

namespace sop {

struct QuadraticLoss {
  double lambda = 1.0;
  Vec y;
};

struct RobustLoss {
  GroupStructure groups;  // partition of the rows of A
  double lambda = 1.0;
  Vec y;
};

struct BasisPursuitLoss {
  Vec y;
};

struct MultitaskLoss {
  double lambda = 1.0;
  Mat y;  // m x T
};

using Loss = std::variant<QuadraticLoss, RobustLoss, BasisPursuitLoss, MultitaskLoss>;

// Which specialized inner solver to use for the quadratic loss.
enum class InnerStrategy { automatic, general, grouplasso_dual, analysis_prox, woodbury };

struct VarProProblem {
  LinearOperator a;
  LinearOperator l;
  GroupStructure reg_groups;  // partition of the rows of L
  Loss loss;
  // Set for overlapping group lasso: the original groups over [0, n), with
  // l = block_extract(*overlap) and reg_groups = block_row_groups(*overlap).
  std::optional<GroupStructure> overlap;
  InnerStrategy strategy = InnerStrategy::automatic;
  InnerConfig inner;

  static VarProProblem group_lasso(LinearOperator a, GroupStructure groups, double lambda, Vec y);
  static VarProProblem analysis(LinearOperator a, LinearOperator l, GroupStructure reg,
                                double lambda, Vec y);
  static VarProProblem overlapping(LinearOperator a, GroupStructure groups, double lambda, Vec y);
  static VarProProblem robust(LinearOperator a, LinearOperator l, GroupStructure reg,
                              GroupStructure loss_groups, double lambda, Vec y);
  // ||x||_1 + 1/(lambda sqrt(m)) ||A x - y||, i.e. robust with one loss group
  // and effective weight lambda * sqrt(m).
  static VarProProblem sqrt_lasso(LinearOperator a, double lambda, Vec y);
  static VarProProblem basis_pursuit(LinearOperator a, LinearOperator l, GroupStructure reg, Vec y);
  static VarProProblem multitask(const RowMat& a, double lambda, Mat y);

  Index outer_size() const;  // number of v entries
  Index second_block_size() const;  // w entries (robust) or m*m (multitask), else 0
  bool is_quadratic() const { return std::holds_alternative<QuadraticLoss>(loss); }
  bool is_robust() const { return std::holds_alternative<RobustLoss>(loss); }
  bool is_basis_pursuit() const { return std::holds_alternative<BasisPursuitLoss>(loss); }
  bool is_multitask() const { return std::holds_alternative<MultitaskLoss>(loss); }
};

struct FGrad {
  double f = 0.0;
  Vec grad;
  InnerSolution inner;
};

struct FGrad2 {
  double f = 0.0;
  Vec grad_v;
  Vec grad_w;
  InnerSolution inner;
};

struct MultitaskFGrad {
  double f = 0.0;
  Vec grad_v;
  Mat grad_w;
  MultitaskSolution inner;
};

// Quadratic or basis-pursuit loss: grad_g = v_g - v_g ||alpha_g||^2.
FGrad eval_f_grad(const VarProProblem& p, const Vec& v, const Vec* warm = nullptr);
// Robust loss: grad_v = v - v ||alpha_g||^2, grad_w = w / lambda - lambda w ||xi_h||^2.
FGrad2 eval_f_grad_robust(const VarProProblem& p, const Vec& v, const Vec& w);
// Multitask: grad_v = v - v_i ||(A^T alpha)_i||^2, grad_W = lambda W - alpha alpha^T W / lambda.
MultitaskFGrad eval_multitask(const VarProProblem& p, const Vec& v, const Mat& w,
                              double eps_floor = 0.0);

// Non-smooth objective of a primal point (x flattened column-major for multitask).
double primal_objective(const VarProProblem& p, const Vec& x);

// Primal iterate carried by the inner solve.
inline const Vec& recover_x(const InnerSolution& s) { return s.x; }

// Minimizes the outer objective over all of its blocks; trace.x holds the
// recovered primal solution.
SolverTrace lbfgs_minimize(const VarProProblem& p, const OuterConfig& cfg);

// ---- nonconvex l_q (q = 2/3) through the three-factor form --------------

// min_X (3/2) sum_g ||X_g||^{2/3} + 1/(2 lambda) ||A X - Y||^2, groups over the
// rows of X.
struct LqProblem {
  RowMat a;
  GroupStructure groups;
  double lambda = 1.0;
  Mat y;  // m x T
};

struct LqFGrad2 {
  double f = 0.0;
  Vec grad_v;
  Vec grad_w;
  Mat x;
  Mat alpha;
};

struct LqFGrad3 {
  double f = 0.0;
  Vec grad_v;
  Mat z;
  Mat x;
  Mat alpha;
  double inner_grad_norm = 0.0;
};

// Two outer variables (v, w); the inner problem over u is a linear solve.
LqFGrad2 eval_lq_option2(const LqProblem& p, const Vec& v, const Vec& w);

// One outer variable v; the inner group lasso in z is solved by a nested
// VarPro run to `inner_grad_tol`.
LqFGrad3 eval_lq_option3(const LqProblem& p, const Vec& v, double inner_grad_tol = 1e-10,
                         const Vec* warm = nullptr);

// (3/2) sum_g ||X_g||^{2/3} + 1/(2 lambda) ||A X - Y||^2.
double lq_objective(const LqProblem& p, const Mat& x);

struct LqResult {
  Mat x;
  double objective = 0.0;
  SolverTrace trace;
};

// Option 2 minimized with L-BFGS from `restarts` random starts; keeps the
// lowest objective.
LqResult solve_lq_option2(const LqProblem& p, const OuterConfig& cfg, int restarts = 1);
LqResult solve_lq_option3(const LqProblem& p, const OuterConfig& cfg);

}  // namespace sop
