#pragma once

#include "sop/trace.hpp"
#include "sop/types.hpp"

#include <cstdint>
#include <functional>
#include <limits>

namespace sop {

// Returns f(z) and writes the gradient into `grad` (already sized).
using SmoothObjective = std::function<double(const Vec& z, Vec& grad)>;

enum class OuterAlgorithm { lbfgs, gradient_descent_bb };
enum class InitKind { random_uniform, ones, user };

struct OuterConfig {
  OuterAlgorithm algorithm = OuterAlgorithm::lbfgs;
  int memory = 10;
  int max_iter = 1000;
  double grad_tol = 1e-8;
  double max_seconds = std::numeric_limits<double>::infinity();

  InitKind init = InitKind::random_uniform;
  double init_low = 0.5;
  double init_high = 1.5;
  std::uint64_t seed = 0;
  Vec user_init;

  // Backtracking line search.
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_halvings = 50;

  // Stop once this many consecutive accepted steps lower f by less than
  // stall_rtol * |f|: the gradient is then at its rounding floor. 0 disables.
  int stall_iterations = 20;
  double stall_rtol = 1e-15;
};

void validate(const OuterConfig& cfg);

// Starting point of length n according to cfg.init.
Vec initial_point(Index n, const OuterConfig& cfg);

struct MinimizeResult {
  Vec z;
  double f = 0.0;
  Vec grad;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  bool stalled = false;
  std::vector<TraceRecord> trace;
};

// Monotone quasi-Newton (or BB gradient) descent with Armijo backtracking. On a
// line-search failure the best iterate is returned with the flag set.
MinimizeResult minimize(const SmoothObjective& fn, Vec z0, const OuterConfig& cfg);

}  // namespace sop
