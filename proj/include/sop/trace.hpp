#pragma once

#include "sop/types.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace sop {

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  Vec v;  // outer variable (group scalars) when the solver has one
  Vec w;  // second outer block (loss scalars, or a flattened matrix)
  Vec x;  // recovered primal iterate (flattened column-major for matrices)
  bool converged = false;
  bool failed = false;  // line search or numerical failure; x is the best iterate
  std::string message;

  double final_objective() const { return records.empty() ? 0.0 : records.back().objective; }
};

// Monotonic wall clock measured from construction.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace sop
