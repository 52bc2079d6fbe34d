#pragma once

// The three benchmark commands. Each is a library function so that tests and
// the acceptance harness can drive them without spawning processes.

#include "sop/bench/config.hpp"
#include "sop/io.hpp"
#include "sop/trace.hpp"
#include "sop/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sop::bench {

// Header "iter,objective,grad_norm,seconds", one row per record.
void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace);
std::string trace_csv(const SolverTrace& trace);

struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

struct SolverOutcome {
  std::string name;
  std::string method;
  SolverTrace trace;
  bool failed = false;
  std::string message;
};

struct RunReport {
  std::vector<SolverOutcome> outcomes;
  std::vector<std::filesystem::path> csv_files;
  std::filesystem::path svg;
  double best_objective = 0.0;
  int failures() const;
};

// [run] out, iterations, max_seconds, plot; [problem] family and sizes;
// one [solver:NAME] per solver. Throws ConfigError on invalid configuration.
RunReport cmd_run(const Config& cfg, const Overrides& ov = {});

struct PhaseSweepConfig {
  Index n = 64;
  Index s = 8;
  Index tasks = 1;
  std::vector<Index> m_grid{8, 16, 24, 32, 40, 48, 56, 64};
  int trials = 20;
  double threshold = 0.01;  // relative l2 error for a success
  double lambda = 1e-4;     // data weight of the penalized l_{2/3} problem
  int restarts = 3;         // VarPro Option 2 random restarts
  std::vector<std::string> methods{"irls", "varpro2"};
  std::uint64_t seed = 0;
  int max_iter = 2000;
  double grad_tol = 1e-9;
};

struct PhaseRow {
  Index m = 0;
  std::string method;
  int successes = 0;
  int trials = 0;
};

struct PhaseReport {
  std::vector<PhaseRow> rows;  // sorted by (method, m)
  // Method names whose success counts decrease somewhere along m.
  std::vector<std::string> non_monotone;
};

PhaseSweepConfig phase_config_from(const Config& cfg, const Overrides& ov = {});
PhaseReport run_phase_sweep(const PhaseSweepConfig& cfg);
// Runs the sweep and writes phase.csv with header "m,method,successes,trials".
PhaseReport cmd_phase(const Config& cfg, const Overrides& ov = {});

enum class ImageTask { denoise, inpaint, tv_l1 };

struct ReconstructTask {
  ImageTask task = ImageTask::denoise;
  double lambda = 0.1;
  double noise_std = 0.0;        // Gaussian noise added before denoising
  double keep_fraction = 0.3;    // inpaint
  double salt_pepper = 0.25;     // tv_l1
  std::uint64_t seed = 0;
  int max_iter = 500;
  double grad_tol = 1e-7;
};

struct ReconstructResult {
  ImageTensor observed;  // corrupted input (masked pixels are 0 for inpainting)
  ImageTensor recon;
  SolverTrace trace;
};

ReconstructResult reconstruct(const ImageTensor& clean, const ReconstructTask& task);

// [reconstruct] input, task, lambda, ...; writes recon.ppm / recon.pgm,
// observed.*, residual.pgm into the output directory.
ReconstructResult cmd_reconstruct(const Config& cfg, const Overrides& ov = {});

}  // namespace sop::bench
