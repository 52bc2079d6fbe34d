#include "sop/bench/experiments.hpp"

#include "sop/baselines.hpp"
#include "sop/bench/plot.hpp"
#include "sop/hadamard_flow.hpp"
#include "sop/io.hpp"
#include "sop/linops.hpp"
#include "sop/mirror.hpp"
#include "sop/problems.hpp"
#include "sop/varpro.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

namespace sop::bench {

std::string trace_csv(const SolverTrace& trace) {
  std::ostringstream out;
  out << "iter,objective,grad_norm,seconds\n";
  out << std::setprecision(17);
  for (const auto& r : trace.records)
    out << r.iter << ',' << r.objective << ',' << r.grad_norm << ',' << r.seconds << '\n';
  return out.str();
}

void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << trace_csv(trace);
  if (!out) throw IoError("failed writing " + path.string());
}

int RunReport::failures() const {
  return static_cast<int>(std::count_if(outcomes.begin(), outcomes.end(),
                                        [](const SolverOutcome& o) { return o.failed; }));
}

namespace {

// ---- problem construction --------------------------------------------------

struct BenchProblem {
  VarProProblem vp;
  // Explicit design and data for the flow and mirror solvers (L = Id,
  // quadratic loss only).
  std::optional<RowMat> dense_a;
  Vec y;
  double lambda = 0.0;
};

ImageTensor blocky_image(const ImageShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.1, 0.9);
  ImageTensor img{shape, Vec(shape.size())};
  for (Index c = 0; c < shape.channels; ++c) {
    const double levels[4] = {unif(rng), unif(rng), unif(rng), unif(rng)};
    for (Index i = 0; i < shape.height; ++i)
      for (Index j = 0; j < shape.width; ++j)
        img.at(c, i, j) = levels[(2 * i >= shape.height ? 2 : 0) + (2 * j >= shape.width ? 1 : 0)];
  }
  return img;
}

BenchProblem build_problem(const Section& s, std::uint64_t seed) {
  const std::string family = s.get("family", "gaussian");
  if (family == "gaussian" || family == "sqrt_lasso") {
    GaussianSpec g;
    g.m = s.get_int("m", 20);
    g.n = s.get_int("n", 60);
    g.sparsity = s.get_int("s", 5);
    g.group_size = s.get_int("group_size", 1);
    g.overlap = s.get_int("overlap", 0);
    g.noise_std = s.get_double("noise_std", 0.01);
    g.seed = seed;
    auto inst = gen_gaussian_instance(g);
    const RowMat& a = inst.dense_a();
    const Vec y = inst.y_vec();
    const double frac = s.get_double("lambda_frac", 0.1);
    if (!(frac > 0.0)) throw ConfigError("lambda_frac must be positive");
    if (family == "sqrt_lasso") {
      const double lam = frac * lambda_max(a, inst.y, LambdaFlavor::sqrt_lasso);
      return {VarProProblem::sqrt_lasso(inst.a, lam, y), std::nullopt, y, lam};
    }
    if (g.overlap > 0) {
      const double lam = frac * lambda_max(a, inst.y, LambdaFlavor::lasso);
      return {VarProProblem::overlapping(inst.a, inst.groups, lam, y), std::nullopt, y, lam};
    }
    const double lam = frac * lambda_max(a, inst.y, LambdaFlavor::group_lasso, inst.groups);
    return {VarProProblem::group_lasso(inst.a, inst.groups, lam, y), a, y, lam};
  }
  if (family == "fourier") {
    FourierInstanceSpec f;
    f.dimension = s.get_int("dimension", 1);
    f.cutoff = s.get_int("cutoff", 8);
    f.grid = s.get_int("grid", 300);
    f.spikes = s.get_int("spikes", 1);
    f.lambda_frac = s.get_double("lambda_frac", 0.1);
    f.seed = seed;
    auto inst = gen_fourier_instance(f);
    const Vec y = inst.y_vec();
    RowMat a = inst.dense_a();
    return {VarProProblem::group_lasso(inst.a, inst.groups, inst.lambda, y), std::move(a), y,
            inst.lambda};
  }
  if (family == "tv_denoise" || family == "tv_l1") {
    const ImageShape shape{s.get_int("height", 8), s.get_int("width", 8), s.get_int("channels", 3)};
    if (shape.height < 1 || shape.width < 1 || shape.channels < 1)
      throw ConfigError("image sizes must be positive");
    ImageTensor img = blocky_image(shape, seed);
    const double lam = s.get_double("lambda", 0.1);
    const LinearOperator l = LinearOperator::grad2d(shape);
    const LinearOperator id = LinearOperator::identity(shape.size());
    if (family == "tv_l1") {
      const ImageTensor noisy = add_salt_pepper(img, s.get_double("salt_pepper", 0.25), seed + 1);
      return {VarProProblem::robust(id, l, tv_groups(shape), pixel_groups(shape), lam, noisy.data),
              std::nullopt, noisy.data, lam};
    }
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<double> normal;
    const double sd = s.get_double("noise_std", 0.1);
    for (Index i = 0; i < img.data.size(); ++i) img.data[i] += sd * normal(rng);
    return {VarProProblem::analysis(id, l, tv_groups(shape), lam, img.data), std::nullopt, img.data,
            lam};
  }
  throw ConfigError("unknown problem family '" + family + "'");
}

// ---- solver dispatch -------------------------------------------------------

OuterConfig outer_config(const Section& s, long iterations, double max_seconds) {
  OuterConfig cfg;
  const std::string alg = s.get("algorithm", "lbfgs");
  if (alg == "lbfgs") cfg.algorithm = OuterAlgorithm::lbfgs;
  else if (alg == "bb") cfg.algorithm = OuterAlgorithm::gradient_descent_bb;
  else throw ConfigError("unknown VarPro algorithm '" + alg + "'");
  cfg.memory = static_cast<int>(s.get_int("memory", 10));
  cfg.max_iter = static_cast<int>(iterations);
  cfg.grad_tol = s.get_double("grad_tol", 1e-10);
  cfg.max_seconds = max_seconds;
  cfg.seed = static_cast<std::uint64_t>(s.get_int("seed", 0));
  validate(cfg);
  return cfg;
}

const RowMat& need_dense(const BenchProblem& p, const std::string& method) {
  if (!p.dense_a) throw ConfigError(method + " needs a lasso-type problem (L = Id, quadratic loss)");
  return *p.dense_a;
}

SolverTrace run_solver(const BenchProblem& p, const Section& s, long iterations,
                       double max_seconds) {
  const std::string method = s.require("method");
  if (method == "varpro") return lbfgs_minimize(p.vp, outer_config(s, iterations, max_seconds));
  if (method == "ista") {
    IstaOptions opt;
    const std::string accel = s.get("accel", "none");
    if (accel == "none") opt.accel = IstaAcceleration::none;
    else if (accel == "fista") opt.accel = IstaAcceleration::fista;
    else if (accel == "bb") opt.accel = IstaAcceleration::bb;
    else throw ConfigError("unknown ISTA acceleration '" + accel + "'");
    opt.step = s.get_double("step", 0.0);
    opt.iterations = iterations;
    return run_ista(p.vp, opt);
  }
  if (method == "admm") {
    AdmmOptions opt;
    opt.tau = s.get_double("tau", 1.0);
    opt.iterations = iterations;
    opt.tol = s.get_double("tol", 1e-10);
    return run_admm(p.vp, opt).trace;
  }
  if (method == "primal_dual") {
    PrimalDualOptions opt;
    opt.sigma = s.get_double("sigma", 0.0);
    opt.tau = s.get_double("tau", 0.0);
    opt.theta = s.get_double("theta", 1.0);
    opt.precondition = s.get_bool("precondition", false);
    opt.iterations = iterations;
    return run_primal_dual(p.vp, opt).trace;
  }
  if (method == "hadamard") {
    const RowMat& a = need_dense(p, method);
    FlowProblem fp{a, p.y, p.lambda, p.vp.reg_groups, 1.0};
    const Index n = a.cols();
    const Vec u0 = Vec::Constant(n, 1.0 / std::sqrt(double(n)));
    const Vec v0 = Vec::Constant(fp.groups.count(), 0.5 / std::sqrt(double(n)));
    const LipschitzBounds lb = lipschitz_bounds(fp, u0, v0, GradientBound::certified);
    FlowOptions opt;
    opt.iterations = iterations;
    opt.record_diagnostics = false;
    const std::string rule = s.get("step_rule", "fixed");
    if (rule == "fixed") {
      opt.rule = StepRule::fixed;
      opt.fixed_step = s.has("step") ? s.get_double("step", 0.0) : s.get_double("step_over_mf", 1.0) / lb.m_f;
    } else if (rule == "bb") {
      opt.rule = StepRule::barzilai_borwein;
    } else if (rule == "inverse_mg") {
      opt.rule = StepRule::inverse_mg;
    } else if (rule == "inverse_kappa_mg") {
      opt.rule = StepRule::inverse_kappa_mg;
    } else {
      throw ConfigError("unknown step rule '" + rule + "'");
    }
    return run_gd(fp, {u0, v0, 0}, lb, opt).trace;
  }
  if (method == "bpgd") {
    const RowMat& a = need_dense(p, method);
    if (p.vp.reg_groups.count() != p.vp.reg_groups.dim())
      throw ConfigError("BPGD handles the plain l1 penalty");
    const L1Problem lp{a, p.y, p.lambda};
    const double n = double(a.cols());
    const std::string kind = s.get("entropy", "hyperbolic");
    Entropy e = kind == "hyperbolic" ? Entropy::hyperbolic(s.get_double("c", 1.0 / n))
              : kind == "quadratic" ? Entropy::quadratic(n)
                                    : throw ConfigError("unknown entropy '" + kind + "'");
    BpgdOptions opt;
    opt.iterations = iterations;
    opt.x0 = Vec::Constant(a.cols(), 1.0 / n);
    opt.step = s.get_double("step", 0.0);
    if (opt.step <= 0.0) opt.step = certified_bpgd_step(lp, e, opt.x0);
    const std::string scaling = s.get("scaling", "consistent");
    opt.scaling = scaling == "literal" ? BpgdScaling::literal : BpgdScaling::consistent;
    return run_bpgd(lp, e, opt).trace;
  }
  if (method == "scaled_lasso") {
    const auto* r = std::get_if<RobustLoss>(&p.vp.loss);
    if (!r || r->groups.count() != 1 || !p.vp.a.matrix())
      throw ConfigError("scaled_lasso needs the sqrt_lasso family");
    ScaledLassoOptions opt;
    opt.iterations = static_cast<int>(std::min<long>(iterations, 200));
    opt.inner.grad_tol = s.get_double("grad_tol", 1e-10);
    const double m = double(p.vp.a.rows());
    return run_scaled_lasso(*p.vp.a.matrix(), p.y, r->lambda / std::sqrt(m), opt).trace;
  }
  throw ConfigError("unknown solver method '" + method + "'");
}

}  // namespace

RunReport cmd_run(const Config& cfg, const Overrides& ov) {
  const Section& run = cfg.section("run");
  const Section& prob = cfg.section("problem");
  if (cfg.solvers().empty()) throw ConfigError("configuration lists no [solver:NAME] section");
  const long iterations = run.get_int("iterations", 1000);
  const double max_seconds = run.get_double("max_seconds", std::numeric_limits<double>::infinity());
  if (iterations <= 0 || !(max_seconds > 0.0)) throw ConfigError("budget must be positive");
  const std::uint64_t seed = ov.seed ? *ov.seed : static_cast<std::uint64_t>(prob.get_int("seed", 0));
  const std::filesystem::path out = ov.out ? *ov.out : std::filesystem::path(run.get("out", "out"));
  // Validate solver sections before spending time on any run.
  for (const auto& s : cfg.solvers()) s.require("method");

  const BenchProblem problem = build_problem(prob, seed);
  std::filesystem::create_directories(out);
  RunReport report;
  for (const auto& s : cfg.solvers()) {
    SolverOutcome o;
    o.name = s.name();
    o.method = s.get("method", "");
    const long iters = s.get_int("iterations", iterations);
    try {
      o.trace = run_solver(problem, s, iters, max_seconds);
      o.failed = o.trace.failed;
      o.message = o.trace.message;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      o.failed = true;
      o.message = e.what();
    }
    report.outcomes.push_back(std::move(o));
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : report.outcomes)
    for (const auto& r : o.trace.records)
      if (std::isfinite(r.objective)) best = std::min(best, r.objective);
  report.best_objective = best;

  Panel by_iter{"objective error vs iteration", "iteration + 1", "objective - best", {}};
  Panel by_time{"objective error vs time", "seconds", "objective - best", {}};
  const double floor = std::isfinite(best) ? 1e-16 * std::max(1.0, std::abs(best)) : 1e-16;
  for (const auto& o : report.outcomes) {
    const auto path = out / (o.name + ".csv");
    write_trace_csv(path, o.trace);
    report.csv_files.push_back(path);
    Series si{o.name, {}, {}}, st{o.name, {}, {}};
    for (const auto& r : o.trace.records) {
      const double err = std::max(r.objective - best, floor);
      si.x.push_back(double(r.iter) + 1.0);
      si.y.push_back(err);
      st.x.push_back(r.seconds);
      st.y.push_back(err);
    }
    by_iter.series.push_back(std::move(si));
    by_time.series.push_back(std::move(st));
  }
  report.svg = out / (run.get("plot", "convergence") + ".svg");
  write_loglog_svg(report.svg, {by_iter, by_time});
  return report;
}

// ---- phase transition ------------------------------------------------------

PhaseSweepConfig phase_config_from(const Config& cfg, const Overrides& ov) {
  const Section& s = cfg.section("phase");
  PhaseSweepConfig p;
  p.n = s.get_int("n", p.n);
  p.s = s.get_int("s", p.s);
  p.tasks = s.get_int("tasks", p.tasks);
  std::vector<long> grid(p.m_grid.begin(), p.m_grid.end());
  grid = s.get_int_list("m_grid", grid);
  p.m_grid.assign(grid.begin(), grid.end());
  p.trials = static_cast<int>(s.get_int("trials", p.trials));
  p.threshold = s.get_double("threshold", p.threshold);
  p.lambda = s.get_double("lambda", p.lambda);
  p.restarts = static_cast<int>(s.get_int("restarts", p.restarts));
  p.max_iter = static_cast<int>(s.get_int("max_iter", p.max_iter));
  p.grad_tol = s.get_double("grad_tol", p.grad_tol);
  p.seed = ov.seed ? *ov.seed : static_cast<std::uint64_t>(s.get_int("seed", 0));
  if (s.has("methods")) {
    p.methods.clear();
    std::stringstream ss(s.get("methods", ""));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
      if (!item.empty()) p.methods.push_back(item);
    }
  }
  if (p.n <= 0 || p.s < 0 || p.s > p.n || p.tasks <= 0 || p.trials <= 0 || p.m_grid.empty())
    throw ConfigError("invalid phase sweep sizes");
  if (!(p.threshold > 0.0) || !(p.lambda > 0.0)) throw ConfigError("invalid phase sweep tolerances");
  for (Index m : p.m_grid)
    if (m < 0) throw ConfigError("m values must be nonnegative");
  for (const auto& m : p.methods)
    if (m != "irls" && m != "varpro2" && m != "varpro3")
      throw ConfigError("unknown phase method '" + m + "'");
  return p;
}

namespace {

bool recovered(const PhaseSweepConfig& cfg, const std::string& method, Index m, int trial) {
  if (m == 0) return false;
  GaussianSpec g;
  g.m = m;
  g.n = cfg.n;
  g.sparsity = cfg.s;
  g.tasks = cfg.tasks;
  g.seed = cfg.seed * 1000003u + static_cast<std::uint64_t>(m) * 1009u + static_cast<std::uint64_t>(trial);
  const ProblemInstance inst = gen_gaussian_instance(g);
  const RowMat& a = inst.dense_a();
  const GroupStructure rows = GroupStructure::singletons(cfg.n);
  Mat x;
  if (method == "irls") {
    x = run_irls(a, inst.y, rows, 2.0 / 3.0, 0.0).x;
  } else {
    const LqProblem lq{a, rows, cfg.lambda, inst.y};
    OuterConfig oc;
    oc.max_iter = cfg.max_iter;
    oc.grad_tol = cfg.grad_tol;
    oc.seed = g.seed;
    x = method == "varpro2" ? solve_lq_option2(lq, oc, cfg.restarts).x : solve_lq_option3(lq, oc).x;
  }
  const double ref = inst.x_star.norm();
  if (!x.allFinite()) return false;
  return (x - inst.x_star).norm() < cfg.threshold * std::max(ref, 1e-300);
}

}  // namespace

PhaseReport run_phase_sweep(const PhaseSweepConfig& cfg) {
  struct Job {
    std::size_t method;
    std::size_t m_index;
    int trial;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < cfg.methods.size(); ++k)
    for (std::size_t i = 0; i < cfg.m_grid.size(); ++i)
      for (int t = 0; t < cfg.trials; ++t) jobs.push_back({k, i, t});
  std::vector<char> ok(jobs.size(), 0);
  const auto njobs = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long j = 0; j < njobs; ++j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    try {
      ok[static_cast<std::size_t>(j)] =
          recovered(cfg, cfg.methods[job.method], cfg.m_grid[job.m_index], job.trial) ? 1 : 0;
    } catch (const std::exception&) {
      ok[static_cast<std::size_t>(j)] = 0;
    }
  }
  PhaseReport report;
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    for (std::size_t i = 0; i < cfg.m_grid.size(); ++i) {
      PhaseRow row{cfg.m_grid[i], cfg.methods[k], 0, cfg.trials};
      for (std::size_t j = 0; j < jobs.size(); ++j)
        if (jobs[j].method == k && jobs[j].m_index == i) row.successes += ok[j];
      report.rows.push_back(row);
    }
  }
  std::sort(report.rows.begin(), report.rows.end(), [](const PhaseRow& a, const PhaseRow& b) {
    return a.method != b.method ? a.method < b.method : a.m < b.m;
  });
  for (std::size_t r = 1; r < report.rows.size(); ++r) {
    const auto& prev = report.rows[r - 1];
    const auto& cur = report.rows[r];
    if (prev.method == cur.method && cur.successes < prev.successes &&
        std::find(report.non_monotone.begin(), report.non_monotone.end(), cur.method) ==
            report.non_monotone.end())
      report.non_monotone.push_back(cur.method);
  }
  return report;
}

PhaseReport cmd_phase(const Config& cfg, const Overrides& ov) {
  const PhaseSweepConfig sweep = phase_config_from(cfg, ov);
  const std::filesystem::path out =
      ov.out ? *ov.out : std::filesystem::path(cfg.section("run").get("out", "out"));
  PhaseReport report = run_phase_sweep(sweep);
  std::filesystem::create_directories(out);
  std::ofstream csv(out / "phase.csv");
  if (!csv) throw IoError("cannot write " + (out / "phase.csv").string());
  csv << "m,method,successes,trials\n";
  for (const auto& r : report.rows) csv << r.m << ',' << r.method << ',' << r.successes << ',' << r.trials << '\n';
  for (const auto& m : report.non_monotone)
    std::cerr << "warning: success counts of " << m << " are not monotone in m\n";
  return report;
}

// ---- image reconstruction --------------------------------------------------

ReconstructResult reconstruct(const ImageTensor& clean, const ReconstructTask& task) {
  if (!(task.lambda > 0.0)) throw ConfigError("lambda must be positive");
  const ImageShape shape = clean.shape;
  const LinearOperator l = LinearOperator::grad2d(shape);
  const LinearOperator id = LinearOperator::identity(shape.size());
  OuterConfig oc;
  oc.max_iter = task.max_iter;
  oc.grad_tol = task.grad_tol;
  oc.seed = task.seed;
  ReconstructResult res;
  res.observed = clean;
  std::optional<VarProProblem> problem;
  switch (task.task) {
    case ImageTask::denoise: {
      std::mt19937_64 rng(task.seed);
      std::normal_distribution<double> normal;
      if (task.noise_std > 0.0)
        for (Index i = 0; i < res.observed.data.size(); ++i) res.observed.data[i] += task.noise_std * normal(rng);
      problem = VarProProblem::analysis(id, l, tv_groups(shape), task.lambda, res.observed.data);
      break;
    }
    case ImageTask::inpaint: {
      const LinearOperator mask = make_inpainting_mask(shape, task.keep_fraction, task.seed);
      const Vec y = mask.apply(clean.data);
      res.observed.data = mask.adjoint(y);
      problem = VarProProblem::analysis(mask, l, tv_groups(shape), task.lambda, y);
      break;
    }
    case ImageTask::tv_l1: {
      res.observed = add_salt_pepper(clean, task.salt_pepper, task.seed);
      problem = VarProProblem::robust(id, l, tv_groups(shape), pixel_groups(shape), task.lambda,
                                      res.observed.data);
      break;
    }
  }
  res.trace = lbfgs_minimize(*problem, oc);
  res.recon = ImageTensor{shape, res.trace.x};
  return res;
}

ReconstructResult cmd_reconstruct(const Config& cfg, const Overrides& ov) {
  const Section& s = cfg.section("reconstruct");
  ReconstructTask task;
  const std::string kind = s.get("task", "denoise");
  if (kind == "denoise") task.task = ImageTask::denoise;
  else if (kind == "inpaint") task.task = ImageTask::inpaint;
  else if (kind == "tv_l1") task.task = ImageTask::tv_l1;
  else throw ConfigError("unknown reconstruction task '" + kind + "'");
  task.lambda = s.get_double("lambda", task.lambda);
  task.noise_std = s.get_double("noise_std", task.noise_std);
  task.keep_fraction = s.get_double("keep_fraction", task.keep_fraction);
  task.salt_pepper = s.get_double("salt_pepper", task.salt_pepper);
  task.max_iter = static_cast<int>(s.get_int("max_iter", task.max_iter));
  task.grad_tol = s.get_double("grad_tol", task.grad_tol);
  task.seed = ov.seed ? *ov.seed : static_cast<std::uint64_t>(s.get_int("seed", 0));
  const std::filesystem::path input = s.require("input");
  const std::filesystem::path out =
      ov.out ? *ov.out : std::filesystem::path(cfg.section("run").get("out", "out"));

  const ImageTensor clean = input.extension() == ".sopt" ? read_tensor(input) : read_image(input);
  ReconstructResult res = reconstruct(clean, task);
  std::filesystem::create_directories(out);
  const std::string ext = clean.shape.channels == 1 ? ".pgm" : ".ppm";
  if (clean.shape.channels == 1 || clean.shape.channels == 3) {
    write_image(out / ("recon" + ext), res.recon);
    write_image(out / ("observed" + ext), res.observed);
  } else {
    write_tensor(out / "recon.sopt", res.recon);
  }
  ImageTensor residual{{clean.shape.height, clean.shape.width, 1}, Vec::Zero(clean.shape.pixels())};
  for (Index c = 0; c < clean.shape.channels; ++c)
    residual.data += (res.recon.data.segment(c * clean.shape.pixels(), clean.shape.pixels()) -
                      res.observed.data.segment(c * clean.shape.pixels(), clean.shape.pixels()))
                         .cwiseAbs();
  residual.data /= double(clean.shape.channels);
  write_image(out / "residual.pgm", residual);
  write_trace_csv(out / "trace.csv", res.trace);
  return res;
}

}  // namespace sop::bench
