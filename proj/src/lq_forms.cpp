#include "sop/lq_forms.hpp"

#include <cmath>
#include <limits>

namespace sop {

LqSpec LqSpec::two_factor(double q) {
  if (!(q > 0.0 && q < 2.0)) throw ConfigError("two-factor form needs q in (0, 2)");
  return {q, q / (2.0 - q), 2};
}

LqSpec LqSpec::three_factor(double q) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("three-factor form needs q in (0, 1)");
  return {q, q / (2.0 - 2.0 * q), 3};
}

double lq_value(const Eigen::Ref<const Mat>& x, const GroupStructure& groups, double q) {
  if (!(q > 0.0 && q < 2.0)) throw ConfigError("l_q needs q in (0, 2)");
  const Vec norms = group_norms(x, groups);
  double s = 0.0;
  for (Index g = 0; g < norms.size(); ++g) s += std::pow(norms[g], q);
  return s / q;
}

double lq_eta_gap(const Vec& x, const GroupStructure& groups, const LqSpec& spec, const Vec& eta) {
  if (spec.factors() != 2) throw ConfigError("eta form uses the two-factor relation");
  require_size(eta.size(), groups.count(), "eta");
  const Vec sq = group_sq_norms(x, groups);
  double value = 0.0;
  for (Index g = 0; g < sq.size(); ++g) {
    if (eta[g] < 0.0) throw ConfigError("eta must be nonnegative");
    if (sq[g] > 0.0)
      value += eta[g] > 0.0 ? 0.5 * sq[g] / eta[g] : std::numeric_limits<double>::infinity();
    value += std::pow(eta[g], spec.beta()) / (2.0 * spec.beta());
  }
  return value - lq_value(x, groups, spec.q());
}

namespace {

double power_sum(const Vec& v, double p) {
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p);
  return s;
}

}  // namespace

double two_factor_value(const TwoFactors& f, const LqSpec& spec) {
  return 0.5 * f.u.squaredNorm() + power_sum(f.v, 2.0 * spec.beta()) / (2.0 * spec.beta());
}

double three_factor_value(const ThreeFactors& f, const LqSpec& spec) {
  return 0.5 * f.u.squaredNorm() + 0.5 * f.v.squaredNorm() +
         power_sum(f.w, 2.0 * spec.beta()) / (2.0 * spec.beta());
}

double lq_factor_gap(const TwoFactors& f, const GroupStructure& groups, const LqSpec& spec) {
  if (spec.factors() != 2) throw ConfigError("spec is not a two-factor form");
  const Vec x = hadamard_group(f.u, f.v, groups);
  return two_factor_value(f, spec) - lq_value(x, groups, spec.q());
}

double lq_factor_gap(const ThreeFactors& f, const GroupStructure& groups, const LqSpec& spec) {
  if (spec.factors() != 3) throw ConfigError("spec is not a three-factor form");
  const Vec x = hadamard_group(f.u, f.v.cwiseProduct(f.w), groups);
  return three_factor_value(f, spec) - lq_value(x, groups, spec.q());
}

Vec optimal_eta(const Vec& x, const GroupStructure& groups, const LqSpec& spec) {
  const Vec norms = group_norms(x, groups);
  Vec eta(norms.size());
  for (Index g = 0; g < norms.size(); ++g) eta[g] = std::pow(norms[g], 2.0 - spec.q());
  return eta;
}

namespace {

// u = x_g / s_g, with u = 0 on vanishing groups.
Vec divide_groups(const Vec& x, const Vec& s, const GroupStructure& groups) {
  Vec u = Vec::Zero(x.size());
  for (Index g = 0; g < groups.count(); ++g)
    if (s[g] != 0.0)
      for (Index i : groups.group(g)) u[i] = x[i] / s[g];
  return u;
}

}  // namespace

TwoFactors optimal_two_factors(const Vec& x, const GroupStructure& groups, const LqSpec& spec) {
  if (spec.factors() != 2) throw ConfigError("spec is not a two-factor form");
  // v_g^2 is the optimal eta_g.
  const Vec v = optimal_eta(x, groups, spec).cwiseSqrt();
  return {divide_groups(x, v, groups), v};
}

ThreeFactors optimal_three_factors(const Vec& x, const GroupStructure& groups,
                                   const LqSpec& spec) {
  if (spec.factors() != 3) throw ConfigError("spec is not a three-factor form");
  const double beta = spec.beta();
  const double r = beta / (1.0 + beta);
  const Vec norms = group_norms(x, groups);
  Vec v(norms.size()), w(norms.size()), z(norms.size());
  for (Index g = 0; g < norms.size(); ++g) {
    // Outer split x_g = u_g z_g with exponent r, then z_g = v_g w_g with beta.
    z[g] = std::pow(norms[g], 1.0 / (1.0 + r));
    w[g] = std::pow(z[g], 1.0 / (1.0 + beta));
    v[g] = w[g] > 0.0 ? z[g] / w[g] : 0.0;
  }
  return {divide_groups(x, z, groups), v, w};
}

Vec lq_warm_start(const Mat& x, const GroupStructure& groups, double floor) {
  const Vec norms = group_norms(x, groups);
  const Index ng = groups.count();
  Vec z(2 * ng);
  for (Index g = 0; g < ng; ++g) z[g] = z[ng + g] = std::max(floor, std::cbrt(norms[g]));
  return z;
}

ThreeFactorEval three_factor_objective(const LqProblem& p, const Mat& u, const Vec& v,
                                       const Vec& w) {
  const Index ng = p.groups.count();
  require_size(v.size(), ng, "v");
  require_size(w.size(), ng, "w");
  require_size(u.rows(), p.a.cols(), "U rows");
  require_size(u.cols(), p.y.cols(), "U columns");
  const Vec s = extend(v.cwiseProduct(w), p.groups);
  const Mat x = s.asDiagonal() * u;
  const Mat r = p.a * x - p.y;
  const Mat gx = p.a.transpose() * r / p.lambda;
  ThreeFactorEval out;
  out.value = 0.5 * (u.squaredNorm() + v.squaredNorm() + w.squaredNorm()) +
              r.squaredNorm() / (2.0 * p.lambda);
  out.grad_u = u + s.asDiagonal() * gx;
  out.grad_v = v;
  out.grad_w = w;
  for (Index g = 0; g < ng; ++g) {
    double c = 0.0;
    for (Index i : p.groups.group(g)) c += u.row(i).dot(gx.row(i));
    out.grad_v[g] += w[g] * c;
    out.grad_w[g] += v[g] * c;
  }
  return out;
}

double fd_hessian_condition(const SmoothObjective& fn, const Vec& z, double h) {
  const Index n = z.size();
  Mat hess(n, n);
  Vec gp(n), gm(n);
  for (Index j = 0; j < n; ++j) {
    Vec zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    fn(zp, gp);
    fn(zm, gm);
    hess.col(j) = (gp - gm) / (2.0 * h);
  }
  const Mat sym = 0.5 * (hess + hess.transpose());
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  return lo > 0.0 ? ev.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

}  // namespace sop
