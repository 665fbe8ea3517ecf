#include "nica/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nica {

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw InvalidArgument("gamma shape must be positive");
  if (x < 0.0) throw InvalidArgument("gamma argument must be nonnegative");
  if (x == 0.0) return 0.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
  }
  // Continued fraction for Q(a, x), modified Lentz.
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

double chi_square_cdf(double x, int k) {
  if (k < 1) throw InvalidArgument("chi-square degrees of freedom must be at least 1");
  if (x < 0.0) throw InvalidArgument("chi-square argument must be nonnegative");
  return regularized_gamma_p(0.5 * k, 0.5 * x);
}

TestResult make_test_result(double statistic, int dof) {
  TestResult t;
  t.statistic = statistic;
  t.raw_statistic = statistic;
  t.dof = dof;
  t.p_value = std::clamp(1.0 - chi_square_cdf(std::max(0.0, statistic), dof), 0.0, 1.0);
  for (double level : {0.01, 0.05, 0.10}) t.reject_at[level] = t.p_value < level;
  return t;
}

namespace {

EstimateOptions efficient_options(const RestrictionSpec& spec, EstimateOptions opts) {
  if (opts.weighting == Weighting::identity) opts.weighting = efficient_weighting(spec.stat);
  opts.reference.reset();
  opts.compute_variance = false;
  return opts;
}

}  // namespace

TestResult j_test(const Matrix& Y, const RestrictionSpec& spec, const EstimationResult& est,
                  const EstimateOptions& opts) {
  const int d = spec.dim();
  if (spec.d_g() <= d * d) throw InvalidArgument("J-test needs over-identification: d_g > d^2");
  if (est.weighting == Weighting::identity) return j_test(Y, spec, opts);
  return make_test_result(static_cast<double>(est.n) * est.objective, spec.d_g() - d * d);
}

TestResult j_test(const Matrix& Y, const RestrictionSpec& spec, const EstimateOptions& opts) {
  const int d = spec.dim();
  if (spec.d_g() <= d * d) throw InvalidArgument("J-test needs over-identification: d_g > d^2");
  EstimationResult est = estimate(Y, spec, efficient_options(spec, opts));
  return make_test_result(static_cast<double>(est.n) * est.objective, spec.d_g() - d * d);
}

TestResult c_test(const Matrix& Y, const RestrictionSpec& full, const RestrictionSpec& sub,
                  const EstimateOptions& opts) {
  full.validate();
  sub.validate();
  const int d = full.dim();
  if (sub.dim() != d || sub.r != full.r || sub.stat != full.stat)
    throw InvalidArgument("nested specifications must share d, r and statistic kind");
  if (sub.include_mean && !full.include_mean) throw InvalidArgument("sub specification is not nested in full");
  // Coordinates of sub's restriction vector inside full's.
  std::vector<Eigen::Index> pos;
  const Eigen::Index q = d * (d + 1) / 2;
  for (Eigen::Index k = 0; k < q; ++k) pos.push_back(k);
  for (std::size_t j = 0; j < sub.pattern.size(); ++j) {
    auto it = std::lower_bound(full.pattern.ranks.begin(), full.pattern.ranks.end(), sub.pattern.ranks[j]);
    if (it == full.pattern.ranks.end() || *it != sub.pattern.ranks[j])
      throw InvalidArgument("sub pattern index " + format_index(sub.pattern.indices[j]) + " is not in full pattern");
    auto k = static_cast<std::size_t>(it - full.pattern.ranks.begin());
    if (full.pattern.targets[k] != sub.pattern.targets[j]) throw InvalidArgument("nested patterns disagree on targets");
    pos.push_back(q + static_cast<Eigen::Index>(k));
  }
  if (sub.include_mean)
    for (int a = 0; a < d; ++a) pos.push_back(q + static_cast<Eigen::Index>(full.pattern.size()) + a);
  const int dof = full.d_g() - sub.d_g();
  if (dof < 1) throw InvalidArgument("C-test needs at least one extra restriction in the full specification");

  EstimateOptions eo = efficient_options(full, opts);
  EstimationResult est_full = estimate(Y, full, eo);
  const Matrix& sig = *est_full.Sigma_hat;
  Matrix sig_sub(pos.size(), pos.size());
  for (std::size_t a = 0; a < pos.size(); ++a)
    for (std::size_t b = 0; b < pos.size(); ++b) sig_sub(a, b) = sig(pos[a], pos[b]);

  SampleStatistics s = compute_statistics(Y, sub);
  EstimateOptions first = eo;
  first.weighting = Weighting::identity;
  EstimationResult est_sub = estimate_from_statistics(s, sub, first);
  double best = std::numeric_limits<double>::infinity();
  for (const Matrix* start : {&est_sub.A_hat, &est_full.A_hat}) {
    LmResult lm = minimize_objective(s, sub, *start, &sig_sub, eo.lm);
    best = std::min(best, lm.objective);
  }
  const double n = static_cast<double>(est_full.n);
  double raw = n * est_full.objective - n * best;
  TestResult t = make_test_result(std::max(0.0, raw), dof);
  t.raw_statistic = raw;
  return t;
}

}  // namespace nica
