#pragma once

#include "nica/estimator.hpp"

#include <map>

namespace nica {

struct TestResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::map<double, bool> reject_at;  // nominal level -> rejected
  double raw_statistic = 0.0;        // before flooring at zero (C-test only)
};

// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
double chi_square_cdf(double x, int k);

TestResult make_test_result(double statistic, int dof);

// J-test of the over-identifying restrictions. est is re-estimated with efficient weighting
// when it was produced with identity weighting.
TestResult j_test(const Matrix& Y, const RestrictionSpec& spec, const EstimationResult& est,
                  const EstimateOptions& opts = {});
TestResult j_test(const Matrix& Y, const RestrictionSpec& spec, const EstimateOptions& opts = {});

// C-test of the restrictions in full but not in sub. Both objectives use the same
// restriction covariance, estimated under the full specification.
TestResult c_test(const Matrix& Y, const RestrictionSpec& full, const RestrictionSpec& sub,
                  const EstimateOptions& opts = {});

}  // namespace nica
