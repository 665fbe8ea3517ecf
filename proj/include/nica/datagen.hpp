#pragma once

#include "nica/estimator.hpp"
#include "nica/statistics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nica {

enum class ErrorKind { independent_menu, scale_mixture, gaussian_mixture, transelliptical };

// Law of the mixing variable W = 1/tau in X = sqrt(W) Z.
enum class MixingLaw { constant, student, laplace };

constexpr int kMenuSize = 9;
std::string menu_name(int id);
// Raw moments of orders 1..max_order of the standardized menu density (NaN where infinite).
std::vector<double> menu_moments(int id, int max_order);

// E W^p for the unstandardized mixing variable (infinite when it does not exist).
double mixing_moment(MixingLaw law, double nu, double p);

struct ErrorModel {
  ErrorKind kind = ErrorKind::independent_menu;
  int d = 2;
  std::vector<int> densities;  // independent_menu: one menu id per component
  MixingLaw law = MixingLaw::constant;
  double nu = 5.0;             // student degrees of freedom
  double gamma = 0.5;          // gaussian_mixture weight of the second component
  Matrix sigma1, sigma2;       // gaussian_mixture component covariances
  double exponent = 3.0;       // transelliptical: eps_i = sign(Z_i)|Z_i|^exponent, standardized

  void validate() const;
  std::string label() const;
};

ErrorModel independent_model(std::vector<int> densities);
ErrorModel scale_mixture_model(int d, MixingLaw law, double nu = 5.0);
ErrorModel gaussian_mixture_model(double gamma, Matrix sigma1, Matrix sigma2);
ErrorModel transelliptical_model(int d, MixingLaw law, double nu = 5.0, double exponent = 3.0);

// n draws (rows) with population mean 0 and covariance I.
Matrix sample_errors(const ErrorModel& model, long n, Rng& rng);
Matrix sample_errors(const ErrorModel& model, long n, std::uint64_t seed);

// Population moment tensors of orders 1..r and the order-r cumulant of the standardized errors.
TensorFamily population_moments(const ErrorModel& model, int r);
SymmetricTensor population_cumulant(const ErrorModel& model, int r);

// sum over perfect matchings of {1..r} of prod M_{i_a i_b}; zero for odd r.
SymmetricTensor pairing_sum(const Matrix& M, int r);

// Scale mixture of normals X = sqrt(W) Z, Z ~ N(0, Sigma): kappa_r = kappa_{r/2}(W) * pairing_sum(Sigma).
// w_cumulants[k-1] = kappa_k(W).
SymmetricTensor population_cumulant_scale_mixture(const std::vector<double>& w_cumulants, const Matrix& Sigma, int r);

// Zero-mean Gaussian mixture, weight gamma on Sigma2: kappa_r = kappa_{r/2}(Bernoulli(gamma)) * pairing_sum(Sigma2 - Sigma1).
SymmetricTensor population_cumulant_gaussian_mixture(double gamma, const Matrix& Sigma1, const Matrix& Sigma2, int r);

// Cumulants kappa_1..kappa_l of W for the given law (before standardization).
std::vector<double> mixing_cumulants(MixingLaw law, double nu, int l);

struct ScenarioConfig {
  std::vector<ErrorModel> models;
  std::vector<int> orders{3, 4};
  long n = 500;
  int replicates = 200;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  StatKind stat = StatKind::cumulant;
  PatternKind pattern = PatternKind::diagonal;
  bool include_mean = false;
  std::optional<Matrix> A0;  // random well-conditioned matrix per replicate when empty
  double max_condition = 10.0;
  EstimateOptions estimate;  // starts, bootstrap_B, lm settings
  std::optional<Weighting> efficient;  // default: efficient_weighting(stat)
  bool population = false;   // estimate from exact population statistics
};

struct CellSummary {
  std::string label;
  int d = 0;
  int r = 0;
  long n = 0;
  int replicates = 0;
  int failures = 0;
  int nonconverged = 0;
  double dF_identity = 0.0;
  double dA_identity = 0.0;
  double dF_efficient = 0.0;
  double dA_efficient = 0.0;
  double max_dF = 0.0;  // largest d_F over replicates and weightings
};

struct ScenarioSummary {
  std::vector<CellSummary> cells;
};

ScenarioSummary run_scenario(const ScenarioConfig& cfg);

// Well-conditioned random mixing matrix with Gaussian entries.
Matrix random_mixing_matrix(int d, Rng& rng, double max_condition = 10.0);

}  // namespace nica
