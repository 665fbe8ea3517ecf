#pragma once

#include "nica/linalg.hpp"
#include "nica/restrictions.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nica {

enum class StatKind { moment, cumulant };
enum class Weighting { identity, plug_in, bootstrap, iterated };

std::string to_string(StatKind k);
std::string to_string(Weighting w);
StatKind parse_stat_kind(const std::string& s);
Weighting parse_weighting(const std::string& s);
// Default efficient scheme: plug-in covariance for moments, bootstrap for cumulants.
Weighting efficient_weighting(StatKind k);

struct RestrictionSpec {
  int r = 3;
  StatKind stat = StatKind::cumulant;
  ZeroPattern pattern;
  bool include_mean = false;

  int dim() const { return pattern.d; }
  // binom(d+1,2) + |I| (+ d with the mean block).
  int d_g() const;
  void validate() const;
};

RestrictionSpec make_spec(PatternKind kind, int d, int r, StatKind stat, bool include_mean = false);

// Statistics the residual is built from: h_1 (only with include_mean), h_2 and h_r of Y.
struct SampleStatistics {
  Vector h1;
  SymmetricTensor h2;
  SymmetricTensor hr;
  long n = 0;
};

SampleStatistics compute_statistics(const Matrix& Y, const RestrictionSpec& spec);
// Exact statistics of Y = A0^{-1} eps when eps has identity covariance, zero mean and h_r(eps) = T.
SampleStatistics model_statistics(const Matrix& A0, const SymmetricTensor& T);

// g(A) = (vec_u(A.S2 - I), (A.Tr)_I - c, [A h1]).
Vector residual(const Matrix& A, const SampleStatistics& s, const RestrictionSpec& spec);
Vector residual(const Matrix& A, const SymmetricTensor& S2, const SymmetricTensor& Tr, const RestrictionSpec& spec);
// d_g x d^2, column j*d + i is the derivative with respect to A(i, j).
Matrix jacobian(const Matrix& A, const SampleStatistics& s, const RestrictionSpec& spec);
Matrix jacobian(const Matrix& A, const SymmetricTensor& S2, const SymmetricTensor& Tr, const RestrictionSpec& spec);

struct LmOptions {
  int max_iter = 500;
  double gtol = 1e-10;
  double lambda0 = 1e-3;
  double cond_max = 1e6;
};

struct LmResult {
  Matrix A;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimizes g(A)' W g(A), W = Sigma^{-1} when sigma is given and W = I otherwise.
LmResult minimize_objective(const SampleStatistics& s, const RestrictionSpec& spec, const Matrix& A_start,
                            const Matrix* sigma, const LmOptions& opts = {});

double objective(const Matrix& A, const SampleStatistics& s, const RestrictionSpec& spec, const Matrix* sigma);

struct EstimateOptions {
  Weighting weighting = Weighting::identity;
  int starts = 20;
  int bootstrap_B = 200;
  std::uint64_t seed = 1;
  double iter_tol = 1e-8;
  int max_weight_iter = 20;
  double ridge = 1e-10;
  bool compute_variance = true;
  LmOptions lm;
  std::optional<Matrix> reference;
};

struct StartResult {
  double objective = 0.0;
  Matrix A;
};

struct EstimationResult {
  Matrix A_hat;
  double objective = 0.0;
  Weighting weighting = Weighting::identity;
  std::optional<Matrix> Sigma_hat;        // d_g x d_g
  std::optional<Matrix> S_hat;            // d^2 x d^2 asymptotic variance of sqrt(n) vec(A_hat)
  std::optional<Matrix> standard_errors;  // d x d
  int n_iterations = 0;
  bool converged = false;
  std::vector<StartResult> multistart_bests;  // sorted by objective
  long n = 0;
  int d_g = 0;
  // First-stage (identity-weighted) solution.
  Matrix A_first;
  double objective_first = 0.0;
  // Set when a reference was supplied: A_hat = P * (raw estimate).
  std::optional<Matrix> alignment;
};

EstimationResult estimate(const Matrix& Y, const RestrictionSpec& spec, const EstimateOptions& opts = {});
// Identity-weighted multi-start estimation from given statistics.
EstimationResult estimate_from_statistics(const SampleStatistics& s, const RestrictionSpec& spec,
                                          const EstimateOptions& opts = {});

// Covariance of the per-observation restriction vector at A (moment restrictions only).
Matrix estimate_sigma_plugin(const Matrix& Y, const Matrix& A, const RestrictionSpec& spec);
// n times the covariance of g_n(A) over B bootstrap resamples of the rows of Y.
Matrix estimate_sigma_bootstrap(const Matrix& Y, const Matrix& A, const RestrictionSpec& spec, int B,
                                std::uint64_t seed);

// (G' Sigma^{-1} G)^{-1} with G the jacobian at A.
Matrix efficient_variance(const Matrix& G, const Matrix& sigma);

struct Alignment {
  Matrix aligned;  // P * A_hat
  Matrix P;
  double distance = 0.0;
};

Alignment align_to_reference(const Matrix& A_hat, const Matrix& A_ref);

// Random-start search for orthogonal Q with Q.T in V(I); solutions are deduplicated and
// carry no completeness guarantee.
struct Exploration {
  int starts = 0;
  std::vector<Matrix> solutions;
  std::vector<bool> signed_permutation;
};

Exploration explore_identified_set(const SymmetricTensor& T, const ZeroPattern& I, int starts, std::uint64_t seed,
                                   double tol = 1e-8);

}  // namespace nica
