#include "nica/datagen.hpp"

#include "nica/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace nica {

namespace {

struct Mixture {
  double p1, m1, s1, m2, s2;  // p1 N(m1, s1^2) + (1 - p1) N(m2, s2^2)
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

const Mixture* menu_mixture(int id) {
  static const Mixture skewed_a{0.8, -0.3, 0.6, 1.2, 1.2};
  static const Mixture bimodal_a{0.5, -1.0, 0.5, 1.0, 0.5};
  static const Mixture bimodal_b{0.5, -1.0, 0.2, 1.0, 0.2};
  static const Mixture skewed_b{0.9, 0.0, 1.0, 3.0, 0.5};
  static const Mixture asym_bimodal{0.35, -1.5, 0.5, 0.8, 0.6};
  switch (id) {
    case 2: return &skewed_a;
    case 3: return &bimodal_a;
    case 4: return &bimodal_b;
    case 8: return &skewed_b;
    case 9: return &asym_bimodal;
    default: return nullptr;
  }
}

void mixture_standardization(const Mixture& m, double& mean, double& sd) {
  mean = m.p1 * m.m1 + (1 - m.p1) * m.m2;
  double second = m.p1 * (m.s1 * m.s1 + m.m1 * m.m1) + (1 - m.p1) * (m.s2 * m.s2 + m.m2 * m.m2);
  sd = std::sqrt(second - mean * mean);
}

// Raw moments 1..k of N(a, b^2).
std::vector<double> normal_moments(double a, double b, int k) {
  std::vector<double> m(k + 1);
  m[0] = 1.0;
  if (k >= 1) m[1] = a;
  for (int j = 2; j <= k; ++j) m[j] = a * m[j - 1] + (j - 1) * b * b * m[j - 2];
  return std::vector<double>(m.begin() + 1, m.end());
}

void check_menu_id(int id) {
  if (id < 1 || id > kMenuSize) throw InvalidArgument("menu density id must be in 1..9");
}

double draw_menu(int id, Rng& rng) {
  std::normal_distribution<double> z;
  switch (id) {
    case 1: {
      std::chi_squared_distribution<double> chi(5.0);
      return z(rng) / std::sqrt(chi(rng) / 5.0) * std::sqrt(3.0 / 5.0);
    }
    case 5: {
      std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
      return u(rng);
    }
    case 6: {
      std::exponential_distribution<double> e(1.0);
      std::bernoulli_distribution coin(0.5);
      double v = e(rng) / std::numbers::sqrt2;
      return coin(rng) ? v : -v;
    }
    case 7: {
      std::exponential_distribution<double> e(1.0);
      return e(rng) - 1.0;
    }
    default: {
      const Mixture& m = *menu_mixture(id);
      double mean, sd;
      mixture_standardization(m, mean, sd);
      std::bernoulli_distribution first(m.p1);
      double x = first(rng) ? m.m1 + m.s1 * z(rng) : m.m2 + m.s2 * z(rng);
      return (x - mean) / sd;
    }
  }
}

double draw_mixing(MixingLaw law, double nu, Rng& rng) {
  switch (law) {
    case MixingLaw::constant: return 1.0;
    case MixingLaw::student: {
      std::chi_squared_distribution<double> chi(nu);
      return nu / chi(rng);
    }
    case MixingLaw::laplace: {
      std::exponential_distribution<double> e(1.0);
      return e(rng);
    }
  }
  return 1.0;
}

// E|G|^q for standard normal G.
double abs_normal_moment(double q) {
  return std::pow(2.0, q / 2.0) * std::tgamma((q + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

Matrix psd_factor(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw InvalidArgument("covariance matrix is not positive semidefinite");
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

void pairings(const MultiIndex& idx, std::vector<int>& free, const Matrix& M, double acc, double& total) {
  if (free.empty()) {
    total += acc;
    return;
  }
  int a = free.front();
  for (std::size_t k = 1; k < free.size(); ++k) {
    int b = free[k];
    double v = M(idx[a], idx[b]);
    if (v == 0.0) continue;
    std::vector<int> rest;
    for (std::size_t j = 1; j < free.size(); ++j)
      if (j != k) rest.push_back(free[j]);
    pairings(idx, rest, M, acc * v, total);
  }
}

}  // namespace

std::string menu_name(int id) {
  static const char* names[kMenuSize] = {"student_t5",  "skewed_mixture_a", "bimodal_symmetric_a",
                                         "bimodal_symmetric_b", "uniform", "laplace",
                                         "exponential", "skewed_mixture_b", "asymmetric_bimodal"};
  check_menu_id(id);
  return names[id - 1];
}

std::vector<double> menu_moments(int id, int max_order) {
  check_menu_id(id);
  std::vector<double> m(max_order, 0.0);
  for (int k = 1; k <= max_order; ++k) {
    double v = 0.0;
    switch (id) {
      case 1:
        // Student t(5) scaled to unit variance: E T^2 = 5/3, E T^4 = 25.
        if (k >= 5) v = kNaN;
        else if (k == 2) v = 1.0;
        else if (k == 4) v = 25.0 * 9.0 / 25.0;
        break;
      case 5:
        v = k % 2 ? 0.0 : std::pow(3.0, k / 2) / (k + 1.0);
        break;
      case 6:
        v = k % 2 ? 0.0 : std::tgamma(k + 1.0) * std::pow(0.5, k / 2.0);
        break;
      case 7: {
        // E (X - 1)^k for X ~ Exp(1): sum_j binom(k,j) j! (-1)^{k-j}.
        for (int j = 0; j <= k; ++j) v += binomial(k, j) * std::tgamma(j + 1.0) * ((k - j) % 2 ? -1.0 : 1.0);
        break;
      }
      default: break;
    }
    m[k - 1] = v;
  }
  if (const Mixture* mix = menu_mixture(id)) {
    double mean, sd;
    mixture_standardization(*mix, mean, sd);
    auto a = normal_moments((mix->m1 - mean) / sd, mix->s1 / sd, max_order);
    auto b = normal_moments((mix->m2 - mean) / sd, mix->s2 / sd, max_order);
    for (int k = 0; k < max_order; ++k) m[k] = mix->p1 * a[k] + (1 - mix->p1) * b[k];
  }
  return m;
}

double mixing_moment(MixingLaw law, double nu, double p) {
  switch (law) {
    case MixingLaw::constant: return 1.0;
    case MixingLaw::student:
      if (p >= nu / 2.0) return kInf;
      return std::exp(p * std::log(nu / 2.0) + std::lgamma(nu / 2.0 - p) - std::lgamma(nu / 2.0));
    case MixingLaw::laplace: return std::tgamma(1.0 + p);
  }
  return kNaN;
}

std::vector<double> mixing_cumulants(MixingLaw law, double nu, int l) {
  std::vector<double> mu(l);
  for (int k = 1; k <= l; ++k) mu[k - 1] = mixing_moment(law, nu, k);
  return univariate_cumulants(mu);
}

void ErrorModel::validate() const {
  if (d < 1) throw InvalidArgument("error model dimension must be positive");
  switch (kind) {
    case ErrorKind::independent_menu:
      if (static_cast<int>(densities.size()) != d) throw InvalidArgument("need one menu density per component");
      for (int id : densities) check_menu_id(id);
      break;
    case ErrorKind::scale_mixture:
      if (law == MixingLaw::student && !(nu > 2.0)) throw InvalidArgument("student mixing needs nu > 2");
      break;
    case ErrorKind::gaussian_mixture: {
      if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("mixture weight gamma must lie in (0, 1)");
      if (sigma1.rows() != d || sigma1.cols() != d || sigma2.rows() != d || sigma2.cols() != d)
        throw InvalidArgument("mixture covariances must be d x d");
      psd_factor(sigma1);
      psd_factor(sigma2);
      Eigen::SelfAdjointEigenSolver<Matrix> es((1 - gamma) * sigma1 + gamma * sigma2);
      if (es.eigenvalues().minCoeff() <= 0.0) throw InvalidArgument("mixture covariance is singular");
      break;
    }
    case ErrorKind::transelliptical:
      if (!(exponent > 0.0)) throw InvalidArgument("transelliptical exponent must be positive");
      if (!std::isfinite(mixing_moment(law, nu, exponent)))
        throw InvalidArgument("transelliptical errors need a finite variance (nu > 2 * exponent)");
      break;
  }
}

std::string ErrorModel::label() const {
  std::ostringstream os;
  auto law_name = [&] {
    switch (law) {
      case MixingLaw::constant: return std::string("gaussian");
      case MixingLaw::student: return "student" + std::to_string(static_cast<int>(nu));
      case MixingLaw::laplace: return std::string("laplace");
    }
    return std::string();
  };
  switch (kind) {
    case ErrorKind::independent_menu:
      os << "menu";
      for (int id : densities) os << '_' << id;
      break;
    case ErrorKind::scale_mixture: os << "scale_mixture_" << law_name(); break;
    case ErrorKind::gaussian_mixture: os << "gaussian_mixture_" << gamma; break;
    case ErrorKind::transelliptical: os << "transelliptical_" << law_name() << "_p" << exponent; break;
  }
  return os.str();
}

ErrorModel independent_model(std::vector<int> densities) {
  ErrorModel m;
  m.kind = ErrorKind::independent_menu;
  m.d = static_cast<int>(densities.size());
  m.densities = std::move(densities);
  m.validate();
  return m;
}

ErrorModel scale_mixture_model(int d, MixingLaw law, double nu) {
  ErrorModel m;
  m.kind = ErrorKind::scale_mixture;
  m.d = d;
  m.law = law;
  m.nu = nu;
  m.validate();
  return m;
}

ErrorModel gaussian_mixture_model(double gamma, Matrix sigma1, Matrix sigma2) {
  ErrorModel m;
  m.kind = ErrorKind::gaussian_mixture;
  m.d = static_cast<int>(sigma1.rows());
  m.gamma = gamma;
  m.sigma1 = std::move(sigma1);
  m.sigma2 = std::move(sigma2);
  m.validate();
  return m;
}

ErrorModel transelliptical_model(int d, MixingLaw law, double nu, double exponent) {
  ErrorModel m;
  m.kind = ErrorKind::transelliptical;
  m.d = d;
  m.law = law;
  m.nu = nu;
  m.exponent = exponent;
  m.validate();
  return m;
}

Matrix sample_errors(const ErrorModel& model, long n, Rng& rng) {
  model.validate();
  if (n < 1) throw InvalidArgument("sample size must be positive");
  const int d = model.d;
  Matrix E(n, d);
  std::normal_distribution<double> z;
  switch (model.kind) {
    case ErrorKind::independent_menu:
      for (long s = 0; s < n; ++s)
        for (int j = 0; j < d; ++j) E(s, j) = draw_menu(model.densities[j], rng);
      break;
    case ErrorKind::scale_mixture: {
      const double mean_w = mixing_moment(model.law, model.nu, 1.0);
      for (long s = 0; s < n; ++s) {
        double f = std::sqrt(draw_mixing(model.law, model.nu, rng) / mean_w);
        for (int j = 0; j < d; ++j) E(s, j) = f * z(rng);
      }
      break;
    }
    case ErrorKind::gaussian_mixture: {
      Matrix K = inverse_sqrt_spd((1 - model.gamma) * model.sigma1 + model.gamma * model.sigma2);
      Matrix F1 = K * psd_factor(model.sigma1), F2 = K * psd_factor(model.sigma2);
      std::bernoulli_distribution second(model.gamma);
      Vector g(d);
      for (long s = 0; s < n; ++s) {
        bool h = second(rng);
        for (int j = 0; j < d; ++j) g(j) = z(rng);
        E.row(s) = ((h ? F2 : F1) * g).transpose();
      }
      break;
    }
    case ErrorKind::transelliptical: {
      const double p = model.exponent;
      const double sd = std::sqrt(mixing_moment(model.law, model.nu, p) * abs_normal_moment(2.0 * p));
      for (long s = 0; s < n; ++s) {
        double f = std::sqrt(draw_mixing(model.law, model.nu, rng));
        for (int j = 0; j < d; ++j) {
          double v = f * z(rng);
          E(s, j) = std::copysign(std::pow(std::abs(v), p), v) / sd;
        }
      }
      break;
    }
  }
  return E;
}

Matrix sample_errors(const ErrorModel& model, long n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  return sample_errors(model, n, rng);
}

SymmetricTensor pairing_sum(const Matrix& M, int r) {
  const int d = static_cast<int>(M.rows());
  SymmetricTensor out(d, r);
  if (r % 2) return out;
  for (std::size_t u = 0; u < out.size(); ++u) {
    std::vector<int> free(r);
    for (int k = 0; k < r; ++k) free[k] = k;
    double total = 0.0;
    pairings(out.index(u), free, M, 1.0, total);
    out[u] = total;
  }
  return out;
}

TensorFamily population_moments(const ErrorModel& model, int r) {
  model.validate();
  const int d = model.d;
  TensorFamily fam;
  for (int p = 1; p <= r; ++p) {
    SymmetricTensor t(d, p);
    switch (model.kind) {
      case ErrorKind::independent_menu: {
        std::vector<std::vector<double>> uni;
        for (int id : model.densities) uni.push_back(menu_moments(id, p));
        for (std::size_t u = 0; u < t.size(); ++u) {
          std::vector<int> cnt(d, 0);
          for (int v : t.index(u)) ++cnt[v];
          double prod = 1.0;
          for (int j = 0; j < d; ++j)
            if (cnt[j] > 0) prod *= uni[j][cnt[j] - 1];
          t[u] = prod;
        }
        break;
      }
      case ErrorKind::scale_mixture:
        if (p % 2 == 0) {
          const double mean_w = mixing_moment(model.law, model.nu, 1.0);
          const double w = mixing_moment(model.law, model.nu, p / 2.0) / std::pow(mean_w, p / 2.0);
          t = pairing_sum(Matrix::Identity(d, d), p);
          for (auto& v : t.values()) v *= w;
        }
        break;
      case ErrorKind::gaussian_mixture:
        if (p % 2 == 0) {
          Matrix K = inverse_sqrt_spd((1 - model.gamma) * model.sigma1 + model.gamma * model.sigma2);
          SymmetricTensor a = pairing_sum(K * model.sigma1 * K, p), b = pairing_sum(K * model.sigma2 * K, p);
          for (std::size_t u = 0; u < t.size(); ++u) t[u] = (1 - model.gamma) * a[u] + model.gamma * b[u];
        }
        break;
      case ErrorKind::transelliptical: {
        const double q = model.exponent;
        const double var = mixing_moment(model.law, model.nu, q) * abs_normal_moment(2.0 * q);
        for (std::size_t u = 0; u < t.size(); ++u) {
          std::vector<int> cnt(d, 0);
          for (int v : t.index(u)) ++cnt[v];
          if (std::any_of(cnt.begin(), cnt.end(), [](int c) { return c % 2 != 0; })) continue;
          double v = mixing_moment(model.law, model.nu, q * p / 2.0) / std::pow(var, p / 2.0);
          for (int c : cnt)
            if (c > 0) v *= abs_normal_moment(q * c);
          t[u] = v;
        }
        break;
      }
    }
    fam.orders.push_back(std::move(t));
  }
  return fam;
}

SymmetricTensor population_cumulant(const ErrorModel& model, int r) {
  return cumulant_from_moments(population_moments(model, r), r);
}

SymmetricTensor population_cumulant_scale_mixture(const std::vector<double>& w_cumulants, const Matrix& Sigma,
                                                  int r) {
  if (Sigma.rows() != Sigma.cols()) throw InvalidArgument("Sigma must be square");
  const int d = static_cast<int>(Sigma.rows());
  if (r % 2) return SymmetricTensor(d, r);
  const int l = r / 2;
  if (static_cast<int>(w_cumulants.size()) < l) throw InvalidArgument("need cumulants of W up to order r/2");
  SymmetricTensor t = pairing_sum(Sigma, r);
  for (auto& v : t.values()) v *= w_cumulants[l - 1];
  return t;
}

SymmetricTensor population_cumulant_gaussian_mixture(double gamma, const Matrix& Sigma1, const Matrix& Sigma2, int r) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("mixture weight gamma must lie in (0, 1)");
  if (r < 4 || r % 2) throw InvalidArgument("mixture cumulant formula needs even r >= 4");
  const int l = r / 2;
  std::vector<double> bern(l, gamma);  // all raw moments of Bernoulli(gamma) equal gamma
  double kl = univariate_cumulants(bern)[l - 1];
  SymmetricTensor t = pairing_sum(Sigma2 - Sigma1, r);
  for (auto& v : t.values()) v *= kl;
  return t;
}

Matrix random_mixing_matrix(int d, Rng& rng, double max_condition) {
  std::normal_distribution<double> z;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Matrix A(d, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) A(i, j) = z(rng);
    if (condition_number(A) <= max_condition) return A;
  }
  throw NumericalError("could not draw a well-conditioned mixing matrix");
}

namespace {

struct ReplicateOutcome {
  bool failed = false;
  bool converged = true;
  double dF_id = 0, dA_id = 0, dF_eff = 0, dA_eff = 0;
};

ReplicateOutcome run_replicate(const ScenarioConfig& cfg, const ErrorModel& model, int r, std::size_t cell, int rep) {
  ReplicateOutcome out;
  try {
    const std::uint64_t stream_seed = cfg.seed + 1000003ULL * (cell + 1);
    Rng rng = make_stream(stream_seed, static_cast<std::uint64_t>(rep));
    const int d = model.d;
    Matrix A0 = cfg.A0 ? *cfg.A0 : random_mixing_matrix(d, rng, cfg.max_condition);
    RestrictionSpec spec = make_spec(cfg.pattern, d, r, cfg.stat, cfg.include_mean);
    EstimateOptions opts = cfg.estimate;
    opts.seed = rng();
    opts.compute_variance = false;
    opts.reference.reset();
    Matrix A_id, A_eff;
    if (cfg.population) {
      SymmetricTensor T = cfg.stat == StatKind::moment ? population_moments(model, r)(r) : population_cumulant(model, r);
      SampleStatistics s = model_statistics(A0, T);
      EstimationResult est = estimate_from_statistics(s, spec, opts);
      A_id = A_eff = est.A_hat;
      out.converged = est.converged;
    } else {
      Matrix E = sample_errors(model, cfg.n, rng);
      Matrix Y = E * A0.inverse().transpose();
      opts.weighting = cfg.efficient ? *cfg.efficient : efficient_weighting(cfg.stat);
      EstimationResult est = estimate(Y, spec, opts);
      A_id = est.A_first;
      A_eff = est.A_hat;
      out.converged = est.converged;
    }
    out.dF_id = frobenius_error(A_id, A0);
    out.dA_id = amari_error(A_id, A0);
    out.dF_eff = frobenius_error(A_eff, A0);
    out.dA_eff = amari_error(A_eff, A0);
  } catch (const std::exception&) {
    out.failed = true;
  }
  return out;
}

}  // namespace

ScenarioSummary run_scenario(const ScenarioConfig& cfg) {
  if (cfg.models.empty()) throw InvalidArgument("scenario needs at least one error model");
  if (cfg.orders.empty()) throw InvalidArgument("scenario needs at least one order");
  if (cfg.replicates < 1) throw InvalidArgument("scenario needs at least one replicate");
  if (cfg.n < 2) throw InvalidArgument("scenario sample size too small");
  for (const auto& m : cfg.models) {
    m.validate();
    if (cfg.A0 && (cfg.A0->rows() != m.d || cfg.A0->cols() != m.d))
      throw InvalidArgument("A0 does not match the error model dimension");
    for (int r : cfg.orders) make_spec(cfg.pattern, m.d, r, cfg.stat, cfg.include_mean);
  }
  if (cfg.A0 && std::abs(cfg.A0->determinant()) < 1e-12) throw InvalidArgument("A0 must be invertible");

  struct Task {
    std::size_t cell;
    const ErrorModel* model;
    int r;
    int rep;
  };
  std::vector<Task> tasks;
  std::vector<std::pair<const ErrorModel*, int>> cells;
  for (const auto& m : cfg.models)
    for (int r : cfg.orders) {
      for (int rep = 0; rep < cfg.replicates; ++rep) tasks.push_back({cells.size(), &m, r, rep});
      cells.emplace_back(&m, r);
    }
  std::vector<ReplicateOutcome> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++)
      results[k] = run_replicate(cfg, *tasks[k].model, tasks[k].r, tasks[k].cell, tasks[k].rep);
  };
  unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ScenarioSummary summary;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellSummary cs;
    cs.label = cells[c].first->label();
    cs.d = cells[c].first->d;
    cs.r = cells[c].second;
    cs.n = cfg.n;
    cs.replicates = cfg.replicates;
    int ok = 0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      if (tasks[k].cell != c) continue;
      const auto& o = results[k];
      if (o.failed) {
        ++cs.failures;
        continue;
      }
      if (!o.converged) ++cs.nonconverged;
      ++ok;
      cs.dF_identity += o.dF_id;
      cs.dA_identity += o.dA_id;
      cs.dF_efficient += o.dF_eff;
      cs.dA_efficient += o.dA_eff;
      cs.max_dF = std::max({cs.max_dF, o.dF_id, o.dF_eff});
    }
    if (ok > 0) {
      cs.dF_identity /= ok;
      cs.dA_identity /= ok;
      cs.dF_efficient /= ok;
      cs.dA_efficient /= ok;
    }
    summary.cells.push_back(cs);
  }
  return summary;
}

}  // namespace nica
