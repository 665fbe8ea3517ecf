#include <doctest.h>

#include "nica/datagen.hpp"
#include "nica/metrics.hpp"
#include "support.hpp"

using namespace nica;

namespace {

struct Estimate {
  double mean;
  double se;
};

// Batch-means estimate of the mean of the order-r k-statistic entry u over the sample.
std::vector<Estimate> batch_kstat(const Matrix& E, int r, int batches) {
  const long m = E.rows() / batches;
  std::vector<std::vector<double>> vals;
  for (int b = 0; b < batches; ++b) {
    SymmetricTensor k = kstatistic(E.middleRows(b * m, m), r);
    vals.push_back(k.values());
  }
  std::vector<Estimate> out(vals[0].size());
  for (std::size_t u = 0; u < out.size(); ++u) {
    double s = 0.0, ss = 0.0;
    for (const auto& v : vals) s += v[u], ss += v[u] * v[u];
    double mean = s / batches, var = (ss - batches * mean * mean) / (batches - 1);
    out[u] = {mean, std::sqrt(var / batches)};
  }
  return out;
}

Matrix diag2(double a, double b) {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}

}  // namespace

TEST_CASE("menu densities are standardized") {
  for (int id = 1; id <= kMenuSize; ++id) {
    auto m = menu_moments(id, 4);
    CHECK(std::abs(m[0]) <= 1e-12);
    CHECK(m[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(menu_name(id).empty());
  }
  CHECK(menu_moments(1, 4)[3] == doctest::Approx(9.0));
  CHECK(std::isnan(menu_moments(1, 5)[4]));
  CHECK(menu_moments(5, 4)[3] == doctest::Approx(9.0 / 5.0));
  CHECK(menu_moments(6, 4)[3] == doctest::Approx(6.0));
  CHECK(menu_moments(7, 3)[2] == doctest::Approx(2.0));
  CHECK_THROWS_AS(menu_moments(0, 2), InvalidArgument);
  CHECK_THROWS_AS(independent_model({1, 10}), InvalidArgument);
}

TEST_CASE("menu samples match their analytic moments") {
  const long n = 200000;
  for (int id = 1; id <= kMenuSize; ++id) {
    Matrix E = sample_errors(independent_model({id, id}), n, 70 + id);
    auto m = menu_moments(id, 4);
    // Third sample moment against its analytic value, within 4 standard errors when the sixth moment exists.
    if (id == 1) continue;
    auto m6 = menu_moments(id, 6);
    double se = std::sqrt((m6[5] - m[2] * m[2]) / n);
    double s3 = E.col(0).array().cube().mean();
    CHECK(std::abs(s3 - m[2]) <= 4.0 * se);
  }
}

TEST_CASE("standardization bands") {
  std::vector<ErrorModel> models{independent_model({2, 5, 8}), scale_mixture_model(3, MixingLaw::laplace),
                                 gaussian_mixture_model(0.3, diag2(0.5, 2.0), diag2(2.0, 0.25)),
                                 transelliptical_model(2, MixingLaw::constant, 5.0, 1.0 / 3.0)};
  for (long n : {2000L, 50000L})
    for (const auto& model : models) {
      Matrix E = sample_errors(model, n, 80 + n);
      TensorFamily mom = population_moments(model, 4);
      Vector mean = E.colwise().mean();
      Matrix C = E.transpose() * E / static_cast<double>(n);
      for (int i = 0; i < model.d; ++i) {
        CHECK(std::abs(mean(i)) <= 4.0 / std::sqrt(n));
        for (int j = i; j < model.d; ++j) {
          // Band scaled by the standard deviation of eps_i eps_j.
          double sd = std::sqrt(mom(4).at({i, i, j, j}) - (i == j ? 1.0 : 0.0));
          CHECK(std::abs(C(i, j) - (i == j ? 1.0 : 0.0)) <= 4.0 * sd / std::sqrt(n));
        }
      }
    }
}

TEST_CASE("mixing variables") {
  CHECK(mixing_moment(MixingLaw::student, 5.0, 1.0) == doctest::Approx(5.0 / 3.0));
  CHECK(mixing_moment(MixingLaw::student, 9.0, 2.0) == doctest::Approx(81.0 / (7.0 * 5.0)));
  CHECK(std::isinf(mixing_moment(MixingLaw::student, 5.0, 3.0)));
  CHECK(mixing_moment(MixingLaw::laplace, 0.0, 3.0) == doctest::Approx(6.0));
  auto k = mixing_cumulants(MixingLaw::laplace, 0.0, 3);
  CHECK(k[0] == doctest::Approx(1.0));
  CHECK(k[1] == doctest::Approx(1.0));
  CHECK(k[2] == doctest::Approx(2.0));
  auto c = mixing_cumulants(MixingLaw::constant, 0.0, 3);
  CHECK(c[1] == 0.0);
  CHECK_THROWS_AS(scale_mixture_model(2, MixingLaw::student, 2.0), InvalidArgument);
  CHECK_THROWS_AS(transelliptical_model(2, MixingLaw::student, 5.0, 3.0), InvalidArgument);
}

TEST_CASE("pairing sums") {
  SymmetricTensor P = pairing_sum(Matrix::Identity(3, 3), 4);
  CHECK(P.at({0, 0, 0, 0}) == 3.0);
  CHECK(P.at({0, 0, 1, 1}) == 1.0);
  CHECK(P.at({0, 0, 0, 1}) == 0.0);
  CHECK(P.at({0, 1, 2, 2}) == 0.0);
  CHECK(pairing_sum(Matrix::Identity(2, 2), 6).at({0, 0, 0, 0, 0, 0}) == 15.0);
  CHECK(pairing_sum(Matrix::Identity(2, 2), 3).max_abs() == 0.0);
  Matrix S(2, 2);
  S << 2.0, 0.5, 0.5, 1.0;
  // S11 S22 + 2 S12^2
  CHECK(pairing_sum(S, 4).at({0, 0, 1, 1}) == doctest::Approx(2.0 + 0.5));
}

TEST_CASE("scale mixture cumulants") {
  SUBCASE("identity scale, fourth order") {
    std::vector<double> w{1.0, 0.7};
    SymmetricTensor K = population_cumulant_scale_mixture(w, Matrix::Identity(3, 3), 4);
    CHECK(K.at({1, 1, 1, 1}) == doctest::Approx(3 * 0.7));
    CHECK(K.at({0, 0, 2, 2}) == doctest::Approx(0.7));
    CHECK(K.at({0, 1, 1, 1}) == 0.0);
  }
  SUBCASE("degenerate mixing") {
    ErrorModel g = scale_mixture_model(2, MixingLaw::constant);
    CHECK(population_cumulant(g, 4).max_abs() <= 1e-14);
    CHECK(population_cumulant_scale_mixture({1.0, 0.0}, Matrix::Identity(2, 2), 4).max_abs() == 0.0);
    CHECK(population_cumulant_scale_mixture({1.0, 0.5}, Matrix::Identity(2, 2), 3).max_abs() == 0.0);
  }
  SUBCASE("analytic formula equals the moment route") {
    for (MixingLaw law : {MixingLaw::student, MixingLaw::laplace})
      for (int r : {4, 6}) {
        double nu = 13.0;
        ErrorModel m = scale_mixture_model(3, law, nu);
        double ew = mixing_moment(law, nu, 1.0);
        auto kw = mixing_cumulants(law, nu, r / 2);
        for (int l = 0; l < r / 2; ++l) kw[l] /= std::pow(ew, l + 1);
        SymmetricTensor a = population_cumulant_scale_mixture(kw, Matrix::Identity(3, 3), r);
        SymmetricTensor b = population_cumulant(m, r);
        CHECK(testing::max_abs_diff(a, b) <= 1e-10 * std::max(1.0, a.max_abs()));
      }
  }
}

TEST_CASE("Gaussian mixture cumulants") {
  SUBCASE("equal components") {
    CHECK(population_cumulant_gaussian_mixture(0.3, diag2(1, 2), diag2(1, 2), 4).max_abs() == 0.0);
  }
  SUBCASE("one dimension") {
    Matrix s1(1, 1), s2(1, 1);
    s1 << 0.5;
    s2 << 2.0;
    double g = 0.25, delta = 1.5;
    SymmetricTensor K = population_cumulant_gaussian_mixture(g, s1, s2, 4);
    CHECK(K[0] == doctest::Approx(3 * g * (1 - g) * delta * delta));
  }
  SUBCASE("analytic formula equals the moment route") {
    Matrix S1(2, 2), S2(2, 2);
    S1 << 0.4, 0.1, 0.1, 0.6;
    S2 << 3.0, -0.5, -0.5, 2.2;
    const double g = 0.2;
    ErrorModel m = gaussian_mixture_model(g, S1, S2);
    Matrix K = inverse_sqrt_spd((1 - g) * S1 + g * S2);
    for (int r : {4, 6}) {
      SymmetricTensor a = population_cumulant_gaussian_mixture(g, K * S1 * K, K * S2 * K, r);
      SymmetricTensor b = population_cumulant(m, r);
      CHECK(testing::max_abs_diff(a, b) <= 1e-10 * std::max(1.0, a.max_abs()));
    }
  }
  CHECK_THROWS_AS(population_cumulant_gaussian_mixture(1.0, diag2(1, 1), diag2(2, 2), 4), InvalidArgument);
  CHECK_THROWS_AS(gaussian_mixture_model(0.5, diag2(1, -1), diag2(1, 1)), InvalidArgument);
}

TEST_CASE("Monte Carlo fourth cumulants of mixtures") {
  SUBCASE("equal Gaussian components are Gaussian") {
    ErrorModel m = gaussian_mixture_model(0.4, diag2(1.0, 2.0), diag2(1.0, 2.0));
    Matrix E = sample_errors(m, 200000, 90);
    for (const auto& e : batch_kstat(E, 4, 50)) CHECK(std::abs(e.mean) <= 4.0 * e.se);
  }
  SUBCASE("transelliptical entries with odd multiplicities vanish") {
    ErrorModel m = transelliptical_model(2, MixingLaw::student, 9.0, 1.0 / 3.0);
    Matrix E = sample_errors(m, 1000000, 91);
    auto est = batch_kstat(E, 4, 100);
    SymmetricTensor K(2, 4);
    for (std::size_t u = 0; u < K.size(); ++u) {
      int c0 = 0;
      for (int v : K.index(u)) c0 += v == 0;
      if (c0 % 2 == 1) CHECK(std::abs(est[u].mean) <= 4.0 * est[u].se);
    }
  }
}

TEST_CASE("transelliptical moments") {
  ErrorModel m = transelliptical_model(2, MixingLaw::constant, 5.0, 3.0);
  TensorFamily mom = population_moments(m, 4);
  CHECK(mom(2).at({0, 0}) == doctest::Approx(1.0));
  CHECK(mom(2).at({0, 1}) == 0.0);
  // E Z^12 / (E Z^6)^2 = 10395 / 225
  CHECK(mom(4).at({0, 0, 0, 0}) == doctest::Approx(10395.0 / 225.0));
  CHECK(mom(4).at({0, 0, 1, 1}) == doctest::Approx(1.0));
}

TEST_CASE("scenario runs") {
  ScenarioConfig cfg;
  cfg.models = {independent_model({2, 7})};
  cfg.orders = {3};
  cfg.n = 300;
  cfg.replicates = 4;
  cfg.seed = 5;
  cfg.threads = 2;
  cfg.estimate.starts = 5;
  cfg.estimate.bootstrap_B = 50;

  SUBCASE("deterministic given the seed") {
    ScenarioSummary a = run_scenario(cfg), b = run_scenario(cfg);
    REQUIRE(a.cells.size() == 1);
    CHECK(a.cells[0].dF_identity == b.cells[0].dF_identity);
    CHECK(a.cells[0].dF_efficient == b.cells[0].dF_efficient);
    CHECK(a.cells[0].dA_efficient == b.cells[0].dA_efficient);
    cfg.threads = 1;
    ScenarioSummary c = run_scenario(cfg);
    CHECK(a.cells[0].dF_identity == c.cells[0].dF_identity);
    CHECK(a.cells[0].failures == 0);
  }
  SUBCASE("population statistics recover the mixing matrix") {
    cfg.population = true;
    cfg.models = {independent_model({2, 7, 8}), independent_model({7, 9})};
    cfg.orders = {3, 4};
    cfg.stat = StatKind::cumulant;
    cfg.estimate.starts = 20;
    ScenarioSummary s = run_scenario(cfg);
    CHECK(s.cells.size() == 4);
    for (const auto& c : s.cells) {
      CHECK(c.failures == 0);
      CHECK(c.max_dF <= 1e-6);
    }
  }
  SUBCASE("replicate failures are counted") {
    cfg.n = 3;  // too few observations for a third-order k-statistic
    ScenarioSummary s = run_scenario(cfg);
    CHECK(s.cells[0].failures == cfg.replicates);
  }
  SUBCASE("invalid configurations") {
    cfg.models.clear();
    CHECK_THROWS_AS(run_scenario(cfg), InvalidArgument);
  }
}

TEST_CASE("random mixing matrices respect the condition bound") {
  Rng rng = make_stream(92, 0);
  for (int k = 0; k < 20; ++k) CHECK(condition_number(random_mixing_matrix(3, rng, 8.0)) <= 8.0);
}
