#include <doctest.h>

#include "nica/nica.h"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

json take_json(char* s) {
  json j = json::parse(s);
  nica_string_free(s);
  return j;
}

// Independent uniform and centered exponential sources, mixed.
std::vector<double> mixed_sample(long n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
  std::exponential_distribution<double> e(1.0);
  std::vector<double> y(2 * n);
  for (long t = 0; t < n; ++t) {
    double a = u(rng), b = e(rng) - 1.0;
    y[2 * t] = a + 0.4 * b;
    y[2 * t + 1] = -0.3 * a + b;
  }
  return y;
}

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(nica_status_name(NICA_OK)) == "ok");
  CHECK(std::string(nica_status_name(NICA_ERR_PARSE)) == "parse error");
  CHECK(std::string(nica_version()).size() > 0);
  nica_tensor* t = nullptr;
  CHECK(nica_tensor_create(0, 3, &t) == NICA_ERR_INVALID_ARGUMENT);
  CHECK(std::string(nica_last_error()).size() > 0);
  CHECK(nica_tensor_create(2, 3, &t) == NICA_OK);
  CHECK(std::string(nica_last_error()).empty());
  nica_tensor_free(t);
  CHECK(nica_tensor_from_json("{oops", &t) == NICA_ERR_PARSE);
  nica_data* y = nullptr;
  CHECK(nica_data_from_csv_file("/nonexistent/file.csv", &y) == NICA_ERR_IO);
}

TEST_CASE("tensor handles") {
  nica_tensor* t = nullptr;
  REQUIRE(nica_tensor_create(2, 3, &t) == NICA_OK);
  int idx[3] = {2, 1, 2};
  CHECK(nica_tensor_set(t, idx, 1.5) == NICA_OK);
  int sorted[3] = {1, 2, 2};
  double v = 0.0;
  CHECK(nica_tensor_get(t, sorted, &v) == NICA_OK);
  CHECK(v == 1.5);
  int bad[3] = {1, 3, 1};
  CHECK(nica_tensor_get(t, bad, &v) == NICA_ERR_INVALID_ARGUMENT);
  int d = 0, r = 0;
  nica_tensor_shape(t, &d, &r);
  CHECK(d == 2);
  CHECK(r == 3);
  char* s = nullptr;
  REQUIRE(nica_tensor_to_json(t, &s) == NICA_OK);
  nica_tensor* back = nullptr;
  REQUIRE(nica_tensor_from_json(s, &back) == NICA_OK);
  nica_string_free(s);
  CHECK(nica_tensor_get(back, idx, &v) == NICA_OK);
  CHECK(v == 1.5);
  nica_tensor_free(back);
  nica_tensor_free(t);
}

TEST_CASE("identification through the C interface") {
  nica_tensor* t = nullptr;
  REQUIRE(nica_tensor_create(2, 3, &t) == NICA_OK);
  int a[3] = {1, 1, 1}, b[3] = {2, 2, 2};
  nica_tensor_set(t, a, 1.0);
  nica_tensor_set(t, b, 2.0);
  char* rep = nullptr;
  REQUIRE(nica_identify(t, R"({"pattern": "diagonal"})", &rep) == NICA_OK);
  json j = take_json(rep);
  CHECK(j["enumeration"]["count"] == 8);
  CHECK(j["identified_up_to_signed_permutation"] == true);
  CHECK(nica_identify(t, R"({"pattern": "nonsense"})", &rep) == NICA_ERR_PARSE);
  int c[3] = {1, 1, 2};
  nica_tensor_set(t, c, 0.5);
  CHECK(nica_identify(t, R"({"pattern": "diagonal"})", &rep) == NICA_ERR_INVALID_ARGUMENT);
  nica_tensor_free(t);
}

TEST_CASE("data, statistics and estimation") {
  const long n = 2000;
  std::vector<double> raw = mixed_sample(n, 7);
  nica_data* y = nullptr;
  REQUIRE(nica_data_create(raw.data(), n, 2, &y) == NICA_OK);
  long rows = 0;
  int cols = 0;
  nica_data_shape(y, &rows, &cols);
  CHECK(rows == n);
  CHECK(cols == 2);

  nica_tensor* k = nullptr;
  REQUIRE(nica_cumulants(y, 2, "cumulant", &k) == NICA_OK);
  int i11[2] = {1, 1};
  double v = 0.0;
  nica_tensor_get(k, i11, &v);
  double mean = 0.0, ss = 0.0;
  for (long t = 0; t < n; ++t) mean += raw[2 * t];
  mean /= n;
  for (long t = 0; t < n; ++t) ss += (raw[2 * t] - mean) * (raw[2 * t] - mean);
  CHECK(v == doctest::Approx(ss / (n - 1)).epsilon(1e-12));
  nica_tensor_free(k);
  CHECK(nica_cumulants(y, 3, "median", &k) == NICA_ERR_INVALID_ARGUMENT);

  char* out = nullptr;
  nica_status st = nica_estimate(y, R"({"r": 3, "stat": "cumulant", "pattern": "diagonal", "starts": 5,
                                        "bootstrap_B": 50, "seed": 3})", &out);
  REQUIRE((st == NICA_OK || st == NICA_ERR_NOT_CONVERGED));
  json e = take_json(out);
  CHECK(e.contains("identity"));
  CHECK(e.contains("efficient"));
  CHECK(e["efficient"]["weighting"] == "bootstrap");
  CHECK(e["d_g"] == 5);

  CHECK(nica_estimate(y, R"({"r": 3, "pattern": "diagonal", "weighting": "best"})", &out) ==
        NICA_ERR_INVALID_ARGUMENT);
  CHECK(nica_estimate(y, R"({"pattern": "diagonal"})", &out) == NICA_ERR_PARSE);

  REQUIRE(nica_test(y, R"({"r": 3, "stat": "moment", "pattern": "diagonal", "starts": 5})", nullptr, &out) == NICA_OK);
  json jt = take_json(out);
  CHECK(jt["test"] == "J");
  CHECK(jt["dof"] == 1);
  CHECK(jt["p_value"].get<double>() >= 0.0);
  nica_data_free(y);
}

TEST_CASE("data validation") {
  double bad[4] = {1.0, NAN, 0.0, 1.0};
  nica_data* y = nullptr;
  CHECK(nica_data_create(bad, 2, 2, &y) == NICA_ERR_INVALID_ARGUMENT);
  char path[] = "/tmp/nica_capi_XXXXXX";
  int fd = mkstemp(path);
  REQUIRE(fd >= 0);
  FILE* f = fdopen(fd, "w");
  std::fputs("a,b\n1,2\n3,4\n5,6\n", f);
  std::fclose(f);
  REQUIRE(nica_data_from_csv_file(path, &y) == NICA_OK);
  long n = 0;
  nica_data_shape(y, &n, nullptr);
  CHECK(n == 3);
  nica_data_free(y);
  std::remove(path);
}

TEST_CASE("simulation") {
  char *js = nullptr, *csv = nullptr;
  const char* scen = R"({"models": [{"kind": "independent", "densities": [2, 7]}], "orders": [3],
                         "n": 200, "replicates": 2, "seed": 1, "population": true, "starts": 5})";
  REQUIRE(nica_simulate(scen, 1, &js, &csv) == NICA_OK);
  json j = take_json(js);
  CHECK(j["cells"].size() == 1);
  CHECK(j["cells"][0]["max_dF"].get<double>() <= 1e-6);
  CHECK(std::string(csv).rfind("label,d,r,n", 0) == 0);
  nica_string_free(csv);
  CHECK(nica_simulate("{}", 1, &js, nullptr) == NICA_ERR_PARSE);
}
