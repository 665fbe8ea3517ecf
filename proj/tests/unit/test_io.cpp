#include <doctest.h>

#include "nica/io.hpp"
#include "support.hpp"

#include <sstream>

using namespace nica;

TEST_CASE("tensor JSON roundtrip") {
  Rng rng = make_stream(111, 0);
  SymmetricTensor T = testing::random_tensor(3, 4, rng);
  T.set({0, 1, 1, 2}, 0.0);
  Json j = tensor_to_json(T);
  CHECK(j["entries"].size() == T.size() - 1);
  CHECK(j["entries"][0]["index"] == Json::array({1, 1, 1, 1}));
  SymmetricTensor back = tensor_from_json(parse_json(dump_json(j)));
  CHECK(testing::max_abs_diff(back, T) == 0.0);
}

TEST_CASE("tensor JSON errors name the field") {
  auto fails_with = [](const char* text, const std::string& needle) {
    try {
      tensor_from_json(parse_json(text));
    } catch (const ParseError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  CHECK(fails_with(R"({"r": 2, "entries": []})", "'d'"));
  CHECK(fails_with(R"({"d": 2, "r": 2, "entries": [{"index": [1, 3], "value": 1}]})", "entries[0].index"));
  CHECK(fails_with(R"({"d": 2, "r": 2, "entries": [{"index": [2, 1], "value": 1}]})", "nondecreasing"));
  CHECK(fails_with(R"({"d": 2, "r": 2, "entries": [{"index": [1], "value": 1}]})", "length"));
  CHECK(fails_with(R"({"d": 2, "r": 2, "entries": [{"index": [1, 2], "value": "x"}]})", "entries[0].value"));
  CHECK(fails_with(R"({"d": 2, "r": 2, "entries": [{"index": [1, 2], "value": 1}, {"index": [1, 2], "value": 2}]})",
                   "duplicate"));
}

TEST_CASE("JSON syntax errors report a line") {
  try {
    parse_json("{\n  \"d\": 2,\n  oops\n}", "cfg.json");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("cfg.json: line 3") != std::string::npos);
  }
}

TEST_CASE("CSV parsing") {
  SUBCASE("header and blank lines") {
    std::istringstream in("y1,y2\n1.5,2\n\n-3,4e-1\n");
    Matrix Y = parse_csv(in);
    REQUIRE(Y.rows() == 2);
    CHECK(Y(1, 0) == -3.0);
    CHECK(Y(1, 1) == 0.4);
  }
  SUBCASE("ragged line") {
    std::istringstream in("1,2\n3\n");
    CHECK_THROWS_WITH_AS(parse_csv(in, "y.csv"), "y.csv: line 2: expected 2 columns, found 1", ParseError);
  }
  SUBCASE("non-numeric after the first line") {
    std::istringstream in("1,2\n3,abc\n");
    CHECK_THROWS_AS(parse_csv(in), ParseError);
  }
  SUBCASE("empty") {
    std::istringstream in("a,b\n");
    CHECK_THROWS_AS(parse_csv(in), ParseError);
  }
  CHECK_THROWS_AS(read_csv_file("/nonexistent/y.csv"), IoError);
  Matrix M(1, 2);
  M << 0.1, 2.0;
  CHECK(matrix_to_csv(M) == "0.10000000000000001,2.0\n");
}

TEST_CASE("number formatting") {
  CHECK(format_double(1.0) == "1.0");
  CHECK(format_double(-0.25) == "-0.25");
  CHECK(format_double(1e300) == "1.0000000000000001e+300");
  CHECK(format_double(std::nan("")) == "null");
  Json j = {{"b", 1.5}, {"a", Json::array({1, 2})}, {"c", nullptr}};
  CHECK(dump_json(j) == "{\n  \"a\": [1, 2],\n  \"b\": 1.5,\n  \"c\": null\n}\n");
}

TEST_CASE("specification parsing") {
  RestrictionSpec s = spec_from_json(parse_json(R"({"r": 4, "stat": "cumulant", "pattern": "reflectional"})"), 2);
  CHECK(s.r == 4);
  CHECK(s.pattern.kind == PatternKind::reflectional);
  CHECK_FALSE(s.include_mean);

  RestrictionSpec c =
      spec_from_json(parse_json(R"({"r": 3, "stat_kind": "moment", "indices": [[1,1,2],[1,2,2]], "targets": [0.5, 0]})"), 2);
  CHECK(c.pattern.kind == PatternKind::custom);
  CHECK(c.stat == StatKind::moment);
  REQUIRE(c.pattern.indices.size() == 2);
  CHECK(c.pattern.indices[0] == MultiIndex{0, 0, 1});
  CHECK(c.pattern.targets[0] == 0.5);

  CHECK_THROWS_AS(spec_from_json(parse_json(R"({"r": 3, "pattern": "bogus"})"), 2), ParseError);
  CHECK_THROWS_AS(spec_from_json(parse_json(R"({"r": 3})"), 2), ParseError);
  CHECK_THROWS_AS(spec_from_json(parse_json(R"({"pattern": "diagonal"})"), 2), ParseError);
}

TEST_CASE("option parsing") {
  EstimateOptions o = options_from_json(
      parse_json(R"({"weighting": "bootstrap", "K_starts": 7, "B_bootstrap": 30, "seed": 9,
                    "tolerances": {"gtol": 1e-9, "max_iter": 50}, "reference": [[1, 0], [0, 1]]})"));
  CHECK(o.weighting == Weighting::bootstrap);
  CHECK(o.starts == 7);
  CHECK(o.bootstrap_B == 30);
  CHECK(o.seed == 9);
  CHECK(o.lm.gtol == 1e-9);
  CHECK(o.lm.max_iter == 50);
  REQUIRE(o.reference);
  CHECK(o.reference->isIdentity());
  CHECK_THROWS_AS(options_from_json(parse_json(R"({"starts": 0})")), ParseError);
  CHECK_THROWS_AS(options_from_json(parse_json(R"({"weighting": "optimal"})")), ParseError);
}

TEST_CASE("identification report") {
  SymmetricTensor T(2, 3);
  T.set({0, 0, 0}, 1.0);
  T.set({1, 1, 1}, -2.0);
  Json rep = identify_report(T, make_pattern(PatternKind::diagonal, 2, 3));
  CHECK(rep["genericity"]["passed"] == true);
  CHECK(rep["signed_permutations_in_set"] == 8);
  CHECK(rep["local_identification"]["locally_identified"] == true);
  CHECK(rep["enumeration"]["count"] == 8);
  CHECK(rep["identified_up_to_signed_permutation"] == true);
  T.set({0, 1, 1}, 0.3);
  CHECK_THROWS_AS(identify_report(T, make_pattern(PatternKind::diagonal, 2, 3)), InvalidArgument);
}

TEST_CASE("scenario parsing") {
  ScenarioConfig c = scenario_from_json(parse_json(R"({
    "models": [{"kind": "independent", "densities": [1, 5]},
               {"kind": "scale_mixture", "d": 2, "law": "student", "nu": 7}],
    "orders": [4], "n": 100, "replicates": 3, "seed": 4, "population": true})"));
  REQUIRE(c.models.size() == 2);
  CHECK(c.models[0].densities == std::vector<int>{1, 5});
  CHECK(c.models[1].law == MixingLaw::student);
  CHECK(c.orders == std::vector<int>{4});
  CHECK(c.population);
  CHECK_THROWS_AS(scenario_from_json(parse_json(R"({"models": [{"kind": "weird"}]})")), ParseError);
}
