#pragma once

#include "nica/datagen.hpp"
#include "nica/inference.hpp"
#include "nica/restrictions.hpp"

#include <json.hpp>

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>

namespace nica {

using Json = nlohmann::json;

// Malformed input text; the message carries line or field context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
Json parse_json(const std::string& text, const std::string& source = "input");
Json read_json_file(const std::string& path);
// Doubles at 17 significant digits, two-space indent.
std::string dump_json(const Json& j);
std::string format_double(double v);

// {d, r, entries: [{index: [1-based, sorted], value}]}; omitted entries are zero.
Json tensor_to_json(const SymmetricTensor& T);
SymmetricTensor tensor_from_json(const Json& j);

// Row-major nested arrays.
Json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const Json& j, const std::string& field);

// One observation per line, comma separated, optional header line.
Matrix parse_csv(std::istream& in, const std::string& source = "input");
Matrix read_csv_file(const std::string& path);
std::string matrix_to_csv(const Matrix& M);

// pattern: kind name, or a list of 1-based indices (with optional targets).
ZeroPattern pattern_from_json(const Json& j, int d, int r, const Json* targets = nullptr);
// {r, stat|stat_kind, pattern|pattern_kind|indices, targets, include_mean}.
RestrictionSpec spec_from_json(const Json& cfg, int d);
// {weighting, starts|K_starts, bootstrap_B|B_bootstrap, seed, tolerances: {...}, reference}.
EstimateOptions options_from_json(const Json& cfg, EstimateOptions base = {});

struct IdentifyOptions {
  double tol = 1e-8;
  bool explore = false;
  int explore_starts = 50;
  std::uint64_t seed = 1;
  std::optional<Matrix> Q;  // point for the local test, identity by default
};

// Throws InvalidArgument when T does not satisfy the pattern.
Json identify_report(const SymmetricTensor& T, const ZeroPattern& I, const IdentifyOptions& opts = {});

Json estimation_to_json(const EstimationResult& est);
Json test_to_json(const TestResult& t, const std::string& kind);

ErrorModel model_from_json(const Json& j);
ScenarioConfig scenario_from_json(const Json& j);
Json summary_to_json(const ScenarioSummary& s);
std::string summary_to_csv(const ScenarioSummary& s);

}  // namespace nica
