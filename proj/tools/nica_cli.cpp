#include "nica/nica.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

using Json = nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  int code;
  std::string message;
};

int exit_code(nica_status s) {
  switch (s) {
    case NICA_OK: return 0;
    case NICA_ERR_INVALID_ARGUMENT:
    case NICA_ERR_IO:
    case NICA_ERR_PARSE: return kExitInput;
    case NICA_ERR_NUMERICAL:
    case NICA_ERR_NOT_CONVERGED: return kExitNumerical;
    default: return 1;
  }
}

void check(nica_status s) {
  if (s != NICA_OK) throw Failure{exit_code(s), std::string(nica_status_name(s)) + ": " + nica_last_error()};
}

struct StringDeleter {
  void operator()(char* s) const { nica_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitInput, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Failure{kExitInput, path + ": " + e.what()};
  }
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out || !(out << text)) throw Failure{kExitInput, "cannot write '" + output + "'"};
}

// A pattern flag holds either a kind name or a JSON list of 1-based indices.
Json pattern_value(const std::string& flag) {
  if (!flag.empty() && flag.front() == '[') {
    try {
      return Json::parse(flag);
    } catch (const Json::parse_error& e) {
      throw Failure{kExitInput, std::string("--pattern: ") + e.what()};
    }
  }
  return flag;
}

struct DataHandle {
  nica_data* p = nullptr;
  explicit DataHandle(const std::string& path) { check(nica_data_from_csv_file(path.c_str(), &p)); }
  ~DataHandle() { nica_data_free(p); }
};

struct ModelFlags {
  std::string config, pattern, stat, weighting, reference;
  std::optional<int> order, starts, bootstrap_B;
  std::optional<unsigned long long> seed;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON spec/options file");
    app->add_option("--pattern", pattern, "diagonal|reflectional|mean_independence|minimal or [[i,...],...]");
    app->add_option("--order", order, "tensor order r");
    app->add_option("--stat", stat, "cumulant|moment");
    app->add_option("--weighting", weighting, "identity|efficient|plug_in|bootstrap|iterated|both");
    app->add_option("--bootstrap-B", bootstrap_B, "bootstrap resamples");
    app->add_option("--starts", starts, "multistart count");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--reference", reference, "JSON file with a reference matrix for alignment");
  }

  Json build() const {
    Json cfg = config.empty() ? Json::object() : read_json(config);
    if (!pattern.empty()) cfg["pattern"] = pattern_value(pattern);
    if (order) cfg["r"] = *order;
    if (!stat.empty()) cfg["stat"] = stat;
    if (!weighting.empty()) cfg["weighting"] = weighting;
    if (bootstrap_B) cfg["bootstrap_B"] = *bootstrap_B;
    if (starts) cfg["starts"] = *starts;
    if (seed) cfg["seed"] = *seed;
    if (!reference.empty()) {
      Json ref = read_json(reference);
      cfg["reference"] = ref.is_object() && ref.contains("A") ? ref["A"] : ref;
    }
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-independent component analysis: identification, estimation and testing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", nica_version());
  std::string output;

  auto* identify = app.add_subcommand("identify", "identification report for a tensor and zero pattern");
  std::string tensor_file, ident_pattern = "diagonal", ident_targets, ident_q;
  double tol = 1e-8;
  bool explore = false;
  int explore_starts = 50;
  unsigned long long ident_seed = 1;
  identify->add_option("tensor", tensor_file, "tensor JSON file")->required();
  identify->add_option("--pattern", ident_pattern, "pattern kind or [[i,...],...]");
  identify->add_option("--targets", ident_targets, "JSON list of known values for a custom pattern");
  identify->add_option("--tol", tol, "relative tolerance");
  identify->add_option("--Q", ident_q, "JSON file with the point for the local test");
  identify->add_flag("--explore", explore, "random-start search for further solutions");
  identify->add_option("--starts", explore_starts, "starts for --explore");
  identify->add_option("--seed", ident_seed, "seed for --explore");
  identify->add_option("--output", output, "output file (default stdout)");

  auto* estimate = app.add_subcommand("estimate", "minimum-distance estimate of the mixing matrix");
  std::string data_file;
  ModelFlags est_flags;
  estimate->add_option("data", data_file, "CSV observations")->required();
  est_flags.attach(estimate);
  estimate->add_option("--output", output, "output file (default stdout)");

  auto* test = app.add_subcommand("test", "J-test, or C-test against a nested sub specification");
  ModelFlags test_flags;
  std::string subset_file, subset_pattern;
  test->add_option("data", data_file, "CSV observations")->required();
  test_flags.attach(test);
  test->add_option("--subset", subset_file, "JSON sub specification for the C-test");
  test->add_option("--subset-pattern", subset_pattern, "sub pattern for the C-test");
  test->add_option("--output", output, "output file (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo campaign, CSV summary");
  std::string scenario_file, json_output;
  int threads = 0;
  std::optional<unsigned long long> sim_seed;
  simulate->add_option("scenario", scenario_file, "scenario JSON file")->required();
  simulate->add_option("--threads", threads, "worker threads (default: logical cores)");
  simulate->add_option("--seed", sim_seed, "override the scenario seed");
  simulate->add_option("--output", output, "CSV output file (default stdout)");
  simulate->add_option("--json-output", json_output, "also write the JSON summary");

  auto* cumulants = app.add_subcommand("cumulants", "sample k-statistic or moment tensor");
  int cum_order = 3;
  std::string cum_stat = "cumulant";
  cumulants->add_option("data", data_file, "CSV observations")->required();
  cumulants->add_option("--order", cum_order, "tensor order r");
  cumulants->add_option("--stat", cum_stat, "cumulant|moment");
  cumulants->add_option("--output", output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (identify->parsed()) {
      Json opts = {{"pattern", pattern_value(ident_pattern)}, {"tol", tol}, {"explore", explore},
                   {"explore_starts", explore_starts}, {"seed", ident_seed}};
      if (!ident_targets.empty()) opts["targets"] = Json::parse(ident_targets);
      if (!ident_q.empty()) opts["Q"] = read_json(ident_q);
      nica_tensor* t = nullptr;
      check(nica_tensor_from_json(read_file(tensor_file).c_str(), &t));
      std::unique_ptr<nica_tensor, void (*)(nica_tensor*)> owned(t, nica_tensor_free);
      char* report = nullptr;
      check(nica_identify(t, opts.dump().c_str(), &report));
      OwnedString r(report);
      emit(report, output);
    } else if (estimate->parsed()) {
      DataHandle y(data_file);
      char* result = nullptr;
      nica_status s = nica_estimate(y.p, est_flags.build().dump().c_str(), &result);
      OwnedString r(result);
      if (result) emit(result, output);
      if (s == NICA_ERR_NOT_CONVERGED) std::cerr << "warning: optimizer did not converge\n";
      check(s);
    } else if (test->parsed()) {
      DataHandle y(data_file);
      std::optional<Json> sub;
      if (!subset_file.empty()) sub = read_json(subset_file);
      if (!subset_pattern.empty()) {
        if (!sub) sub = Json::object();
        (*sub)["pattern"] = pattern_value(subset_pattern);
      }
      char* result = nullptr;
      std::string sub_text = sub ? sub->dump() : std::string();
      check(nica_test(y.p, test_flags.build().dump().c_str(), sub ? sub_text.c_str() : nullptr, &result));
      OwnedString r(result);
      Json j = Json::parse(result);
      std::cerr << j["test"].get<std::string>() << " statistic " << j["statistic"] << ", dof " << j["dof"]
                << ", p-value " << j["p_value"] << "\n";
      emit(result, output);
    } else if (simulate->parsed()) {
      Json scenario = read_json(scenario_file);
      if (sim_seed) scenario["seed"] = *sim_seed;
      char* js = nullptr;
      char* csv = nullptr;
      check(nica_simulate(scenario.dump().c_str(), threads, json_output.empty() ? nullptr : &js, &csv));
      OwnedString a(js), b(csv);
      if (js) emit(js, json_output);
      emit(csv, output);
    } else if (cumulants->parsed()) {
      DataHandle y(data_file);
      nica_tensor* t = nullptr;
      check(nica_cumulants(y.p, cum_order, cum_stat.c_str(), &t));
      std::unique_ptr<nica_tensor, void (*)(nica_tensor*)> owned(t, nica_tensor_free);
      char* text = nullptr;
      check(nica_tensor_to_json(t, &text));
      OwnedString r(text);
      emit(text, output);
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
