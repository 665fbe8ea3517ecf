#include "nica/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nica {

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ParseError("field '" + field + "': " + what);
}

template <class T>
T get_field(const Json& j, const std::string& field) {
  if (!j.contains(field)) field_error(field, "missing");
  try {
    return j.at(field).get<T>();
  } catch (const Json::exception& e) {
    field_error(field, e.what());
  }
}

template <class T>
T get_or(const Json& j, const std::string& field, T fallback) {
  if (!j.is_object() || !j.contains(field) || j.at(field).is_null()) return fallback;
  return get_field<T>(j, field);
}

// First of several accepted spellings present in j.
const Json* find_alias(const Json& j, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (j.contains(n) && !j.at(n).is_null()) return &j.at(n);
  return nullptr;
}

void dump_value(const Json& j, std::string& out, int indent) {
  const std::string pad(indent + 2, ' '), close(indent, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump_value(it.value(), out, indent + 2);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        dump_value(e, out, indent + 2);
      }
      out += flat ? "]" : "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: out += format_double(j.get<double>()); return;
    default: out += j.dump(); return;
  }
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& field, double& v) {
  std::string t = trim(field);
  if (t.empty()) return false;
  if (t.front() == '+') t.erase(0, 1);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

MixingLaw parse_law(const std::string& s) {
  if (s == "constant" || s == "gaussian") return MixingLaw::constant;
  if (s == "student" || s == "t") return MixingLaw::student;
  if (s == "laplace") return MixingLaw::laplace;
  throw ParseError("unknown mixing law '" + s + "'");
}

Json optional_matrix(const std::optional<Matrix>& M) { return M ? matrix_to_json(*M) : Json(nullptr); }

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(pos > 0 ? pos - 1 : 0), '\n');
    throw ParseError(source + ": line " + std::to_string(line) + ": invalid JSON");
  }
}

Json read_json_file(const std::string& path) { return parse_json(read_text_file(path), path); }

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string dump_json(const Json& j) {
  std::string out;
  dump_value(j, out, 0);
  out += "\n";
  return out;
}

Json tensor_to_json(const SymmetricTensor& T) {
  Json entries = Json::array();
  for (std::size_t u = 0; u < T.size(); ++u) {
    if (T[u] == 0.0) continue;
    Json idx = Json::array();
    for (int v : T.index(u)) idx.push_back(v + 1);
    entries.push_back({{"index", idx}, {"value", T[u]}});
  }
  return {{"d", T.dim()}, {"r", T.order()}, {"entries", entries}};
}

SymmetricTensor tensor_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("tensor: expected a JSON object");
  const int d = get_field<int>(j, "d"), r = get_field<int>(j, "r");
  if (d < 1) field_error("d", "must be positive");
  if (r < 1) field_error("r", "must be positive");
  SymmetricTensor T(d, r);
  if (!j.contains("entries") || !j.at("entries").is_array()) field_error("entries", "expected an array");
  std::vector<bool> seen(T.size(), false);
  int k = 0;
  for (const auto& e : j.at("entries")) {
    const std::string where = "entries[" + std::to_string(k++) + "]";
    if (!e.is_object() || !e.contains("index") || !e.contains("value"))
      field_error(where, "expected {index, value}");
    MultiIndex idx;
    try {
      for (int v : e.at("index").get<std::vector<int>>()) idx.push_back(v - 1);
    } catch (const Json::exception&) {
      field_error(where + ".index", "expected an array of integers");
    }
    if (static_cast<int>(idx.size()) != r) field_error(where + ".index", "length differs from r");
    for (int v : idx)
      if (v < 0 || v >= d) field_error(where + ".index", "entries must lie in 1..d");
    if (!std::is_sorted(idx.begin(), idx.end())) field_error(where + ".index", "must be nondecreasing");
    if (!e.at("value").is_number()) field_error(where + ".value", "expected a number");
    double value = e.at("value").get<double>();
    if (!std::isfinite(value)) field_error(where + ".value", "must be finite");
    std::size_t u = T.space().rank_sorted(idx);
    if (seen[u]) field_error(where + ".index", "duplicate index " + format_index(idx));
    seen[u] = true;
    T[u] = value;
  }
  return T;
}

Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) field_error(field, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) field_error(field, "expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Matrix M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) field_error(field, "row " + std::to_string(i + 1) + " has wrong length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) field_error(field, "non-numeric entry in row " + std::to_string(i + 1));
      M(i, c) = j[i][c].get<double>();
    }
  }
  return M;
}

Matrix parse_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0, cols = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_commas(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size() && numeric; ++c) numeric = parse_number(fields[c], row[c]);
    if (!numeric) {
      if (!any) {
        any = true;  // header
        cols = fields.size();
        continue;
      }
      throw ParseError(source + ": line " + std::to_string(lineno) + ": non-numeric field");
    }
    if (cols == 0) cols = fields.size();
    any = true;
    if (fields.size() != cols)
      throw ParseError(source + ": line " + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                       " columns, found " + std::to_string(fields.size()));
    for (double v : row)
      if (!std::isfinite(v)) throw ParseError(source + ": line " + std::to_string(lineno) + ": non-finite value");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source + ": no observations");
  Matrix Y(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < cols; ++c) Y(i, c) = rows[i][c];
  return Y;
}

Matrix read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

std::string matrix_to_csv(const Matrix& M) {
  std::string out;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      if (c) out += ',';
      out += format_double(M(i, c));
    }
    out += '\n';
  }
  return out;
}

ZeroPattern pattern_from_json(const Json& j, int d, int r, const Json* targets) {
  if (j.is_string()) {
    PatternKind kind;
    try {
      kind = parse_pattern_kind(j.get<std::string>());
    } catch (const InvalidArgument& e) {
      field_error("pattern", e.what());
    }
    if (kind == PatternKind::custom) field_error("pattern", "custom patterns need an explicit index list");
    return make_pattern(kind, d, r);
  }
  if (!j.is_array()) field_error("pattern", "expected a kind name or a list of indices");
  std::vector<MultiIndex> indices;
  for (const auto& e : j) {
    MultiIndex idx;
    try {
      for (int v : e.get<std::vector<int>>()) idx.push_back(v - 1);
    } catch (const Json::exception&) {
      field_error("pattern", "indices must be arrays of integers");
    }
    indices.push_back(std::move(idx));
  }
  std::vector<double> c;
  if (targets && !targets->is_null()) {
    try {
      c = targets->get<std::vector<double>>();
    } catch (const Json::exception&) {
      field_error("targets", "expected an array of numbers");
    }
  }
  return make_custom_pattern(d, r, std::move(indices), std::move(c));
}

RestrictionSpec spec_from_json(const Json& cfg, int d) {
  if (!cfg.is_object()) throw ParseError("spec: expected a JSON object");
  RestrictionSpec spec;
  spec.r = get_field<int>(cfg, "r");
  if (const Json* s = find_alias(cfg, {"stat", "stat_kind"})) {
    try {
      spec.stat = parse_stat_kind(s->get<std::string>());
    } catch (const std::exception& e) {
      field_error("stat", e.what());
    }
  }
  const Json* p = find_alias(cfg, {"pattern", "pattern_kind", "indices"});
  if (!p) field_error("pattern", "missing");
  spec.pattern = pattern_from_json(*p, d, spec.r, cfg.contains("targets") ? &cfg.at("targets") : nullptr);
  spec.include_mean = get_or<bool>(cfg, "include_mean", false);
  spec.validate();
  return spec;
}

EstimateOptions options_from_json(const Json& cfg, EstimateOptions o) {
  if (cfg.is_null()) return o;
  if (!cfg.is_object()) throw ParseError("options: expected a JSON object");
  if (const Json* w = find_alias(cfg, {"weighting"})) {
    std::string name = w->get<std::string>();
    try {
      o.weighting = parse_weighting(name);
    } catch (const std::exception& e) {
      field_error("weighting", e.what());
    }
  }
  if (const Json* s = find_alias(cfg, {"starts", "K_starts"})) o.starts = s->get<int>();
  if (const Json* b = find_alias(cfg, {"bootstrap_B", "B_bootstrap"})) o.bootstrap_B = b->get<int>();
  o.seed = get_or<std::uint64_t>(cfg, "seed", o.seed);
  if (cfg.contains("tolerances")) {
    const Json& t = cfg.at("tolerances");
    o.lm.gtol = get_or<double>(t, "gtol", o.lm.gtol);
    o.lm.max_iter = get_or<int>(t, "max_iter", o.lm.max_iter);
    o.lm.cond_max = get_or<double>(t, "cond_max", o.lm.cond_max);
    o.iter_tol = get_or<double>(t, "iter_tol", o.iter_tol);
    o.max_weight_iter = get_or<int>(t, "max_weight_iter", o.max_weight_iter);
    o.ridge = get_or<double>(t, "ridge", o.ridge);
  }
  if (cfg.contains("reference") && !cfg.at("reference").is_null())
    o.reference = matrix_from_json(cfg.at("reference"), "reference");
  if (o.starts < 1) field_error("starts", "must be at least 1");
  if (o.bootstrap_B < 2) field_error("bootstrap_B", "must be at least 2");
  return o;
}

Json identify_report(const SymmetricTensor& T, const ZeroPattern& I, const IdentifyOptions& opts) {
  if (T.dim() != I.d || T.order() != I.r) throw InvalidArgument("tensor and pattern shapes differ");
  const double violation = pattern_violation(T, I);
  const double scale = std::max(1.0, T.norm());
  if (violation > opts.tol * scale)
    throw InvalidArgument("tensor violates the pattern (max residual " + format_double(violation) + ")");
  const int d = T.dim();

  Json pattern = {{"kind", to_string(I.kind)}, {"d", I.d}, {"r", I.r}};
  Json idx = Json::array();
  for (const auto& i : I.indices) {
    Json one = Json::array();
    for (int v : i) one.push_back(v + 1);
    idx.push_back(one);
  }
  pattern["indices"] = idx;
  if (I.has_targets()) pattern["targets"] = I.targets;

  Json report;
  report["pattern"] = pattern;
  report["pattern_violation"] = violation;

  std::optional<GenericityResult> gen;
  std::string check;
  switch (I.kind) {
    case PatternKind::diagonal:
      gen = check_genericity_diagonal(T, opts.tol);
      check = "diagonal";
      break;
    case PatternKind::reflectional:
      gen = check_genericity_reflectional(T, opts.tol);
      check = "reflectional";
      break;
    case PatternKind::minimal:
    case PatternKind::mean_independence:
      // The mean-independence set contains the minimal one, so the minimal condition still applies.
      gen = check_genericity_minimal(T, opts.tol);
      check = "minimal";
      break;
    case PatternKind::custom: break;
  }
  if (gen) report["genericity"] = {{"check", check}, {"passed", gen->passed}, {"reasons", gen->reasons}};
  else report["genericity"] = nullptr;

  int sp_pass = 0;
  const auto sps = signed_permutations(d);
  for (const auto& P : sps) sp_pass += verify_in_GT(P, T, I, opts.tol);
  report["signed_permutations_in_set"] = sp_pass;
  report["signed_permutations_total"] = static_cast<int>(sps.size());

  Matrix Q = opts.Q ? *opts.Q : Matrix::Identity(d, d);
  if (!verify_in_GT(Q, T, I, opts.tol)) throw InvalidArgument("local test point is not in the identified set");
  LocalIdentification loc = local_identification_test(T, I, Q, opts.tol);
  report["local_identification"] = {{"point", matrix_to_json(Q)},
                                    {"locally_identified", loc.locally_identified},
                                    {"kernel_dimension", loc.kernel_dimension},
                                    {"singular_values", std::vector<double>(loc.singular_values.data(),
                                                                            loc.singular_values.data() +
                                                                                loc.singular_values.size())}};

  Json identified = nullptr;
  if ((I.kind == PatternKind::diagonal || I.kind == PatternKind::reflectional) && gen->passed) identified = true;
  if (d == 2) {
    Enumeration2d en = enumerate_GT_2d(T, I, opts.tol);
    Json mats = Json::array();
    bool all_sp = true;
    for (const auto& M : en.matrices) {
      mats.push_back(matrix_to_json(M));
      all_sp = all_sp && is_signed_permutation(M, 1e-6);
    }
    report["enumeration"] = {{"finite", en.finite}, {"count", en.matrices.size()}, {"matrices", mats}};
    identified = en.finite && all_sp;
  } else {
    report["enumeration"] = nullptr;
  }
  report["identified_up_to_signed_permutation"] = identified;

  if (opts.explore) {
    Exploration ex = explore_identified_set(T, I, opts.explore_starts, opts.seed, opts.tol);
    Json sols = Json::array();
    for (std::size_t k = 0; k < ex.solutions.size(); ++k)
      sols.push_back({{"Q", matrix_to_json(ex.solutions[k])}, {"signed_permutation", static_cast<bool>(ex.signed_permutation[k])}});
    report["exploration"] = {{"starts", ex.starts}, {"distinct_solutions", ex.solutions.size()}, {"solutions", sols},
                             {"complete", false}};
  }
  return report;
}

Json estimation_to_json(const EstimationResult& est) {
  Json j;
  j["weighting"] = to_string(est.weighting);
  j["A_hat"] = matrix_to_json(est.A_hat);
  j["objective"] = est.objective;
  j["converged"] = est.converged;
  j["iterations"] = est.n_iterations;
  j["n"] = est.n;
  j["d_g"] = est.d_g;
  j["standard_errors"] = optional_matrix(est.standard_errors);
  j["Sigma_hat"] = optional_matrix(est.Sigma_hat);
  j["S_hat"] = optional_matrix(est.S_hat);
  j["alignment"] = est.alignment ? Json{{"P", matrix_to_json(*est.alignment)}} : Json(nullptr);
  Json starts = Json::array();
  for (const auto& s : est.multistart_bests) starts.push_back(s.objective);
  j["multistart_objectives"] = starts;
  if (est.weighting != Weighting::identity) {
    j["A_first_stage"] = matrix_to_json(est.A_first);
    j["objective_first_stage"] = est.objective_first;
  }
  return j;
}

Json test_to_json(const TestResult& t, const std::string& kind) {
  Json rej = Json::object();
  for (const auto& [level, r] : t.reject_at) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", level);
    rej[buf] = r;
  }
  Json j = {{"test", kind}, {"statistic", t.statistic}, {"dof", t.dof}, {"p_value", t.p_value}, {"reject", rej}};
  if (kind == "C") j["raw_statistic"] = t.raw_statistic;
  return j;
}

ErrorModel model_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("model: expected a JSON object");
  const std::string kind = get_field<std::string>(j, "kind");
  try {
    if (kind == "independent" || kind == "menu")
      return independent_model(get_field<std::vector<int>>(j, "densities"));
    if (kind == "scale_mixture")
      return scale_mixture_model(get_field<int>(j, "d"), parse_law(get_field<std::string>(j, "law")),
                                 get_or<double>(j, "nu", 5.0));
    if (kind == "gaussian_mixture")
      return gaussian_mixture_model(get_field<double>(j, "gamma"), matrix_from_json(j.at("sigma1"), "sigma1"),
                                    matrix_from_json(j.at("sigma2"), "sigma2"));
    if (kind == "transelliptical")
      return transelliptical_model(get_field<int>(j, "d"), parse_law(get_field<std::string>(j, "law")),
                                   get_or<double>(j, "nu", 5.0), get_or<double>(j, "exponent", 3.0));
  } catch (const Json::exception& e) {
    field_error("models", e.what());
  }
  field_error("kind", "unknown error model '" + kind + "'");
}

ScenarioConfig scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("scenario: expected a JSON object");
  ScenarioConfig c;
  if (!j.contains("models") || !j.at("models").is_array()) field_error("models", "expected an array");
  for (const auto& m : j.at("models")) c.models.push_back(model_from_json(m));
  c.orders = get_or<std::vector<int>>(j, "orders", c.orders);
  c.n = get_or<long>(j, "n", c.n);
  c.replicates = get_or<int>(j, "replicates", c.replicates);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.threads = get_or<int>(j, "threads", c.threads);
  try {
    if (const Json* s = find_alias(j, {"stat", "stat_kind"})) c.stat = parse_stat_kind(s->get<std::string>());
    if (const Json* p = find_alias(j, {"pattern", "pattern_kind"})) c.pattern = parse_pattern_kind(p->get<std::string>());
    if (const Json* w = find_alias(j, {"efficient_weighting"})) c.efficient = parse_weighting(w->get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  c.include_mean = get_or<bool>(j, "include_mean", c.include_mean);
  if (j.contains("A0") && !j.at("A0").is_null()) c.A0 = matrix_from_json(j.at("A0"), "A0");
  c.max_condition = get_or<double>(j, "max_condition", c.max_condition);
  c.population = get_or<bool>(j, "population", c.population);
  c.estimate = options_from_json(j.value("estimate", Json(nullptr)), c.estimate);
  if (const Json* s = find_alias(j, {"starts", "K_starts"})) c.estimate.starts = s->get<int>();
  if (const Json* b = find_alias(j, {"bootstrap_B", "B_bootstrap"})) c.estimate.bootstrap_B = b->get<int>();
  return c;
}

Json summary_to_json(const ScenarioSummary& s) {
  Json cells = Json::array();
  for (const auto& c : s.cells)
    cells.push_back({{"label", c.label},
                     {"d", c.d},
                     {"r", c.r},
                     {"n", c.n},
                     {"replicates", c.replicates},
                     {"failures", c.failures},
                     {"nonconverged", c.nonconverged},
                     {"dF_identity", c.dF_identity},
                     {"dF_efficient", c.dF_efficient},
                     {"dA_identity", c.dA_identity},
                     {"dA_efficient", c.dA_efficient},
                     {"max_dF", c.max_dF}});
  return {{"cells", cells}};
}

std::string summary_to_csv(const ScenarioSummary& s) {
  std::string out =
      "label,d,r,n,replicates,failures,nonconverged,dF_identity,dF_efficient,dA_identity,dA_efficient,max_dF\n";
  for (const auto& c : s.cells) {
    out += c.label + ',' + std::to_string(c.d) + ',' + std::to_string(c.r) + ',' + std::to_string(c.n) + ',' +
           std::to_string(c.replicates) + ',' + std::to_string(c.failures) + ',' + std::to_string(c.nonconverged);
    for (double v : {c.dF_identity, c.dF_efficient, c.dA_identity, c.dA_efficient, c.max_dF}) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace nica
