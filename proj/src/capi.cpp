#include "nica/nica.h"

#include "nica/io.hpp"

#include <cstring>
#include <vector>

struct nica_tensor {
  nica::SymmetricTensor t;
};

struct nica_data {
  nica::Matrix y;
};

namespace {

thread_local std::string last_error;

nica_status fail(nica_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
nica_status guarded(F&& f) {
  last_error.clear();
  try {
    return f();
  } catch (const nica::ParseError& e) {
    return fail(NICA_ERR_PARSE, e.what());
  } catch (const nica::IoError& e) {
    return fail(NICA_ERR_IO, e.what());
  } catch (const nica::Json::exception& e) {
    return fail(NICA_ERR_PARSE, e.what());
  } catch (const nica::InvalidArgument& e) {
    return fail(NICA_ERR_INVALID_ARGUMENT, e.what());
  } catch (const nica::NumericalError& e) {
    return fail(NICA_ERR_NUMERICAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(NICA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NICA_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw nica::InvalidArgument(what);
}

nica::Json config_or_empty(const char* text, const char* source) {
  if (!text || !*text) return nica::Json::object();
  nica::Json j = nica::parse_json(text, source);
  if (!j.is_object()) throw nica::ParseError(std::string(source) + ": expected a JSON object");
  return j;
}

nica::MultiIndex zero_based(const nica_tensor* t, const int* index) {
  require(index != nullptr, "index is null");
  nica::MultiIndex idx(index, index + t->t.order());
  for (int& v : idx) {
    require(v >= 1 && v <= t->t.dim(), "index entries must lie in 1..d");
    --v;
  }
  return idx;
}

// Splits the weighting choice off a config; "efficient" and "both" are resolved by the caller.
std::string take_weighting(nica::Json& cfg, const std::string& fallback) {
  std::string w = fallback;
  if (cfg.contains("weighting") && !cfg.at("weighting").is_null()) w = cfg.at("weighting").get<std::string>();
  cfg.erase("weighting");
  return w;
}

nica::Weighting resolve(const std::string& w, nica::StatKind stat) {
  return w == "efficient" ? nica::efficient_weighting(stat) : nica::parse_weighting(w);
}

}  // namespace

extern "C" {

const char* nica_version(void) { return "1.0.0"; }

const char* nica_last_error(void) { return last_error.c_str(); }

const char* nica_status_name(nica_status status) {
  switch (status) {
    case NICA_OK: return "ok";
    case NICA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NICA_ERR_IO: return "i/o error";
    case NICA_ERR_PARSE: return "parse error";
    case NICA_ERR_NUMERICAL: return "numerical error";
    case NICA_ERR_NOT_CONVERGED: return "not converged";
    case NICA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void nica_string_free(char* s) { std::free(s); }

nica_status nica_tensor_create(int d, int r, nica_tensor** out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    require(d >= 1 && r >= 1, "d and r must be positive");
    *out = new nica_tensor{nica::SymmetricTensor(d, r)};
    return NICA_OK;
  });
}

nica_status nica_tensor_from_json(const char* json, nica_tensor** out) {
  return guarded([&] {
    require(json != nullptr && out != nullptr, "null argument");
    *out = new nica_tensor{nica::tensor_from_json(nica::parse_json(json, "tensor"))};
    return NICA_OK;
  });
}

nica_status nica_tensor_to_json(const nica_tensor* t, char** out) {
  return guarded([&] {
    require(t != nullptr && out != nullptr, "null argument");
    *out = copy_string(nica::dump_json(nica::tensor_to_json(t->t)));
    return NICA_OK;
  });
}

nica_status nica_tensor_shape(const nica_tensor* t, int* d, int* r) {
  return guarded([&] {
    require(t != nullptr, "tensor is null");
    if (d) *d = t->t.dim();
    if (r) *r = t->t.order();
    return NICA_OK;
  });
}

nica_status nica_tensor_set(nica_tensor* t, const int* index, double value) {
  return guarded([&] {
    require(t != nullptr, "tensor is null");
    t->t.set(zero_based(t, index), value);
    return NICA_OK;
  });
}

nica_status nica_tensor_get(const nica_tensor* t, const int* index, double* value) {
  return guarded([&] {
    require(t != nullptr && value != nullptr, "null argument");
    *value = t->t.at(zero_based(t, index));
    return NICA_OK;
  });
}

void nica_tensor_free(nica_tensor* t) { delete t; }

nica_status nica_data_create(const double* row_major, long n, int d, nica_data** out) {
  return guarded([&] {
    require(row_major != nullptr && out != nullptr, "null argument");
    require(n >= 1 && d >= 1, "n and d must be positive");
    nica::Matrix y(n, d);
    for (long i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) y(i, j) = row_major[i * d + j];
    nica::validate_data(y);
    *out = new nica_data{std::move(y)};
    return NICA_OK;
  });
}

nica_status nica_data_from_csv_file(const char* path, nica_data** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new nica_data{nica::read_csv_file(path)};
    return NICA_OK;
  });
}

nica_status nica_data_shape(const nica_data* y, long* n, int* d) {
  return guarded([&] {
    require(y != nullptr, "data is null");
    if (n) *n = static_cast<long>(y->y.rows());
    if (d) *d = static_cast<int>(y->y.cols());
    return NICA_OK;
  });
}

void nica_data_free(nica_data* y) { delete y; }

nica_status nica_cumulants(const nica_data* y, int r, const char* stat, nica_tensor** out) {
  return guarded([&] {
    require(y != nullptr && out != nullptr, "null argument");
    require(r >= 1, "order must be positive");
    nica::StatKind kind = nica::parse_stat_kind(stat ? stat : "cumulant");
    nica::SymmetricTensor t = kind == nica::StatKind::cumulant ? nica::kstatistic(y->y, r)
                                                                : nica::sample_moments(y->y, r)(r);
    *out = new nica_tensor{std::move(t)};
    return NICA_OK;
  });
}

nica_status nica_identify(const nica_tensor* t, const char* options_json, char** report_json) {
  return guarded([&] {
    require(t != nullptr && report_json != nullptr, "null argument");
    nica::Json cfg = config_or_empty(options_json, "identify options");
    if (!cfg.contains("pattern")) throw nica::ParseError("field 'pattern': missing");
    nica::ZeroPattern I = nica::pattern_from_json(cfg.at("pattern"), t->t.dim(), t->t.order(),
                                                  cfg.contains("targets") ? &cfg.at("targets") : nullptr);
    nica::IdentifyOptions opts;
    opts.tol = cfg.value("tol", opts.tol);
    opts.explore = cfg.value("explore", opts.explore);
    opts.explore_starts = cfg.value("explore_starts", opts.explore_starts);
    opts.seed = cfg.value("seed", opts.seed);
    if (cfg.contains("Q")) opts.Q = nica::matrix_from_json(cfg.at("Q"), "Q");
    *report_json = copy_string(nica::dump_json(nica::identify_report(t->t, I, opts)));
    return NICA_OK;
  });
}

nica_status nica_estimate(const nica_data* y, const char* config_json, char** result_json) {
  return guarded([&] {
    require(y != nullptr && result_json != nullptr, "null argument");
    nica::Json cfg = config_or_empty(config_json, "estimate config");
    const std::string w = take_weighting(cfg, "both");
    nica::RestrictionSpec spec = nica::spec_from_json(cfg, static_cast<int>(y->y.cols()));
    nica::EstimateOptions opts = nica::options_from_json(cfg);
    nica::Json out = {{"d", spec.dim()}, {"r", spec.r}, {"stat", nica::to_string(spec.stat)},
                      {"pattern", nica::to_string(spec.pattern.kind)}, {"d_g", spec.d_g()}};
    bool converged = true;
    auto run = [&](nica::Weighting wt) {
      opts.weighting = wt;
      nica::EstimationResult est = nica::estimate(y->y, spec, opts);
      converged = converged && est.converged;
      return nica::estimation_to_json(est);
    };
    if (w == "both") {
      out["identity"] = run(nica::Weighting::identity);
      out["efficient"] = run(nica::efficient_weighting(spec.stat));
    } else {
      nica::Weighting wt = resolve(w, spec.stat);
      out[wt == nica::Weighting::identity ? "identity" : "efficient"] = run(wt);
    }
    out["converged"] = converged;
    *result_json = copy_string(nica::dump_json(out));
    if (!converged) return fail(NICA_ERR_NOT_CONVERGED, "optimizer did not converge");
    return NICA_OK;
  });
}

nica_status nica_test(const nica_data* y, const char* config_json, const char* sub_config_json, char** result_json) {
  return guarded([&] {
    require(y != nullptr && result_json != nullptr, "null argument");
    const int d = static_cast<int>(y->y.cols());
    nica::Json cfg = config_or_empty(config_json, "test config");
    const std::string w = take_weighting(cfg, "efficient");
    nica::RestrictionSpec spec = nica::spec_from_json(cfg, d);
    nica::EstimateOptions opts = nica::options_from_json(cfg);
    opts.weighting = resolve(w, spec.stat);
    nica::Json out;
    if (!sub_config_json) {
      out = nica::test_to_json(nica::j_test(y->y, spec, opts), "J");
    } else {
      nica::Json sub = config_or_empty(sub_config_json, "subset config");
      for (const char* key : {"r", "stat", "include_mean"})
        if (!sub.contains(key) && cfg.contains(key)) sub[key] = cfg[key];
      if (!sub.contains("stat")) sub["stat"] = nica::to_string(spec.stat);
      nica::RestrictionSpec sub_spec = nica::spec_from_json(sub, d);
      out = nica::test_to_json(nica::c_test(y->y, spec, sub_spec, opts), "C");
    }
    out["weighting"] = nica::to_string(opts.weighting);
    *result_json = copy_string(nica::dump_json(out));
    return NICA_OK;
  });
}

nica_status nica_simulate(const char* scenario_json, int threads, char** summary_json, char** summary_csv) {
  return guarded([&] {
    require(scenario_json != nullptr, "scenario is null");
    nica::ScenarioConfig cfg = nica::scenario_from_json(nica::parse_json(scenario_json, "scenario"));
    if (threads > 0) cfg.threads = threads;
    nica::ScenarioSummary s = nica::run_scenario(cfg);
    if (summary_json) *summary_json = copy_string(nica::dump_json(nica::summary_to_json(s)));
    if (summary_csv) *summary_csv = copy_string(nica::summary_to_csv(s));
    return NICA_OK;
  });
}

}  // extern "C"
