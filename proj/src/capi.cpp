#include "twolocus/twolocus.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include <json.hpp>

#include "twolocus/errors.hpp"
#include "twolocus/exact.hpp"
#include "twolocus/expansion.hpp"
#include "twolocus/model.hpp"
#include "twolocus/pade.hpp"
#include "twolocus/study.hpp"
#include "twolocus/table.hpp"

using nlohmann::json;
using namespace twolocus;

struct tl_model {
  ModelParams params;
};

struct tl_series {
  SeriesExpansion series;
};

struct tl_table {
  CoefficientTable table;
};

namespace {

thread_local std::string g_last_error;

tl_status fail(tl_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class Fn>
tl_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return TL_OK;
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::kInvalidArgument: return fail(TL_ERR_INVALID_ARGUMENT, e.what());
      case ErrorKind::kCapacity: return fail(TL_ERR_CAPACITY, e.what());
      case ErrorKind::kNumeric: return fail(TL_ERR_NUMERIC, e.what());
      case ErrorKind::kUnsupported: return fail(TL_ERR_UNSUPPORTED, e.what());
      case ErrorKind::kIo: return fail(TL_ERR_IO, e.what());
      case ErrorKind::kIntegrity: return fail(TL_ERR_INTEGRITY, e.what());
      case ErrorKind::kNotFound: return fail(TL_ERR_NOT_FOUND, e.what());
      case ErrorKind::kInternal: return fail(TL_ERR_INTERNAL, e.what());
    }
    return fail(TL_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TL_ERR_CAPACITY, "out of memory");
  } catch (const json::exception& e) {
    return fail(TL_ERR_INVALID_ARGUMENT, std::string("bad JSON: ") + e.what());
  } catch (const std::exception& e) {
    return fail(TL_ERR_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Arithmetic arith(int a) {
  switch (a) {
    case TL_AUTO: return Arithmetic::kAuto;
    case TL_EXACT: return Arithmetic::kExact;
    case TL_FLOAT: return Arithmetic::kFloat;
  }
  throw InvalidArgument("unknown arithmetic switch");
}

ApproxMode approx_mode(int a) {
  switch (a) {
    case TL_APPROX_AUTO: return ApproxMode::kAuto;
    case TL_APPROX_ON: return ApproxMode::kOn;
    case TL_APPROX_OFF: return ApproxMode::kOff;
  }
  throw InvalidArgument("unknown approximation switch");
}

std::vector<Rational> matrix_field(const json& j, int K, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != K) throw InvalidArgument(std::string(name) + " must be K x K");
  std::vector<Rational> out;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != K) throw InvalidArgument(std::string(name) + " must be K x K");
    for (const auto& v : row) out.push_back(v.is_string() ? parse_rational(v.get<std::string>()) : parse_rational(v.dump()));
  }
  return out;
}

Rational rational_field(const json& v) { return v.is_string() ? parse_rational(v.get<std::string>()) : parse_rational(v.dump()); }

ModelParams model_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("model spec must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const char* known[] = {"preset", "K", "L", "theta_a", "theta_b", "P_a", "P_b", "sigma"};
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw InvalidArgument("unknown model field '" + it.key() + "'");
  }
  if (j.contains("preset") && j.at("preset").get<std::string>() != "paper-pim")
    throw InvalidArgument("unknown model preset '" + j.at("preset").get<std::string>() + "'");
  ModelParams base = ModelParams::paper_pim();
  int K = j.contains("K") ? j.at("K").get<int>() : base.locus_a().K();
  int L = j.contains("L") ? j.at("L").get<int>() : base.locus_b().K();
  if (K < 1 || L < 1 || K > 8 || L > 8) throw InvalidArgument("allele counts must lie in 1..8");
  Rational ta = j.contains("theta_a") ? rational_field(j.at("theta_a")) : base.locus_a().theta();
  Rational tb = j.contains("theta_b") ? rational_field(j.at("theta_b")) : base.locus_b().theta();
  if (sgn(ta) <= 0 || sgn(tb) <= 0) throw InvalidArgument("mutation rates must be positive");
  MutationModel A = j.contains("P_a") ? MutationModel(ta, matrix_field(j.at("P_a"), K, "P_a"), K) : MutationModel::symmetric_pim(K, ta);
  MutationModel B = j.contains("P_b") ? MutationModel(tb, matrix_field(j.at("P_b"), L, "P_b"), L) : MutationModel::symmetric_pim(L, tb);
  if (!j.contains("sigma")) return ModelParams(A, B);
  const json& s = j.at("sigma");
  if (!s.is_array() || static_cast<int>(s.size()) != K) throw InvalidArgument("sigma must be K x K");
  std::vector<double> sigma;
  for (const auto& row : s) {
    if (!row.is_array() || static_cast<int>(row.size()) != K) throw InvalidArgument("sigma must be K x K");
    for (const auto& v : row) sigma.push_back(v.is_string() ? std::stod(v.get<std::string>()) : v.get<double>());
  }
  return ModelParams(A, B, sigma);
}

json strings(const std::vector<Rational>& v) {
  json a = json::array();
  for (const auto& q : v) a.push_back(rational_to_string(q));
  return a;
}

json number(long double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return static_cast<double>(x);
}

json roots_json(const std::vector<RootEnclosure>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back({{"lo", rational_to_string(r.lo)}, {"hi", rational_to_string(r.hi)}, {"value", number(r.value())}});
  return a;
}

json approximant_json(const std::vector<Rational>& q, int U, int V) {
  json o;
  o["label"] = "[" + std::to_string(U) + "/" + std::to_string(V) + "]";
  o["U"] = U;
  o["V"] = V;
  try {
    auto p = pade_from_series(q, U, V);
    o["degenerate"] = false;
    o["A"] = strings(p.A().coeffs());
    o["B"] = strings(p.B().coeffs());
    o["numerator_roots"] = roots_json(p.roots().numerator);
    o["denominator_roots"] = roots_json(p.roots().denominator);
  } catch (const DegenerateTableError& e) {
    o["degenerate"] = true;
    o["max_solvable_v"] = e.max_solvable_v();
    o["message"] = e.what();
  }
  return o;
}

json point_json(const CurvePoint& p) {
  json o;
  o["rho"] = number(p.rho);
  o["method"] = p.method;
  o["label"] = p.label;
  o["value"] = p.value ? number(*p.value) : json(nullptr);
  o["pole"] = !p.value.has_value();
  o["diagnostics"] = p.diagnostics;
  return o;
}

}  // namespace

extern "C" {

const char* tl_version(void) { return "0.1.0"; }

const char* tl_last_error(void) { return g_last_error.c_str(); }

void tl_string_free(char* s) { std::free(s); }

tl_status tl_model_create(const char* spec_json, tl_model** out) {
  return guard([&] {
    need(spec_json, "spec");
    need(out, "out");
    *out = nullptr;
    auto params = model_from_json(json::parse(spec_json));
    *out = new tl_model{std::move(params)};
  });
}

void tl_model_free(tl_model* m) { delete m; }

tl_status tl_model_describe(const tl_model* m, char** json_out) {
  return guard([&] {
    need(m, "model");
    need(json_out, "out");
    const auto& p = m->params;
    json o;
    o["K"] = p.locus_a().K();
    o["L"] = p.locus_b().K();
    o["theta_a"] = rational_to_string(p.locus_a().theta());
    o["theta_b"] = rational_to_string(p.locus_b().theta());
    o["pim_a"] = p.locus_a().is_pim();
    o["pim_b"] = p.locus_b().is_pim();
    o["selection"] = p.has_selection();
    o["fingerprint"] = p.fingerprint();
    *json_out = dup(o.dump());
  });
}

tl_status tl_samples(const tl_model* m, int n, int dimorphic_only, char** json_out) {
  return guard([&] {
    need(m, "model");
    need(json_out, "out");
    if (n < 0 || n > 60) throw InvalidArgument("sample size must lie in 0..60");
    json arr = json::array();
    enumerate_samples(n, m->params.locus_a().K(), m->params.locus_b().K(), dimorphic_only != 0,
                      [&](const SampleConfig& s) { arr.push_back(s.to_string()); });
    *json_out = dup(arr.dump());
  });
}

tl_status tl_expand(const tl_model* m, const char* sample, int M, int arithmetic, int approx, tl_series** out) {
  return guard([&] {
    need(m, "model");
    need(sample, "sample");
    need(out, "out");
    *out = nullptr;
    if (M < 0 || M > 60) throw InvalidArgument("M must lie in 0..60");
    ExpansionOptions o;
    o.arithmetic = arith(arithmetic);
    o.approx = approx_mode(approx);
    auto s = SampleConfig::parse(sample);
    *out = new tl_series{expand(s, m->params, M, o)};
  });
}

void tl_series_free(tl_series* s) { delete s; }

int tl_series_order(const tl_series* s) { return s ? s->series.M() : -1; }

tl_status tl_series_coeff(const tl_series* s, int k, char** out) {
  return guard([&] {
    need(s, "series");
    need(out, "out");
    if (k < 0 || k > s->series.M()) throw InvalidArgument("coefficient index out of range");
    *out = dup(rational_to_string(s->series.coeffs[k]));
  });
}

tl_status tl_series_coeff_double(const tl_series* s, int k, double* out) {
  return guard([&] {
    need(s, "series");
    need(out, "out");
    if (k < 0 || k > s->series.M()) throw InvalidArgument("coefficient index out of range");
    *out = static_cast<double>(to_long_double(s->series.coeffs[k]));
  });
}

tl_status tl_series_evaluate(const tl_series* s, const char* method, double rho, double eps, double* out) {
  return guard([&] {
    need(s, "series");
    need(method, "method");
    need(out, "out");
    auto p = evaluate_series(s->series.coeffs, Method::parse(method), rho, eps);
    if (!p.value) throw PoleError(p.diagnostics.empty() ? "pole" : p.diagnostics.back());
    *out = static_cast<double>(*p.value);
  });
}

tl_status tl_series_json(const tl_series* s, char** json_out) {
  return guard([&] {
    need(s, "series");
    need(json_out, "out");
    const auto& se = s->series;
    json o;
    o["sample"] = se.sample.to_string();
    o["key"] = key_hex(canonical_key(se.sample));
    o["M"] = se.M();
    o["arithmetic"] = se.exact ? "exact" : "float";
    o["approx_g0"] = se.approx_g0;
    o["coeffs"] = strings(se.coeffs);
    json vals = json::array();
    for (long double v : se.values()) vals.push_back(number(v));
    o["values"] = vals;
    *json_out = dup(o.dump());
  });
}

tl_status tl_series_roots(const tl_series* s, int U, int V, char** json_out) {
  return guard([&] {
    need(s, "series");
    need(json_out, "out");
    const auto& q = s->series.coeffs;
    json arr = json::array();
    if (U >= 0) {
      if (V < 0 || U + V > s->series.M()) throw InvalidArgument("[U/V] needs U + V <= M");
      arr.push_back(approximant_json(q, U, V));
    } else {
      for (int M = 0; M <= s->series.M(); ++M) arr.push_back(approximant_json(q, M / 2, (M + 1) / 2));
    }
    json o;
    o["sample"] = s->series.sample.to_string();
    o["approximants"] = arr;
    *json_out = dup(o.dump());
  });
}

tl_status tl_curve(const tl_series* s, const tl_model* m, const double* rhos, size_t count, const char* methods, double eps,
                   char** json_out) {
  return guard([&] {
    need(s, "series");
    need(m, "model");
    need(methods, "methods");
    need(json_out, "out");
    if (count == 0) throw InvalidArgument("rho grid is empty");
    need(rhos, "rhos");
    std::vector<long double> grid(rhos, rhos + count);
    auto pts = likelihood_curve(s->series, m->params, grid, parse_methods(methods), eps);
    json arr = json::array();
    for (const auto& p : pts) arr.push_back(point_json(p));
    json o;
    o["sample"] = s->series.sample.to_string();
    o["points"] = arr;
    *json_out = dup(o.dump());
  });
}

tl_status tl_error_study(const tl_model* m, int n, double rho, const char* methods, int approx, double eps, char** json_out) {
  return guard([&] {
    need(m, "model");
    need(methods, "methods");
    need(json_out, "out");
    StudyOptions o;
    o.n = n;
    o.rho = rho;
    o.methods = parse_methods(methods);
    o.approx = approx_mode(approx);
    o.eps = eps;
    auto r = run_error_study(m->params, o);
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back({{"method", row.method}, {"phi", row.phi}, {"failed_weight", row.failed_weight}});
    json out;
    out["n"] = r.n;
    out["rho"] = number(r.rho);
    out["approx_g0"] = r.approx_g0;
    out["samples"] = r.samples;
    out["thresholds"] = r.thresholds;
    out["rows"] = rows;
    *json_out = dup(out.dump());
  });
}

tl_status tl_exact(const tl_model* m, const char* sample, const char* rho, const char* mode, char** json_out) {
  return guard([&] {
    need(m, "model");
    need(sample, "sample");
    need(mode, "mode");
    need(json_out, "out");
    auto s = SampleConfig::parse(sample);
    std::string md = mode;
    json o;
    o["sample"] = s.to_string();
    o["mode"] = md;
    if (md == "symbolic") {
      auto f = exact_q_rational(s, m->params);
      o["numerator"] = strings(f.num().coeffs());
      o["denominator"] = strings(f.den().coeffs());
      auto lim = maclaurin_in_inverse_rho(f, 0);
      o["limit_inf"] = rational_to_string(lim[0]);
      o["value_zero"] = rational_to_string(f.eval(Rational(0)));
    } else {
      need(rho, "rho");
      std::string r = rho;
      if (r == "inf") throw InvalidArgument("exact solves need a finite rho; use coeffs --M 0 for the limit");
      Rational q = parse_rational(r);
      if (sgn(q) < 0) throw InvalidArgument("rho must be >= 0");
      o["rho"] = rational_to_string(q);
      if (md == "rational") {
        auto v = exact_q_numeric(s, m->params, q);
        o["value"] = rational_to_string(v);
        o["approx"] = number(to_long_double(v));
      } else if (md == "float") {
        o["approx"] = number(exact_q_float(s, m->params, to_long_double(q)));
      } else {
        throw InvalidArgument("unknown exact mode '" + md + "'");
      }
    }
    *json_out = dup(o.dump());
  });
}

tl_status tl_total_probability(const tl_model* m, int n, const char* rho, char** out) {
  return guard([&] {
    need(m, "model");
    need(rho, "rho");
    need(out, "out");
    *out = dup(rational_to_string(total_probability(n, m->params, parse_rational(rho))));
  });
}

tl_status tl_table_build(const tl_model* m, int n_max, int M, int arithmetic, int approx, const char* path) {
  return guard([&] {
    need(m, "model");
    need(path, "path");
    ExpansionOptions o;
    o.arithmetic = arith(arithmetic);
    o.approx = approx_mode(approx);
    write_table(build_table(m->params, n_max, M, o), path);
  });
}

tl_status tl_table_open(const char* path, tl_table** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new tl_table{read_table(path)};
  });
}

void tl_table_free(tl_table* t) { delete t; }

tl_status tl_table_header(const tl_table* t, char** json_out) {
  return guard([&] {
    need(t, "table");
    need(json_out, "out");
    const auto& h = t->table.header;
    json o;
    o["version"] = h.version;
    o["K"] = h.K;
    o["L"] = h.L;
    o["theta_a"] = rational_to_string(h.theta_a);
    o["theta_b"] = rational_to_string(h.theta_b);
    o["approx_g0"] = h.approx_g0;
    o["arithmetic"] = h.exact ? "exact" : "float";
    o["M"] = h.M;
    o["n_max"] = h.n_max;
    o["records"] = t->table.records.size();
    *json_out = dup(o.dump());
  });
}

tl_status tl_table_lookup(const tl_table* t, const char* sample, const char* method, double rho, double eps, char** json_out) {
  return guard([&] {
    need(t, "table");
    need(sample, "sample");
    need(method, "method");
    need(json_out, "out");
    auto s = SampleConfig::parse(sample);
    const auto& rec = t->table.find(s);
    auto p = evaluate_series(rec.coeffs, Method::parse(method), rho, eps);
    json o = point_json(p);
    o["sample"] = rec.sample.to_string();
    o["key"] = key_hex(canonical_key(rec.sample));
    *json_out = dup(o.dump());
  });
}

tl_status tl_write_atomic(const char* path, const char* content) {
  return guard([&] {
    need(path, "path");
    need(content, "content");
    atomic_write(path, content);
  });
}

}  // extern "C"
