#include "twolocus/study.hpp"

#include <cmath>
#include <sstream>

#include "twolocus/errors.hpp"
#include "twolocus/exact.hpp"
#include "twolocus/pade.hpp"

namespace twolocus {

namespace {

int parse_order(const std::string& s, const std::string& whole) {
  if (s.empty() || s.size() > 3) throw InvalidArgument("bad method order in '" + whole + "'");
  for (char ch : s)
    if (ch < '0' || ch > '9') throw InvalidArgument("bad method order in '" + whole + "'");
  return std::stoi(s);
}

struct Estimate {
  std::optional<long double> value;
  std::string label;
  std::vector<std::string> notes;
};

Estimate estimate(const Method& m, const std::vector<Rational>& coeffs, const std::vector<long double>& values, long double rho,
                  long double eps) {
  Estimate e;
  switch (m.kind) {
    case Method::Kind::kPartialSum: {
      std::vector<long double> head(values.begin(), values.begin() + m.M + 1);
      e.label = "ps:" + std::to_string(m.M);
      e.value = partial_sum(head, rho);
      break;
    }
    case Method::Kind::kOtr: {
      auto r = otr_truncate(values, rho);
      e.label = "otr:" + std::to_string(r.M_used);
      e.value = r.value;
      break;
    }
    case Method::Kind::kPade: {
      std::vector<Rational> head(coeffs.begin(), coeffs.begin() + m.M + 1);
      auto d = defect_heuristic(head, rho, eps);
      e.label = d.approximant.label();
      e.notes = d.notes;
      if (d.fallback) e.notes.push_back("fallback to [0/0]");
      try {
        e.value = d.approximant.evaluate(rho);
      } catch (const PoleError& err) {
        e.notes.push_back(std::string("pole: ") + err.what());
      }
      break;
    }
    case Method::Kind::kExact:
      throw InternalError("exact estimates are computed by the caller");
  }
  return e;
}

int max_order(const std::vector<Method>& methods, int floor) {
  int M = floor;
  for (const auto& m : methods)
    if (m.kind != Method::Kind::kExact && m.kind != Method::Kind::kOtr) M = std::max(M, m.M);
  return M;
}

}  // namespace

Method Method::parse(const std::string& text) {
  Method m;
  if (text == "otr") {
    m.kind = Kind::kOtr;
    return m;
  }
  if (text == "exact") {
    m.kind = Kind::kExact;
    return m;
  }
  auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidArgument("unknown method '" + text + "' (expected ps:M, pade:M, otr or exact)");
  std::string head = text.substr(0, colon);
  if (head == "ps")
    m.kind = Kind::kPartialSum;
  else if (head == "pade")
    m.kind = Kind::kPade;
  else
    throw InvalidArgument("unknown method '" + text + "'");
  m.M = parse_order(text.substr(colon + 1), text);
  return m;
}

std::string Method::tag() const {
  switch (kind) {
    case Kind::kPartialSum: return "ps:" + std::to_string(M);
    case Kind::kPade: return "pade:" + std::to_string(M);
    case Kind::kOtr: return "otr";
    case Kind::kExact: return "exact";
  }
  return "";
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(Method::parse(item));
  if (out.empty()) throw InvalidArgument("empty method list");
  return out;
}

std::vector<CurvePoint> likelihood_curve(const SeriesExpansion& series, const ModelParams& params,
                                         const std::vector<long double>& rhos, const std::vector<Method>& methods,
                                         long double eps) {
  if (methods.empty()) throw InvalidArgument("empty method list");
  for (const auto& m : methods)
    if (m.kind != Method::Kind::kExact && m.kind != Method::Kind::kOtr && m.M > series.M())
      throw InvalidArgument("method " + m.tag() + " needs more coefficients than the series holds");
  for (long double r : rhos)
    if (!(r > 0) || std::isinf(r)) throw InvalidArgument("curve rho values must be positive and finite");
  auto values = series.values();
  std::vector<CurvePoint> out;
  for (long double rho : rhos) {
    for (const auto& m : methods) {
      CurvePoint p;
      p.rho = rho;
      p.method = m.tag();
      if (m.kind == Method::Kind::kExact) {
        p.label = "exact";
        p.value = exact_q_float(series.sample, params, rho);
      } else {
        auto e = estimate(m, series.coeffs, values, rho, eps);
        p.label = e.label;
        p.value = e.value;
        p.diagnostics = std::move(e.notes);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

CurvePoint evaluate_series(const std::vector<Rational>& coeffs, const Method& m, long double rho, long double eps) {
  if (coeffs.empty()) throw InvalidArgument("no coefficients to evaluate");
  if (m.kind == Method::Kind::kExact) throw InvalidArgument("stored coefficients cannot give the exact value");
  if (m.kind != Method::Kind::kOtr && m.M >= static_cast<int>(coeffs.size()))
    throw InvalidArgument("method " + m.tag() + " needs more coefficients than are stored");
  if (!(rho > 0)) throw InvalidArgument("rho must be positive or inf");
  std::vector<long double> values;
  for (const auto& c : coeffs) values.push_back(to_long_double(c));
  auto e = estimate(m, coeffs, values, rho, eps);
  CurvePoint p;
  p.rho = rho;
  p.method = m.tag();
  p.label = e.label;
  p.value = e.value;
  p.diagnostics = std::move(e.notes);
  return p;
}

StudyResult run_error_study(const ModelParams& params, const StudyOptions& opts) {
  if (opts.n < 2) throw InvalidArgument("error study needs n >= 2");
  if (!(opts.rho > 0) || std::isinf(opts.rho)) throw InvalidArgument("error study rho must be positive and finite");
  if (opts.methods.empty()) throw InvalidArgument("empty method list");
  if (params.has_selection()) throw UnsupportedError("error study needs the neutral exact solver");
  const int K = params.locus_a().K(), L = params.locus_b().K();
  auto samples = enumerate_samples(opts.n, K, L, true);
  if (samples.empty()) throw InvalidArgument("no samples polymorphic at both loci");

  const int M = max_order(opts.methods, 0);
  EngineOptions eo;
  eo.approx_g0 = resolve_approx(opts.approx, samples.front());
  const bool exact = resolve_exact(opts.arithmetic, samples.front(), M, params);
  std::optional<GEngine<Rational>> ex_engine;
  std::optional<GEngine<long double>> fl_engine;
  if (exact)
    ex_engine.emplace(params, eo);
  else
    fl_engine.emplace(params, eo);
  ExactSolver<long double> solver(params, opts.rho);

  StudyResult res;
  res.n = opts.n;
  res.rho = opts.rho;
  res.approx_g0 = eo.approx_g0;
  res.samples = samples.size();
  res.thresholds = opts.thresholds;
  const std::size_t T = opts.thresholds.size();
  std::vector<std::vector<long double>> mass(opts.methods.size(), std::vector<long double>(T, 0));
  std::vector<long double> failed(opts.methods.size(), 0);
  long double total = 0;

  for (const auto& s : samples) {
    long double q = solver.q(s);
    long double w = to_long_double(multinomial_weight(s)) * q;
    total += w;
    SeriesExpansion se = exact ? expand_with(*ex_engine, s, M) : expand_with(*fl_engine, s, M);
    auto values = se.values();
    for (std::size_t k = 0; k < opts.methods.size(); ++k) {
      const auto& m = opts.methods[k];
      std::optional<long double> est;
      if (m.kind == Method::Kind::kExact)
        est = q;
      else
        est = estimate(m, se.coeffs, values, opts.rho, opts.eps).value;
      if (!est || !std::isfinite(*est)) {
        failed[k] += w;
        continue;
      }
      long double err = std::fabs(*est - q) / q * 100;
      for (std::size_t t = 0; t < T; ++t)
        if (err < opts.thresholds[t]) mass[k][t] += w;
    }
  }
  for (std::size_t k = 0; k < opts.methods.size(); ++k) {
    StudyRow row;
    row.method = opts.methods[k].tag();
    for (std::size_t t = 0; t < T; ++t) row.phi.push_back(static_cast<double>(mass[k][t] / total));
    row.failed_weight = static_cast<double>(failed[k] / total);
    res.rows.push_back(std::move(row));
  }
  return res;
}

}  // namespace twolocus
