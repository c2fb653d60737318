#pragma once

#include <optional>
#include <string>
#include <vector>

#include "twolocus/expansion.hpp"
#include "twolocus/model.hpp"

namespace twolocus {

// "ps:M", "pade:M", "otr" (OTR over the full series) or "exact".
struct Method {
  enum class Kind { kPartialSum, kPade, kOtr, kExact };
  Kind kind = Kind::kPartialSum;
  int M = 0;

  static Method parse(const std::string& text);
  std::string tag() const;
};

std::vector<Method> parse_methods(const std::string& list);  // comma separated

struct CurvePoint {
  long double rho = 0;
  std::string method;           // request tag, e.g. "pade:5"
  std::string label;            // "ps:3", "otr:M'=4", "[2/3]", "exact"
  std::optional<long double> value;  // empty when a pole is hit
  std::vector<std::string> diagnostics;
};

// One row per (rho, method), rho-major. Exact points use the long double solver.
std::vector<CurvePoint> likelihood_curve(const SeriesExpansion& series, const ModelParams& params,
                                         const std::vector<long double>& rhos, const std::vector<Method>& methods,
                                         long double eps = 25);

// One method evaluated from stored coefficients. rho > 0 or +inf.
CurvePoint evaluate_series(const std::vector<Rational>& coeffs, const Method& m, long double rho, long double eps = 25);

struct StudyOptions {
  int n = 10;
  long double rho = 50;
  std::vector<Method> methods;
  ApproxMode approx = ApproxMode::kOff;
  Arithmetic arithmetic = Arithmetic::kFloat;
  long double eps = 25;
  std::vector<double> thresholds = {1, 5, 10, 25, 50, 100};
};

struct StudyRow {
  std::string method;
  std::vector<double> phi;  // parallel to thresholds
  double failed_weight = 0;  // poles or non-finite estimates
};

struct StudyResult {
  int n = 0;
  long double rho = 0;
  bool approx_g0 = false;
  std::size_t samples = 0;
  std::vector<double> thresholds;
  std::vector<StudyRow> rows;
};

// All samples (0,0,c) with |c| = n polymorphic at both loci, weighted by
// multinomial factor times exact q, normalized over that set.
StudyResult run_error_study(const ModelParams& params, const StudyOptions& opts);

}  // namespace twolocus
