#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "twolocus/model.hpp"

namespace twolocus {

struct EngineOptions {
  // Treat g_u^(0)(a,b,0) as zero for u >= 4.
  bool approx_g0 = false;
  // Odd levels vanish identically; by default they are not evaluated.
  bool compute_odd_levels = false;
  // Use the full mutation sums even when P is parent-independent.
  bool force_general_mutation = false;
  std::size_t max_entries = 60'000'000;
  // Extra A-degree kept in each truncated selection box.
  int selection_margin = 16;
  // Gauss-Seidel stopping threshold (relative) for selection boxes.
  long double selection_tolerance = 1e-17L;
};

struct GEntry {
  int m = 0;
  int u = 0;
  std::vector<int> a;
  std::vector<int> b;
  std::vector<int> r;  // K x L row-major
};

// Memoized table of g_u^(m)(a,b,r) (h_u^(m) when the model carries selection).
// Entries are computed on demand by recursion on lower levels.
// S is Rational (exact) or long double. Selection requires long double.
// Not thread-safe: use one engine per worker.
template <class S>
class GEngine {
 public:
  explicit GEngine(const ModelParams& params, EngineOptions opts = {});
  ~GEngine();
  GEngine(GEngine&&) noexcept;
  GEngine& operator=(GEngine&&) noexcept;

  const ModelParams& params() const;
  const EngineOptions& options() const;

  // Selection only: declares the largest level and A/B degrees that will be
  // requested. Coefficient calls do this automatically; growing the bounds
  // clears the table.
  void reserve_selection(int max_level, int max_a_degree, int max_b_degree);

  S g(int m, int u, const std::vector<int>& a, const std::vector<int>& b, const std::vector<int>& r);
  S g(const GEntry& e) { return g(e.m, e.u, e.a, e.b, e.r); }
  S level_contribution(int m, int u, const SampleConfig& sample);
  S coefficient(int M, const SampleConfig& sample);
  std::vector<S> coefficients(int M, const SampleConfig& sample);

  std::size_t table_size() const;
  void for_each_entry(const std::function<void(const GEntry&, const S&)>& fn) const;
  void clear();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

extern template class GEngine<Rational>;
extern template class GEngine<long double>;

enum class Arithmetic { kExact, kFloat, kAuto };
enum class ApproxMode { kOff, kOn, kAuto };

struct ExpansionOptions {
  Arithmetic arithmetic = Arithmetic::kAuto;
  ApproxMode approx = ApproxMode::kAuto;
  EngineOptions engine;
};

// Resolves kAuto: approximation on for n > 12.
bool resolve_approx(ApproxMode mode, const SampleConfig& sample);
// Resolves kAuto: exact for neutral models when n <= 8 and M <= 4.
bool resolve_exact(Arithmetic mode, const SampleConfig& sample, int M, const ModelParams& params);

struct SeriesExpansion {
  SampleConfig sample;
  // q_0..q_M. In float mode each entry is the exact binary value of the long double result.
  std::vector<Rational> coeffs;
  bool exact = true;
  bool approx_g0 = false;
  std::string model_fingerprint;

  int M() const { return static_cast<int>(coeffs.size()) - 1; }
  std::vector<long double> values() const;
};

SeriesExpansion expand(const SampleConfig& sample, const ModelParams& params, int M, const ExpansionOptions& opts = {});

// Expansion with a caller-owned engine, so tables are shared across samples.
SeriesExpansion expand_with(GEngine<Rational>& engine, const SampleConfig& sample, int M);
SeriesExpansion expand_with(GEngine<long double>& engine, const SampleConfig& sample, int M);

// sum_{k <= M} q_k / rho^k. rho must be positive; rho = +inf gives q_0.
long double partial_sum(const std::vector<long double>& coeffs, long double rho);
Rational partial_sum_exact(const std::vector<Rational>& coeffs, const Rational& rho);

struct OtrResult {
  int M_used = 0;
  long double value = 0;
};
// Truncates at the smallest-magnitude term |q_k / rho^k|, smallest index on ties.
OtrResult otr_truncate(const std::vector<long double>& coeffs, long double rho);

}  // namespace twolocus
