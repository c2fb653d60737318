#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "twolocus/model.hpp"
#include "twolocus/polynomial.hpp"

namespace twolocus {

// All configurations of a given length a + b + 2c, in ascending canonical-key order.
std::vector<SampleConfig> enumerate_configs_of_length(int length, int K, int L);

// The closed system over every configuration with 1 <= length <= delta.
// Row r reads sum_k coeff_k * q[col_k] = rhs.
template <class F>
struct LinearSystem {
  int K = 0;
  int L = 0;
  int delta = 0;
  std::vector<SampleConfig> unknowns;
  struct Row {
    std::vector<std::pair<int, F>> entries;
    F rhs;
  };
  std::vector<Row> rows;
  int index_of(const SampleConfig& cfg) const;
  std::vector<std::string> keys;  // canonical keys, parallel to unknowns
};

template <class F>
LinearSystem<F> build_system(int delta, const ModelParams& params, const F& rho, std::size_t max_unknowns = 20000);
// Dense solve of the whole system (small delta only).
template <class F>
std::vector<F> solve_system(const LinearSystem<F>& sys);

// Per-class solver. Parent-independent models split the state space by the
// marginal vectors (a + c_A, b + c_B); otherwise by (|a|+|c|, |b|+|c|).
// F is Rational, long double or RationalFunction (rho symbolic).
template <class F>
class ExactSolver {
 public:
  ExactSolver(const ModelParams& params, F rho, std::size_t max_unknowns = 0, std::size_t max_class = 0);
  ~ExactSolver();
  ExactSolver(ExactSolver&&) noexcept;
  F q(const SampleConfig& sample);
  std::size_t unknowns_solved() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

extern template class ExactSolver<Rational>;
extern template class ExactSolver<long double>;
extern template class ExactSolver<RationalFunction>;

Rational exact_q_numeric(const SampleConfig& sample, const ModelParams& params, const Rational& rho);
long double exact_q_float(const SampleConfig& sample, const ModelParams& params, long double rho);
// Rational function of rho, reduced, monic denominator.
RationalFunction exact_q_rational(const SampleConfig& sample, const ModelParams& params);

// Numerator and denominator as polynomials in x = 1/rho (equal degree, monic
// denominator in rho), and the Maclaurin coefficients in x.
std::pair<Poly, Poly> to_inverse_rho(const RationalFunction& f);
std::vector<Rational> maclaurin_in_inverse_rho(const RationalFunction& f, int order);

// Sum over all (0,0,c) with |c| = n of multinomial weight times q.
Rational total_probability(int n, const ModelParams& params, const Rational& rho);

}  // namespace twolocus
