#pragma once

#include <memory>
#include <string>
#include <vector>

#include "twolocus/model.hpp"
#include "twolocus/polynomial.hpp"

namespace twolocus {

struct RootReport {
  std::vector<RootEnclosure> numerator;
  std::vector<RootEnclosure> denominator;
};

// [U/V] approximant in x = 1/rho. A and B are stored reduced by their gcd
// with B(0) = 1, so their degrees may fall below U and V.
class PadeApproximant {
 public:
  PadeApproximant() = default;
  PadeApproximant(int U, int V, Poly A, Poly B);

  int U() const { return U_; }
  int V() const { return V_; }
  const Poly& A() const { return A_; }
  const Poly& B() const { return B_; }
  std::string label() const;

  // Polynomials in rho after multiplying through by rho^D, D = max(deg A, deg B).
  Poly rho_numerator() const;
  Poly rho_denominator() const;

  // Enclosures of width <= 1e-6, computed once.
  const RootReport& roots() const;

  // rho >= 0, or +inf for the x = 0 limit. Throws PoleError inside a
  // certified denominator-root enclosure.
  long double evaluate(long double rho) const;
  Rational evaluate_exact(const Rational& rho) const;

  // Maclaurin coefficients of A/B in x through order n.
  std::vector<Rational> series(int n) const;

 private:
  int degree_span() const;
  int U_ = 0;
  int V_ = 0;
  Poly A_;
  Poly B_;
  mutable std::shared_ptr<RootReport> roots_;
};

PadeApproximant pade_from_series(const std::vector<Rational>& q, int U, int V);
// [floor(M/2) / ceil(M/2)] from q_0..q_M.
PadeApproximant staircase(const std::vector<Rational>& q);
RootReport root_report(const PadeApproximant& p);
RootReport root_report(const PadeApproximant& p, const Rational& width);

struct DefectResult {
  PadeApproximant approximant;
  int M_used = 0;
  bool fallback = false;  // every M'' >= 1 was rejected
  std::vector<std::string> notes;
};

DefectResult defect_heuristic(const std::vector<Rational>& q, long double rho0, long double eps = 25);

}  // namespace twolocus
