#pragma once

#include <string>
#include <vector>

#include "twolocus/model.hpp"

namespace twolocus {

// Dense univariate polynomial with rational coefficients, lowest degree first.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<Rational> coeffs);
  explicit Poly(const Rational& constant);
  static Poly monomial(const Rational& coeff, int degree);
  static Poly x() { return monomial(Rational(1), 1); }

  int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero
  bool is_zero() const { return c_.empty(); }
  const std::vector<Rational>& coeffs() const { return c_; }
  Rational coeff(int i) const { return i >= 0 && i < static_cast<int>(c_.size()) ? c_[i] : Rational(0); }
  const Rational& leading() const { return c_.back(); }

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator-() const;
  Poly operator*(const Poly& o) const;
  Poly operator*(const Rational& s) const;
  Poly& operator+=(const Poly& o) { return *this = *this + o; }
  Poly& operator-=(const Poly& o) { return *this = *this - o; }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }
  bool operator==(const Poly& o) const { return c_ == o.c_; }
  bool operator!=(const Poly& o) const { return !(c_ == o.c_); }

  // Euclidean division; divisor must be nonzero.
  void divmod(const Poly& d, Poly& q, Poly& r) const;
  Poly derivative() const;
  Poly monic() const;
  // Coefficients reversed against degree n: x^n p(1/x).
  Poly reversed(int n) const;
  // Lowest power of x dividing p (0 if p(0) != 0).
  int valuation() const;
  Poly shift_down(int k) const;

  Rational eval(const Rational& x) const;
  long double eval(long double x) const;
  int sign_at(const Rational& x) const;

  std::string to_string() const;

 private:
  void trim();
  std::vector<Rational> c_;
};

Poly poly_gcd(Poly a, Poly b);  // monic; gcd(0,0) = 0

// Ratio of polynomials in one variable, kept reduced with a monic denominator.
class RationalFunction {
 public:
  RationalFunction() : num_(), den_(Rational(1)) {}
  RationalFunction(const Rational& c) : num_(c), den_(Rational(1)) {}  // NOLINT
  RationalFunction(Poly num, Poly den);
  static RationalFunction variable() { return RationalFunction(Poly::x(), Poly(Rational(1))); }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }

  RationalFunction operator+(const RationalFunction& o) const;
  RationalFunction operator-(const RationalFunction& o) const;
  RationalFunction operator-() const;
  RationalFunction operator*(const RationalFunction& o) const;
  RationalFunction operator/(const RationalFunction& o) const;
  RationalFunction& operator+=(const RationalFunction& o) { return *this = *this + o; }
  RationalFunction& operator-=(const RationalFunction& o) { return *this = *this - o; }
  RationalFunction& operator*=(const RationalFunction& o) { return *this = *this * o; }
  RationalFunction& operator/=(const RationalFunction& o) { return *this = *this / o; }
  bool operator==(const RationalFunction& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const RationalFunction& o) const { return !(*this == o); }

  Rational eval(const Rational& x) const;
  int total_degree() const { return num_.degree() + den_.degree(); }
  std::string to_string() const;

 private:
  Poly num_;
  Poly den_;
};

// Interval [lo, hi] holding exactly one root; lo == hi for a root hit exactly.
struct RootEnclosure {
  Rational lo;
  Rational hi;
  long double value() const;
};

// Distinct nonnegative real roots, isolated by Sturm sequences and refined by
// bisection until hi - lo <= width. Ascending.
std::vector<RootEnclosure> nonnegative_roots(const Poly& p, const Rational& width);

// Number of distinct real roots in (lo, hi].
int sturm_count(const Poly& p, const Rational& lo, const Rational& hi);

}  // namespace twolocus
