#include "twolocus/polynomial.hpp"

#include <algorithm>
#include <sstream>

#include "twolocus/errors.hpp"

namespace twolocus {

Poly::Poly(std::vector<Rational> coeffs) : c_(std::move(coeffs)) { trim(); }

Poly::Poly(const Rational& constant) {
  if (sgn(constant) != 0) c_.push_back(constant);
}

Poly Poly::monomial(const Rational& coeff, int degree) {
  std::vector<Rational> c(degree + 1, Rational(0));
  c[degree] = coeff;
  return Poly(std::move(c));
}

void Poly::trim() {
  while (!c_.empty() && sgn(c_.back()) == 0) c_.pop_back();
}

Poly Poly::operator+(const Poly& o) const {
  std::vector<Rational> r(std::max(c_.size(), o.c_.size()), Rational(0));
  for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
  return Poly(std::move(r));
}

Poly Poly::operator-(const Poly& o) const {
  std::vector<Rational> r(std::max(c_.size(), o.c_.size()), Rational(0));
  for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] -= o.c_[i];
  return Poly(std::move(r));
}

Poly Poly::operator-() const {
  std::vector<Rational> r(c_);
  for (auto& v : r) v = -v;
  return Poly(std::move(r));
}

Poly Poly::operator*(const Poly& o) const {
  if (is_zero() || o.is_zero()) return Poly();
  std::vector<Rational> r(c_.size() + o.c_.size() - 1, Rational(0));
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (sgn(c_[i]) == 0) continue;
    for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
  }
  return Poly(std::move(r));
}

Poly Poly::operator*(const Rational& s) const {
  if (sgn(s) == 0) return Poly();
  std::vector<Rational> r(c_);
  for (auto& v : r) v *= s;
  return Poly(std::move(r));
}

void Poly::divmod(const Poly& d, Poly& q, Poly& r) const {
  if (d.is_zero()) throw NumericError("polynomial division by zero");
  std::vector<Rational> rem(c_);
  int dd = d.degree();
  int nq = degree() - dd;
  std::vector<Rational> quo(nq >= 0 ? nq + 1 : 0, Rational(0));
  Rational inv_lead = 1 / d.leading();
  for (int k = nq; k >= 0; --k) {
    Rational t = rem[k + dd] * inv_lead;
    quo[k] = t;
    if (sgn(t) == 0) continue;
    for (int j = 0; j <= dd; ++j) rem[k + j] -= t * d.c_[j];
  }
  rem.resize(std::min<std::size_t>(rem.size(), dd > 0 ? dd : 0));
  q = Poly(std::move(quo));
  r = Poly(std::move(rem));
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return Poly();
  std::vector<Rational> r(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i) r[i - 1] = c_[i] * static_cast<long>(i);
  return Poly(std::move(r));
}

Poly Poly::monic() const {
  if (is_zero()) return *this;
  return *this * (Rational(1) / leading());
}

Poly Poly::reversed(int n) const {
  if (degree() > n) throw InternalError("reversal degree below polynomial degree");
  std::vector<Rational> r(n + 1, Rational(0));
  for (int i = 0; i <= degree(); ++i) r[n - i] = c_[i];
  return Poly(std::move(r));
}

int Poly::valuation() const {
  for (std::size_t i = 0; i < c_.size(); ++i)
    if (sgn(c_[i]) != 0) return static_cast<int>(i);
  return 0;
}

Poly Poly::shift_down(int k) const {
  if (k <= 0) return *this;
  if (k >= static_cast<int>(c_.size())) return Poly();
  return Poly(std::vector<Rational>(c_.begin() + k, c_.end()));
}

Rational Poly::eval(const Rational& x) const {
  Rational acc = 0;
  for (int i = degree(); i >= 0; --i) acc = acc * x + c_[i];
  return acc;
}

long double Poly::eval(long double x) const {
  long double acc = 0;
  for (int i = degree(); i >= 0; --i) acc = acc * x + to_long_double(c_[i]);
  return acc;
}

int Poly::sign_at(const Rational& x) const { return sgn(eval(x)); }

std::string Poly::to_string() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int i = 0; i <= degree(); ++i) {
    if (sgn(c_[i]) == 0) continue;
    if (!first) os << " + ";
    os << '(' << c_[i].get_str() << ')';
    if (i == 1) os << "*x";
    if (i > 1) os << "*x^" << i;
    first = false;
  }
  return os.str();
}

Poly poly_gcd(Poly a, Poly b) {
  while (!b.is_zero()) {
    Poly q, r;
    a.divmod(b, q, r);
    a = std::move(b);
    b = r.monic();
  }
  return a.monic();
}

// ------------------------------------------------------------ RationalFunction

RationalFunction::RationalFunction(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw NumericError("rational function with zero denominator");
  if (num_.is_zero()) {
    den_ = Poly(Rational(1));
    return;
  }
  Poly g = poly_gcd(num_, den_);
  if (g.degree() > 0) {
    Poly q, r;
    num_.divmod(g, q, r);
    num_ = q;
    den_.divmod(g, q, r);
    den_ = q;
  }
  Rational lead = den_.leading();
  if (lead != 1) {
    Rational inv = 1 / lead;
    num_ = num_ * inv;
    den_ = den_ * inv;
  }
}

RationalFunction RationalFunction::operator+(const RationalFunction& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  if (den_ == o.den_) return RationalFunction(num_ + o.num_, den_);
  return RationalFunction(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

RationalFunction RationalFunction::operator-(const RationalFunction& o) const { return *this + (-o); }

RationalFunction RationalFunction::operator-() const {
  RationalFunction r = *this;
  r.num_ = -r.num_;
  return r;
}

RationalFunction RationalFunction::operator*(const RationalFunction& o) const {
  if (is_zero() || o.is_zero()) return RationalFunction();
  return RationalFunction(num_ * o.num_, den_ * o.den_);
}

RationalFunction RationalFunction::operator/(const RationalFunction& o) const {
  if (o.is_zero()) throw NumericError("division by zero rational function");
  if (is_zero()) return RationalFunction();
  return RationalFunction(num_ * o.den_, den_ * o.num_);
}

Rational RationalFunction::eval(const Rational& x) const {
  Rational d = den_.eval(x);
  if (sgn(d) == 0) throw PoleError("rational function has a pole at " + x.get_str());
  return num_.eval(x) / d;
}

std::string RationalFunction::to_string() const { return "(" + num_.to_string() + ")/(" + den_.to_string() + ")"; }

// --------------------------------------------------------------------- roots

long double RootEnclosure::value() const { return (to_long_double(lo) + to_long_double(hi)) / 2; }

namespace {

std::vector<Poly> sturm_chain(const Poly& p) {
  std::vector<Poly> chain{p, p.derivative()};
  while (!chain.back().is_zero()) {
    Poly q, r;
    chain[chain.size() - 2].divmod(chain.back(), q, r);
    if (r.is_zero()) break;
    chain.push_back(-r);
  }
  if (chain.back().is_zero()) chain.pop_back();
  return chain;
}

int variations(const std::vector<Poly>& chain, const Rational& x) {
  int count = 0, last = 0;
  for (const Poly& p : chain) {
    int s = p.sign_at(x);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

Poly squarefree(const Poly& p) {
  Poly g = poly_gcd(p, p.derivative());
  if (g.degree() <= 0) return p;
  Poly q, r;
  p.divmod(g, q, r);
  return q;
}

}  // namespace

int sturm_count(const Poly& p, const Rational& lo, const Rational& hi) {
  if (p.degree() <= 0) return 0;
  std::vector<Poly> chain = sturm_chain(squarefree(p));
  return variations(chain, lo) - variations(chain, hi);
}

std::vector<RootEnclosure> nonnegative_roots(const Poly& p_in, const Rational& width) {
  std::vector<RootEnclosure> out;
  if (p_in.degree() <= 0) return out;
  Poly p = squarefree(p_in);
  if (sgn(p.coeff(0)) == 0) {
    out.push_back({Rational(0), Rational(0)});
    p = p.shift_down(1);
  }
  if (p.degree() <= 0) return out;
  // Cauchy bound on root magnitude
  Rational bound = 0;
  for (int i = 0; i < p.degree(); ++i) {
    Rational v = abs(p.coeff(i) / p.leading());
    if (v > bound) bound = v;
  }
  bound += 1;
  std::vector<Poly> chain = sturm_chain(p);
  auto count = [&](const Rational& lo, const Rational& hi) { return variations(chain, lo) - variations(chain, hi); };

  std::vector<std::pair<Rational, Rational>> work{{Rational(0), bound}};
  std::vector<std::pair<Rational, Rational>> isolated;
  while (!work.empty()) {
    auto [lo, hi] = work.back();
    work.pop_back();
    int n = count(lo, hi);
    if (n == 0) continue;
    if (n == 1) {
      isolated.emplace_back(lo, hi);
      continue;
    }
    Rational mid = (lo + hi) / 2;
    work.emplace_back(mid, hi);
    work.emplace_back(lo, mid);
  }
  for (auto [lo, hi] : isolated) {
    // single root in (lo, hi]
    if (p.sign_at(hi) == 0) {
      out.push_back({hi, hi});
      continue;
    }
    while (hi - lo > width) {
      Rational mid = (lo + hi) / 2;
      int s = p.sign_at(mid);
      if (s == 0) {
        lo = hi = mid;
        break;
      }
      if (count(lo, mid) == 1)
        hi = mid;
      else
        lo = mid;
    }
    out.push_back({lo, hi});
  }
  std::sort(out.begin(), out.end(), [](const RootEnclosure& x, const RootEnclosure& y) { return x.lo < y.lo; });
  return out;
}

}  // namespace twolocus
