#include <doctest.h>

#include <algorithm>
#include <random>

#include "twolocus/polynomial.hpp"

using namespace twolocus;

namespace {

Poly poly(std::initializer_list<Rational> c) { return Poly(std::vector<Rational>(c)); }

Poly from_roots(const std::vector<Rational>& roots) {
  Poly p(Rational(1));
  for (const auto& r : roots) p *= poly({-r, Rational(1)});
  return p;
}

}  // namespace

TEST_CASE("arithmetic and division") {
  Poly p = poly({1, 2, 3});
  Poly q = poly({-1, 1});
  Poly quo, rem;
  (p * q + Poly(Rational(5))).divmod(q, quo, rem);
  CHECK(quo == p);
  CHECK(rem == Poly(Rational(5)));
  CHECK((p - p).is_zero());
  CHECK((p - p).degree() == -1);
  CHECK(p.derivative() == poly({2, 6}));
  CHECK(p.reversed(2) == poly({3, 2, 1}));
  CHECK(poly({0, 0, 4}).valuation() == 2);
  CHECK(poly({0, 0, 4}).shift_down(2) == Poly(Rational(4)));
  CHECK(p.eval(Rational(2)) == 17);
  CHECK(p.eval(2.0L) == doctest::Approx(17.0));
}

TEST_CASE("gcd of products with shared factors") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto r = [&] {
      Rational v(static_cast<long>(rng() % 21) - 10, 1 + static_cast<long>(rng() % 4));
      v.canonicalize();
      return v;
    };
    Rational s1 = r(), s2 = r(), a = r(), b = r() + 100;
    Poly common = from_roots({s1, s2});
    Poly g = poly_gcd(common * from_roots({a}), common * from_roots({b}));
    CHECK(g == common.monic());
    Poly qq, rr;
    (common * from_roots({a})).divmod(g, qq, rr);
    CHECK(rr.is_zero());
  }
  CHECK(poly_gcd(Poly(), Poly()).is_zero());
}

TEST_CASE("nonnegative roots of products of known factors") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 60; ++t) {
    std::vector<Rational> roots;
    int k = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < k; ++i) {
      Rational v(static_cast<long>(rng() % 2001) - 1000, 1 + static_cast<long>(rng() % 97));
      v.canonicalize();
      roots.push_back(v);
    }
    // An irreducible quadratic does not add real roots.
    Poly p = from_roots(roots) * poly({1, 0, 1}) * Rational(static_cast<long>(1 + rng() % 9));
    std::vector<Rational> expect;
    for (const auto& r : roots)
      if (r >= 0) expect.push_back(r);
    std::sort(expect.begin(), expect.end());
    expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
    Rational width(1, 1000000);
    auto got = nonnegative_roots(p, width);
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].lo <= expect[i]);
      CHECK(got[i].hi >= expect[i]);
      CHECK(got[i].hi - got[i].lo <= width);
    }
  }
}

TEST_CASE("irrational root enclosure") {
  Poly p({-2, 0, 1});
  auto roots = nonnegative_roots(p, Rational(1, 1 << 30));
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].value() == doctest::Approx(1.41421356237).epsilon(1e-9));
  CHECK(roots[0].lo * roots[0].lo <= 2);
  CHECK(roots[0].hi * roots[0].hi >= 2);
}

TEST_CASE("sturm counts") {
  Poly p = from_roots({Rational(-1), Rational(1, 2), Rational(2), Rational(3)});
  CHECK(sturm_count(p, Rational(-5), Rational(5)) == 4);
  CHECK(sturm_count(p, Rational(0), Rational(2)) == 2);  // (0, 2] holds 1/2 and 2
  CHECK(sturm_count(p, Rational(2), Rational(3)) == 1);
  CHECK(sturm_count(p * p, Rational(-5), Rational(5)) == 4);
}

TEST_CASE("rational functions reduce to a canonical form") {
  Poly x1 = from_roots({Rational(1)});
  RationalFunction f(x1 * poly({2, 3}), x1 * poly({4, 2}));
  CHECK(f.den().leading() == 1);
  CHECK(f.den().degree() == 1);
  CHECK(f.eval(Rational(0)) == Rational(1, 2));
  auto x = RationalFunction::variable();
  auto g = (x + Rational(1)) / (x * x - Rational(1));
  CHECK(g == RationalFunction(Poly(Rational(1)), poly({-1, 1})));
  CHECK((g - g).is_zero());
  CHECK((g * (x - Rational(1))) == RationalFunction(Rational(1)));
  CHECK_THROWS((x / RationalFunction(Rational(0))));
}
