#include <doctest.h>

#include <cmath>
#include <random>

#include "twolocus/errors.hpp"
#include "twolocus/pade.hpp"

using namespace twolocus;

namespace {

Poly poly(std::initializer_list<Rational> c) { return Poly(std::vector<Rational>(c)); }

Rational rat(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

// Maclaurin coefficients of A/B, B(0) = 1.
std::vector<Rational> series_of(const Poly& A, const Poly& B, int n) {
  std::vector<Rational> c(n + 1);
  for (int k = 0; k <= n; ++k) {
    Rational v = A.coeff(k);
    for (int j = 1; j <= k; ++j) v -= B.coeff(j) * c[k - j];
    c[k] = v;
  }
  return c;
}

}  // namespace

TEST_CASE("order conditions hold on random series") {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    int M = 1 + static_cast<int>(rng() % 7);
    std::vector<Rational> q;
    for (int k = 0; k <= M; ++k) q.push_back(rat(static_cast<long>(rng() % 41) - 20, 1 + static_cast<long>(rng() % 6)));
    if (q[0] == 0) q[0] = 1;
    for (int V = 0; V <= M; ++V) {
      int U = M - V;
      try {
        auto p = pade_from_series(q, U, V);
        CHECK(p.series(M) == q);
        CHECK(p.B().coeff(0) == 1);
        CHECK(p.A().degree() <= U);
        CHECK(p.B().degree() <= V);
        ++checked;
      } catch (const DegenerateTableError& e) {
        CHECK(e.max_solvable_v() < V);
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("rational series are recovered exactly") {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 40; ++t) {
    int da = static_cast<int>(rng() % 3), db = 1 + static_cast<int>(rng() % 3);
    std::vector<Rational> a, b = {Rational(1)};
    for (int i = 0; i <= da; ++i) a.push_back(rat(1 + static_cast<long>(rng() % 9), 1 + static_cast<long>(rng() % 5)));
    for (int i = 1; i <= db; ++i) b.push_back(rat(static_cast<long>(rng() % 19) - 9, 1 + static_cast<long>(rng() % 5)));
    Poly A(a), B(b);
    Poly g = poly_gcd(A, B);
    if (g.degree() > 0 || B.degree() < db) continue;
    auto q = series_of(A, B, da + db + 2);
    auto p = pade_from_series(q, da + 1, db + 1);
    CHECK(p.A() == A);
    CHECK(p.B() == B);
    CHECK(p.series(da + db + 2) == q);
  }
}

TEST_CASE("degenerate table") {
  std::vector<Rational> q = {Rational(1), Rational(0), Rational(1)};
  try {
    pade_from_series(q, 1, 1);
    FAIL("expected a degenerate table");
  } catch (const DegenerateTableError& e) {
    CHECK(e.max_solvable_v() == 0);
  }
  CHECK_THROWS_AS(pade_from_series(q, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(pade_from_series(q, -1, 1), InvalidArgument);
  CHECK_THROWS_AS(staircase({}), InvalidArgument);
  auto p = staircase({Rational(2)});
  CHECK(p.U() == 0);
  CHECK(p.V() == 0);
  CHECK(p.evaluate(5) == 2);
}

TEST_CASE("zero series") {
  auto p = pade_from_series({0, 0, 0}, 1, 1);
  CHECK(p.A().is_zero());
  CHECK(p.B() == Poly(Rational(1)));
  CHECK(p.evaluate(3) == 0);
}

TEST_CASE("roots and evaluation in rho") {
  // (1 - 50x) / (1 - 20x) = (rho - 50) / (rho - 20)
  Poly A = poly({1, -50}), B = poly({1, -20});
  auto p = pade_from_series(series_of(A, B, 2), 1, 1);
  REQUIRE(p.roots().numerator.size() == 1);
  REQUIRE(p.roots().denominator.size() == 1);
  CHECK(p.roots().numerator[0].value() == doctest::Approx(50));
  CHECK(p.roots().denominator[0].value() == doctest::Approx(20));
  CHECK(static_cast<double>(p.evaluate(100)) == doctest::Approx(50.0 / 80));
  CHECK(static_cast<double>(p.evaluate(0.5L)) == doctest::Approx(49.5 / 19.5));
  CHECK(p.evaluate(INFINITY) == 1);
  CHECK(p.evaluate_exact(Rational(100)) == rat(5, 8));
  CHECK_THROWS_AS(p.evaluate(20), PoleError);
  CHECK_THROWS_AS(p.evaluate_exact(Rational(20)), PoleError);
  CHECK_THROWS_AS(p.evaluate(-1), InvalidArgument);
  CHECK(p.label() == "[1/1]");
  auto wide = root_report(p, Rational(1, 10));
  CHECK(wide.numerator[0].hi - wide.numerator[0].lo <= rat(1, 10));
}

TEST_CASE("defect window rejects approximants with nearby roots") {
  // [1/1] has a numerator root at rho = 50; [0/1] = 1/(1 + 51x) has none.
  auto q = series_of(poly({1, -50}), poly({1, 1}), 2);
  auto r = defect_heuristic(q, 50, 25);
  CHECK(r.M_used == 1);
  CHECK_FALSE(r.fallback);
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("numerator") != std::string::npos);
  // Away from the window the full staircase is kept.
  auto far = defect_heuristic(q, 500, 25);
  CHECK(far.M_used == 2);
  CHECK(far.notes.empty());
}

TEST_CASE("defect heuristic falls back to the leading term") {
  std::vector<Rational> q = {Rational(1), Rational(50)};
  auto r = defect_heuristic(q, 40, 25);
  CHECK(r.fallback);
  CHECK(r.M_used == 0);
  CHECK(r.approximant.evaluate(40) == 1);
  CHECK(r.notes[0].find("denominator") != std::string::npos);
  CHECK_THROWS_AS(defect_heuristic(q, 40, 0), InvalidArgument);
  CHECK_THROWS_AS(defect_heuristic({}, 40, 1), InvalidArgument);
}

TEST_CASE("defect heuristic skips degenerate orders") {
  std::vector<Rational> q = {Rational(1), Rational(0), Rational(1)};
  auto r = defect_heuristic(q, 50, 25);
  CHECK(r.M_used == 1);
  CHECK(r.notes[0].find("degenerate") != std::string::npos);
}
