#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "twolocus/errors.hpp"
#include "twolocus/expansion.hpp"
#include "twolocus/onelocus.hpp"

using namespace twolocus;

namespace {

bool close(long double x, long double y, long double rel) { return std::fabs(x - y) <= rel * std::max(std::fabs(x), std::fabs(y)) + 1e-300L; }

std::vector<SampleConfig> samples_up_to(int n_max) {
  std::vector<SampleConfig> out;
  for (int n = 1; n <= n_max; ++n)
    for (const auto& s : enumerate_samples(n, 2, 2)) out.push_back(s);
  return out;
}

}  // namespace

TEST_CASE("first-order term uses the selected one-locus distribution") {
  auto p = ModelParams::paper_pim();
  auto o = oracle::paper();
  for (const auto& sigma : {std::vector<double>{0.5, 1.5, 1.5, -1.0}, std::vector<double>{1e-6, 0, 0, 0}}) {
    GEngine<long double> h(p.with_selection(sigma));
    SelectedLocus A(p.locus_a(), sigma);
    auto qa = [&](const std::vector<int>& n) { return A.moment(n); };
    auto qb = [&](const std::vector<int>& n) { return to_long_double(o.qb(n)); };
    for (const auto& s : samples_up_to(5)) {
      INFO(s.to_string());
      CHECK(close(h.coefficient(1, s), oracle::q1_with(s, qa, qb), 1e-9L));
    }
  }
}

TEST_CASE("zero selection reproduces the neutral table") {
  auto neutral = ModelParams::paper_pim();
  GEngine<long double> g(neutral);
  GEngine<long double> h(neutral.with_selection({0, 0, 0, 0}));
  for (const auto& s : samples_up_to(5)) {
    for (int m = 0; m <= std::min(4, s.c_total()); ++m)
      for (int u = 0; m + u <= 4; u += 1) {
        if ((m + u) % 2) continue;
        INFO(s.to_string() << " m=" << m << " u=" << u);
        CHECK(close(g.level_contribution(m, u, s), h.level_contribution(m, u, s), 1e-12L));
      }
  }
  // entry-by-entry through level 4
  int compared = 0;
  g.for_each_entry([&](const GEntry& e, const long double& v) {
    if (e.m + e.u > 4) return;
    CHECK(close(v, h.g(e), 1e-12L));
    ++compared;
  });
  CHECK(compared > 0);
}

TEST_CASE("weak selection is continuous at zero") {
  auto neutral = ModelParams::paper_pim();
  GEngine<long double> g(neutral);
  GEngine<long double> h(neutral.with_selection({1e-6, -2e-6, -2e-6, 1e-6}));
  for (const auto& s : samples_up_to(5)) {
    auto a = g.coefficients(2, s);
    auto b = h.coefficients(2, s);
    for (int k = 0; k <= 2; ++k) {
      INFO(s.to_string() << " k=" << k);
      CHECK(close(a[k], b[k], 1e-4L));
    }
  }
}

TEST_CASE("leading term factorizes under selection") {
  auto p = ModelParams::paper_pim();
  std::vector<double> sigma = {0.5, 1.5, 1.5, -1.0};
  GEngine<long double> h(p.with_selection(sigma));
  SelectedLocus A(p.locus_a(), sigma);
  auto o = oracle::paper();
  for (const auto& s : samples_up_to(4)) {
    auto rows = s.c_row_sums();
    auto cols = s.c_col_sums();
    std::vector<int> nA = {s.a(0) + rows[0], s.a(1) + rows[1]};
    std::vector<int> nB = {s.b(0) + cols[0], s.b(1) + cols[1]};
    long double expect = A.moment(nA) * to_long_double(o.qb(nB));
    CHECK(close(h.coefficient(0, s), expect, 1e-10L));
  }
}

TEST_CASE("selection keeps odd levels at zero") {
  EngineOptions opts;
  opts.compute_odd_levels = true;
  GEngine<long double> h(ModelParams::paper_pim().with_selection({0.3, 1.0, 1.0, -0.2}), opts);
  h.reserve_selection(5, 6, 6);
  std::mt19937_64 rng(123);
  for (int t = 0; t < 60; ++t) {
    int m = static_cast<int>(rng() % 3), u = static_cast<int>(rng() % 3);
    if ((m + u) % 2 == 0) ++u;
    std::vector<int> r(4, 0), a(2, 0), b(2, 0);
    for (int k = 0; k < m; ++k) ++r[rng() % 4];
    for (int k = 0, n = static_cast<int>(rng() % 3); k < n; ++k) ++a[rng() % 2];
    for (int k = 0, n = static_cast<int>(rng() % 3); k < n; ++k) ++b[rng() % 2];
    CHECK(std::fabs(h.g(m, u, a, b, r)) <= 1e-15L);
  }
}

TEST_CASE("selection model restrictions") {
  auto p = ModelParams::paper_pim().with_selection({0, 1, 1, 0});
  CHECK_THROWS_AS(GEngine<Rational>{p}, UnsupportedError);
  ExpansionOptions ex;
  ex.arithmetic = Arithmetic::kExact;
  CHECK_THROWS_AS(expand(SampleConfig::parse("c=[[1,1],[0,1]]"), p, 1, ex), UnsupportedError);
  auto auto_mode = expand(SampleConfig::parse("c=[[1,1],[0,1]]"), p, 1);
  CHECK_FALSE(auto_mode.exact);
  MutationModel flip(Rational(1), {Rational(0), Rational(1), Rational(1), Rational(0)}, 2);
  CHECK_THROWS_AS(GEngine<long double>(ModelParams(flip, flip, {0, 1, 1, 0})), UnsupportedError);
  auto m3 = MutationModel::symmetric_pim(3, Rational(1, 10));
  CHECK_THROWS_AS(GEngine<long double>(ModelParams(m3, m3, std::vector<double>(9, 0.0))), UnsupportedError);
}
