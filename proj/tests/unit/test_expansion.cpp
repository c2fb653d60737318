#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "twolocus/errors.hpp"
#include "twolocus/exact.hpp"
#include "twolocus/expansion.hpp"

using namespace twolocus;

namespace {

Rational rat(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

ModelParams pim_model(const oracle::Pim& o) {
  auto full = [](const std::vector<Rational>& P) {
    std::vector<Rational> out;
    for (std::size_t i = 0; i < P.size(); ++i) out.insert(out.end(), P.begin(), P.end());
    return out;
  };
  return ModelParams(MutationModel(o.theta_a, full(o.Pa), static_cast<int>(o.Pa.size())),
                     MutationModel(o.theta_b, full(o.Pb), static_cast<int>(o.Pb.size())));
}

oracle::Pim skewed() {
  return {rat(3, 4), rat(1, 3), {rat(1, 5), rat(3, 10), rat(1, 2)}, {rat(2, 3), rat(1, 3)}};
}

std::vector<int> random_split(std::mt19937_64& rng, int total, int cells) {
  std::vector<int> v(cells, 0);
  for (int k = 0; k < total; ++k) ++v[rng() % cells];
  return v;
}

}  // namespace

TEST_CASE("zeroth and first order match the closed forms") {
  for (const auto& o : {oracle::paper(), skewed()}) {
    auto params = pim_model(o);
    GEngine<Rational> engine(params);
    const int K = static_cast<int>(o.Pa.size()), L = static_cast<int>(o.Pb.size());
    for (const auto& s : oracle::all_configs(K == 2 ? 5 : 4, K, L)) {
      auto q = engine.coefficients(1, s);
      CHECK(q[0] == oracle::q0(s, o));
      CHECK(q[1] == oracle::q1(s, o));
    }
  }
}

TEST_CASE("odd levels vanish") {
  EngineOptions opts;
  opts.compute_odd_levels = true;
  GEngine<Rational> engine(ModelParams::paper_pim(), opts);
  std::mt19937_64 rng(99);
  for (int t = 0; t < 120; ++t) {
    int m = static_cast<int>(rng() % 4), u = static_cast<int>(rng() % 5);
    if ((m + u) % 2 == 0) ++u;
    auto r = random_split(rng, m, 4);
    auto a = random_split(rng, static_cast<int>(rng() % 4), 2);
    auto b = random_split(rng, static_cast<int>(rng() % 4), 2);
    CHECK(engine.g(m, u, a, b, r) == 0);
  }
}

TEST_CASE("series agrees with the expansion of the exact solution") {
  for (const auto& o : {oracle::paper(), skewed()}) {
    auto params = pim_model(o);
    GEngine<Rational> engine(params);
    const int K = static_cast<int>(o.Pa.size()), L = static_cast<int>(o.Pb.size());
    for (int len = 2; len <= 4; ++len)
      for (const auto& s : enumerate_configs_of_length(len, K, L)) {
        if (K == 3 && len == 4 && s.c_total() < 2) continue;
        auto f = exact_q_rational(s, params);
        auto mac = maclaurin_in_inverse_rho(f, 2);
        auto q = engine.coefficients(2, s);
        INFO(s.to_string());
        for (int k = 0; k <= 2; ++k) CHECK(q[k] == mac[k]);
      }
  }
}

TEST_CASE("general mutation path matches the PIM path") {
  auto params = pim_model(skewed());
  EngineOptions gen;
  gen.force_general_mutation = true;
  GEngine<Rational> fast(params), slow(params, gen);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 25; ++t) {
    auto s = oracle::random_config(rng, 3, 2, 5);
    CHECK(fast.coefficients(2, s) == slow.coefficients(2, s));
  }
}

TEST_CASE("non-PIM mutation agrees with the exact solution") {
  MutationModel a(rat(1, 2), {rat(1, 4), rat(3, 4), rat(2, 3), rat(1, 3)}, 2);
  MutationModel b(rat(1, 5), {rat(0, 1), rat(1, 1), rat(1, 1), rat(0, 1)}, 2);
  ModelParams params(a, b);
  GEngine<Rational> engine(params);
  for (int len = 2; len <= 3; ++len)
    for (const auto& s : enumerate_configs_of_length(len, 2, 2)) {
      auto mac = maclaurin_in_inverse_rho(exact_q_rational(s, params), 2);
      auto q = engine.coefficients(2, s);
      INFO(s.to_string());
      for (int k = 0; k <= 2; ++k) CHECK(q[k] == mac[k]);
    }
}

TEST_CASE("floating point engine tracks the exact engine") {
  auto params = pim_model(skewed());
  GEngine<Rational> ex(params);
  GEngine<long double> fl(params);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    auto s = oracle::random_config(rng, 3, 2, 6);
    auto qe = ex.coefficients(3, s);
    auto qf = fl.coefficients(3, s);
    for (int k = 0; k <= 3; ++k) {
      long double e = to_long_double(qe[k]);
      CHECK(std::fabs(qf[k] - e) <= 1e-14L * std::fabs(e) + 1e-300L);
    }
  }
}

TEST_CASE("approximation leaves the first two coefficients alone") {
  auto s = SampleConfig::parse("c=[[3,2],[1,2]]");
  ExpansionOptions off, on;
  off.approx = ApproxMode::kOff;
  on.approx = ApproxMode::kOn;
  off.arithmetic = on.arithmetic = Arithmetic::kExact;
  auto a = expand(s, ModelParams::paper_pim(), 3, off);
  auto b = expand(s, ModelParams::paper_pim(), 3, on);
  CHECK(a.coeffs[0] == b.coeffs[0]);
  CHECK(a.coeffs[1] == b.coeffs[1]);
  CHECK(a.coeffs[2] != b.coeffs[2]);
  CHECK(b.approx_g0);
  CHECK_FALSE(a.approx_g0);
}

TEST_CASE("auto switches") {
  auto small = SampleConfig::parse("c=[[2,1],[1,2]]");
  auto big = SampleConfig::parse("c=[[5,4],[2,2]]");
  CHECK_FALSE(resolve_approx(ApproxMode::kAuto, small));
  CHECK(resolve_approx(ApproxMode::kAuto, big));
  auto p = ModelParams::paper_pim();
  CHECK(resolve_exact(Arithmetic::kAuto, small, 4, p));
  CHECK_FALSE(resolve_exact(Arithmetic::kAuto, small, 5, p));
  CHECK_FALSE(resolve_exact(Arithmetic::kAuto, big, 2, p));
  CHECK_THROWS_AS(resolve_exact(Arithmetic::kExact, small, 2, p.with_selection({0, 1, 1, 0})), UnsupportedError);
  auto e = expand(small, p, 2);
  CHECK(e.exact);
  CHECK(e.M() == 2);
  CHECK_FALSE(e.model_fingerprint.empty());
}

TEST_CASE("partial sums and optimal truncation") {
  std::vector<long double> q = {1, -4, 10, -100, 5000};
  CHECK(partial_sum(q, INFINITY) == 1);
  CHECK(static_cast<double>(partial_sum(q, 10)) == doctest::Approx(1 - 0.4 + 0.1 - 0.1 + 0.5));
  CHECK(partial_sum_exact({1, -4, 10}, Rational(2)) == rat(3, 2));
  CHECK_THROWS_AS(partial_sum(q, 0), InvalidArgument);
  // magnitudes at rho = 10: 1, 0.4, 0.1, 0.1, 0.5; first minimum wins
  auto r = otr_truncate(q, 10);
  CHECK(r.M_used == 2);
  CHECK(static_cast<double>(r.value) == doctest::Approx(0.7));
  CHECK(otr_truncate(q, 1000).M_used == 4);
  CHECK_THROWS_AS(otr_truncate({}, 1), InvalidArgument);
}

TEST_CASE("engine input validation") {
  GEngine<Rational> engine(ModelParams::paper_pim());
  CHECK_THROWS_AS(engine.g(1, 0, {1, 0}, {0, 0}, {0, 0, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(engine.g(0, 0, {1}, {0, 0}, {0, 0, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(engine.coefficient(-1, SampleConfig::parse("c=[[1,0],[0,1]]")), InvalidArgument);
  CHECK_THROWS_AS(engine.coefficient(1, SampleConfig::parse("c=[[1,0,0],[0,1,0]]")), InvalidArgument);
  EngineOptions tiny;
  tiny.max_entries = 10;
  GEngine<Rational> small(ModelParams::paper_pim(), tiny);
  CHECK_THROWS_AS(small.coefficients(4, SampleConfig::parse("c=[[3,2],[1,2]]")), CapacityError);
}
