#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "twolocus/errors.hpp"
#include "twolocus/exact.hpp"

using namespace twolocus;

namespace {

Rational rat(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

ModelParams non_pim() {
  MutationModel a(rat(1, 2), {rat(1, 4), rat(3, 4), rat(2, 3), rat(1, 3)}, 2);
  MutationModel b(rat(1, 5), {rat(0, 1), rat(1, 1), rat(1, 1), rat(0, 1)}, 2);
  return ModelParams(a, b);
}

ModelParams mixed() {
  return ModelParams(MutationModel::symmetric_pim(3, rat(3, 4)), MutationModel(rat(1, 3), {rat(2, 3), rat(1, 3), rat(2, 3), rat(1, 3)}, 2));
}

SampleConfig transpose(const SampleConfig& s) {
  std::vector<int> c(s.K() * s.L());
  for (int i = 0; i < s.K(); ++i)
    for (int j = 0; j < s.L(); ++j) c[j * s.K() + i] = s.c(i, j);
  return SampleConfig(s.b(), s.a(), c);
}

}  // namespace

TEST_CASE("boundary values") {
  auto params = non_pim();
  Rational rho = rat(7, 3);
  ExactSolver<Rational> solver(params, rho);
  // stationary distributions of the two chains
  std::vector<Rational> pa = {rat(8, 17), rat(9, 17)}, pb = {rat(1, 2), rat(1, 2)};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      SampleConfig c(2, 2), ab(2, 2), a(2, 2);
      c.set_c(i, j, 1);
      ab.set_a(i, 1);
      ab.set_b(j, 1);
      a.set_a(i, 1);
      CHECK(solver.q(c) == pa[i] * pb[j]);
      CHECK(solver.q(ab) == pa[i] * pb[j]);
      CHECK(solver.q(a) == pa[i]);
    }
  CHECK(solver.q(SampleConfig(2, 2)) == 1);
}

TEST_CASE("class solver agrees with the full linear system") {
  for (const auto& params : {ModelParams::paper_pim(), non_pim(), mixed()}) {
    Rational rho = rat(3, 2);
    int delta = params.locus_a().K() == 3 ? 3 : 4;
    auto sys = build_system<Rational>(delta, params, rho);
    auto x = solve_system(sys);
    ExactSolver<Rational> solver(params, rho);
    REQUIRE(x.size() == sys.unknowns.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      INFO(sys.unknowns[i].to_string());
      CHECK(solver.q(sys.unknowns[i]) == x[i]);
    }
    CHECK(sys.index_of(sys.unknowns.back()) == static_cast<int>(sys.unknowns.size()) - 1);
  }
}

TEST_CASE("symbolic solution evaluates to the numeric one") {
  std::mt19937_64 rng(2);
  for (const auto& params : {ModelParams::paper_pim(), non_pim()}) {
    // symbolic elimination on non-PIM classes grows quickly with the sample
    int max_n = params.locus_b().is_pim() ? 3 : 2;
    for (int t = 0; t < 12; ++t) {
      auto s = oracle::random_config(rng, 2, 2, max_n);
      auto f = exact_q_rational(s, params);
      Rational rho = rat(1 + static_cast<long>(rng() % 200), 1 + static_cast<long>(rng() % 7));
      CHECK(f.eval(rho) == exact_q_numeric(s, params, rho));
      CHECK(f.eval(Rational(0)) == exact_q_numeric(s, params, Rational(0)));
      long double fl = exact_q_float(s, params, to_long_double(rho));
      CHECK(static_cast<double>(fl) == doctest::Approx(static_cast<double>(to_long_double(f.eval(rho)))).epsilon(1e-13));
    }
  }
}

TEST_CASE("swapping the loci leaves q unchanged") {
  auto p = mixed();
  ModelParams swapped(p.locus_b(), p.locus_a());
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    auto s = oracle::random_config(rng, 3, 2, 4);
    CHECK(exact_q_numeric(s, p, rat(5, 2)) == exact_q_numeric(transpose(s), swapped, rat(5, 2)));
  }
}

TEST_CASE("sampling probabilities are normalized") {
  for (const auto& params : {ModelParams::paper_pim(), non_pim()})
    for (const auto& rho : {Rational(0), Rational(1), Rational(100), rat(7, 3)})
      for (int n = 1; n <= 3; ++n) CHECK(total_probability(n, params, rho) == 1);
  CHECK(total_probability(2, mixed(), rat(1, 2)) == 1);
  CHECK_THROWS_AS(total_probability(-1, non_pim(), Rational(1)), InvalidArgument);
}

TEST_CASE("marginal consistency across sample sizes") {
  // q(c) = sum over a new haplotype (k, l) of q(c + e_kl)
  auto params = non_pim();
  ExactSolver<Rational> solver(params, rat(9, 4));
  for (const auto& s : enumerate_samples(2, 2, 2)) {
    Rational up = 0;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        auto t = s;
        t.set_c(k, l, t.c(k, l) + 1);
        up += solver.q(t);
      }
    CHECK(up == solver.q(s));
  }
}

TEST_CASE("unlinked limit") {
  auto o = oracle::paper();
  auto params = ModelParams::paper_pim();
  for (const auto& s : {SampleConfig::parse("c=[[2,1],[0,1]]"), SampleConfig::parse("a=[1,0];b=[0,2];c=[[1,0],[0,1]]")}) {
    auto mac = maclaurin_in_inverse_rho(exact_q_rational(s, params), 1);
    CHECK(mac[0] == oracle::q0(s, o));
    CHECK(mac[1] == oracle::q1(s, o));
    long double far = exact_q_float(s, params, 1e8L);
    long double q0 = to_long_double(oracle::q0(s, o));
    CHECK(std::fabs(far - q0) <= 1e-6L * q0);
  }
}

TEST_CASE("inverse-rho form") {
  auto x = RationalFunction::variable();
  auto f = (x + Rational(2)) / (RationalFunction(Rational(3)) * x + Rational(1));
  auto [num, den] = to_inverse_rho(f);
  // (1 + 2y) / (3 + y) with y = 1/rho after clearing rho
  CHECK(num.eval(Rational(0)) / den.eval(Rational(0)) == rat(1, 3));
  auto mac = maclaurin_in_inverse_rho(f, 2);
  CHECK(mac[0] == rat(1, 3));
  CHECK(mac[1] == rat(5, 9));
  CHECK(mac[2] == rat(-5, 27));
  CHECK_THROWS_AS(maclaurin_in_inverse_rho(x, 1), NumericError);
}

TEST_CASE("configuration enumeration by length") {
  auto all = enumerate_configs_of_length(2, 2, 2);
  // a+b+2c = 2: two of a/b (10 ways among 4 cells) plus one c cell (4)
  CHECK(all.size() == 14u);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(canonical_key(all[i - 1]) < canonical_key(all[i]));
  CHECK_THROWS_AS(enumerate_configs_of_length(-1, 2, 2), InvalidArgument);
}

TEST_CASE("exact solver limits and rejections") {
  ExactSolver<Rational> small(ModelParams::paper_pim(), Rational(1), 5, 3);
  CHECK_THROWS_AS(small.q(SampleConfig::parse("c=[[3,2],[2,3]]")), CapacityError);
  CHECK_THROWS_AS(ExactSolver<Rational>(ModelParams::paper_pim(), Rational(-1)), InvalidArgument);
  CHECK_THROWS_AS(ExactSolver<Rational>(ModelParams::paper_pim().with_selection({0, 1, 1, 0}), Rational(1)),
                  UnsupportedError);
  ExactSolver<Rational> ok(ModelParams::paper_pim(), Rational(1));
  CHECK_THROWS_AS(ok.q(SampleConfig::parse("c=[[1,0,0],[0,1,0]]")), InvalidArgument);
  CHECK_THROWS_AS(build_system<Rational>(0, ModelParams::paper_pim(), Rational(1)), InvalidArgument);
  CHECK_THROWS_AS(build_system<Rational>(6, ModelParams::paper_pim(), Rational(1), 10), CapacityError);
}
