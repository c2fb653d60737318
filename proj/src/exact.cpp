#include "twolocus/exact.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <absl/container/flat_hash_map.h>

#include "twolocus/errors.hpp"
#include "twolocus/linalg.hpp"
#include "twolocus/onelocus.hpp"

namespace twolocus {

namespace {

std::string key_string(const SampleConfig& s) {
  auto k = canonical_key(s);
  return std::string(k.begin(), k.end());
}

template <class F>
F num(long v) {
  return FieldTraits<F>::from_rational(Rational(v));
}

// Coefficients of one locus, converted once.
template <class F>
struct LocusData {
  int K = 0;
  bool pim = false;
  F theta;
  std::vector<F> P;   // K x K
  std::vector<F> pi;  // stationary
};

template <class F>
LocusData<F> locus_data(const MutationModel& m) {
  LocusData<F> d;
  d.K = m.K();
  d.pim = m.is_pim();
  d.theta = FieldTraits<F>::from_rational(m.theta());
  for (const auto& p : m.P()) d.P.push_back(FieldTraits<F>::from_rational(p));
  for (const auto& p : stationary_vector(m)) d.pi.push_back(FieldTraits<F>::from_rational(p));
  return d;
}

template <class F>
F boundary_value(const SampleConfig& s, const LocusData<F>& A, const LocusData<F>& B) {
  for (int i = 0; i < s.K(); ++i)
    if (s.a(i)) return A.pi[i];
  for (int j = 0; j < s.L(); ++j)
    if (s.b(j)) return B.pi[j];
  for (int i = 0; i < s.K(); ++i)
    for (int j = 0; j < s.L(); ++j)
      if (s.c(i, j)) return A.pi[i] * B.pi[j];
  return F(1);
}

// Emits the right-hand terms of the recursion for s (n >= 2):
//   D q(s) = sum coef * q(target).
// With reduce_X set, parent-independent mutation at that locus is summed out.
template <class F>
F emit_terms(const SampleConfig& s, const LocusData<F>& A, const LocusData<F>& B, const F& rho, bool reduce_a, bool reduce_b,
             const std::function<void(const SampleConfig&, const F&)>& out) {
  const int K = s.K(), L = s.L();
  const int n = s.n();
  const int na = s.a_total() + s.c_total(), nb = s.b_total() + s.c_total();
  F D = num<F>(static_cast<long>(n) * (n - 1)) + A.theta * num<F>(na) + B.theta * num<F>(nb) + rho * num<F>(s.c_total());
  auto rows = s.c_row_sums();
  auto cols = s.c_col_sums();

  for (int i = 0; i < K; ++i) {
    int ai = s.a(i);
    if (ai == 0) continue;
    long coef = static_cast<long>(ai) * (ai - 1 + 2 * rows[i]);
    if (coef) {
      SampleConfig t = s;
      t.set_a(i, ai - 1);
      out(t, num<F>(coef));
    }
  }
  for (int j = 0; j < L; ++j) {
    int bj = s.b(j);
    if (bj == 0) continue;
    long coef = static_cast<long>(bj) * (bj - 1 + 2 * cols[j]);
    if (coef) {
      SampleConfig t = s;
      t.set_b(j, bj - 1);
      out(t, num<F>(coef));
    }
  }
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < L; ++j) {
      int cij = s.c(i, j);
      if (cij >= 2) {
        SampleConfig t = s;
        t.set_c(i, j, cij - 1);
        out(t, num<F>(static_cast<long>(cij) * (cij - 1)));
      }
    }
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < L; ++j) {
      if (s.a(i) == 0 || s.b(j) == 0) continue;
      SampleConfig t = s;
      t.set_a(i, s.a(i) - 1);
      t.set_b(j, s.b(j) - 1);
      t.set_c(i, j, s.c(i, j) + 1);
      out(t, num<F>(2L * s.a(i) * s.b(j)));
    }

  // locus A mutation
  for (int i = 0; i < K; ++i) {
    if (s.a(i)) {
      if (reduce_a) {
        SampleConfig t = s;
        t.set_a(i, s.a(i) - 1);
        out(t, A.theta * A.P[i] * num<F>(s.a(i)));
      } else {
        for (int k = 0; k < K; ++k) {
          const F& p = A.P[k * K + i];
          if (FieldTraits<F>::is_zero(p)) continue;
          SampleConfig t = s;
          t.set_a(i, s.a(i) - 1);
          t.set_a(k, t.a(k) + 1);
          out(t, A.theta * p * num<F>(s.a(i)));
        }
      }
    }
    for (int j = 0; j < L; ++j) {
      int cij = s.c(i, j);
      if (cij == 0) continue;
      if (reduce_a) {
        SampleConfig t = s;
        t.set_c(i, j, cij - 1);
        t.set_b(j, s.b(j) + 1);
        out(t, A.theta * A.P[i] * num<F>(cij));
      } else {
        for (int k = 0; k < K; ++k) {
          const F& p = A.P[k * K + i];
          if (FieldTraits<F>::is_zero(p)) continue;
          SampleConfig t = s;
          t.set_c(i, j, cij - 1);
          t.set_c(k, j, t.c(k, j) + 1);
          out(t, A.theta * p * num<F>(cij));
        }
      }
    }
  }
  // locus B mutation
  for (int j = 0; j < L; ++j) {
    if (s.b(j)) {
      if (reduce_b) {
        SampleConfig t = s;
        t.set_b(j, s.b(j) - 1);
        out(t, B.theta * B.P[j] * num<F>(s.b(j)));
      } else {
        for (int l = 0; l < L; ++l) {
          const F& p = B.P[l * L + j];
          if (FieldTraits<F>::is_zero(p)) continue;
          SampleConfig t = s;
          t.set_b(j, s.b(j) - 1);
          t.set_b(l, t.b(l) + 1);
          out(t, B.theta * p * num<F>(s.b(j)));
        }
      }
    }
    for (int i = 0; i < K; ++i) {
      int cij = s.c(i, j);
      if (cij == 0) continue;
      if (reduce_b) {
        SampleConfig t = s;
        t.set_c(i, j, cij - 1);
        t.set_a(i, s.a(i) + 1);
        out(t, B.theta * B.P[j] * num<F>(cij));
      } else {
        for (int l = 0; l < L; ++l) {
          const F& p = B.P[l * L + j];
          if (FieldTraits<F>::is_zero(p)) continue;
          SampleConfig t = s;
          t.set_c(i, j, cij - 1);
          t.set_c(i, l, t.c(i, l) + 1);
          out(t, B.theta * p * num<F>(cij));
        }
      }
    }
  }

  if (!FieldTraits<F>::is_zero(rho)) {
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < L; ++j) {
        int cij = s.c(i, j);
        if (cij == 0) continue;
        SampleConfig t = s;
        t.set_c(i, j, cij - 1);
        t.set_a(i, s.a(i) + 1);
        t.set_b(j, s.b(j) + 1);
        out(t, rho * num<F>(cij));
      }
  }
  return D;
}

template <class F>
void check_params(const ModelParams& params) {
  if (params.has_selection()) throw UnsupportedError("the exact solver covers neutral models only");
  if (!params.locus_a().is_irreducible() || !params.locus_b().is_irreducible())
    throw UnsupportedError("the exact solver requires irreducible mutation matrices");
}

template <class F>
bool rho_negative(const F& rho) {
  if constexpr (std::is_same_v<F, Rational>) {
    return sgn(rho) < 0;
  } else if constexpr (std::is_same_v<F, long double>) {
    return !(rho >= 0) || std::isinf(rho);
  } else {
    return false;
  }
}

template <class F>
std::size_t default_unknowns() {
  if constexpr (std::is_same_v<F, long double>) return 4'000'000;
  if constexpr (std::is_same_v<F, Rational>) return 200'000;
  return 5'000;
}

template <class F>
std::size_t default_class() {
  if constexpr (std::is_same_v<F, long double>) return 4000;
  if constexpr (std::is_same_v<F, Rational>) return 700;
  return 120;
}

// c matrices with row sums <= alpha and column sums <= beta.
void enumerate_bounded(int K, int L, std::vector<int>& alpha, std::vector<int>& beta, std::vector<int>& c, int cell,
                       const std::function<void(const std::vector<int>&)>& fn) {
  if (cell == K * L) {
    fn(c);
    return;
  }
  int i = cell / L, j = cell % L;
  int cap = std::min(alpha[i], beta[j]);
  for (int v = 0; v <= cap; ++v) {
    c[cell] = v;
    alpha[i] -= v;
    beta[j] -= v;
    enumerate_bounded(K, L, alpha, beta, c, cell + 1, fn);
    alpha[i] += v;
    beta[j] += v;
  }
  c[cell] = 0;
}

}  // namespace

std::vector<SampleConfig> enumerate_configs_of_length(int length, int K, int L) {
  if (length < 0 || K < 1 || L < 1) throw InvalidArgument("bad configuration length or allele counts");
  std::vector<std::pair<std::string, SampleConfig>> out;
  for (int c = 0; 2 * c <= length; ++c) {
    auto cs = enumerate_onelocus(K * L, c);
    for (int at = 0; at <= length - 2 * c; ++at) {
      int bt = length - 2 * c - at;
      auto as = enumerate_onelocus(K, at);
      auto bs = enumerate_onelocus(L, bt);
      for (const auto& a : as)
        for (const auto& b : bs)
          for (const auto& cc : cs) {
            SampleConfig s(a, b, cc);
            out.emplace_back(key_string(s), s);
          }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<SampleConfig> res;
  res.reserve(out.size());
  for (auto& p : out) res.push_back(std::move(p.second));
  return res;
}

template <class F>
int LinearSystem<F>::index_of(const SampleConfig& cfg) const {
  auto k = key_string(cfg);
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i] == k) return static_cast<int>(i);
  return -1;
}

template <class F>
LinearSystem<F> build_system(int delta, const ModelParams& params, const F& rho, std::size_t max_unknowns) {
  check_params<F>(params);
  if (delta < 1) throw InvalidArgument("system length must be >= 1");
  if (rho_negative(rho)) throw InvalidArgument("rho must be finite and >= 0");
  LinearSystem<F> sys;
  sys.K = params.locus_a().K();
  sys.L = params.locus_b().K();
  sys.delta = delta;
  for (int len = 1; len <= delta; ++len) {
    auto part = enumerate_configs_of_length(len, sys.K, sys.L);
    sys.unknowns.insert(sys.unknowns.end(), part.begin(), part.end());
    if (sys.unknowns.size() > max_unknowns) throw CapacityError("linear system too large", sys.unknowns.size());
  }
  absl::flat_hash_map<std::string, int> index;
  for (const auto& s : sys.unknowns) {
    sys.keys.push_back(key_string(s));
    index[sys.keys.back()] = static_cast<int>(sys.keys.size()) - 1;
  }
  auto A = locus_data<F>(params.locus_a());
  auto B = locus_data<F>(params.locus_b());
  for (std::size_t r = 0; r < sys.unknowns.size(); ++r) {
    const auto& s = sys.unknowns[r];
    typename LinearSystem<F>::Row row;
    row.rhs = F(0);
    if (s.n() <= 1) {
      row.entries.emplace_back(static_cast<int>(r), F(1));
      row.rhs = boundary_value(s, A, B);
      sys.rows.push_back(std::move(row));
      continue;
    }
    std::vector<std::pair<int, F>> acc;
    auto add = [&](int col, const F& v) {
      for (auto& e : acc)
        if (e.first == col) {
          e.second = e.second + v;
          return;
        }
      acc.emplace_back(col, v);
    };
    F D = emit_terms<F>(s, A, B, rho, false, false, [&](const SampleConfig& t, const F& coef) {
      if (t.n() == 0) {
        row.rhs = row.rhs + coef;
        return;
      }
      auto it = index.find(key_string(t));
      if (it == index.end()) throw InternalError("recursion leaves the closed system");
      add(it->second, -coef);
    });
    add(static_cast<int>(r), D);
    std::sort(acc.begin(), acc.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& e : acc)
      if (!FieldTraits<F>::is_zero(e.second)) row.entries.push_back(std::move(e));
    sys.rows.push_back(std::move(row));
  }
  return sys;
}

template <class F>
std::vector<F> solve_system(const LinearSystem<F>& sys) {
  const int N = static_cast<int>(sys.unknowns.size());
  std::vector<F> A(static_cast<std::size_t>(N) * N, F(0));
  std::vector<F> b(N, F(0));
  for (int r = 0; r < N; ++r) {
    for (const auto& e : sys.rows[r].entries) A[static_cast<std::size_t>(r) * N + e.first] = e.second;
    b[r] = sys.rows[r].rhs;
  }
  return dense_solve(std::move(A), std::move(b), N);
}

// ------------------------------------------------------------ class solver

template <class F>
struct ExactSolver<F>::Impl {
  ModelParams params;
  F rho;
  LocusData<F> A, B;
  bool vector_classes = false;
  std::size_t max_unknowns = 0;
  std::size_t max_class = 0;
  std::size_t solved = 0;
  absl::flat_hash_map<std::string, F> memo;

  std::string class_key(const SampleConfig& s) const {
    std::string k;
    if (vector_classes) {
      auto rows = s.c_row_sums();
      auto cols = s.c_col_sums();
      for (int i = 0; i < s.K(); ++i) k.push_back(static_cast<char>(s.a(i) + rows[i]));
      k.push_back('|');
      for (int j = 0; j < s.L(); ++j) k.push_back(static_cast<char>(s.b(j) + cols[j]));
    } else {
      k.push_back(static_cast<char>(s.a_total() + s.c_total()));
      k.push_back('|');
      k.push_back(static_cast<char>(s.b_total() + s.c_total()));
    }
    return k;
  }

  std::vector<SampleConfig> class_members(const SampleConfig& s) const {
    const int K = s.K(), L = s.L();
    std::vector<SampleConfig> out;
    if (vector_classes) {
      auto rows = s.c_row_sums();
      auto cols = s.c_col_sums();
      std::vector<int> alpha(K), beta(L);
      for (int i = 0; i < K; ++i) alpha[i] = s.a(i) + rows[i];
      for (int j = 0; j < L; ++j) beta[j] = s.b(j) + cols[j];
      std::vector<int> al = alpha, be = beta, c(K * L, 0);
      enumerate_bounded(K, L, al, be, c, 0, [&](const std::vector<int>& cc) {
        std::vector<int> a = alpha, b = beta;
        for (int i = 0; i < K; ++i)
          for (int j = 0; j < L; ++j) {
            a[i] -= cc[i * L + j];
            b[j] -= cc[i * L + j];
          }
        out.emplace_back(a, b, cc);
      });
    } else {
      const int nA = s.a_total() + s.c_total(), nB = s.b_total() + s.c_total();
      for (int t = 0; t <= std::min(nA, nB); ++t) {
        auto cs = enumerate_onelocus(K * L, t);
        auto as = enumerate_onelocus(K, nA - t);
        auto bs = enumerate_onelocus(L, nB - t);
        for (const auto& a : as)
          for (const auto& b : bs)
            for (const auto& c : cs) out.emplace_back(a, b, c);
      }
    }
    return out;
  }

  F q(const SampleConfig& s) {
    if (s.n() == 0) return F(1);
    if (s.n() == 1) return boundary_value(s, A, B);
    auto key = key_string(s);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    solve_class(s);
    return memo.at(key);
  }

  void solve_class(const SampleConfig& s) {
    auto members = class_members(s);
    const int N = static_cast<int>(members.size());
    if (static_cast<std::size_t>(N) > max_class) throw CapacityError("exact solver class too large", members.size());
    if (solved + members.size() > max_unknowns) throw CapacityError("exact solver unknown budget exhausted", solved + members.size());
    const std::string ck = class_key(s);
    absl::flat_hash_map<std::string, int> index;
    std::vector<std::string> keys(N);
    for (int i = 0; i < N; ++i) {
      keys[i] = key_string(members[i]);
      index[keys[i]] = i;
    }
    std::vector<F> M(static_cast<std::size_t>(N) * N, F(0));
    std::vector<F> rhs(N, F(0));
    for (int r = 0; r < N; ++r) {
      const auto& m = members[r];
      F* row = &M[static_cast<std::size_t>(r) * N];
      if (m.n() <= 1) {
        row[r] = F(1);
        rhs[r] = boundary_value(m, A, B);
        continue;
      }
      F D = emit_terms<F>(m, A, B, rho, A.pim, B.pim, [&](const SampleConfig& t, const F& coef) {
        if (t.n() >= 2 && class_key(t) == ck) {
          int col = index.at(key_string(t));
          row[col] = row[col] - coef;
        } else {
          rhs[r] = rhs[r] + coef * q(t);
        }
      });
      row[r] = row[r] + D;
    }
    auto x = dense_solve(std::move(M), std::move(rhs), N);
    for (int i = 0; i < N; ++i) memo[keys[i]] = std::move(x[i]);
    solved += members.size();
  }
};

template <class F>
ExactSolver<F>::ExactSolver(const ModelParams& params, F rho, std::size_t max_unknowns, std::size_t max_class)
    : impl_(std::make_unique<Impl>()) {
  check_params<F>(params);
  if (rho_negative(rho)) throw InvalidArgument("rho must be finite and >= 0");
  impl_->params = params;
  impl_->rho = std::move(rho);
  impl_->A = locus_data<F>(params.locus_a());
  impl_->B = locus_data<F>(params.locus_b());
  impl_->vector_classes = impl_->A.pim && impl_->B.pim;
  impl_->max_unknowns = max_unknowns ? max_unknowns : default_unknowns<F>();
  impl_->max_class = max_class ? max_class : default_class<F>();
}

template <class F>
ExactSolver<F>::~ExactSolver() = default;
template <class F>
ExactSolver<F>::ExactSolver(ExactSolver&&) noexcept = default;

template <class F>
F ExactSolver<F>::q(const SampleConfig& sample) {
  if (sample.K() != impl_->A.K || sample.L() != impl_->B.K) throw InvalidArgument("sample allele counts do not match the model");
  if (sample.n() > 250) throw CapacityError("sample too large for the exact solver", static_cast<std::size_t>(sample.n()));
  return impl_->q(sample);
}

template <class F>
std::size_t ExactSolver<F>::unknowns_solved() const {
  return impl_->solved;
}

template class ExactSolver<Rational>;
template class ExactSolver<long double>;
template class ExactSolver<RationalFunction>;

template struct LinearSystem<Rational>;
template struct LinearSystem<RationalFunction>;
template struct LinearSystem<long double>;
template LinearSystem<Rational> build_system(int, const ModelParams&, const Rational&, std::size_t);
template LinearSystem<RationalFunction> build_system(int, const ModelParams&, const RationalFunction&, std::size_t);
template LinearSystem<long double> build_system(int, const ModelParams&, const long double&, std::size_t);
template std::vector<Rational> solve_system(const LinearSystem<Rational>&);
template std::vector<RationalFunction> solve_system(const LinearSystem<RationalFunction>&);
template std::vector<long double> solve_system(const LinearSystem<long double>&);

Rational exact_q_numeric(const SampleConfig& sample, const ModelParams& params, const Rational& rho) {
  ExactSolver<Rational> s(params, rho);
  return s.q(sample);
}

long double exact_q_float(const SampleConfig& sample, const ModelParams& params, long double rho) {
  ExactSolver<long double> s(params, rho);
  return s.q(sample);
}

RationalFunction exact_q_rational(const SampleConfig& sample, const ModelParams& params) {
  ExactSolver<RationalFunction> s(params, RationalFunction::variable());
  return s.q(sample);
}

std::pair<Poly, Poly> to_inverse_rho(const RationalFunction& f) {
  int d = std::max(f.num().degree(), f.den().degree());
  if (d < 0) d = 0;
  Poly n = f.num().is_zero() ? Poly() : f.num().reversed(d);
  Poly m = f.den().reversed(d);
  return {n, m};
}

std::vector<Rational> maclaurin_in_inverse_rho(const RationalFunction& f, int order) {
  if (order < 0) throw InvalidArgument("order must be >= 0");
  auto [n, d] = to_inverse_rho(f);
  Rational d0 = d.coeff(0);
  if (sgn(d0) == 0) throw NumericError("function is unbounded as rho grows");
  std::vector<Rational> c(order + 1);
  for (int k = 0; k <= order; ++k) {
    Rational v = n.coeff(k);
    for (int j = 1; j <= std::min(k, d.degree()); ++j) v -= d.coeff(j) * c[k - j];
    c[k] = v / d0;
  }
  return c;
}

Rational total_probability(int n, const ModelParams& params, const Rational& rho) {
  if (n < 0) throw InvalidArgument("n must be >= 0");
  ExactSolver<Rational> solver(params, rho);
  Rational total = 0;
  enumerate_samples(n, params.locus_a().K(), params.locus_b().K(), false,
                    [&](const SampleConfig& s) { total += multinomial_weight(s) * solver.q(s); });
  return total;
}

}  // namespace twolocus
