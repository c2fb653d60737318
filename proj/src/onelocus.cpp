#include "twolocus/onelocus.hpp"

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "twolocus/errors.hpp"

namespace twolocus {

const Rational& AscFactorialCache::get(const Rational& z, int n) {
  if (n < 0) throw InvalidArgument("ascending factorial with negative length");
  std::lock_guard<std::mutex> lock(mu_);
  auto& row = memo_[z];
  if (row.empty()) row.push_back(Rational(1));
  while (static_cast<int>(row.size()) <= n) {
    Rational next = row.back() * (z + static_cast<long>(row.size() - 1));
    row.push_back(next);
  }
  return row[n];
}

Rational ascending_factorial(const Rational& z, int n) {
  Rational acc = 1;
  for (int k = 0; k < n; ++k) acc *= z + k;
  return acc;
}

namespace {
AscFactorialCache& shared_cache() {
  static AscFactorialCache cache;
  return cache;
}
}  // namespace

Rational q_pim(const OneLocusConfig& n, const MutationModel& m) {
  if (!m.is_pim()) throw InvalidArgument("closed-form one-locus probability requires parent-independent mutation");
  if (static_cast<int>(n.size()) != m.K()) throw InvalidArgument("one-locus config has wrong allele count");
  int total = 0;
  for (int v : n) {
    if (v < 0) throw InvalidArgument("negative one-locus count");
    total += v;
  }
  auto& cache = shared_cache();
  Rational num = 1;
  for (int i = 0; i < m.K(); ++i) {
    if (n[i] == 0) continue;
    Rational z = m.theta() * m.pim_weight(i);
    num *= cache.get(z, n[i]);
  }
  return num / cache.get(m.theta(), total);
}

std::vector<Rational> stationary_vector(const MutationModel& m) {
  if (!m.is_irreducible()) throw InvalidArgument("stationary vector requires an irreducible mutation matrix");
  int K = m.K();
  if (m.is_pim()) return std::vector<Rational>(m.P().begin(), m.P().begin() + K);
  // pi (P - I) = 0 with sum(pi) = 1
  std::vector<Rational> A(static_cast<std::size_t>(K + 1) * K, Rational(0));
  std::vector<Rational> b(K + 1, Rational(0));
  for (int j = 0; j < K; ++j)
    for (int i = 0; i < K; ++i) A[j * K + i] = m.P(i, j) - (i == j ? 1 : 0);
  for (int i = 0; i < K; ++i) A[K * K + i] = 1;
  b[K] = 1;
  auto res = dense_solve_general(std::move(A), std::move(b), K + 1, K);
  if (!res.consistent || res.rank != K) throw InternalError("stationary system is singular");
  return res.x;
}

std::vector<OneLocusConfig> enumerate_onelocus(int K, int s) {
  std::vector<OneLocusConfig> out;
  OneLocusConfig cur(K, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == K - 1) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  if (K >= 1) rec(0, s);
  return out;
}

// ------------------------------------------------------------- general solver

template <class F>
OneLocusSolver<F>::OneLocusSolver(const MutationModel& m) : m_(m) {
  if (!m.is_irreducible()) throw InvalidArgument("one-locus solver requires an irreducible mutation matrix");
  if (m.K() > 8) throw CapacityError("one-locus solver supports at most 8 alleles", m.K());
  using T = FieldTraits<F>;
  for (const auto& p : stationary_vector(m)) pi_.push_back(T::from_rational(p));
  for (const auto& p : m.P()) P_.push_back(T::from_rational(p));
  theta_ = T::from_rational(m.theta());
}

template <class F>
std::uint64_t OneLocusSolver<F>::pack(const OneLocusConfig& n) {
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] > 255) throw CapacityError("one-locus count exceeds 255", n[i]);
    k |= static_cast<std::uint64_t>(n[i]) << (8 * i);
  }
  return k;
}

template <class F>
void OneLocusSolver<F>::solve_size(int s) {
  int K = m_.K();
  auto configs = enumerate_onelocus(K, s);
  int N = static_cast<int>(configs.size());
  std::unordered_map<std::uint64_t, int> index;
  for (int i = 0; i < N; ++i) index[pack(configs[i])] = i;
  std::vector<F> A(static_cast<std::size_t>(N) * N, F(0));
  std::vector<F> b(N, F(0));
  F diag = F(s) * (F(s - 1) + theta_);
  for (int row = 0; row < N; ++row) {
    const auto& n = configs[row];
    A[static_cast<std::size_t>(row) * N + row] = diag;
    F rhs = F(0);
    for (int i = 0; i < K; ++i) {
      if (n[i] == 0) continue;
      OneLocusConfig down = n;
      --down[i];
      if (n[i] >= 2) rhs = rhs + F(n[i]) * F(n[i] - 1) * memo_.at(pack(down));
      for (int k = 0; k < K; ++k) {
        OneLocusConfig moved = down;
        ++moved[k];
        int col = index.at(pack(moved));
        A[static_cast<std::size_t>(row) * N + col] = A[static_cast<std::size_t>(row) * N + col] - theta_ * F(n[i]) * P_[k * K + i];
      }
    }
    b[row] = rhs;
  }
  auto x = dense_solve(std::move(A), std::move(b), N);
  for (int i = 0; i < N; ++i) memo_[pack(configs[i])] = x[i];
}

template <class F>
F OneLocusSolver<F>::q(const OneLocusConfig& n) {
  if (static_cast<int>(n.size()) != m_.K()) throw InvalidArgument("one-locus config has wrong allele count");
  int s = 0;
  for (int v : n) {
    if (v < 0) throw InvalidArgument("negative one-locus count");
    s += v;
  }
  if (s == 0) return F(1);
  if (s == 1) {
    for (int i = 0; i < m_.K(); ++i)
      if (n[i] == 1) return pi_[i];
  }
  if (memo_.empty()) {
    for (int i = 0; i < m_.K(); ++i) {
      OneLocusConfig e(m_.K(), 0);
      e[i] = 1;
      memo_[pack(e)] = pi_[i];
    }
  }
  while (solved_ < s) solve_size(++solved_);
  return memo_.at(pack(n));
}

template class OneLocusSolver<Rational>;
template class OneLocusSolver<long double>;

Rational q_onelocus_general(const OneLocusConfig& n, const MutationModel& m) {
  OneLocusSolver<Rational> solver(m);
  return solver.q(n);
}

// ------------------------------------------------------------ selected locus

SelectedLocus::SelectedLocus(const MutationModel& m, std::vector<double> sigma, long double tolerance)
    : m_(m), sigma_(std::move(sigma)), tol_(tolerance) {
  if (m.K() != 2) throw UnsupportedError("selected-locus quadrature supports K = 2 only");
  if (!m.is_pim()) throw UnsupportedError("selected-locus distribution requires parent-independent mutation");
  if (sigma_.size() != 4) throw InvalidArgument("selection matrix must be K x K");
  neutral_ = true;
  for (double s : sigma_) {
    if (!std::isfinite(s)) throw InvalidArgument("selection matrix entries must be finite");
    if (s != 0) neutral_ = false;
  }
  alpha1_ = to_long_double(m.theta() * m.pim_weight(0));
  alpha2_ = to_long_double(m.theta() * m.pim_weight(1));
  if (!neutral_) norm_ = raw_integral(0, 0);
}

long double SelectedLocus::raw_integral(int n1, int n2) const {
  using boost::math::quadrature::gauss_kronrod;
  const long double s11 = sigma_[0], s12 = sigma_[1], s22 = sigma_[3];
  auto half_fitness = [&](long double x, long double y) {
    return 0.5L * (s11 * x * x + 2 * s12 * x * y + s22 * y * y);
  };
  const long double b1 = n1 + alpha1_, b2 = n2 + alpha2_;
  // With e the fractional part of the exponent, x^(e-1) dx = dt / e under
  // x = t^(1/e); the leftover integer power of x stays smooth in t.
  auto frac = [](long double a) {
    long double f = a - std::floor(a);
    return f > 0 ? f : 1.0L;
  };
  const long double e1 = frac(alpha1_), e2 = frac(alpha2_);
  auto left = [&](long double t) {
    long double x = t <= 0 ? 0.0L : std::pow(t, 1 / e1);
    long double y = 1 - x;
    return std::pow(x, b1 - e1) * std::pow(y, b2 - 1) * std::exp(half_fitness(x, y));
  };
  auto right = [&](long double t) {
    long double y = t <= 0 ? 0.0L : std::pow(t, 1 / e2);
    long double x = 1 - y;
    return std::pow(y, b2 - e2) * std::pow(x, b1 - 1) * std::exp(half_fitness(x, y));
  };
  long double err1 = 0, err2 = 0;
  long double T1 = std::pow(0.5L, e1), T2 = std::pow(0.5L, e2);
  long double I1 = gauss_kronrod<long double, 61>::integrate(left, 0.0L, T1, 30, tol_, &err1) / e1;
  long double I2 = gauss_kronrod<long double, 61>::integrate(right, 0.0L, T2, 30, tol_, &err2) / e2;
  long double total = I1 + I2;
  long double err = err1 / e1 + err2 / e2;
  if (!std::isfinite(total) || err > 1e3L * tol_ * std::fabs(total))
    throw NumericError("quadrature did not converge for n=(" + std::to_string(n1) + "," + std::to_string(n2) +
                       "), estimated error " + std::to_string(static_cast<double>(err)));
  return total;
}

long double SelectedLocus::moment(const OneLocusConfig& n) {
  if (n.size() != 2) throw InvalidArgument("one-locus config has wrong allele count");
  if (n[0] < 0 || n[1] < 0) throw InvalidArgument("negative one-locus count");
  if (n[0] + n[1] == 0) return 1;
  std::lock_guard<std::mutex> lock(mu_);
  auto key = std::make_pair(n[0], n[1]);
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  long double v = neutral_ ? to_long_double(q_pim(n, m_)) : raw_integral(n[0], n[1]) / norm_;
  memo_.emplace(key, v);
  return v;
}

std::vector<long double> SelectedLocus::phi() { return {moment({1, 0}), moment({0, 1})}; }

long double q_selection_onelocus(const OneLocusConfig& n, const MutationModel& m, const std::vector<double>& sigma) {
  SelectedLocus s(m, sigma);
  return s.moment(n);
}

std::vector<long double> phi_selection(const MutationModel& m, const std::vector<double>& sigma) {
  SelectedLocus s(m, sigma);
  return s.phi();
}

}  // namespace twolocus
