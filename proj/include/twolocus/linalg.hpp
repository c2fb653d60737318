#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "twolocus/errors.hpp"
#include "twolocus/model.hpp"
#include "twolocus/polynomial.hpp"

namespace twolocus {

template <class F>
struct FieldTraits;

template <>
struct FieldTraits<Rational> {
  static constexpr bool exact = true;
  static Rational from_rational(const Rational& q) { return q; }
  static bool is_zero(const Rational& x) { return sgn(x) == 0; }
  // Larger is a better pivot. Exact fields favour small operands.
  static double pivot_score(const Rational& x) {
    return -static_cast<double>(mpz_sizeinbase(x.get_num_mpz_t(), 2) + mpz_sizeinbase(x.get_den_mpz_t(), 2));
  }
};

template <>
struct FieldTraits<long double> {
  static constexpr bool exact = false;
  static long double from_rational(const Rational& q) { return to_long_double(q); }
  static bool is_zero(long double x) { return x == 0; }
  static double pivot_score(long double x) { return static_cast<double>(std::fabs(x)); }
};

template <>
struct FieldTraits<double> {
  static constexpr bool exact = false;
  static double from_rational(const Rational& q) { return static_cast<double>(to_long_double(q)); }
  static bool is_zero(double x) { return x == 0; }
  static double pivot_score(double x) { return std::fabs(x); }
};

template <>
struct FieldTraits<RationalFunction> {
  static constexpr bool exact = true;
  static RationalFunction from_rational(const Rational& q) { return RationalFunction(q); }
  static bool is_zero(const RationalFunction& x) { return x.is_zero(); }
  static double pivot_score(const RationalFunction& x) { return -static_cast<double>(x.total_degree()); }
};

template <class F>
struct DenseSolveResult {
  bool consistent = false;
  int rank = 0;
  std::vector<F> x;  // particular solution, free variables set to 0
};

// Gauss-Jordan on a rows x cols system (row-major A). Never throws on
// singularity; the caller inspects consistency and rank.
template <class F>
DenseSolveResult<F> dense_solve_general(std::vector<F> A, std::vector<F> b, int rows, int cols) {
  using T = FieldTraits<F>;
  std::vector<int> pivot_col;
  int r = 0;
  for (int col = 0; col < cols && r < rows; ++col) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int i = r; i < rows; ++i) {
      const F& v = A[static_cast<std::size_t>(i) * cols + col];
      if (T::is_zero(v)) continue;
      double s = T::pivot_score(v);
      if (best < 0 || s > best_score) {
        best = i;
        best_score = s;
      }
    }
    if (best < 0) continue;
    if (best != r) {
      for (int k = 0; k < cols; ++k) std::swap(A[static_cast<std::size_t>(best) * cols + k], A[static_cast<std::size_t>(r) * cols + k]);
      std::swap(b[best], b[r]);
    }
    F inv = F(1) / A[static_cast<std::size_t>(r) * cols + col];
    for (int k = col; k < cols; ++k) A[static_cast<std::size_t>(r) * cols + k] = A[static_cast<std::size_t>(r) * cols + k] * inv;
    b[r] = b[r] * inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r) continue;
      F f = A[static_cast<std::size_t>(i) * cols + col];
      if (T::is_zero(f)) continue;
      for (int k = col; k < cols; ++k) {
        const F& p = A[static_cast<std::size_t>(r) * cols + k];
        if (T::is_zero(p)) continue;
        A[static_cast<std::size_t>(i) * cols + k] = A[static_cast<std::size_t>(i) * cols + k] - f * p;
      }
      b[i] = b[i] - f * b[r];
    }
    pivot_col.push_back(col);
    ++r;
  }
  DenseSolveResult<F> out;
  out.rank = r;
  out.consistent = true;
  for (int i = r; i < rows; ++i)
    if (!T::is_zero(b[i])) out.consistent = false;
  out.x.assign(cols, F(0));
  for (int i = 0; i < r; ++i) out.x[pivot_col[i]] = b[i];
  return out;
}

// Square system with a unique solution; row-major A of size n*n.
// Forward elimination with partial pivoting and back substitution.
template <class F>
std::vector<F> dense_solve(std::vector<F> A, std::vector<F> b, int n) {
  using T = FieldTraits<F>;
  auto at = [&](int i, int j) -> F& { return A[static_cast<std::size_t>(i) * n + j]; };
  for (int col = 0; col < n; ++col) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int i = col; i < n; ++i) {
      if (T::is_zero(at(i, col))) continue;
      double s = T::pivot_score(at(i, col));
      if (best < 0 || s > best_score) {
        best = i;
        best_score = s;
      }
    }
    if (best < 0) throw NumericError("singular linear system");
    if (best != col) {
      for (int k = col; k < n; ++k) std::swap(at(best, k), at(col, k));
      std::swap(b[best], b[col]);
    }
    F inv = F(1) / at(col, col);
    for (int i = col + 1; i < n; ++i) {
      if (T::is_zero(at(i, col))) continue;
      F f = at(i, col) * inv;
      for (int k = col + 1; k < n; ++k) {
        if (T::is_zero(at(col, k))) continue;
        at(i, k) = at(i, k) - f * at(col, k);
      }
      b[i] = b[i] - f * b[col];
    }
  }
  std::vector<F> x(n, F(0));
  for (int i = n - 1; i >= 0; --i) {
    F acc = b[i];
    for (int k = i + 1; k < n; ++k)
      if (!T::is_zero(at(i, k))) acc = acc - at(i, k) * x[k];
    x[i] = acc / at(i, i);
  }
  return x;
}

}  // namespace twolocus
