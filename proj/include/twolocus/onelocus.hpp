#pragma once

#include <map>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "twolocus/linalg.hpp"
#include "twolocus/model.hpp"

namespace twolocus {

using OneLocusConfig = std::vector<int>;

// (z)_n = z (z+1) ... (z+n-1), memoized per z.
class AscFactorialCache {
 public:
  const Rational& get(const Rational& z, int n);

 private:
  std::map<Rational, std::vector<Rational>> memo_;
  std::mutex mu_;
};

Rational ascending_factorial(const Rational& z, int n);

// Closed form for parent-independent mutation. Throws InvalidArgument otherwise.
Rational q_pim(const OneLocusConfig& n, const MutationModel& m);

std::vector<Rational> stationary_vector(const MutationModel& m);

// Solves the one-locus recursion for arbitrary irreducible P, one size class at a time.
template <class F>
class OneLocusSolver {
 public:
  explicit OneLocusSolver(const MutationModel& m);
  F q(const OneLocusConfig& n);

 private:
  void solve_size(int size);
  static std::uint64_t pack(const OneLocusConfig& n);

  MutationModel m_;
  std::vector<F> pi_;
  std::vector<F> P_;
  F theta_;
  int solved_ = 1;
  std::unordered_map<std::uint64_t, F> memo_;
};

Rational q_onelocus_general(const OneLocusConfig& n, const MutationModel& m);

// Enumerates all one-locus configs of total size s over K alleles, ascending lexicographic.
std::vector<OneLocusConfig> enumerate_onelocus(int K, int s);

// Stationary moments of the weighted Dirichlet distribution of a selected
// locus with parent-independent mutation, K = 2. sigma is K x K row-major.
class SelectedLocus {
 public:
  SelectedLocus(const MutationModel& m, std::vector<double> sigma, long double tolerance = 1e-13L);

  bool neutral() const { return neutral_; }
  // E_s[prod x_i^{n_i}]
  long double moment(const OneLocusConfig& n);
  std::vector<long double> phi();
  // Unnormalized integral for (n1, n2); exposed for tests.
  long double raw_integral(int n1, int n2) const;

 private:
  MutationModel m_;
  std::vector<double> sigma_;
  long double tol_;
  bool neutral_;
  long double alpha1_, alpha2_;
  long double norm_ = 0;
  std::map<std::pair<int, int>, long double> memo_;
  std::mutex mu_;
};

long double q_selection_onelocus(const OneLocusConfig& n, const MutationModel& m, const std::vector<double>& sigma);
std::vector<long double> phi_selection(const MutationModel& m, const std::vector<double>& sigma);

}  // namespace twolocus
