#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace twolocus {

using Rational = mpq_class;

// Parses "p/q", an integer, or a finite decimal such as "0.01" into an exact rational.
Rational parse_rational(const std::string& text);
std::string rational_to_string(const Rational& q);
long double to_long_double(const Rational& q);
// Exact binary expansion of a finite long double.
Rational rational_from_long_double(long double x);

// Two-locus sample (a, b, c). c is K x L, row-major.
class SampleConfig {
 public:
  SampleConfig() = default;
  SampleConfig(int K, int L);
  SampleConfig(std::vector<int> a, std::vector<int> b, std::vector<int> c);

  int K() const { return K_; }
  int L() const { return L_; }
  const std::vector<int>& a() const { return a_; }
  const std::vector<int>& b() const { return b_; }
  const std::vector<int>& c() const { return c_; }
  int a(int i) const { return a_[i]; }
  int b(int j) const { return b_[j]; }
  int c(int i, int j) const { return c_[i * L_ + j]; }
  void set_a(int i, int v);
  void set_b(int j, int v);
  void set_c(int i, int j, int v);

  int a_total() const;
  int b_total() const;
  int c_total() const;
  int n() const { return a_total() + b_total() + c_total(); }
  int length() const { return a_total() + b_total() + 2 * c_total(); }
  std::vector<int> c_row_sums() const;
  std::vector<int> c_col_sums() const;

  bool operator==(const SampleConfig& o) const {
    return K_ == o.K_ && L_ == o.L_ && a_ == o.a_ && b_ == o.b_ && c_ == o.c_;
  }
  bool operator!=(const SampleConfig& o) const { return !(*this == o); }

  // "a=[..];b=[..];c=[[..],[..]]"
  std::string to_string() const;
  static SampleConfig parse(const std::string& text);

 private:
  void validate() const;
  int K_ = 0;
  int L_ = 0;
  std::vector<int> a_;
  std::vector<int> b_;
  std::vector<int> c_;
};

class MutationModel {
 public:
  MutationModel() = default;
  // P is K x K row-major. Rows must sum to exactly 1.
  MutationModel(Rational theta, std::vector<Rational> P, int K);
  static MutationModel symmetric_pim(int K, const Rational& theta);

  int K() const { return K_; }
  const Rational& theta() const { return theta_; }
  const Rational& P(int i, int j) const { return P_[i * K_ + j]; }
  const std::vector<Rational>& P() const { return P_; }
  bool is_pim() const { return pim_; }
  bool is_irreducible() const { return irreducible_; }
  // Mutant distribution P_j; only meaningful for PIM.
  const Rational& pim_weight(int j) const { return P_[j]; }
  MutationModel with_theta(const Rational& theta) const;

  bool operator==(const MutationModel& o) const {
    return K_ == o.K_ && theta_ == o.theta_ && P_ == o.P_;
  }

 private:
  int K_ = 0;
  Rational theta_;
  std::vector<Rational> P_;
  bool pim_ = false;
  bool irreducible_ = false;
};

class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(MutationModel locus_a, MutationModel locus_b);
  ModelParams(MutationModel locus_a, MutationModel locus_b, std::vector<double> sigma);

  // K=L=2, uniform P, theta_A = theta_B = 1/100.
  static ModelParams paper_pim();

  const MutationModel& locus_a() const { return a_; }
  const MutationModel& locus_b() const { return b_; }
  bool has_selection() const { return sigma_.has_value(); }
  // K x K row-major, symmetric.
  const std::vector<double>& sigma() const;
  ModelParams without_selection() const { return ModelParams(a_, b_); }
  ModelParams with_selection(std::vector<double> sigma) const { return ModelParams(a_, b_, std::move(sigma)); }
  std::string fingerprint() const;

 private:
  MutationModel a_;
  MutationModel b_;
  std::optional<std::vector<double>> sigma_;
};

// r in the partition set of m; also used as a subsample of c.
struct RMatrix {
  int K = 0;
  int L = 0;
  std::vector<int> r;
  int m() const;
  int operator()(int i, int j) const { return r[i * L + j]; }
  std::vector<int> row_sums() const;
  std::vector<int> col_sums() const;
  bool operator==(const RMatrix& o) const { return K == o.K && L == o.L && r == o.r; }
};

// Version byte 0x01, then K, L, a, b, row-major c as unsigned LEB128 varints.
std::vector<std::uint8_t> canonical_key(const SampleConfig& cfg);
std::string key_hex(const std::vector<std::uint8_t>& key);

// All r <= c elementwise with sum m, in ascending lexicographic order of the
// row-major entries.
void enumerate_subsamples(const RMatrix& c, int m, const std::function<void(const RMatrix&)>& fn);
std::vector<RMatrix> enumerate_subsamples(const RMatrix& c, int m);
std::uint64_t count_subsamples(const RMatrix& c, int m);

bool is_dimorphic(const SampleConfig& cfg);

// All samples (0, 0, c) with total n, in ascending lexicographic order of the
// row-major c. With dimorphic_only, keeps those with every row and column sum positive.
void enumerate_samples(int n, int K, int L, bool dimorphic_only,
                       const std::function<void(const SampleConfig&)>& fn);
std::vector<SampleConfig> enumerate_samples(int n, int K, int L, bool dimorphic_only = false);

// Multinomial count of ordered samples consistent with the configuration.
Rational multinomial_weight(const SampleConfig& cfg);

}  // namespace twolocus
