#pragma once

#include <string>
#include <vector>

#include "twolocus/expansion.hpp"
#include "twolocus/model.hpp"

namespace twolocus {

inline constexpr int kTableVersion = 1;

struct TableHeader {
  int version = kTableVersion;
  int K = 0;
  int L = 0;
  Rational theta_a;
  Rational theta_b;
  std::vector<Rational> P_a;  // K x K row-major
  std::vector<Rational> P_b;
  bool approx_g0 = false;
  bool exact = true;
  int M = 0;
  int n_max = 0;

  ModelParams model() const;
};

struct TableRecord {
  SampleConfig sample;
  std::vector<Rational> coeffs;
};

class CoefficientTable {
 public:
  TableHeader header;
  std::vector<TableRecord> records;  // ascending canonical key

  void sort();
  // Throws NotFoundError.
  const TableRecord& find(const SampleConfig& sample) const;
};

// Expansions for every (0,0,c) with 1 <= |c| <= n_max.
CoefficientTable build_table(const ModelParams& params, int n_max, int M, const ExpansionOptions& opts);

// Header line, then one JSON object per record.
std::string serialize_table(const CoefficientTable& t);
// Throws IntegrityError on a malformed or inconsistent file and
// UnsupportedError on a version mismatch. Nothing is returned on failure.
CoefficientTable parse_table(const std::string& text);

void write_table(const CoefficientTable& t, const std::string& path);
CoefficientTable read_table(const std::string& path);

// Writes to a sibling temporary file, then renames over path.
void atomic_write(const std::string& path, const std::string& content);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace twolocus
