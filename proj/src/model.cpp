#include "twolocus/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "twolocus/errors.hpp"

namespace twolocus {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (ch < '0' || ch > '9') return false;
  return true;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<int> json_int_vector(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidArgument(what + " must be a list of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw InvalidArgument(what + " must contain integers");
    long long x = v.get<long long>();
    if (x < 0 || x > 100000) throw InvalidArgument(what + " entries must be nonnegative");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  do {
    std::uint8_t byte = v & 0x7f;
    v >>= 7;
    if (v) byte |= 0x80;
    out.push_back(byte);
  } while (v);
}

}  // namespace

Rational parse_rational(const std::string& raw) {
  std::string text = trim(raw);
  if (text.empty()) throw InvalidArgument("empty rational");
  std::size_t slash = text.find('/');
  if (slash != std::string::npos) {
    std::string p = trim(text.substr(0, slash));
    std::string q = trim(text.substr(slash + 1));
    bool neg = !p.empty() && p[0] == '-';
    if (neg) p = p.substr(1);
    if (!all_digits(p) || !all_digits(q)) throw InvalidArgument("malformed rational '" + raw + "'");
    mpz_class num(p), den(q);
    if (den == 0) throw InvalidArgument("zero denominator in '" + raw + "'");
    Rational r(num, den);
    r.canonicalize();
    return neg ? Rational(-r) : r;
  }
  // decimal with optional exponent
  bool neg = false;
  std::size_t pos = 0;
  if (text[pos] == '-' || text[pos] == '+') {
    neg = text[pos] == '-';
    ++pos;
  }
  std::string mant, expo;
  std::size_t epos = text.find_first_of("eE", pos);
  mant = text.substr(pos, epos == std::string::npos ? std::string::npos : epos - pos);
  if (epos != std::string::npos) expo = text.substr(epos + 1);
  std::string ip = mant, fp;
  std::size_t dot = mant.find('.');
  if (dot != std::string::npos) {
    ip = mant.substr(0, dot);
    fp = mant.substr(dot + 1);
  }
  if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)))
    throw InvalidArgument("malformed number '" + raw + "'");
  long e10 = 0;
  if (!expo.empty()) {
    std::string ed = expo;
    bool eneg = false;
    if (ed[0] == '-' || ed[0] == '+') {
      eneg = ed[0] == '-';
      ed = ed.substr(1);
    }
    if (!all_digits(ed) || ed.size() > 6) throw InvalidArgument("malformed exponent in '" + raw + "'");
    e10 = std::stol(ed);
    if (eneg) e10 = -e10;
  }
  mpz_class digits((ip.empty() ? std::string("0") : ip) + fp);
  e10 -= static_cast<long>(fp.size());
  if (e10 > 4000 || e10 < -4000) throw InvalidArgument("exponent out of range in '" + raw + "'");
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(e10 < 0 ? -e10 : e10));
  Rational r = e10 >= 0 ? Rational(digits * p10) : Rational(digits, p10);
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

std::string rational_to_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str() + "/1";
  return q.get_str();
}

long double to_long_double(const Rational& q) {
  if (sgn(q) == 0) return 0.0L;
  mpz_class n = abs(q.get_num());
  const mpz_class& d = q.get_den();
  long nb = static_cast<long>(mpz_sizeinbase(n.get_mpz_t(), 2));
  long db = static_cast<long>(mpz_sizeinbase(d.get_mpz_t(), 2));
  long sn = nb - 64, sd = db - 64;
  mpz_class nt = sn > 0 ? mpz_class(n >> static_cast<unsigned long>(sn)) : mpz_class(n << static_cast<unsigned long>(-sn));
  mpz_class dt = sd > 0 ? mpz_class(d >> static_cast<unsigned long>(sd)) : mpz_class(d << static_cast<unsigned long>(-sd));
  long double r = static_cast<long double>(mpz_get_ui(nt.get_mpz_t())) /
                  static_cast<long double>(mpz_get_ui(dt.get_mpz_t()));
  r = std::ldexp(r, static_cast<int>(sn - sd));
  return sgn(q) < 0 ? -r : r;
}

Rational rational_from_long_double(long double x) {
  if (!std::isfinite(x)) throw InvalidArgument("non-finite value has no rational form");
  if (x == 0.0L) return Rational(0);
  int e = 0;
  long double frac = std::frexp(x, &e);  // |frac| in [0.5, 1)
  bool neg = frac < 0;
  if (neg) frac = -frac;
  unsigned long mant = static_cast<unsigned long>(std::ldexp(frac, 64));
  mpz_class m(mant);
  int shift = e - 64;
  Rational r;
  if (shift >= 0) {
    r = Rational(mpz_class(m << static_cast<unsigned long>(shift)));
  } else {
    mpz_class den(1);
    den <<= static_cast<unsigned long>(-shift);
    r = Rational(m, den);
    r.canonicalize();
  }
  return neg ? Rational(-r) : r;
}

// ---------------------------------------------------------------- SampleConfig

SampleConfig::SampleConfig(int K, int L) : K_(K), L_(L), a_(K, 0), b_(L, 0), c_(K * L, 0) { validate(); }

SampleConfig::SampleConfig(std::vector<int> a, std::vector<int> b, std::vector<int> c)
    : K_(static_cast<int>(a.size())), L_(static_cast<int>(b.size())), a_(std::move(a)), b_(std::move(b)),
      c_(std::move(c)) {
  validate();
}

void SampleConfig::validate() const {
  if (K_ < 1 || L_ < 1) throw InvalidArgument("sample needs K >= 1 and L >= 1");
  if (static_cast<int>(c_.size()) != K_ * L_) throw InvalidArgument("c must be K x L");
  for (int v : a_)
    if (v < 0) throw InvalidArgument("negative count in a");
  for (int v : b_)
    if (v < 0) throw InvalidArgument("negative count in b");
  for (int v : c_)
    if (v < 0) throw InvalidArgument("negative count in c");
}

void SampleConfig::set_a(int i, int v) {
  if (v < 0) throw InvalidArgument("negative count");
  a_.at(i) = v;
}
void SampleConfig::set_b(int j, int v) {
  if (v < 0) throw InvalidArgument("negative count");
  b_.at(j) = v;
}
void SampleConfig::set_c(int i, int j, int v) {
  if (v < 0) throw InvalidArgument("negative count");
  c_.at(i * L_ + j) = v;
}

int SampleConfig::a_total() const {
  int s = 0;
  for (int v : a_) s += v;
  return s;
}
int SampleConfig::b_total() const {
  int s = 0;
  for (int v : b_) s += v;
  return s;
}
int SampleConfig::c_total() const {
  int s = 0;
  for (int v : c_) s += v;
  return s;
}

std::vector<int> SampleConfig::c_row_sums() const {
  std::vector<int> s(K_, 0);
  for (int i = 0; i < K_; ++i)
    for (int j = 0; j < L_; ++j) s[i] += c(i, j);
  return s;
}

std::vector<int> SampleConfig::c_col_sums() const {
  std::vector<int> s(L_, 0);
  for (int i = 0; i < K_; ++i)
    for (int j = 0; j < L_; ++j) s[j] += c(i, j);
  return s;
}

std::string SampleConfig::to_string() const {
  std::ostringstream os;
  auto vec = [&](const std::vector<int>& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
  };
  os << "a=";
  vec(a_);
  os << ";b=";
  vec(b_);
  os << ";c=[";
  for (int i = 0; i < K_; ++i) {
    if (i) os << ',';
    vec(std::vector<int>(c_.begin() + i * L_, c_.begin() + (i + 1) * L_));
  }
  os << ']';
  return os.str();
}

SampleConfig SampleConfig::parse(const std::string& text) {
  std::optional<std::vector<int>> a, b;
  std::optional<std::vector<std::vector<int>>> c;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t semi = text.find(';', start);
    std::string part = trim(text.substr(start, semi == std::string::npos ? std::string::npos : semi - start));
    if (!part.empty()) {
      std::size_t eq = part.find('=');
      if (eq == std::string::npos)
        throw InvalidArgument("sample field at column " + std::to_string(start + 1) + " lacks '='");
      std::string key = trim(part.substr(0, eq));
      std::string value = trim(part.substr(eq + 1));
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(value);
      } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("cannot parse field '" + key + "' (column " +
                              std::to_string(start + eq + 2 + e.byte - 1) + "): " + value);
      }
      if (key == "a") {
        a = json_int_vector(j, "a");
      } else if (key == "b") {
        b = json_int_vector(j, "b");
      } else if (key == "c") {
        if (!j.is_array()) throw InvalidArgument("c must be a list of rows");
        std::vector<std::vector<int>> rows;
        for (const auto& row : j) rows.push_back(json_int_vector(row, "c row"));
        c = rows;
      } else {
        throw InvalidArgument("unknown sample field '" + key + "'");
      }
    }
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  int K = -1, L = -1;
  if (c) {
    K = static_cast<int>(c->size());
    if (K == 0) throw InvalidArgument("c has no rows");
    L = static_cast<int>((*c)[0].size());
    for (const auto& row : *c)
      if (static_cast<int>(row.size()) != L) throw InvalidArgument("c rows differ in length");
  }
  if (a) {
    if (K >= 0 && static_cast<int>(a->size()) != K) throw InvalidArgument("a length disagrees with c");
    K = static_cast<int>(a->size());
  }
  if (b) {
    if (L >= 0 && static_cast<int>(b->size()) != L) throw InvalidArgument("b length disagrees with c");
    L = static_cast<int>(b->size());
  }
  if (K < 1 || L < 1) throw InvalidArgument("sample needs K and L; give c, or both a and b");
  std::vector<int> flat(K * L, 0);
  if (c)
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < L; ++j) flat[i * L + j] = (*c)[i][j];
  return SampleConfig(a ? *a : std::vector<int>(K, 0), b ? *b : std::vector<int>(L, 0), flat);
}

// --------------------------------------------------------------- MutationModel

MutationModel::MutationModel(Rational theta, std::vector<Rational> P, int K)
    : K_(K), theta_(std::move(theta)), P_(std::move(P)) {
  if (K_ < 1) throw InvalidArgument("mutation model needs K >= 1");
  if (static_cast<int>(P_.size()) != K_ * K_) throw InvalidArgument("P must be K x K");
  if (sgn(theta_) <= 0) throw InvalidArgument("theta must be positive");
  for (auto& p : P_) p.canonicalize();
  for (int i = 0; i < K_; ++i) {
    Rational s = 0;
    for (int j = 0; j < K_; ++j) {
      const Rational& p = P_[i * K_ + j];
      if (sgn(p) < 0 || p > 1) throw InvalidArgument("P entries must lie in [0,1]");
      s += p;
    }
    if (s != 1) throw InvalidArgument("row " + std::to_string(i) + " of P does not sum to 1");
  }
  pim_ = true;
  for (int i = 1; i < K_ && pim_; ++i)
    for (int j = 0; j < K_; ++j)
      if (P_[i * K_ + j] != P_[j]) {
        pim_ = false;
        break;
      }
  // strong connectivity of the transition graph, checked from state 0 both ways
  auto reach = [&](bool forward) {
    std::vector<char> seen(K_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      int s = stack.back();
      stack.pop_back();
      for (int t = 0; t < K_; ++t) {
        const Rational& p = forward ? P_[s * K_ + t] : P_[t * K_ + s];
        if (sgn(p) > 0 && !seen[t]) {
          seen[t] = 1;
          stack.push_back(t);
        }
      }
    }
    for (char v : seen)
      if (!v) return false;
    return true;
  };
  irreducible_ = reach(true) && reach(false);
}

MutationModel MutationModel::symmetric_pim(int K, const Rational& theta) {
  std::vector<Rational> P(K * K, Rational(1, K));
  return MutationModel(theta, P, K);
}

MutationModel MutationModel::with_theta(const Rational& theta) const { return MutationModel(theta, P_, K_); }

// ----------------------------------------------------------------- ModelParams

ModelParams::ModelParams(MutationModel locus_a, MutationModel locus_b) : a_(std::move(locus_a)), b_(std::move(locus_b)) {}

ModelParams::ModelParams(MutationModel locus_a, MutationModel locus_b, std::vector<double> sigma)
    : a_(std::move(locus_a)), b_(std::move(locus_b)) {
  int K = a_.K();
  if (static_cast<int>(sigma.size()) != K * K) throw InvalidArgument("selection matrix must be K x K");
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      double v = sigma[i * K + k];
      if (!std::isfinite(v)) throw InvalidArgument("selection matrix must be finite");
      if (v != sigma[k * K + i]) throw InvalidArgument("selection matrix must be symmetric");
    }
  sigma_ = std::move(sigma);
}

ModelParams ModelParams::paper_pim() {
  MutationModel m = MutationModel::symmetric_pim(2, Rational(1, 100));
  return ModelParams(m, m);
}

const std::vector<double>& ModelParams::sigma() const {
  if (!sigma_) throw InvalidArgument("model has no selection matrix");
  return *sigma_;
}

std::string ModelParams::fingerprint() const {
  std::ostringstream os;
  auto locus = [&](const char* name, const MutationModel& m) {
    os << name << ":K=" << m.K() << ";theta=" << rational_to_string(m.theta()) << ";P=";
    for (std::size_t i = 0; i < m.P().size(); ++i) os << (i ? "," : "") << rational_to_string(m.P()[i]);
    os << '|';
  };
  locus("A", a_);
  locus("B", b_);
  if (sigma_) {
    os << "sigma=";
    char buf[64];
    for (std::size_t i = 0; i < sigma_->size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", (*sigma_)[i]);
      os << (i ? "," : "") << buf;
    }
  }
  return os.str();
}

// --------------------------------------------------------------------- RMatrix

int RMatrix::m() const {
  int s = 0;
  for (int v : r) s += v;
  return s;
}

std::vector<int> RMatrix::row_sums() const {
  std::vector<int> s(K, 0);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < L; ++j) s[i] += r[i * L + j];
  return s;
}

std::vector<int> RMatrix::col_sums() const {
  std::vector<int> s(L, 0);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < L; ++j) s[j] += r[i * L + j];
  return s;
}

// --------------------------------------------------------------- enumeration

std::vector<std::uint8_t> canonical_key(const SampleConfig& cfg) {
  std::vector<std::uint8_t> out;
  out.push_back(0x01);
  put_varint(out, cfg.K());
  put_varint(out, cfg.L());
  for (int v : cfg.a()) put_varint(out, v);
  for (int v : cfg.b()) put_varint(out, v);
  for (int v : cfg.c()) put_varint(out, v);
  return out;
}

std::string key_hex(const std::vector<std::uint8_t>& key) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (std::uint8_t b : key) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

void enumerate_subsamples(const RMatrix& c, int m, const std::function<void(const RMatrix&)>& fn) {
  if (m < 0) return;
  RMatrix r{c.K, c.L, std::vector<int>(c.r.size(), 0)};
  int cells = static_cast<int>(c.r.size());
  std::vector<int> suffix(cells + 1, 0);
  for (int k = cells - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + c.r[k];
  std::function<void(int, int)> rec = [&](int idx, int rem) {
    if (idx == cells) {
      if (rem == 0) fn(r);
      return;
    }
    int lo = std::max(0, rem - suffix[idx + 1]);
    int hi = std::min(rem, c.r[idx]);
    for (int v = lo; v <= hi; ++v) {
      r.r[idx] = v;
      rec(idx + 1, rem - v);
    }
    r.r[idx] = 0;
  };
  rec(0, m);
}

std::vector<RMatrix> enumerate_subsamples(const RMatrix& c, int m) {
  std::vector<RMatrix> out;
  enumerate_subsamples(c, m, [&](const RMatrix& r) { out.push_back(r); });
  return out;
}

std::uint64_t count_subsamples(const RMatrix& c, int m) {
  if (m < 0) return 0;
  std::vector<std::uint64_t> ways(m + 1, 0);
  ways[0] = 1;
  for (int cap : c.r) {
    std::vector<std::uint64_t> next(m + 1, 0);
    for (int s = 0; s <= m; ++s)
      if (ways[s])
        for (int v = 0; v <= cap && s + v <= m; ++v) next[s + v] += ways[s];
    ways.swap(next);
  }
  return ways[m];
}

bool is_dimorphic(const SampleConfig& cfg) {
  std::vector<int> rows = cfg.c_row_sums(), cols = cfg.c_col_sums();
  for (int i = 0; i < cfg.K(); ++i)
    if (rows[i] + cfg.a(i) <= 0) return false;
  for (int j = 0; j < cfg.L(); ++j)
    if (cols[j] + cfg.b(j) <= 0) return false;
  return true;
}

void enumerate_samples(int n, int K, int L, bool dimorphic_only,
                       const std::function<void(const SampleConfig&)>& fn) {
  if (n < 1) throw InvalidArgument("sample size must be at least 1");
  if (K < 1 || L < 1) throw InvalidArgument("K and L must be positive");
  int cells = K * L;
  std::vector<int> c(cells, 0);
  std::function<void(int, int)> rec = [&](int idx, int rem) {
    if (idx == cells - 1) {
      c[idx] = rem;
      SampleConfig cfg(std::vector<int>(K, 0), std::vector<int>(L, 0), c);
      if (!dimorphic_only || is_dimorphic(cfg)) fn(cfg);
      return;
    }
    for (int v = 0; v <= rem; ++v) {
      c[idx] = v;
      rec(idx + 1, rem - v);
    }
  };
  rec(0, n);
}

std::vector<SampleConfig> enumerate_samples(int n, int K, int L, bool dimorphic_only) {
  std::vector<SampleConfig> out;
  enumerate_samples(n, K, L, dimorphic_only, [&](const SampleConfig& s) { out.push_back(s); });
  return out;
}

Rational multinomial_weight(const SampleConfig& cfg) {
  mpz_class num;
  mpz_fac_ui(num.get_mpz_t(), static_cast<unsigned long>(cfg.n()));
  mpz_class den = 1, f;
  auto div = [&](int v) {
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(v));
    den *= f;
  };
  for (int v : cfg.a()) div(v);
  for (int v : cfg.b()) div(v);
  for (int v : cfg.c()) div(v);
  Rational r(num, den);
  r.canonicalize();
  return r;
}

}  // namespace twolocus
