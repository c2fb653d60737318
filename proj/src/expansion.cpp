#include "twolocus/expansion.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>

#include "twolocus/errors.hpp"
#include "twolocus/linalg.hpp"
#include "twolocus/onelocus.hpp"

namespace twolocus {

namespace {

// Byte layout: [0]=u, [1]=m, then a (K), b (L), r (K*L row-major).
struct Key {
  std::array<std::uint8_t, 32> b{};
  bool operator==(const Key& o) const { return b == o.b; }
  template <typename H>
  friend H AbslHashValue(H h, const Key& k) {
    std::uint64_t w[4];
    std::memcpy(w, k.b.data(), sizeof(w));
    return H::combine(std::move(h), w[0], w[1], w[2], w[3]);
  }
};

std::uint64_t pack_counts(const std::vector<int>& n) {
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < n.size(); ++i) k |= static_cast<std::uint64_t>(n[i]) << (8 * i);
  return k;
}

long double magnitude(long double x) { return std::fabs(x); }
long double magnitude(const Rational& x) { return std::fabs(to_long_double(x)); }

Rational binomial(int n, int k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Rational(r);
}

}  // namespace

template <class S>
struct GEngine<S>::Impl {
  ModelParams params;
  EngineOptions opts;
  int K = 0, L = 0;
  int oa = 2, ob = 0, orr = 0;
  bool pimA = false, pimB = false;
  bool selection = false;
  S thetaA, thetaB;
  std::vector<S> PA, PB;  // full matrices, row-major
  std::vector<S> wA, wB;  // parent-independent weights
  std::vector<S> sig;     // K x K
  absl::flat_hash_map<Key, S> table;
  absl::flat_hash_map<std::uint64_t, S> baseA, baseB;
  std::unique_ptr<OneLocusSolver<S>> solverA, solverB;
  std::unique_ptr<SelectedLocus> selA;
  int sel_level = -1, sel_alpha = -1, sel_beta = -1;
  std::vector<char> box_done;

  static S from(const Rational& q) { return FieldTraits<S>::from_rational(q); }
  static S num(long v) { return S(v); }

  Impl(const ModelParams& p, EngineOptions o) : params(p), opts(o) {
    K = p.locus_a().K();
    L = p.locus_b().K();
    if (K > 8 || L > 8 || 2 + K + L + K * L > 32)
      throw CapacityError("expansion engine supports 2 + K + L + K*L <= 32", static_cast<std::size_t>(2 + K + L + K * L));
    ob = oa + K;
    orr = ob + L;
    const auto& A = p.locus_a();
    const auto& B = p.locus_b();
    if (!A.is_irreducible() || !B.is_irreducible()) throw InvalidArgument("mutation matrices must be irreducible");
    pimA = A.is_pim() && !o.force_general_mutation;
    pimB = B.is_pim() && !o.force_general_mutation;
    thetaA = from(A.theta());
    thetaB = from(B.theta());
    for (const auto& v : A.P()) PA.push_back(from(v));
    for (const auto& v : B.P()) PB.push_back(from(v));
    for (int i = 0; i < K; ++i) wA.push_back(PA[i]);
    for (int j = 0; j < L; ++j) wB.push_back(PB[j]);
    selection = p.has_selection();
    if (selection) {
      if constexpr (FieldTraits<S>::exact) {
        throw UnsupportedError("selection requires floating-point arithmetic");
      } else {
        if (!A.is_pim()) throw UnsupportedError("selection requires parent-independent mutation at locus A");
        selA = std::make_unique<SelectedLocus>(A, p.sigma());
        for (double s : p.sigma()) sig.push_back(static_cast<S>(s));
      }
    }
    if (!A.is_pim()) solverA = std::make_unique<OneLocusSolver<S>>(A);
    if (!B.is_pim()) solverB = std::make_unique<OneLocusSolver<S>>(B);
  }

  // ------------------------------------------------------------------ keys

  int A(const Key& k, int i) const { return k.b[oa + i]; }
  int Bc(const Key& k, int j) const { return k.b[ob + j]; }
  int R(const Key& k, int i, int j) const { return k.b[orr + i * L + j]; }
  int asum(const Key& k) const {
    int s = 0;
    for (int i = 0; i < K; ++i) s += k.b[oa + i];
    return s;
  }
  int bsum(const Key& k) const {
    int s = 0;
    for (int j = 0; j < L; ++j) s += k.b[ob + j];
    return s;
  }
  static void inc(Key& k, int pos) {
    if (k.b[pos] == 255) throw CapacityError("expansion key count exceeds 255", 256);
    ++k.b[pos];
  }
  static void dec(Key& k, int pos) { --k.b[pos]; }
  int pa(int i) const { return oa + i; }
  int pb(int j) const { return ob + j; }
  int pr(int i, int j) const { return orr + i * L + j; }

  Key make_key(int m, int u, const std::vector<int>& a, const std::vector<int>& b, const std::vector<int>& r) const {
    if (static_cast<int>(a.size()) != K || static_cast<int>(b.size()) != L || static_cast<int>(r.size()) != K * L)
      throw InvalidArgument("g key dimensions do not match the model");
    auto put = [](int v) {
      if (v < 0) throw InvalidArgument("negative count in g key");
      if (v > 255) throw CapacityError("expansion key count exceeds 255", static_cast<std::size_t>(v));
      return static_cast<std::uint8_t>(v);
    };
    int rs = 0;
    for (int v : r) rs += v;
    if (rs != m) throw InvalidArgument("r must sum to m");
    Key k;
    k.b[0] = put(u);
    k.b[1] = put(m);
    for (int i = 0; i < K; ++i) k.b[oa + i] = put(a[i]);
    for (int j = 0; j < L; ++j) k.b[ob + j] = put(b[j]);
    for (int x = 0; x < K * L; ++x) k.b[orr + x] = put(r[x]);
    return k;
  }

  GEntry decode(const Key& k) const {
    GEntry e;
    e.u = k.b[0];
    e.m = k.b[1];
    for (int i = 0; i < K; ++i) e.a.push_back(k.b[oa + i]);
    for (int j = 0; j < L; ++j) e.b.push_back(k.b[ob + j]);
    for (int x = 0; x < K * L; ++x) e.r.push_back(k.b[orr + x]);
    return e;
  }

  void store(const Key& k, const S& v) {
    table.insert_or_assign(k, v);
    if (table.size() > opts.max_entries) throw CapacityError("expansion table exceeds its entry budget", table.size());
  }

  // ------------------------------------------------------------- base case

  S base_a(const std::vector<int>& a) {
    std::uint64_t key = pack_counts(a);
    auto it = baseA.find(key);
    if (it != baseA.end()) return it->second;
    S v;
    if (selection) {
      if constexpr (!FieldTraits<S>::exact) v = selA->moment(a);
    } else if (params.locus_a().is_pim()) {
      v = from(q_pim(a, params.locus_a()));
    } else {
      v = solverA->q(a);
    }
    baseA.emplace(key, v);
    return v;
  }

  S base_b(const std::vector<int>& b) {
    std::uint64_t key = pack_counts(b);
    auto it = baseB.find(key);
    if (it != baseB.end()) return it->second;
    S v = params.locus_b().is_pim() ? from(q_pim(b, params.locus_b())) : solverB->q(b);
    baseB.emplace(key, v);
    return v;
  }

  S base(const Key& k) {
    std::vector<int> a(K), b(L);
    for (int i = 0; i < K; ++i) a[i] = k.b[oa + i];
    for (int j = 0; j < L; ++j) b[j] = k.b[ob + j];
    return base_a(a) * base_b(b);
  }

  // ----------------------------------------------------------------- lookup

  bool is_boundary_m0(const Key& k) const {
    int s = asum(k), t = bsum(k);
    return s + t <= 1 || (s == 1 && t == 1);
  }

  S get(const Key& k) {
    int u = k.b[0], m = k.b[1];
    if (!opts.compute_odd_levels && ((u + m) & 1)) return S(0);
    if (m == 0) {
      if (u == 0) return base(k);
      if (is_boundary_m0(k)) return S(0);
      if (opts.approx_g0 && u >= 4) return S(0);
      auto it = table.find(k);
      if (it != table.end()) return it->second;
      if (selection) {
        ensure_box(u);
        it = table.find(k);
        if (it == table.end()) throw InternalError("selection truncation box does not cover a requested entry");
        return it->second;
      }
      if (pimA && pimB) {
        S v = case3_pim(k);
        store(k, v);
        return v;
      }
      solve_class(k);
      return table.at(k);
    }
    auto it = table.find(k);
    if (it != table.end()) return it->second;
    S v = case2(k);
    store(k, v);
    return v;
  }

  S at(Key t, int u, int m) {
    t.b[0] = static_cast<std::uint8_t>(u);
    t.b[1] = static_cast<std::uint8_t>(m);
    return get(t);
  }

  // ------------------------------------------------------- case (ii): m > 0

  S case2(const Key& k) {
    const int u = k.b[0], m = k.b[1];
    const int as = asum(k), bs = bsum(k);
    int rA[8] = {0}, rB[8] = {0};
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < L; ++j) {
        rA[i] += R(k, i, j);
        rB[j] += R(k, i, j);
      }
    S acc(0);

    if (m >= 2) {  // g_u^(m-2)
      const int uu = u, mm = m - 2;
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < L; ++j) {
          const int rij = R(k, i, j);
          if (rij == 0) continue;
          if (rij >= 2) {
            Key t = k;
            dec(t, pr(i, j));
            dec(t, pr(i, j));
            inc(t, pa(i));
            inc(t, pb(j));
            acc += num(rij * (rij - 1)) * at(t, uu, mm);
          }
          for (int l = 0; l < L; ++l) {
            const int c = rij * (R(k, i, l) - (j == l ? 1 : 0));
            if (c <= 0) continue;
            Key t = k;
            dec(t, pr(i, j));
            dec(t, pr(i, l));
            inc(t, pa(i));
            inc(t, pb(j));
            inc(t, pb(l));
            acc -= num(c) * at(t, uu, mm);
          }
          for (int kk = 0; kk < K; ++kk) {
            const int c = rij * (R(k, kk, j) - (i == kk ? 1 : 0));
            if (c <= 0) continue;
            Key t = k;
            dec(t, pr(i, j));
            dec(t, pr(kk, j));
            inc(t, pa(i));
            inc(t, pa(kk));
            inc(t, pb(j));
            acc -= num(c) * at(t, uu, mm);
          }
          for (int kk = 0; kk < K; ++kk)
            for (int l = 0; l < L; ++l) {
              const int c = rij * (R(k, kk, l) - (i == kk && j == l ? 1 : 0));
              if (c <= 0) continue;
              Key t = k;
              dec(t, pr(i, j));
              dec(t, pr(kk, l));
              inc(t, pa(i));
              inc(t, pa(kk));
              inc(t, pb(j));
              inc(t, pb(l));
              acc += num(c) * at(t, uu, mm);
            }
        }
    }

    if (u >= 1) {  // g_{u-1}^(m-1)
      const int uu = u - 1, mm = m - 1;
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < L; ++j) {
          const int rij = R(k, i, j);
          if (rij > 0) {
            if (rij >= 2) {
              Key t = k;
              dec(t, pr(i, j));
              acc += num(rij * (rij - 1)) * at(t, uu, mm);
            }
            int c = 2 * rij * (rA[i] - 1);
            if (c > 0) {
              Key t = k;
              dec(t, pr(i, j));
              inc(t, pb(j));
              acc -= num(c) * at(t, uu, mm);
            }
            c = 2 * rij * (rB[j] - 1);
            if (c > 0) {
              Key t = k;
              dec(t, pr(i, j));
              inc(t, pa(i));
              acc -= num(c) * at(t, uu, mm);
            }
          }
          for (int kk = 0; kk < K; ++kk) {
            const int rkj = R(k, kk, j);
            if (rkj == 0) continue;
            for (int l = 0; l < L; ++l) {
              const int c = 2 * rkj * (R(k, i, l) - (i == kk && j == l ? 1 : 0));
              if (c <= 0) continue;
              Key t = k;
              dec(t, pr(kk, j));
              dec(t, pr(i, l));
              inc(t, pr(i, j));
              inc(t, pa(kk));
              inc(t, pb(l));
              acc += num(c) * at(t, uu, mm);
            }
          }
          if (rij > 0 && m >= 2) {
            Key t = k;
            dec(t, pr(i, j));
            inc(t, pa(i));
            inc(t, pb(j));
            acc += num(2 * (m - 1) * rij) * at(t, uu, mm);
          }
        }
    }

    if (u >= 2) {  // g_{u-2}^(m)
      const int uu = u - 2, mm = m;
      for (int i = 0; i < K; ++i) {
        const int ai = A(k, i);
        if (ai == 0) continue;
        const int c = ai * (ai + 2 * rA[i] - 1);
        if (c == 0) continue;
        Key t = k;
        dec(t, pa(i));
        acc += num(c) * at(t, uu, mm);
      }
      for (int j = 0; j < L; ++j) {
        const int bj = Bc(k, j);
        if (bj == 0) continue;
        const int c = bj * (bj + 2 * rB[j] - 1);
        if (c == 0) continue;
        Key t = k;
        dec(t, pb(j));
        acc += num(c) * at(t, uu, mm);
      }
      for (int i = 0; i < K; ++i) {
        const int ai = A(k, i);
        if (ai == 0) continue;
        for (int j = 0; j < L; ++j)
          for (int kk = 0; kk < K; ++kk) {
            const int rkj = R(k, kk, j);
            if (rkj == 0) continue;
            Key t = k;
            dec(t, pa(i));
            inc(t, pa(kk));
            dec(t, pr(kk, j));
            inc(t, pr(i, j));
            acc -= num(2 * ai * rkj) * at(t, uu, mm);
          }
      }
      for (int j = 0; j < L; ++j) {
        const int bj = Bc(k, j);
        if (bj == 0) continue;
        for (int i = 0; i < K; ++i)
          for (int l = 0; l < L; ++l) {
            const int ril = R(k, i, l);
            if (ril == 0) continue;
            Key t = k;
            dec(t, pb(j));
            inc(t, pb(l));
            dec(t, pr(i, l));
            inc(t, pr(i, j));
            acc -= num(2 * bj * ril) * at(t, uu, mm);
          }
      }
      // mutation at A
      if (pimA) {
        for (int i = 0; i < K; ++i) {
          const int ai = A(k, i);
          if (ai == 0) continue;
          Key t = k;
          dec(t, pa(i));
          acc += thetaA * num(ai) * wA[i] * at(t, uu, mm);
        }
      } else {
        for (int i = 0; i < K; ++i)
          for (int kk = 0; kk < K; ++kk) {
            const S& p = PA[kk * K + i];
            if (FieldTraits<S>::is_zero(p)) continue;
            const int ai = A(k, i);
            if (ai > 0) {
              Key t = k;
              dec(t, pa(i));
              inc(t, pa(kk));
              acc += thetaA * p * num(ai) * at(t, uu, mm);
            }
            for (int j = 0; j < L; ++j) {
              const int rij = R(k, i, j);
              if (rij == 0) continue;
              Key t = k;
              dec(t, pr(i, j));
              inc(t, pr(kk, j));
              acc += thetaA * p * num(rij) * at(t, uu, mm);
            }
          }
      }
      // mutation at B
      if (pimB) {
        for (int j = 0; j < L; ++j) {
          const int bj = Bc(k, j);
          if (bj == 0) continue;
          Key t = k;
          dec(t, pb(j));
          acc += thetaB * num(bj) * wB[j] * at(t, uu, mm);
        }
      } else {
        for (int j = 0; j < L; ++j)
          for (int l = 0; l < L; ++l) {
            const S& p = PB[l * L + j];
            if (FieldTraits<S>::is_zero(p)) continue;
            const int bj = Bc(k, j);
            if (bj > 0) {
              Key t = k;
              dec(t, pb(j));
              inc(t, pb(l));
              acc += thetaB * p * num(bj) * at(t, uu, mm);
            }
            for (int i = 0; i < K; ++i) {
              const int rij = R(k, i, j);
              if (rij == 0) continue;
              Key t = k;
              dec(t, pr(i, j));
              inc(t, pr(i, l));
              acc += thetaB * p * num(rij) * at(t, uu, mm);
            }
          }
      }
      {
        const long am = as + m, bm = bs + m;
        S d = num(am * (am - 1) + bm * (bm - 1) - static_cast<long>(m) * (m - 3)) + thetaA * num(am) + thetaB * num(bm);
        acc -= d * at(k, uu, mm);
      }
      if (selection) {
        for (int i = 0; i < K; ++i)
          for (int kk = 0; kk < K; ++kk) {
            const int c = A(k, i) + rA[i];
            if (c == 0) continue;
            Key t = k;
            inc(t, pa(kk));
            acc += num(c) * sig[i * K + kk] * at(t, uu, mm);
          }
        for (int kk = 0; kk < K; ++kk)
          for (int k2 = 0; k2 < K; ++k2) {
            Key t = k;
            inc(t, pa(kk));
            inc(t, pa(k2));
            acc -= num(as + m) * sig[kk * K + k2] * at(t, uu, mm);
          }
        for (int i = 0; i < K; ++i)
          for (int j = 0; j < L; ++j) {
            const int rij = R(k, i, j);
            if (rij == 0) continue;
            for (int kk = 0; kk < K; ++kk)
              for (int k2 = 0; k2 < K; ++k2) {
                Key t = k;
                inc(t, pa(i));
                inc(t, pa(kk));
                dec(t, pr(i, j));
                inc(t, pr(k2, j));
                acc -= num(rij) * sig[kk * K + k2] * at(t, uu, mm);
              }
          }
      }
    }

    if (u >= 3) {  // g_{u-3}^(m+1)
      const int uu = u - 3, mm = m + 1;
      for (int i = 0; i < K; ++i) {
        const int ai = A(k, i);
        if (ai == 0) continue;
        for (int j = 0; j < L; ++j) {
          const int bj = Bc(k, j);
          if (bj == 0) continue;
          Key t = k;
          dec(t, pa(i));
          dec(t, pb(j));
          inc(t, pr(i, j));
          acc += num(2 * ai * bj) * at(t, uu, mm);
        }
      }
      if (selection) {
        for (int i = 0; i < K; ++i)
          for (int j = 0; j < L; ++j) {
            const int bj = Bc(k, j);
            if (bj == 0) continue;
            for (int kk = 0; kk < K; ++kk) {
              Key t = k;
              inc(t, pa(kk));
              dec(t, pb(j));
              inc(t, pr(i, j));
              acc += num(bj) * sig[i * K + kk] * at(t, uu, mm);
            }
          }
      }
    }
    return acc / num(m);
  }

  // ------------------------------------------------- case (iii): m = 0, u >= 1

  // Driving terms from g_{u-1}^(1).
  S source(const Key& k) {
    const int u = k.b[0];
    S src(0);
    for (int i = 0; i < K; ++i) {
      const int ai = A(k, i);
      if (ai == 0) continue;
      for (int j = 0; j < L; ++j) {
        const int bj = Bc(k, j);
        if (bj == 0) continue;
        Key t = k;
        dec(t, pa(i));
        dec(t, pb(j));
        inc(t, pr(i, j));
        src += num(2 * ai * bj) * at(t, u - 1, 1);
      }
    }
    if (selection) {
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < L; ++j) {
          const int bj = Bc(k, j);
          if (bj == 0) continue;
          for (int kk = 0; kk < K; ++kk) {
            Key t = k;
            inc(t, pa(kk));
            dec(t, pb(j));
            inc(t, pr(i, j));
            src += num(bj) * sig[i * K + kk] * at(t, u - 1, 1);
          }
        }
    }
    return src;
  }

  S diag3(const Key& k) const {
    const long s = asum(k), t = bsum(k);
    S d = num(s * (s - 1)) + thetaA * num(s) + num(t * (t - 1)) + thetaB * num(t);
    if (!pimB)
      for (int j = 0; j < L; ++j) d -= thetaB * num(Bc(k, j)) * PB[j * L + j];
    return d;
  }

  // Same-level terms for parent-independent mutation at A. Returns the
  // right-hand side; the caller divides by diag3.
  template <class Lookup>
  S case3_rhs(const Key& k, const S& src, Lookup&& val) {
    S acc = src;
    for (int i = 0; i < K; ++i) {
      const int ai = A(k, i);
      if (ai == 0) continue;
      Key t = k;
      dec(t, pa(i));
      S c = num(ai * (ai - 1)) + thetaA * num(ai) * wA[i];
      acc += c * val(t);
    }
    if (pimB) {
      for (int j = 0; j < L; ++j) {
        const int bj = Bc(k, j);
        if (bj == 0) continue;
        Key t = k;
        dec(t, pb(j));
        S c = num(bj * (bj - 1)) + thetaB * num(bj) * wB[j];
        acc += c * val(t);
      }
    } else {
      for (int j = 0; j < L; ++j) {
        const int bj = Bc(k, j);
        if (bj == 0) continue;
        Key t = k;
        dec(t, pb(j));
        if (bj >= 2) acc += num(bj * (bj - 1)) * val(t);
        for (int l = 0; l < L; ++l) {
          if (l == j) continue;
          Key t2 = t;
          inc(t2, pb(l));
          acc += thetaB * num(bj) * PB[l * L + j] * val(t2);
        }
      }
    }
    if (selection) {
      const int as = asum(k);
      for (int i = 0; i < K; ++i) {
        const int ai = A(k, i);
        for (int kk = 0; kk < K; ++kk) {
          if (ai > 0) {
            Key t = k;
            inc(t, pa(kk));
            acc += num(ai) * sig[i * K + kk] * val(t);
          }
          Key t = k;
          inc(t, pa(i));
          inc(t, pa(kk));
          acc -= num(as) * sig[i * K + kk] * val(t);
        }
      }
    }
    return acc;
  }

  S case3_pim(const Key& k) {
    S src = source(k);
    S rhs = case3_rhs(k, src, [&](const Key& t) { return get(t); });
    return rhs / diag3(k);
  }

  // General mutation: dense solve of all (a,b) with |a| = s, |b| = t at level u.
  void solve_class(const Key& k) {
    const int u = k.b[0];
    const int s = asum(k), tt = bsum(k);
    auto as = enumerate_onelocus(K, s);
    auto bs = enumerate_onelocus(L, tt);
    const std::size_t N = as.size() * bs.size();
    if (N > 4000) throw CapacityError("general-mutation class solve too large", N);
    std::vector<Key> keys;
    absl::flat_hash_map<Key, int> index;
    for (const auto& a : as)
      for (const auto& b : bs) {
        Key t = make_key(0, u, a, b, std::vector<int>(K * L, 0));
        index.emplace(t, static_cast<int>(keys.size()));
        keys.push_back(t);
      }
    const int n = static_cast<int>(N);
    std::vector<S> M(N * N, S(0));
    std::vector<S> rhs(N, S(0));
    for (int row = 0; row < n; ++row) {
      const Key& key = keys[row];
      auto cell = [&](int col) -> S& { return M[static_cast<std::size_t>(row) * N + col]; };
      if (is_boundary_m0(key)) {
        cell(row) = S(1);
        continue;
      }
      S d = num(static_cast<long>(s) * (s - 1)) + thetaA * num(s) + num(static_cast<long>(tt) * (tt - 1)) + thetaB * num(tt);
      cell(row) += d;
      S r = source(key);
      for (int i = 0; i < K; ++i) {
        const int ai = A(key, i);
        if (ai == 0) continue;
        Key down = key;
        dec(down, pa(i));
        if (ai >= 2) r += num(ai * (ai - 1)) * get(down);
        for (int kk = 0; kk < K; ++kk) {
          Key up = down;
          inc(up, pa(kk));
          cell(index.at(up)) -= thetaA * num(ai) * PA[kk * K + i];
        }
      }
      for (int j = 0; j < L; ++j) {
        const int bj = Bc(key, j);
        if (bj == 0) continue;
        Key down = key;
        dec(down, pb(j));
        if (bj >= 2) r += num(bj * (bj - 1)) * get(down);
        for (int l = 0; l < L; ++l) {
          Key up = down;
          inc(up, pb(l));
          cell(index.at(up)) -= thetaB * num(bj) * PB[l * L + j];
        }
      }
      rhs[row] = r;
    }
    auto x = dense_solve(std::move(M), std::move(rhs), n);
    for (int i = 0; i < n; ++i)
      if (!is_boundary_m0(keys[i])) store(keys[i], x[i]);
  }

  // ------------------------------------------------------- selection boxes

  int box_radius(int u) const {
    const int steps = (sel_level - u + 1) / 2;
    return sel_alpha + opts.selection_margin + std::max(0, steps) * (opts.selection_margin + 4);
  }

  void ensure_box(int u) {
    if (sel_level < 0) throw InternalError("selection bounds were not reserved");
    if (static_cast<int>(box_done.size()) <= u) box_done.resize(u + 1, 0);
    if (box_done[u]) return;
    const int Rad = box_radius(u);
    if (Rad > 250) throw CapacityError("selection truncation box exceeds key range", static_cast<std::size_t>(Rad));
    std::vector<std::pair<int, Key>> order;
    const std::vector<int> zero_r(K * L, 0);
    for (int sa = 0; sa <= Rad; ++sa)
      for (const auto& a : enumerate_onelocus(K, sa))
        for (int sb = 0; sb <= sel_beta; ++sb)
          for (const auto& b : enumerate_onelocus(L, sb)) {
            Key t = make_key(0, u, a, b, zero_r);
            if (is_boundary_m0(t)) continue;
            order.emplace_back(sa + sb, t);
          }
    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<S> src(order.size());
    for (std::size_t idx = 0; idx < order.size(); ++idx) src[idx] = source(order[idx].second);
    for (const auto& [w, key] : order) store(key, S(0));
    auto lookup = [&](const Key& t) -> S {
      if (is_boundary_m0(t)) return S(0);
      auto it = table.find(t);
      return it == table.end() ? S(0) : it->second;
    };
    bool converged = false;
    for (int sweep = 0; sweep < 1000 && !converged; ++sweep) {
      long double maxdiff = 0, maxval = 0;
      for (std::size_t idx = 0; idx < order.size(); ++idx) {
        const Key& key = order[idx].second;
        S nv = case3_rhs(key, src[idx], lookup) / diag3(key);
        S& slot = table.find(key)->second;
        maxdiff = std::max(maxdiff, magnitude(nv - slot));
        maxval = std::max(maxval, magnitude(nv));
        slot = nv;
      }
      converged = maxdiff <= opts.selection_tolerance * maxval;
    }
    if (!converged) throw NumericError("selection box iteration did not converge at u=" + std::to_string(u));
    box_done[u] = 1;
  }

  void reserve(int level, int alpha, int beta) {
    if (!selection) return;
    if (level <= sel_level && alpha <= sel_alpha && beta <= sel_beta) return;
    table.clear();
    box_done.clear();
    sel_level = std::max(sel_level, level);
    sel_alpha = std::max(sel_alpha, alpha);
    sel_beta = std::max(sel_beta, beta);
  }
};

template <class S>
GEngine<S>::GEngine(const ModelParams& params, EngineOptions opts) : impl_(std::make_unique<Impl>(params, opts)) {}
template <class S>
GEngine<S>::~GEngine() = default;
template <class S>
GEngine<S>::GEngine(GEngine&&) noexcept = default;
template <class S>
GEngine<S>& GEngine<S>::operator=(GEngine&&) noexcept = default;

template <class S>
const ModelParams& GEngine<S>::params() const {
  return impl_->params;
}
template <class S>
const EngineOptions& GEngine<S>::options() const {
  return impl_->opts;
}

template <class S>
void GEngine<S>::reserve_selection(int max_level, int max_a_degree, int max_b_degree) {
  impl_->reserve(max_level, max_a_degree, max_b_degree);
}

template <class S>
S GEngine<S>::g(int m, int u, const std::vector<int>& a, const std::vector<int>& b, const std::vector<int>& r) {
  if (m < 0 || u < 0) return S(0);
  for (int v : a)
    if (v < 0) return S(0);
  for (int v : b)
    if (v < 0) return S(0);
  for (int v : r)
    if (v < 0) return S(0);
  Key k = impl_->make_key(m, u, a, b, r);
  if (impl_->selection) {
    int as = 0, bs = 0;
    for (int v : a) as += v;
    for (int v : b) bs += v;
    impl_->reserve(m + u, as + m, bs + m);
  }
  return impl_->get(k);
}

template <class S>
S GEngine<S>::level_contribution(int m, int u, const SampleConfig& sample) {
  auto& I = *impl_;
  if (sample.K() != I.K || sample.L() != I.L) throw InvalidArgument("sample dimensions do not match the model");
  if (m > sample.c_total()) return S(0);
  if (I.selection) I.reserve(m + u, sample.a_total() + sample.c_total(), sample.b_total() + sample.c_total());
  auto cA = sample.c_row_sums();
  auto cB = sample.c_col_sums();
  RMatrix c{sample.K(), sample.L(), sample.c()};
  S acc(0);
  enumerate_subsamples(c, m, [&](const RMatrix& r) {
    Rational w = 1;
    for (int x = 0; x < I.K * I.L; ++x) w *= binomial(sample.c()[x], r.r[x]);
    auto rA = r.row_sums();
    auto rB = r.col_sums();
    std::vector<int> a(I.K), b(I.L);
    for (int i = 0; i < I.K; ++i) a[i] = sample.a(i) + cA[i] - rA[i];
    for (int j = 0; j < I.L; ++j) b[j] = sample.b(j) + cB[j] - rB[j];
    Key k = I.make_key(m, u, a, b, r.r);
    acc += Impl::from(w) * I.get(k);
  });
  return acc;
}

template <class S>
S GEngine<S>::coefficient(int M, const SampleConfig& sample) {
  if (M < 0) throw InvalidArgument("coefficient order must be nonnegative");
  auto& I = *impl_;
  if (I.selection) I.reserve(2 * M, sample.a_total() + sample.c_total(), sample.b_total() + sample.c_total());
  S acc(0);
  const int top = std::min(2 * M, sample.c_total());
  for (int m = 0; m <= top; ++m) acc += level_contribution(m, 2 * M - m, sample);
  return acc;
}

template <class S>
std::vector<S> GEngine<S>::coefficients(int M, const SampleConfig& sample) {
  if (M < 0) throw InvalidArgument("coefficient order must be nonnegative");
  auto& I = *impl_;
  if (I.selection) I.reserve(2 * M, sample.a_total() + sample.c_total(), sample.b_total() + sample.c_total());
  std::vector<S> out;
  for (int k = 0; k <= M; ++k) out.push_back(coefficient(k, sample));
  return out;
}

template <class S>
std::size_t GEngine<S>::table_size() const {
  return impl_->table.size();
}

template <class S>
void GEngine<S>::for_each_entry(const std::function<void(const GEntry&, const S&)>& fn) const {
  for (const auto& [k, v] : impl_->table) fn(impl_->decode(k), v);
}

template <class S>
void GEngine<S>::clear() {
  impl_->table.clear();
  impl_->box_done.clear();
}

template class GEngine<Rational>;
template class GEngine<long double>;

// ------------------------------------------------------------------ series

bool resolve_approx(ApproxMode mode, const SampleConfig& sample) {
  if (mode == ApproxMode::kOn) return true;
  if (mode == ApproxMode::kOff) return false;
  return sample.n() > 12;
}

bool resolve_exact(Arithmetic mode, const SampleConfig& sample, int M, const ModelParams& params) {
  if (mode == Arithmetic::kExact) {
    if (params.has_selection()) throw UnsupportedError("selection requires floating-point arithmetic");
    return true;
  }
  if (mode == Arithmetic::kFloat) return false;
  return !params.has_selection() && sample.n() <= 8 && M <= 4;
}

std::vector<long double> SeriesExpansion::values() const {
  std::vector<long double> out;
  for (const auto& q : coeffs) out.push_back(to_long_double(q));
  return out;
}

SeriesExpansion expand_with(GEngine<Rational>& engine, const SampleConfig& sample, int M) {
  SeriesExpansion s;
  s.sample = sample;
  s.coeffs = engine.coefficients(M, sample);
  s.exact = true;
  s.approx_g0 = engine.options().approx_g0;
  s.model_fingerprint = engine.params().fingerprint();
  return s;
}

SeriesExpansion expand_with(GEngine<long double>& engine, const SampleConfig& sample, int M) {
  SeriesExpansion s;
  s.sample = sample;
  for (long double v : engine.coefficients(M, sample)) {
    if (!std::isfinite(v)) throw NumericError("non-finite expansion coefficient");
    s.coeffs.push_back(rational_from_long_double(v));
  }
  s.exact = false;
  s.approx_g0 = engine.options().approx_g0;
  s.model_fingerprint = engine.params().fingerprint();
  return s;
}

SeriesExpansion expand(const SampleConfig& sample, const ModelParams& params, int M, const ExpansionOptions& opts) {
  EngineOptions eo = opts.engine;
  eo.approx_g0 = resolve_approx(opts.approx, sample);
  if (resolve_exact(opts.arithmetic, sample, M, params)) {
    GEngine<Rational> engine(params, eo);
    return expand_with(engine, sample, M);
  }
  GEngine<long double> engine(params, eo);
  return expand_with(engine, sample, M);
}

long double partial_sum(const std::vector<long double>& coeffs, long double rho) {
  if (!(rho > 0)) throw InvalidArgument("partial sums require rho > 0");
  if (coeffs.empty()) return 0;
  if (std::isinf(rho)) return coeffs[0];
  long double x = 1 / rho, acc = 0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) acc = acc * x + coeffs[k];
  return acc;
}

Rational partial_sum_exact(const std::vector<Rational>& coeffs, const Rational& rho) {
  if (sgn(rho) <= 0) throw InvalidArgument("partial sums require rho > 0");
  Rational x = 1 / rho, acc = 0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) acc = acc * x + coeffs[k];
  return acc;
}

OtrResult otr_truncate(const std::vector<long double>& coeffs, long double rho) {
  if (!(rho > 0)) throw InvalidArgument("truncation requires rho > 0");
  if (coeffs.empty()) throw InvalidArgument("truncation requires at least one coefficient");
  int best = 0;
  long double best_mag = std::numeric_limits<long double>::infinity();
  long double scale = 1;
  for (int k = 0; k < static_cast<int>(coeffs.size()); ++k) {
    long double mag = std::fabs(coeffs[k]) * scale;
    if (mag < best_mag) {
      best_mag = mag;
      best = k;
    }
    scale /= rho;
  }
  OtrResult r;
  r.M_used = best;
  r.value = partial_sum(std::vector<long double>(coeffs.begin(), coeffs.begin() + best + 1), rho);
  return r;
}

}  // namespace twolocus
