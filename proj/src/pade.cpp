#include "twolocus/pade.hpp"

#include <cmath>
#include <sstream>

#include "twolocus/errors.hpp"
#include "twolocus/linalg.hpp"

namespace twolocus {

namespace {

const Rational& default_width() {
  static const Rational w(1, 1000000);
  return w;
}

Rational at(const std::vector<Rational>& q, int k) { return k < 0 ? Rational(0) : q[k]; }

// Denominator system for [U/V]: sum_{j=1..V} B_j q_{k-j} = -q_k, k = U+1..U+V.
DenseSolveResult<Rational> denominator_system(const std::vector<Rational>& q, int U, int V) {
  std::vector<Rational> A(static_cast<std::size_t>(V) * V);
  std::vector<Rational> b(V);
  for (int r = 0; r < V; ++r) {
    int k = U + 1 + r;
    for (int j = 1; j <= V; ++j) A[static_cast<std::size_t>(r) * V + (j - 1)] = at(q, k - j);
    b[r] = -q[k];
  }
  return dense_solve_general(std::move(A), std::move(b), V, V);
}

}  // namespace

PadeApproximant::PadeApproximant(int U, int V, Poly A, Poly B) : U_(U), V_(V), A_(std::move(A)), B_(std::move(B)) {}

std::string PadeApproximant::label() const { return "[" + std::to_string(U_) + "/" + std::to_string(V_) + "]"; }

int PadeApproximant::degree_span() const { return std::max(std::max(A_.degree(), B_.degree()), 0); }

Poly PadeApproximant::rho_numerator() const {
  if (A_.is_zero()) return Poly();
  return A_.reversed(degree_span());
}

Poly PadeApproximant::rho_denominator() const { return B_.reversed(degree_span()); }

const RootReport& PadeApproximant::roots() const {
  if (!roots_) roots_ = std::make_shared<RootReport>(root_report(*this));
  return *roots_;
}

long double PadeApproximant::evaluate(long double rho) const {
  if (std::isnan(rho) || rho < 0) throw InvalidArgument("Pade evaluation requires rho >= 0");
  if (std::isinf(rho)) return to_long_double(A_.coeff(0));
  const long double w = 1e-6L;
  for (const auto& r : roots().denominator) {
    if (rho >= to_long_double(r.lo) - w && rho <= to_long_double(r.hi) + w)
      throw PoleError(label() + " has a denominator root near rho=" + std::to_string(static_cast<double>(r.value())));
  }
  long double num, den;
  if (rho >= 1) {
    long double x = 1 / rho;
    num = A_.eval(x);
    den = B_.eval(x);
  } else {
    num = rho_numerator().eval(rho);
    den = rho_denominator().eval(rho);
  }
  if (den == 0) throw PoleError(label() + " has a pole at rho=" + std::to_string(static_cast<double>(rho)));
  return num / den;
}

Rational PadeApproximant::evaluate_exact(const Rational& rho) const {
  if (sgn(rho) < 0) throw InvalidArgument("Pade evaluation requires rho >= 0");
  Rational den = rho_denominator().eval(rho);
  if (sgn(den) == 0) throw PoleError(label() + " has a pole at rho=" + rho.get_str());
  return rho_numerator().eval(rho) / den;
}

std::vector<Rational> PadeApproximant::series(int n) const {
  std::vector<Rational> c(n + 1);
  for (int k = 0; k <= n; ++k) {
    Rational v = A_.coeff(k);
    for (int j = 1; j <= std::min(k, B_.degree()); ++j) v -= B_.coeff(j) * c[k - j];
    c[k] = v;
  }
  return c;
}

PadeApproximant pade_from_series(const std::vector<Rational>& q_in, int U, int V) {
  if (U < 0 || V < 0) throw InvalidArgument("Pade orders must be nonnegative");
  const int M = U + V;
  if (static_cast<int>(q_in.size()) < M + 1) throw InvalidArgument("too few series coefficients for the requested Pade order");
  std::vector<Rational> q(q_in.begin(), q_in.begin() + M + 1);
  std::vector<Rational> Bc(V + 1, Rational(0));
  Bc[0] = 1;
  if (V > 0) {
    auto sol = denominator_system(q, U, V);
    if (!sol.consistent) {
      int best = -1;
      for (int v = V - 1; v >= 0; --v) {
        int u = M - 1 - v;
        if (u < 0) continue;
        if (v == 0 || denominator_system(q, u, v).consistent) {
          best = v;
          break;
        }
      }
      throw DegenerateTableError("Pade [" + std::to_string(U) + "/" + std::to_string(V) + "] denominator system is inconsistent", best);
    }
    for (int j = 1; j <= V; ++j) Bc[j] = sol.x[j - 1];
  }
  std::vector<Rational> Ac(U + 1, Rational(0));
  for (int i = 0; i <= U; ++i)
    for (int j = 0; j <= std::min(i, V); ++j) Ac[i] += Bc[j] * q[i - j];
  Poly A(std::move(Ac)), B(std::move(Bc));
  if (A.is_zero()) {
    B = Poly(Rational(1));
  } else {
    Poly g = poly_gcd(A, B);
    if (g.degree() > 0) {
      Poly quo, rem;
      A.divmod(g, quo, rem);
      A = quo;
      B.divmod(g, quo, rem);
      B = quo;
    }
    Rational b0 = B.coeff(0);
    if (sgn(b0) == 0) throw InternalError("reduced Pade denominator vanishes at x = 0");
    if (b0 != 1) {
      Rational inv = 1 / b0;
      A = A * inv;
      B = B * inv;
    }
  }
  PadeApproximant p(U, V, std::move(A), std::move(B));
  auto check = p.series(M);
  for (int k = 0; k <= M; ++k)
    if (check[k] != q[k]) throw InternalError("Pade approximant fails the order condition");
  return p;
}

PadeApproximant staircase(const std::vector<Rational>& q) {
  if (q.empty()) throw InvalidArgument("staircase requires at least one coefficient");
  const int M = static_cast<int>(q.size()) - 1;
  return pade_from_series(q, M / 2, (M + 1) / 2);
}

RootReport root_report(const PadeApproximant& p, const Rational& width) {
  RootReport r;
  r.numerator = nonnegative_roots(p.rho_numerator(), width);
  r.denominator = nonnegative_roots(p.rho_denominator(), width);
  return r;
}

RootReport root_report(const PadeApproximant& p) { return root_report(p, default_width()); }

DefectResult defect_heuristic(const std::vector<Rational>& q, long double rho0, long double eps) {
  if (q.empty()) throw InvalidArgument("defect heuristic requires at least one coefficient");
  if (!(rho0 >= 0)) throw InvalidArgument("defect heuristic requires rho0 >= 0");
  if (!(eps > 0)) throw InvalidArgument("defect heuristic requires eps > 0");
  const int M = static_cast<int>(q.size()) - 1;
  DefectResult out;
  const long double lo = rho0 - eps, hi = rho0 + eps;
  auto hits = [&](const std::vector<RootEnclosure>& rs) {
    for (const auto& r : rs)
      if (to_long_double(r.hi) > lo && to_long_double(r.lo) < hi) return &r;
    return static_cast<const RootEnclosure*>(nullptr);
  };
  for (int m = M; m >= 0; --m) {
    std::vector<Rational> head(q.begin(), q.begin() + m + 1);
    PadeApproximant p;
    try {
      p = staircase(head);
    } catch (const DegenerateTableError& e) {
      out.notes.push_back("M''=" + std::to_string(m) + ": degenerate");
      continue;
    }
    if (m > 0) {
      const auto& rr = p.roots();
      const RootEnclosure* hit = hits(rr.numerator);
      const char* which = "numerator";
      if (!hit) {
        hit = hits(rr.denominator);
        which = "denominator";
      }
      if (hit) {
        std::ostringstream os;
        os.precision(6);
        os << "M''=" << m << ": " << p.label() << " " << which << " root " << std::fixed << static_cast<double>(hit->value())
           << " in window";
        out.notes.push_back(os.str());
        continue;
      }
    }
    out.approximant = p;
    out.M_used = m;
    out.fallback = (m == 0 && M >= 1);
    return out;
  }
  throw InternalError("defect heuristic found no approximant");
}

}  // namespace twolocus
