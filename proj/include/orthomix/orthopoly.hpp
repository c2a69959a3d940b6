#pragma once

// Multivariate Hahn, Krawtchouk and Jacobi systems built by stick-breaking
// from univariate factors, plus univariate Hermite polynomials.
//
// Indexing is zero-based: a multi-index n has d-1 entries n[0..d-2], and the
// j-th factor uses the prefix |x_{j-1}| = x[0] + ... + x[j-1] and the tails
// |n^{j+1}| = n[j+1] + ..., |alpha^{j+1}| = alpha[j+1] + ... .

#include <cmath>
#include <optional>
#include <vector>

#include "numerics.hpp"

namespace orthomix {

using MultiIndex = Composition;

namespace detail {
template <class T>
T tail_sum(const std::vector<T>& v, int from) {
  T s(0);
  for (std::size_t i = static_cast<std::size_t>(from); i < v.size(); ++i) s += v[i];
  return s;
}

inline void check_index_shape(const MultiIndex& n, int d) {
  if (n.dim() != d - 1) throw DomainError("multi-index must have d-1 entries");
}

/// (-M)_(n) * Q_n(x; M, a, b), summed so that the pole of (-M)_(j) never
/// appears: (-M)_(n) / (-M)_(j) = (-M+j)_(n-j).
template <class T>
T hahn_factor_scaled(int n, int x, int M, const T& a, const T& b) {
  T total(0);
  const T shift = T(n) + a + b - T(1);
  for (int j = 0; j <= n; ++j) {
    T num = rising_factorial(T(-n), j) * rising_factorial(shift, j) * rising_factorial(T(-x), j);
    if (is_zero(num)) continue;
    const T den = rising_factorial(a, j) * scalar_from<T>(factorial(static_cast<unsigned long>(j)));
    if (is_zero(den)) throw DomainError("Hahn series hits a vanishing (a)_(j) factor");
    total += num / den * rising_factorial(T(j - M), n - j);
  }
  return total;
}

template <class T>
T krawtchouk_factor_scaled(int n, int x, int M, const T& q) {
  T total(0);
  for (int j = 0; j <= n; ++j) {
    T num = rising_factorial(T(-n), j) * rising_factorial(T(-x), j);
    if (is_zero(num)) continue;
    total += num / (scalar_from<T>(factorial(static_cast<unsigned long>(j))) * ipow(q, j)) * rising_factorial(T(j - M), n - j);
  }
  return total;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Hahn

/// Classical 3F2 Hahn polynomial Q_n(x; N, a, b).
template <class T>
T hahn_uni(int n, int x, int N, const T& a, const T& b) {
  if (n < 0 || n > N || x < 0 || x > N) throw DomainError("hahn_uni: need 0 <= n, x <= N");
  T total(0);
  const T shift = T(n) + a + b - T(1);
  for (int j = 0; j <= n; ++j) {
    const T num = rising_factorial(T(-n), j) * rising_factorial(shift, j) * rising_factorial(T(-x), j);
    if (is_zero(num)) break;
    const T den = rising_factorial(a, j) * rising_factorial(T(-N), j) * scalar_from<T>(factorial(static_cast<unsigned long>(j)));
    if (is_zero(den)) throw DomainError("hahn_uni: vanishing denominator before termination");
    total += num / den;
  }
  return total;
}

/// Multivariate Hahn polynomial Q_n(x; N, alpha) with N = |x|. Works for
/// negative alpha_i = -l_i on indices accepted by hypergeometric_index_valid.
template <class T>
T hahn_multi(const MultiIndex& n, const Composition& x, const std::vector<T>& alpha) {
  const int d = x.dim();
  detail::check_index_shape(n, d);
  if (static_cast<int>(alpha.size()) != d) throw DomainError("alpha length must equal d");
  const int N = x.total();
  if (n.total() > N) throw DomainError("hahn_multi: degree exceeds N");
  T r = falling_factorial(T(N), n.total());
  r = (n.total() % 2 ? T(-1) : T(1)) / r;
  for (int j = 0; j < d - 1; ++j) {
    const int tail_n = n.suffix_sum(j + 1);
    const int M = N - x.prefix_sum(j) - tail_n;
    const T b = detail::tail_sum(alpha, j + 1) + T(2 * tail_n);
    r *= detail::hahn_factor_scaled(n[j], x[j], M, alpha[static_cast<std::size_t>(j)], b);
    if (is_zero(r)) return r;
  }
  return r;
}

/// Squared norm d_n^2 of the multivariate Hahn system under DM(.|N, alpha).
template <class T>
T hahn_norm2(const MultiIndex& n, int N, const std::vector<T>& alpha) {
  const int d = static_cast<int>(alpha.size());
  detail::check_index_shape(n, d);
  const int deg = n.total();
  const T total = detail::tail_sum(alpha, 0);
  T num = rising_factorial(total + T(N), deg);
  T den = falling_factorial(T(N), deg) * rising_factorial(total, 2 * deg);
  for (int j = 0; j < d - 1; ++j) {
    const int nj = n[j];
    const T aj = detail::tail_sum(alpha, j);
    const T aj1 = detail::tail_sum(alpha, j + 1);
    const int tail_j = n.suffix_sum(j), tail_j1 = n.suffix_sum(j + 1);
    num *= rising_factorial(aj + T(tail_j + tail_j1 - 1), nj) * rising_factorial(aj1 + T(2 * tail_j1), nj) *
           scalar_from<T>(factorial(static_cast<unsigned long>(nj)));
    den *= rising_factorial(alpha[static_cast<std::size_t>(j)], nj);
  }
  if (is_zero(den)) throw DomainError("hahn_norm2: vanishing denominator");
  return num / den;
}

/// Whether n indexes a polynomial of the negative-parameter (hypergeometric)
/// system on X_{N,l}^d.
inline bool hypergeometric_index_valid(const MultiIndex& n, int N, const Caps& caps) {
  const int d = static_cast<int>(caps.size());
  if (n.dim() != d - 1) return false;
  const int L = caps_total(caps);
  if (n.total() > std::min(N, L - N)) return false;
  for (int j = 0; j < d - 1; ++j) {
    int tail_caps = 0;
    for (int i = j + 1; i < d; ++i) tail_caps += caps[static_cast<std::size_t>(i)];
    if (n[j] > caps[static_cast<std::size_t>(j)]) return false;
    if (n[j] > tail_caps - 2 * n.suffix_sum(j + 1)) return false;
  }
  return true;
}

inline std::vector<Rational> negated_caps(const Caps& caps) {
  std::vector<Rational> a;
  a.reserve(caps.size());
  for (int c : caps) a.emplace_back(-c);
  return a;
}

/// Multi-indices of exact degree `degree` (colex order), filtered to the
/// hypergeometric index set when caps are given.
inline std::vector<MultiIndex> multi_indices(int degree, int d, const std::optional<Caps>& caps = std::nullopt,
                                             int N = 0) {
  if (d < 2) return degree == 0 ? std::vector<MultiIndex>{MultiIndex(std::vector<int>{})} : std::vector<MultiIndex>{};
  auto all = enumerate_compositions(degree, d - 1);
  if (!caps) return all;
  std::vector<MultiIndex> kept;
  for (auto& n : all)
    if (hypergeometric_index_valid(n, N, *caps)) kept.push_back(std::move(n));
  return kept;
}

// ---------------------------------------------------------------------------
// Krawtchouk

/// 2F1 Krawtchouk polynomial K_n(x; N, p).
template <class T>
T krawtchouk_uni(int n, int x, int N, const T& p) {
  if (n < 0 || n > N || x < 0 || x > N) throw DomainError("krawtchouk_uni: need 0 <= n, x <= N");
  if (is_zero(p)) throw DomainError("krawtchouk_uni: p must be nonzero");
  T total(0);
  for (int j = 0; j <= n; ++j) {
    const T num = rising_factorial(T(-n), j) * rising_factorial(T(-x), j);
    if (is_zero(num)) break;
    total += num / (rising_factorial(T(-N), j) * scalar_from<T>(factorial(static_cast<unsigned long>(j))) * ipow(p, j));
  }
  return total;
}

template <class T>
T krawtchouk_multi(const MultiIndex& n, const Composition& x, const std::vector<T>& p) {
  const int d = x.dim();
  detail::check_index_shape(n, d);
  if (static_cast<int>(p.size()) != d) throw DomainError("p length must equal d");
  const int N = x.total();
  if (n.total() > N) throw DomainError("krawtchouk_multi: degree exceeds N");
  T r = (n.total() % 2 ? T(-1) : T(1)) / falling_factorial(T(N), n.total());
  for (int j = 0; j < d - 1; ++j) {
    const int M = N - x.prefix_sum(j) - n.suffix_sum(j + 1);
    const T q = p[static_cast<std::size_t>(j)] / detail::tail_sum(p, j);
    r *= detail::krawtchouk_factor_scaled(n[j], x[j], M, q);
    if (is_zero(r)) return r;
  }
  return r;
}

template <class T>
T krawtchouk_norm2(const MultiIndex& n, int N, const std::vector<T>& p) {
  const int d = static_cast<int>(p.size());
  detail::check_index_shape(n, d);
  T r = T(1) / falling_factorial(T(N), n.total());
  for (int j = 0; j < d - 1; ++j) {
    const int nj = n[j];
    r *= ipow(detail::tail_sum(p, j), nj) * ipow(detail::tail_sum(p, j + 1), nj) *
         scalar_from<T>(factorial(static_cast<unsigned long>(nj))) / ipow(p[static_cast<std::size_t>(j)], nj);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Jacobi (on the simplex)

/// Shifted Jacobi J_n(z; a, b) = 2F1(-n, n+a+b-1; a | z).
inline double jacobi_uni(int n, double z, double a, double b) {
  double total = 0.0, term = 1.0;
  for (int j = 0; j <= n; ++j) {
    total += term;
    term *= (j - n) * (n + a + b - 1.0 + j) * z / ((a + j) * (j + 1.0));
  }
  return total;
}

inline double jacobi_multi(const MultiIndex& n, const std::vector<double>& z, const std::vector<double>& alpha) {
  const int d = static_cast<int>(z.size());
  detail::check_index_shape(n, d);
  if (static_cast<int>(alpha.size()) != d) throw DomainError("alpha length must equal d");
  double r = 1.0;
  for (int j = 0; j < d - 1; ++j) {
    const int nj = n[j];
    if (nj == 0) continue;
    const double tail_z = detail::tail_sum(z, j);
    if (tail_z <= 0.0) return 0.0;
    const double b = detail::tail_sum(alpha, j + 1) + 2.0 * n.suffix_sum(j + 1);
    r *= std::pow(tail_z, nj) * jacobi_uni(nj, z[static_cast<std::size_t>(j)] / tail_z, alpha[static_cast<std::size_t>(j)], b);
  }
  return r;
}

inline double jacobi_norm2(const MultiIndex& n, const std::vector<double>& alpha) {
  const int d = static_cast<int>(alpha.size());
  detail::check_index_shape(n, d);
  const double total = detail::tail_sum(alpha, 0);
  double r = 1.0 / rising_factorial(total, 2 * n.total());
  for (int j = 0; j < d - 1; ++j) {
    const int nj = n[j];
    const double aj = detail::tail_sum(alpha, j), aj1 = detail::tail_sum(alpha, j + 1);
    const int tail_j = n.suffix_sum(j), tail_j1 = n.suffix_sum(j + 1);
    r *= rising_factorial(aj + tail_j + tail_j1 - 1.0, nj) * rising_factorial(aj1 + 2.0 * tail_j1, nj) *
         std::tgamma(nj + 1.0) / rising_factorial(alpha[static_cast<std::size_t>(j)], nj);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Hermite

inline double hermite(int n, double x) {
  if (n < 0) throw DomainError("hermite: n must be nonnegative");
  if (n <= 30) {
    // coef_k = (-1)^k n! / (k! (n-2k)!)
    double total = 0.0, coef = 1.0;
    for (int k = 0; k <= n / 2; ++k) {
      total += coef * std::pow(2.0 * x, n - 2 * k);
      coef *= -static_cast<double>(n - 2 * k) * (n - 2 * k - 1) / (k + 1.0);
    }
    return total;
  }
  double prev = 1.0, cur = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * x * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// sum_n H_n(x)^2 t^n / (2^n n!) in closed form.
inline double hermite_square_gf(double x, double t) {
  if (!(std::abs(t) < 1.0)) throw DomainError("hermite_square_gf: need |t| < 1");
  return std::exp(2.0 * x * x * t / (1.0 + t)) / std::sqrt(1.0 - t * t);
}

}  // namespace orthomix
