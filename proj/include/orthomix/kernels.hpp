#pragma once

// Kernel polynomials h_n(x, y) = sum_{|n|=n} Q_n(x) Q_n(y) / d_n^2 for the
// Dirichlet-multinomial, hypergeometric, Dirichlet and multinomial laws, in
// closed bilinear form, plus the diagonal closed forms at corner states.

#include <cmath>
#include <limits>
#include <type_traits>
#include <variant>
#include <vector>

#include "distributions.hpp"
#include "orthopoly.hpp"
#include "numerics.hpp"

namespace orthomix {

struct DMKernel {
  int N;
  std::vector<Rational> alpha;
};
struct HypergeometricKernel {
  int N;
  Caps caps;
};
struct DirichletKernel {
  std::vector<Rational> alpha;
};
struct MultinomialKernel {
  int N;
  std::vector<Rational> p;
};

using KernelFamily = std::variant<DMKernel, HypergeometricKernel, DirichletKernel, MultinomialKernel>;

/// Largest N for which bilinear kernels are evaluated.
inline constexpr int kKernelMaxN = 5000;
/// Cap on the number of inner-sum compositions per kernel evaluation.
inline constexpr double kKernelMaxTerms = 2e6;

namespace detail {
inline void check_kernel_capacity(int N, int n, int d) {
  if (N > kKernelMaxN) throw CapacityError("kernel: N > 5000 supports corner starts only (diagonal closed form)");
  if (to_double(binomial(n + d, d)) > kKernelMaxTerms)
    throw CapacityError("kernel: inner composition sum too large (C(n+d, d) > 2e6)");
}

/// sum_{|k|=m} C(m;k) |a|_(m) prod (a_i+x_i)_(k_i)(a_i+y_i)_(k_i) / (a_i)_(k_i).
/// Terms whose numerator vanishes are skipped, which is the 0/0 limit for
/// negative integer parameters.
template <class T>
T dm_xi(int m, const std::vector<T>& shifted_x, const std::vector<T>& shifted_y, const std::vector<T>& alpha) {
  const int d = static_cast<int>(alpha.size());
  T total(0);
  for (const auto& k : enumerate_compositions(m, d)) {
    T num = scalar_from<T>(multinomial_coefficient(k));
    T den(1);
    for (int i = 0; i < d && !is_zero(num); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      num *= rising_factorial(shifted_x[ui], k[i]) * rising_factorial(shifted_y[ui], k[i]);
      den *= rising_factorial(alpha[ui], k[i]);
    }
    if (is_zero(num)) continue;
    if (is_zero(den)) throw DomainError("kernel: vanishing (alpha_i)_(k) with nonzero numerator");
    total += num / den;
  }
  return total * rising_factorial(vector_sum(alpha), m);
}

/// The Dirichlet-multinomial bilinear formula, valid for any rational alpha
/// for which the denominators do not vanish.
inline Rational dm_kernel_raw(int n, const Composition& x, const Composition& y, const std::vector<Rational>& alpha) {
  if (n == 0) return Rational(1);
  const int N = x.total();
  const int d = x.dim();
  check_kernel_capacity(N, n, d);
  const Rational A = vector_sum(alpha);
  std::vector<Rational> sx(alpha.size()), sy(alpha.size());
  for (int i = 0; i < d; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    sx[ui] = alpha[ui] + x[i];
    sy[ui] = alpha[ui] + y[i];
  }
  Rational total(0);
  for (int m = 0; m <= n; ++m) {
    // (A+N)_(n) / ((A+N)_(m))^2 = (A+N+m)_(n-m) / (A+N)_(m)
    const Rational den = rising_factorial(A + N, m) * Rational(factorial(static_cast<unsigned long>(m)) *
                                                               factorial(static_cast<unsigned long>(n - m)));
    if (den == 0) throw DomainError("kernel: vanishing (|alpha|+N)_(m)");
    Rational coef = rising_factorial(A + m, n - 1) * rising_factorial(A + N + m, n - m) / den;
    if ((n - m) % 2) coef = -coef;
    if (coef == 0) continue;
    total += coef * dm_xi(m, sx, sy, alpha);
  }
  return (A + 2 * n - 1) / falling_factorial(Rational(N), n) * total;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Bilinear kernels

inline Rational kernel(const DMKernel& fam, int n, const Composition& x, const Composition& y) {
  if (x.total() != fam.N || y.total() != fam.N) throw DomainError("kernel: states must have total N");
  if (n < 0 || n > fam.N) throw DomainError("kernel: need 0 <= n <= N");
  return detail::dm_kernel_raw(n, x, y, fam.alpha);
}

/// DM formula with alpha_i = -l_i; zero beyond degree min(N, |l| - N).
inline Rational kernel(const HypergeometricKernel& fam, int n, const Composition& x, const Composition& y) {
  if (x.total() != fam.N || y.total() != fam.N) throw DomainError("kernel: states must have total N");
  if (!within_caps(x, fam.caps) || !within_caps(y, fam.caps)) throw DomainError("kernel: state outside caps");
  if (n < 0 || n > fam.N) throw DomainError("kernel: need 0 <= n <= N");
  if (n > std::min(fam.N, caps_total(fam.caps) - fam.N)) return Rational(0);
  return detail::dm_kernel_raw(n, x, y, negated_caps(fam.caps));
}

/// Multinomial kernel: sum_m C(N,m) C(N-m,n-m) (-1)^{n-m} xi_m.
inline Rational kernel(const MultinomialKernel& fam, int n, const Composition& x, const Composition& y) {
  const int N = fam.N, d = x.dim();
  if (x.total() != N || y.total() != N) throw DomainError("kernel: states must have total N");
  if (n < 0 || n > N) throw DomainError("kernel: need 0 <= n <= N");
  if (n == 0) return Rational(1);
  detail::check_kernel_capacity(N, n, d);
  Rational total(0);
  for (int m = 0; m <= n; ++m) {
    Rational xi(0);
    for (const auto& k : enumerate_compositions(m, d)) {
      Rational t(multinomial_coefficient(k));
      for (int i = 0; i < d && t != 0; ++i) {
        const auto& pi = fam.p[static_cast<std::size_t>(i)];
        t *= falling_factorial(Rational(x[i]), k[i]) * falling_factorial(Rational(y[i]), k[i]);
        if (t != 0) t /= ipow(pi, k[i]);
      }
      xi += t;
    }
    const Rational nm = falling_factorial(Rational(N), m);
    xi /= nm * nm;
    Rational c(binomial(N, m) * binomial(N - m, n - m));
    if ((n - m) % 2) c = -c;
    total += c * xi;
  }
  return total;
}

/// Dirichlet kernel at simplex points w, z (any scalar type).
template <class T>
T dirichlet_kernel(const std::vector<T>& alpha, int n, const std::vector<T>& w, const std::vector<T>& z) {
  if (n == 0) return T(1);
  const int d = static_cast<int>(alpha.size());
  const T A = vector_sum(alpha);
  T total(0);
  for (int m = 0; m <= n; ++m) {
    T xi(0);
    for (const auto& k : enumerate_compositions(m, d)) {
      T t = scalar_from<T>(multinomial_coefficient(k));
      for (int i = 0; i < d; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        t *= ipow(w[ui] * z[ui], k[i]) / rising_factorial(alpha[ui], k[i]);
      }
      xi += t;
    }
    xi *= rising_factorial(A, m);
    T c = rising_factorial(A + T(m), n - 1) /
          scalar_from<T>(BigInt(factorial(static_cast<unsigned long>(m)) * factorial(static_cast<unsigned long>(n - m))));
    if ((n - m) % 2) c = -c;
    total += c * xi;
  }
  return (A + T(2 * n - 1)) * total;
}

inline Rational kernel(const DirichletKernel& fam, int n, const std::vector<Rational>& w, const std::vector<Rational>& z) {
  return dirichlet_kernel(fam.alpha, n, w, z);
}

/// Dispatch for the three discrete families.
inline Rational kernel(const KernelFamily& fam, int n, const Composition& x, const Composition& y) {
  return std::visit(
      [&](const auto& f) -> Rational {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, DirichletKernel>) {
          throw DomainError("Dirichlet kernel takes simplex points, not compositions");
        } else {
          return kernel(f, n, x, y);
        }
      },
      fam);
}

// ---------------------------------------------------------------------------
// Diagonal closed forms at N e_i (e_i for the Dirichlet family)

inline Rational kernel_diag_start(const DMKernel& fam, int n, int i) {
  if (n < 0 || n > fam.N) throw DomainError("kernel_diag_start: need 0 <= n <= N");
  if (n == 0) return Rational(1);
  const Rational A = vector_sum(fam.alpha);
  const Rational& ai = fam.alpha.at(static_cast<std::size_t>(i));
  return Rational(binomial(fam.N, n)) * (A + 2 * n - 1) * rising_factorial(A, n - 1) * rising_factorial(A - ai, n) /
         (rising_factorial(A + fam.N, n) * rising_factorial(ai, n));
}

inline Rational kernel_diag_start(const HypergeometricKernel& fam, int n, int i) {
  const int N = fam.N, L = caps_total(fam.caps);
  const int li = fam.caps.at(static_cast<std::size_t>(i));
  if (li < N) throw DomainError("kernel_diag_start: hypergeometric closed form needs l_i >= N");
  if (n < 0 || n > N) throw DomainError("kernel_diag_start: need 0 <= n <= N");
  if (n == 0) return Rational(1);
  if (n > std::min(N, L - N)) return Rational(0);
  return Rational(binomial(N, n)) * (L - 2 * n + 1) * falling_factorial(Rational(L), n - 1) *
         falling_factorial(Rational(L - li), n) /
         (falling_factorial(Rational(L - N), n) * falling_factorial(Rational(li), n));
}

inline Rational kernel_diag_start(const DirichletKernel& fam, int n, int i) {
  if (n < 0) throw DomainError("kernel_diag_start: need n >= 0");
  if (n == 0) return Rational(1);
  const Rational A = vector_sum(fam.alpha);
  const Rational& ai = fam.alpha.at(static_cast<std::size_t>(i));
  return (A + 2 * n - 1) * rising_factorial(A, n - 1) * rising_factorial(A - ai, n) /
         (Rational(factorial(static_cast<unsigned long>(n))) * rising_factorial(ai, n));
}

inline Rational kernel_diag_start(const MultinomialKernel& fam, int n, int i) {
  if (n < 0 || n > fam.N) throw DomainError("kernel_diag_start: need 0 <= n <= N");
  const Rational& pi = fam.p.at(static_cast<std::size_t>(i));
  return Rational(binomial(fam.N, n)) * ipow(Rational((1 - pi) / pi), n);
}

inline Rational kernel_diag_start(const KernelFamily& fam, int n, int i) {
  return std::visit([&](const auto& f) { return kernel_diag_start(f, n, i); }, fam);
}

/// log h_n(N e_i, N e_i) for n = 0..N, computed by accumulating log factors
/// (no exact arithmetic; fine at N = 20000). Zero terms are -inf.
inline std::vector<double> log_kernel_diag_start(const KernelFamily& family, int i) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  return std::visit(
      [&](const auto& fam) -> std::vector<double> {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, DirichletKernel>) {
          throw DomainError("log_kernel_diag_start: discrete families only");
        } else {
          const int N = fam.N;
          std::vector<double> out(static_cast<std::size_t>(N) + 1, kNegInf);
          out[0] = 0.0;
          double log_binom = 0.0;
          if constexpr (std::is_same_v<F, DMKernel>) {
            const double A = to_double(vector_sum(fam.alpha));
            const Rational rest = vector_sum(fam.alpha) - fam.alpha.at(static_cast<std::size_t>(i));
            if (rest == 0) return out;
            const double ai = to_double(fam.alpha.at(static_cast<std::size_t>(i))), B = to_double(rest);
            double lr_A = 0.0, lr_B = 0.0, lr_AN = 0.0, lr_ai = 0.0;  // (A)_(n-1), (B)_(n), ...
            for (int n = 1; n <= N; ++n) {
              log_binom += std::log(static_cast<double>(N - n + 1) / n);
              if (n >= 2) lr_A += std::log(A + n - 2);
              lr_B += std::log(B + n - 1);
              lr_AN += std::log(A + N + n - 1);
              lr_ai += std::log(ai + n - 1);
              out[static_cast<std::size_t>(n)] = log_binom + std::log(A + 2.0 * n - 1) + lr_A + lr_B - lr_AN - lr_ai;
            }
          } else if constexpr (std::is_same_v<F, HypergeometricKernel>) {
            const int L = caps_total(fam.caps), li = fam.caps.at(static_cast<std::size_t>(i));
            if (li < N) throw DomainError("kernel_diag_start: hypergeometric closed form needs l_i >= N");
            const int top = std::min({N, L - N, L - li});
            double lf_L = 0.0, lf_rest = 0.0, lf_LN = 0.0, lf_li = 0.0;
            for (int n = 1; n <= top; ++n) {
              log_binom += std::log(static_cast<double>(N - n + 1) / n);
              if (n >= 2) lf_L += std::log(static_cast<double>(L - n + 2));
              lf_rest += std::log(static_cast<double>(L - li - n + 1));
              lf_LN += std::log(static_cast<double>(L - N - n + 1));
              lf_li += std::log(static_cast<double>(li - n + 1));
              out[static_cast<std::size_t>(n)] =
                  log_binom + std::log(static_cast<double>(L - 2 * n + 1)) + lf_L + lf_rest - lf_LN - lf_li;
            }
          } else {
            const Rational& pi = fam.p.at(static_cast<std::size_t>(i));
            if (pi == 1) return out;
            const double lratio = std::log(to_double((1 - pi) / pi));
            for (int n = 1; n <= N; ++n) {
              log_binom += std::log(static_cast<double>(N - n + 1) / n);
              out[static_cast<std::size_t>(n)] = log_binom + n * lratio;
            }
          }
          return out;
        }
      },
      family);
}

}  // namespace orthomix
