#pragma once

// Exact chi-square curves from the spectral sums, the brute-force matrix
// power oracle, closed-form mixing bounds and steps-to-epsilon solvers.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chains.hpp"
#include "kernels.hpp"
#include "spectra.hpp"

namespace orthomix {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min(1, sqrt(chisq) / 2)
inline double tv_upper(double chisq) {
  if (!(chisq >= 0)) throw DomainError("tv_upper: chi-square must be nonnegative");
  return std::min(1.0, std::sqrt(chisq) / 2.0);
}

namespace detail {
inline Rational kernel_at_start(const ChainSpec& spec, int n, const Composition& x) {
  const KernelFamily fam = stationary_kernel(spec);
  if (auto i = x.corner_index()) return kernel_diag_start(fam, n, *i);
  return kernel(fam, n, x, x);
}
}  // namespace detail

/// sum_{n>=1} beta_n^{2l} h_n(x, x), exact.
inline Rational chisq_exact_rational(const ChainSpec& spec, const Composition& start, long l) {
  validate(spec);
  if (!is_finite(spec)) throw DomainError("chisq_exact_rational: finite families only");
  if (l < 0) throw DomainError("chisq: need l >= 0");
  if (!in_state_space(spec, start)) throw DomainError("chisq: start outside the state space");
  Rational total(0);
  for (int n = 1; n <= detail::top_degree(spec); ++n) {
    const Rational beta = eigenvalue_exact(spec, n);
    if (beta == 0 && l > 0) continue;
    const Rational h = detail::kernel_at_start(spec, n, start);
    if (h == 0) continue;
    total += ipow(beta, 2 * l) * h;
  }
  return total;
}

/// Chi-square curve from a fixed start. Terms are kept as logs, so the
/// N = 20000 corner start costs one pass over the degrees per l. Every term is
/// nonnegative, which makes the curve nonincreasing in l.
class ChiSquareEvaluator {
 public:
  ChiSquareEvaluator(ChainSpec spec, Composition start) : spec_(std::move(spec)), start_(std::move(start)) {
    validate(spec_);
    if (!is_finite(spec_)) throw DomainError("ChiSquareEvaluator: finite families only");
    if (!in_state_space(spec_, start_)) throw DomainError("chisq: start outside the state space");
    const int top = detail::top_degree(spec_);
    const auto beta = eigenvalue_values(spec_);
    std::vector<double> log_h;
    if (auto i = start_.corner_index()) {
      log_h = log_kernel_diag_start(stationary_kernel(spec_), *i);
    } else {
      const KernelFamily fam = stationary_kernel(spec_);
      log_h.assign(static_cast<std::size_t>(population(spec_)) + 1, -kInf);
      for (int n = 1; n <= top; ++n) {
        const Rational h = kernel(fam, n, start_, start_);
        if (h > 0) log_h[static_cast<std::size_t>(n)] = LogScalar::from_rational(h).log_magnitude();
      }
    }
    for (int n = 1; n <= top; ++n) {
      const double lh = log_h[static_cast<std::size_t>(n)];
      if (lh == -kInf) continue;
      const double b = beta[static_cast<std::size_t>(n)];
      terms_.push_back({b == 0.0 ? -kInf : std::log(std::abs(b)), lh});
    }
  }

  const ChainSpec& spec() const { return spec_; }
  const Composition& start() const { return start_; }

  double operator()(long l) const {
    if (l < 0) throw DomainError("chisq: need l >= 0");
    std::vector<double> logs;
    logs.reserve(terms_.size());
    for (const auto& t : terms_) {
      if (t.log_abs_beta == -kInf) {
        if (l == 0) logs.push_back(t.log_h);
        continue;
      }
      logs.push_back(2.0 * static_cast<double>(l) * t.log_abs_beta + t.log_h);
    }
    if (logs.empty()) return 0.0;
    return std::exp(log_sum_exp(logs));
  }

 private:
  struct Term {
    double log_abs_beta;
    double log_h;
  };
  ChainSpec spec_;
  Composition start_;
  std::vector<Term> terms_;
};

inline double chisq_exact(const ChainSpec& spec, const Composition& start, long l, bool force_exact = false) {
  if (force_exact) return chisq_exact_rational(spec, start, l).get_d();
  return ChiSquareEvaluator(spec, start)(l);
}

/// Points (l, chisq) for l = 0, stride, 2 stride, ... up to l_max (always included).
inline std::vector<std::pair<long, double>> chisq_curve(const ChiSquareEvaluator& eval, long l_max, long stride = 1) {
  if (l_max < 0 || stride < 1) throw DomainError("chisq_curve: need l_max >= 0 and stride >= 1");
  std::vector<std::pair<long, double>> out;
  for (long l = 0; l <= l_max; l += stride) out.emplace_back(l, eval(l));
  if (out.back().first != l_max) out.emplace_back(l_max, eval(l_max));
  return out;
}

/// Smallest l with chisq(l) <= eps: doubling bracket then bisection.
template <class Curve>
long steps_to_epsilon(const Curve& chisq, double eps, long limit = (1L << 50)) {
  if (!(eps > 0)) throw DomainError("steps_to_epsilon: need eps > 0");
  if (chisq(0) <= eps) return 0;
  long lo = 0, hi = 1;
  while (chisq(hi) > eps) {
    lo = hi;
    if (hi > limit / 2) throw DomainError("steps_to_epsilon: curve does not reach eps");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (chisq(mid) <= eps) hi = mid;
    else lo = mid;
  }
  return hi;
}

inline long steps_to_epsilon(const ChainSpec& spec, const Composition& start, double eps) {
  return steps_to_epsilon(ChiSquareEvaluator(spec, start), eps);
}

// ---------------------------------------------------------------------------
// Brute force

struct BruteForceCurve {
  std::vector<Rational> chisq;
  std::vector<Rational> tv;
};

/// Exact chi-square and total variation of delta_x K^l for l = 0..l_max.
inline BruteForceCurve brute_force_curve(const ChainSpec& spec, const Composition& start, int l_max) {
  const TransitionMatrix T = build_transition_matrix(spec);
  std::vector<Rational> pi;
  for (const auto& x : T.states) pi.push_back(stationary_pmf(spec, x));
  std::vector<Rational> mu(T.size(), Rational(0));
  mu[T.index.at(start)] = 1;
  BruteForceCurve out;
  for (int l = 0; l <= l_max; ++l) {
    if (l > 0) mu = T.left_multiply(mu);
    Rational chi(0), tv(0);
    for (std::size_t i = 0; i < T.size(); ++i) {
      const Rational diff = mu[i] - pi[i];
      chi += diff * diff / pi[i];
      tv += abs(diff);
    }
    out.chisq.push_back(chi);
    out.tv.push_back(tv / 2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normal AR

/// Chi-square of N(A^l x, Sigma - A^l Sigma A^l^T) against N(0, Sigma).
class NormalARChiSquare {
 public:
  NormalARChiSquare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& x)
      : spec_(normal_ar_spectrum(A, Sigma)) {
    if (x.size() != A.rows()) throw DomainError("chisq_normal_ar: start has wrong dimension");
    z_ = spec_.transform.transpose() * spec_.inv_root * x;
  }

  const NormalARSpectrum& spectrum() const { return spec_; }

  /// +inf at l = 0 (point mass) or when the exponent exceeds 700.
  double operator()(long l) const {
    if (l < 0) throw DomainError("chisq: need l >= 0");
    if (l == 0) return kInf;
    double expo = 0.0, log_det = 0.0;
    for (Eigen::Index i = 0; i < z_.size(); ++i) {
      const double lam = std::abs(spec_.lambdas[i]);
      if (lam == 0.0) continue;
      const double p2 = std::exp(2.0 * static_cast<double>(l) * std::log(lam));
      expo += z_[i] * z_[i] * p2 / (1.0 + p2);
      log_det += std::log1p(-p2 * p2);
    }
    const double total = expo - 0.5 * log_det;
    if (total > 700.0) return kInf;
    return std::expm1(total);
  }

 private:
  NormalARSpectrum spec_;
  Eigen::VectorXd z_;
};

inline double chisq_normal_ar(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& x,
                              long l) {
  return NormalARChiSquare(A, Sigma, x)(l);
}

// ---------------------------------------------------------------------------
// Mixing bounds

/// chisq <= upper_level for l >= upper; chisq >= lower_level for l <= lower.
struct MixingBound {
  std::string family;
  double c;
  double upper;
  double lower;
  double upper_level;
  double lower_level;
  double rate;  ///< denominator of the thresholds
  bool upper_applies = true;
  bool lower_applies = true;
};

namespace detail {
inline double bound_constant(double A) { return 3.0 * std::max(2.0, A); }
}  // namespace detail

/// Step thresholds from a corner start N e_i (see README for the families).
inline MixingBound mixing_bounds(const ChainSpec& spec, const Composition& start, double c) {
  validate(spec);
  if (!in_state_space(spec, start)) throw DomainError("mixing_bounds: start outside the state space");
  const auto corner = start.corner_index();
  if (!corner) throw DomainError("mixing_bounds: start must be N e_i");
  const int i = *corner;
  const double N = population(spec);
  MixingBound b{chain_name(spec), c, 0, 0, 0, 0, 0};
  const double ec = std::exp(c), emc = std::exp(-c);

  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Moran> || std::is_same_v<F, Hubbell> || std::is_same_v<F, GibbsDM>) {
          const auto alpha = to_doubles(dm_alpha(spec));
          const double A = vector_sum(alpha), ai = alpha[static_cast<std::size_t>(i)];
          const double ratio = (A - ai) / ai;
          b.upper_level = emc;
          b.lower_level = ec / 6.0;
          if constexpr (std::is_same_v<F, GibbsDM>) {
            const double lr = std::log(N / (N + A));
            b.rate = -2.0 * lr;
            b.upper = -0.5 * ((std::log(detail::bound_constant(A) * std::max(ratio, 1.0)) + c) / lr + 1.0);
            b.lower = -0.5 * ((std::log(detail::bound_constant(A) * ratio) - c) / lr + 1.0);
          } else {
            const double gap = std::is_same_v<F, Moran> ? A / (N * (N + A)) : A / (N * (N + A - 1.0));
            b.rate = -2.0 * std::log1p(-gap);
            const double scale = detail::bound_constant(A) * N / (N + A);
            b.upper = (std::log(scale * std::max(ratio, 1.0)) + c) / b.rate;
            b.lower = (std::log(scale * ratio) - c) / b.rate;
          }
        } else if constexpr (std::is_same_v<F, BLDownUp>) {
          const double L = caps_total(f.l), li = f.l[static_cast<std::size_t>(i)], s = f.s;
          if (li < N) throw DomainError("mixing_bounds: the down-up bound needs N <= l_i");
          b.upper_level = 2.0 * emc;
          b.lower_level = ec / 2.0;
          const double beta1 = (N - s) * (L - N) / (N * (L - N + s));
          const double K = L * N * (L - li) / ((L - N) * li);
          if (beta1 <= 0.0) {
            b.rate = kInf;
            b.upper = 1.0;
            b.lower = 0.0;
            return;
          }
          if (s == 0) throw DomainError("mixing_bounds: s = 0 never mixes");
          b.rate = -2.0 * std::log(beta1);
          b.upper = (std::log(K) + c) / b.rate;
          b.lower = (std::log(K) - c) / b.rate;
        } else if constexpr (std::is_same_v<F, Ehrenfest>) {
          const double pi = f.p[static_cast<std::size_t>(i)].get_d(), s = f.s;
          b.upper_level = std::expm1(emc);
          b.lower_level = ec;
          if (s == N) {
            b.rate = kInf;
            b.upper = 1.0;
            b.lower = 0.0;
            return;
          }
          if (s == 0) throw DomainError("mixing_bounds: s = 0 never mixes");
          const double K = N * (1.0 - pi) / pi;
          b.rate = -2.0 * std::log1p(-s / N);
          b.upper = (std::log(K) + c) / b.rate;
          b.lower = (std::log(K) - c) / b.rate;
        } else {
          throw DomainError("mixing_bounds: no closed-form bound for family " + chain_name(spec));
        }
      },
      spec);
  return b;
}

/// Thresholds from the start 0 using only the leading eigenvalue.
inline MixingBound mixing_bounds_normal_ar(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, double c) {
  const auto sp = normal_ar_spectrum(A, Sigma);
  const double lam = std::abs(sp.lambdas[0]);
  MixingBound b{"normal-ar", c, 0, 0, 10.0 * std::exp(-c), std::exp(c) / 4.0, 0};
  b.upper_applies = c >= std::log(static_cast<double>(A.rows()) / 2.0);
  b.lower_applies = c > 0;
  if (lam == 0.0) {
    b.rate = kInf;
    b.upper = 1.0;
    b.lower = 0.0;
    return b;
  }
  b.rate = -4.0 * std::log(lam);
  b.upper = (std::log(2.0) + c) / b.rate;
  b.lower = (std::log(2.0) - c) / b.rate;
  return b;
}

/// Large-N form of the upper threshold at c = 0: log K / (2 (1 - beta_1)),
/// with N/(N + |alpha|) inside the logarithm replaced by 1.
inline double asymptotic_threshold(const ChainSpec& spec, const Composition& start) {
  validate(spec);
  const auto corner = start.corner_index();
  if (!corner || !in_state_space(spec, start)) throw DomainError("asymptotic_threshold: start must be N e_i");
  const int i = *corner;
  const double N = population(spec);
  const double gap = 1.0 - eigenvalue_values(spec)[1];
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Moran> || std::is_same_v<F, Hubbell> || std::is_same_v<F, GibbsDM>) {
          const auto alpha = to_doubles(dm_alpha(spec));
          const double A = vector_sum(alpha), ai = alpha[static_cast<std::size_t>(i)];
          return std::log(detail::bound_constant(A) * std::max((A - ai) / ai, 1.0)) / (2.0 * gap);
        } else if constexpr (std::is_same_v<F, BLDownUp>) {
          const double L = caps_total(f.l), li = f.l[static_cast<std::size_t>(i)];
          return std::log(L * N * (L - li) / ((L - N) * li)) / (2.0 * gap);
        } else if constexpr (std::is_same_v<F, Ehrenfest>) {
          const double pi = f.p[static_cast<std::size_t>(i)].get_d();
          return std::log(N * (1.0 - pi) / pi) / (2.0 * gap);
        } else {
          throw DomainError("asymptotic_threshold: no closed-form bound for family " + chain_name(spec));
        }
      },
      spec);
}

}  // namespace orthomix
