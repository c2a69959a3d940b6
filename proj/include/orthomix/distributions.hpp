#pragma once

// Stationary laws: Dirichlet, multinomial, Dirichlet-multinomial,
// multivariate hypergeometric and multivariate normal. Exact pmfs over
// Rational, log-domain pmfs for large N, and samplers driven by RandomStream.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "numerics.hpp"
#include "random.hpp"

namespace orthomix {

template <class T>
T vector_sum(const std::vector<T>& v) {
  T s(0);
  for (const auto& e : v) s += e;
  return s;
}

inline std::vector<double> to_doubles(const std::vector<Rational>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& q : v) out.push_back(q.get_d());
  return out;
}

/// Positive Dirichlet parameters with cached total.
struct DirichletParams {
  std::vector<Rational> alpha;
  Rational total;

  explicit DirichletParams(std::vector<Rational> a) : alpha(std::move(a)), total(vector_sum(alpha)) {
    if (alpha.empty()) throw DomainError("Dirichlet parameters must be nonempty");
    for (const auto& v : alpha)
      if (v <= 0) throw DomainError("Dirichlet parameters must be positive");
  }
  int dim() const { return static_cast<int>(alpha.size()); }
};

/// A point of the probability simplex (entries >= 0, sum 1 within 1e-12).
struct SimplexPoint {
  std::vector<double> p;

  explicit SimplexPoint(std::vector<double> v) : p(std::move(v)) {
    if (p.empty()) throw DomainError("simplex point must be nonempty");
    double s = 0.0;
    for (double e : p) {
      if (!(e >= 0.0) || e > 1.0) throw DomainError("simplex entries must lie in [0, 1]");
      s += e;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DomainError("simplex entries must sum to 1");
  }
  int dim() const { return static_cast<int>(p.size()); }
};

/// Rational simplex point; exact sum 1 is required.
inline void check_rational_simplex(const std::vector<Rational>& p) {
  if (p.empty()) throw DomainError("probability vector must be nonempty");
  for (const auto& v : p)
    if (v < 0 || v > 1) throw DomainError("probabilities must lie in [0, 1]");
  if (vector_sum(p) != 1) throw DomainError("probabilities must sum to 1");
}

struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd chol_lower;

  GaussianParams(Eigen::VectorXd mu, Eigen::MatrixXd cov) : mean(std::move(mu)), covariance(std::move(cov)) {
    if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size())
      throw DomainError("Gaussian parameters have inconsistent dimensions");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw DomainError("covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success) throw DomainError("covariance must be positive definite");
    chol_lower = llt.matrixL();
  }
  int dim() const { return static_cast<int>(mean.size()); }
};

// ---------------------------------------------------------------------------
// Mass and density functions

/// C(N; x) prod (alpha_i)_(x_i) / |alpha|_(N). Negative alpha_i = -l_i gives
/// the hypergeometric law.
template <class T>
T pmf_dirichlet_multinomial(const Composition& x, const std::vector<T>& alpha) {
  if (static_cast<int>(alpha.size()) != x.dim()) throw DomainError("alpha length must equal d");
  T num = scalar_from<T>(multinomial_coefficient(x));
  for (int i = 0; i < x.dim(); ++i) num *= rising_factorial(alpha[static_cast<std::size_t>(i)], x[i]);
  const T den = rising_factorial(vector_sum(alpha), x.total());
  if (is_zero(den)) throw DomainError("Dirichlet-multinomial normaliser vanishes");
  return num / den;
}

template <>
inline double pmf_dirichlet_multinomial<double>(const Composition& x, const std::vector<double>& alpha) {
  if (static_cast<int>(alpha.size()) != x.dim()) throw DomainError("alpha length must equal d");
  double num = to_double(multinomial_coefficient(x));
  for (int i = 0; i < x.dim(); ++i) num *= rising_factorial(alpha[static_cast<std::size_t>(i)], x[i]);
  return num / rising_factorial(vector_sum(alpha), x.total());
}

inline Rational pmf_dirichlet_multinomial(const Composition& x, const DirichletParams& params) {
  return pmf_dirichlet_multinomial<Rational>(x, params.alpha);
}

/// log DM(x | N, alpha) through lgamma; positive alpha only.
inline double log_pmf_dirichlet_multinomial(const Composition& x, const std::vector<double>& alpha) {
  if (static_cast<int>(alpha.size()) != x.dim()) throw DomainError("alpha length must equal d");
  const double total = vector_sum(alpha);
  double v = std::lgamma(x.total() + 1.0) + std::lgamma(total) - std::lgamma(total + x.total());
  for (int i = 0; i < x.dim(); ++i) {
    const double a = alpha[static_cast<std::size_t>(i)];
    if (a <= 0) throw DomainError("log path needs positive alpha");
    v += std::lgamma(a + x[i]) - std::lgamma(a) - std::lgamma(x[i] + 1.0);
  }
  return v;
}

/// Exact for N <= 200, log-domain above.
inline LogScalar pmf_dirichlet_multinomial_scaled(const Composition& x, const DirichletParams& params) {
  if (x.total() <= 200) return LogScalar::from_rational(pmf_dirichlet_multinomial(x, params));
  return LogScalar::from_log(log_pmf_dirichlet_multinomial(x, to_doubles(params.alpha)));
}

template <class T>
T pmf_multinomial(const Composition& x, const std::vector<T>& p) {
  if (static_cast<int>(p.size()) != x.dim()) throw DomainError("p length must equal d");
  T r = scalar_from<T>(multinomial_coefficient(x));
  for (int i = 0; i < x.dim(); ++i) r *= ipow(p[static_cast<std::size_t>(i)], x[i]);
  return r;
}

inline double pmf_multinomial(const Composition& x, const SimplexPoint& p) {
  if (p.dim() != x.dim()) throw DomainError("p length must equal d");
  double lr = std::lgamma(x.total() + 1.0);
  for (int i = 0; i < x.dim(); ++i) {
    const double pi = p.p[static_cast<std::size_t>(i)];
    if (x[i] == 0) continue;
    if (pi == 0.0) return 0.0;
    lr += x[i] * std::log(pi) - std::lgamma(x[i] + 1.0);
  }
  return std::exp(lr);
}

/// prod C(l_i, x_i) / C(|l|, N).
inline Rational pmf_hypergeometric(const Composition& x, const Caps& caps) {
  if (static_cast<int>(caps.size()) != x.dim()) throw DomainError("caps length must equal d");
  if (!within_caps(x, caps)) return Rational(0);
  BigInt num = 1;
  for (int i = 0; i < x.dim(); ++i) num *= binomial(caps[static_cast<std::size_t>(i)], x[i]);
  const BigInt den = binomial(caps_total(caps), x.total());
  if (den == 0) throw DomainError("sample size exceeds the pool");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline double pdf_dirichlet(const SimplexPoint& z, const std::vector<double>& alpha) {
  if (static_cast<int>(alpha.size()) != z.dim()) throw DomainError("alpha length must equal d");
  double total = 0.0, lv = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double a = alpha[i], zi = z.p[i];
    if (a <= 0) throw DomainError("Dirichlet parameters must be positive");
    total += a;
    lv -= std::lgamma(a);
    if (zi == 0.0) {
      if (a < 1.0) throw DomainError("Dirichlet density is unbounded at the boundary");
      if (a > 1.0) return 0.0;
      continue;
    }
    lv += (a - 1.0) * std::log(zi);
  }
  return std::exp(lv + std::lgamma(total));
}

inline double pdf_dirichlet(const SimplexPoint& z, const DirichletParams& params) {
  return pdf_dirichlet(z, to_doubles(params.alpha));
}

// ---------------------------------------------------------------------------
// Samplers

namespace detail {
/// Index drawn with probability proportional to weights (all >= 0, total > 0).
inline int draw_weighted(const std::vector<double>& w, double total, RandomStream& rng) {
  const double u = rng.uniform() * total;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    acc += w[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}
}  // namespace detail

struct DirichletDist {
  std::vector<double> alpha;
};
struct DirichletMultinomialDist {
  int N;
  std::vector<double> alpha;
};
struct MultinomialDist {
  int N;
  std::vector<double> p;
};
struct HypergeometricDist {
  int N;
  Caps caps;
};
struct GaussianDist {
  GaussianParams params;
};

inline std::vector<double> sample(const DirichletDist& dist, RandomStream& rng) {
  std::vector<double> g(dist.alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::gamma_distribution<double> gamma(dist.alpha[i], 1.0);
    g[i] = gamma(rng);
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

/// Sequential Polya draws: each draw adds one unit of the drawn colour.
inline Composition sample(const DirichletMultinomialDist& dist, RandomStream& rng) {
  std::vector<double> w = dist.alpha;
  double total = vector_sum(w);
  std::vector<int> counts(w.size(), 0);
  for (int k = 0; k < dist.N; ++k) {
    const int i = detail::draw_weighted(w, total, rng);
    ++counts[static_cast<std::size_t>(i)];
    w[static_cast<std::size_t>(i)] += 1.0;
    total += 1.0;
  }
  return Composition(std::move(counts));
}

inline Composition sample(const MultinomialDist& dist, RandomStream& rng) {
  std::vector<int> counts(dist.p.size(), 0);
  int remaining = dist.N;
  double mass = 1.0;
  for (std::size_t i = 0; i + 1 < dist.p.size() && remaining > 0; ++i) {
    const double q = mass > 0.0 ? std::clamp(dist.p[i] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<int> binom(remaining, q);
    counts[i] = binom(rng);
    remaining -= counts[i];
    mass -= dist.p[i];
  }
  counts.back() += remaining;
  return Composition(std::move(counts));
}

/// Sequential draws without replacement from a pool with the given caps.
inline Composition sample(const HypergeometricDist& dist, RandomStream& rng) {
  std::vector<int> pool = dist.caps;
  int total = caps_total(pool);
  if (dist.N > total) throw DomainError("sample size exceeds the pool");
  std::vector<int> counts(pool.size(), 0);
  for (int k = 0; k < dist.N; ++k) {
    auto u = static_cast<int>(rng.below(static_cast<std::uint64_t>(total)));
    std::size_t i = 0;
    while (u >= pool[i]) u -= pool[i++];
    ++counts[i];
    --pool[i];
    --total;
  }
  return Composition(std::move(counts));
}

inline Eigen::VectorXd sample(const GaussianDist& dist, RandomStream& rng) {
  Eigen::VectorXd z(dist.params.dim());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return dist.params.mean + dist.params.chol_lower * z;
}

}  // namespace orthomix
