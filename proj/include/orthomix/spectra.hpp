#pragma once

// Closed-form eigenvalues and multiplicities, the normal AR diagonalizing
// transform, and exact eigenfunction checks against the matrix oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "chains.hpp"
#include "orthopoly.hpp"

namespace orthomix {

struct SpectralTerm {
  int degree;
  Rational beta;
  BigInt multiplicity;
};

namespace detail {

/// Largest degree that carries eigenfunctions.
inline int top_degree(const ChainSpec& spec) {
  const int N = population(spec);
  if (auto caps = support_caps(spec)) return std::min(N, caps_total(*caps) - N);
  return N;
}

/// Both printed forms of the level-model eigenvalue (reindexed sums).
inline std::pair<Rational, Rational> polya_level_forms(int N, const Rational& A, int s, int n) {
  Rational f1(0), f2(0);
  for (int k = 0; k <= n; ++k) {
    const Rational c(binomial(n, k));
    Rational t1 = c * falling_factorial(Rational(N - s), k) * falling_factorial(Rational(s), n - k);
    if (t1 != 0) f1 += t1 / (falling_factorial(Rational(N), k) * rising_factorial(Rational(N + A), n - k));
    Rational t2 = c * falling_factorial(Rational(N - s), n - k) * falling_factorial(Rational(s), k);
    if (t2 != 0) f2 += t2 / (falling_factorial(Rational(N), n - k) * rising_factorial(Rational(N + A), k));
  }
  return {f1, f2};
}

inline Rational bl_level(int N, int L, int s, int n) {
  Rational r(0);
  for (int k = 0; k <= n; ++k) {
    Rational t = Rational(binomial(n, k)) * falling_factorial(Rational(N - s), n - k) * falling_factorial(Rational(s), k);
    if (t == 0) continue;
    t /= falling_factorial(Rational(N), n - k) * falling_factorial(Rational(L - N), k);
    if (k % 2) r -= t;
    else r += t;
  }
  return r;
}

}  // namespace detail

/// beta_n as an exact rational. Throws for BL degrees above min(N, |l| - N).
inline Rational eigenvalue_exact(const ChainSpec& spec, int n) {
  validate(spec);
  if (!is_finite(spec)) throw DomainError("eigenvalue_exact: finite families only");
  const int N = population(spec);
  if (n < 0 || n > N) throw DomainError("eigenvalue_exact: need 0 <= n <= N");
  if (n > detail::top_degree(spec)) throw DomainError("eigenvalue_exact: degree carries no eigenfunctions");
  return std::visit(
      [&](const auto& c) -> Rational {
        using F = std::decay_t<decltype(c)>;
        if constexpr (is_polya_family_v<F>) {
          const Rational A = vector_sum(dm_alpha(spec));
          if constexpr (std::is_same_v<F, PolyaLevel>) {
            auto [f1, f2] = detail::polya_level_forms(N, A, c.s, n);
            if (f1 != f2) throw std::logic_error("level-model eigenvalue forms disagree");
            return f1;
          } else if constexpr (std::is_same_v<F, PolyaDownUp>) {
            return falling_factorial(Rational(N - c.s), n) * rising_factorial(Rational(N + A), n) /
                   (falling_factorial(Rational(N), n) * rising_factorial(Rational(N - c.s + A), n));
          } else if constexpr (std::is_same_v<F, PolyaUpDown>) {
            return falling_factorial(Rational(N), n) * rising_factorial(Rational(N + c.s + A), n) /
                   (falling_factorial(Rational(N + c.s), n) * rising_factorial(Rational(N + A), n));
          } else if constexpr (std::is_same_v<F, Moran>) {
            return 1 - Rational(n * (A + n - 1) / (N * (N + A)));
          } else if constexpr (std::is_same_v<F, Hubbell>) {
            return 1 - Rational(n * (n + A - 1) / (N * (N + A - 1)));
          } else {
            return falling_factorial(Rational(N), n) / rising_factorial(Rational(N + A), n);
          }
        } else if constexpr (is_bl_family_v<F>) {
          const int L = caps_total(c.l);
          if constexpr (std::is_same_v<F, BLLevel>) {
            return detail::bl_level(N, L, c.s, n);
          } else if constexpr (std::is_same_v<F, BLDownUp>) {
            return falling_factorial(Rational(N - c.s), n) * falling_factorial(Rational(L - N), n) /
                   (falling_factorial(Rational(N), n) * falling_factorial(Rational(L - N + c.s), n));
          } else {
            return falling_factorial(Rational(N), n) * falling_factorial(Rational(L - N - c.s), n) /
                   (falling_factorial(Rational(N + c.s), n) * falling_factorial(Rational(L - N), n));
          }
        } else if constexpr (std::is_same_v<F, Ehrenfest>) {
          return falling_factorial(Rational(N - c.s), n) / falling_factorial(Rational(N), n);
        } else {
          throw DomainError("eigenvalue_exact: finite families only");
        }
      },
      spec);
}

/// Multiplicity of degree n: C(d+n-2, n), or a difference of bounded
/// composition counts for BL families (zero above min(N, |l| - N)).
inline BigInt multiplicity(const ChainSpec& spec, int n) {
  const int d = dimension(spec);
  if (n < 0 || n > population(spec)) return BigInt(0);
  if (auto caps = support_caps(spec)) {
    if (n > detail::top_degree(spec)) return BigInt(0);
    return count_bounded_compositions(n, *caps) - (n > 0 ? count_bounded_compositions(n - 1, *caps) : BigInt(0));
  }
  return binomial(d + n - 2, n);
}

/// Spectral terms n = 0..N with positive multiplicity, exact.
inline std::vector<SpectralTerm> eigenvalues(const ChainSpec& spec) {
  std::vector<SpectralTerm> out;
  const int top = detail::top_degree(spec);
  for (int n = 0; n <= top; ++n) {
    BigInt mult = multiplicity(spec, n);
    if (mult == 0) continue;
    out.push_back({n, eigenvalue_exact(spec, n), std::move(mult)});
  }
  return out;
}

/// beta_n as doubles for n = 0..N; degrees without eigenfunctions get 0.
/// Product forms are accumulated factor by factor so N in the tens of
/// thousands is cheap; the summed level forms go through exact arithmetic up
/// to N = 400 and lgamma terms above.
inline std::vector<double> eigenvalue_values(const ChainSpec& spec) {
  validate(spec);
  const int N = population(spec), top = detail::top_degree(spec);
  std::vector<double> beta(static_cast<std::size_t>(N) + 1, 0.0);
  beta[0] = 1.0;
  auto product = [&](auto&& factor) {
    double v = 1.0;
    for (int n = 1; n <= top; ++n) {
      v *= factor(n - 1);
      beta[static_cast<std::size_t>(n)] = v;
    }
  };
  const bool exact = N <= 400;
  std::visit(
      [&](const auto& c) {
        using F = std::decay_t<decltype(c)>;
        if constexpr (is_polya_family_v<F>) {
          const double A = to_double(vector_sum(dm_alpha(spec)));
          if constexpr (std::is_same_v<F, PolyaLevel>) {
            if (exact) {
              for (int n = 1; n <= N; ++n) beta[static_cast<std::size_t>(n)] = to_double(eigenvalue_exact(spec, n));
              return;
            }
            // terms with k < n - s vanish
            for (int n = 1; n <= N; ++n) {
              std::vector<double> logs;
              for (int k = std::max(0, n - c.s); k <= std::min(n, N - c.s); ++k) {
                const int j = n - k;
                logs.push_back(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(j + 1.0) +
                               std::lgamma(N - c.s + 1.0) - std::lgamma(N - c.s - k + 1.0) + std::lgamma(c.s + 1.0) -
                               std::lgamma(c.s - j + 1.0) - std::lgamma(N + 1.0) + std::lgamma(N - k + 1.0) -
                               std::lgamma(N + A + j) + std::lgamma(N + A));
              }
              beta[static_cast<std::size_t>(n)] = logs.empty() ? 0.0 : std::exp(log_sum_exp(logs));
            }
          } else if constexpr (std::is_same_v<F, PolyaDownUp>) {
            product([&](int k) { return (N - c.s - k) * (N + A + k) / ((N - k) * (N - c.s + A + k)); });
          } else if constexpr (std::is_same_v<F, PolyaUpDown>) {
            product([&](int k) { return (N - k) * (N + c.s + A + k) / ((N + c.s - k) * (N + A + k)); });
          } else if constexpr (std::is_same_v<F, Moran>) {
            for (int n = 1; n <= N; ++n)
              beta[static_cast<std::size_t>(n)] = 1.0 - n * (A + n - 1) / (static_cast<double>(N) * (N + A));
          } else if constexpr (std::is_same_v<F, Hubbell>) {
            for (int n = 1; n <= N; ++n)
              beta[static_cast<std::size_t>(n)] = 1.0 - n * (n + A - 1) / (static_cast<double>(N) * (N + A - 1));
          } else {
            product([&](int k) { return (N - k) / (N + A + k); });
          }
        } else if constexpr (is_bl_family_v<F>) {
          const double L = caps_total(c.l);
          if constexpr (std::is_same_v<F, BLLevel>) {
            if (exact) {
              for (int n = 1; n <= top; ++n) beta[static_cast<std::size_t>(n)] = to_double(eigenvalue_exact(spec, n));
              return;
            }
            for (int n = 1; n <= top; ++n) {
              double v = 0.0;
              for (int k = std::max(0, n - (N - c.s)); k <= std::min(n, c.s); ++k) {
                const int j = n - k;
                const double lt = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(j + 1.0) +
                                  std::lgamma(N - c.s + 1.0) - std::lgamma(N - c.s - j + 1.0) + std::lgamma(c.s + 1.0) -
                                  std::lgamma(c.s - k + 1.0) - std::lgamma(N + 1.0) + std::lgamma(N - j + 1.0) -
                                  std::lgamma(L - N + 1.0) + std::lgamma(L - N - k + 1.0);
                v += (k % 2 ? -1.0 : 1.0) * std::exp(lt);
              }
              beta[static_cast<std::size_t>(n)] = v;
            }
          } else if constexpr (std::is_same_v<F, BLDownUp>) {
            product([&](int k) { return (N - c.s - k) * (L - N - k) / ((N - k) * (L - N + c.s - k)); });
          } else {
            product([&](int k) { return (N - k) * (L - N - c.s - k) / ((N + c.s - k) * (L - N - k)); });
          }
        } else if constexpr (std::is_same_v<F, Ehrenfest>) {
          product([&](int k) { return static_cast<double>(N - c.s - k) / (N - k); });
        } else {
          throw DomainError("eigenvalue_values: finite families only");
        }
      },
      spec);
  return beta;
}

// ---------------------------------------------------------------------------
// Eigenfunction verification

struct EigenCheckOptions {
  int max_n = -1;  ///< negative: all degrees
  /// Test fixture: add an offset to the claimed eigenvalue at one degree.
  std::optional<std::pair<int, Rational>> perturb;
  double tolerance = 1e-10;
  double state_cap = 2000;
};

struct EigenCheckReport {
  bool passed = true;
  int indices_checked = 0;
  bool residuals_exact_zero = true;
  double max_residual = 0.0;
  bool multiset_match = true;
  double max_eigen_diff = 0.0;
  bool exact_nullity_checked = false;
  bool exact_nullity_ok = true;
  std::string first_failure;

  void fail(const std::string& what) {
    passed = false;
    if (first_failure.empty()) first_failure = what;
  }
};

namespace detail {

/// Eigenfunction of degree |n| on a finite family, exact.
inline Rational eigenfunction(const ChainSpec& spec, const MultiIndex& n, const Composition& x) {
  return std::visit(
      [&](const auto& c) -> Rational {
        using F = std::decay_t<decltype(c)>;
        if constexpr (is_polya_family_v<F>) return hahn_multi<Rational>(n, x, dm_alpha(spec));
        else if constexpr (is_bl_family_v<F>) return hahn_multi<Rational>(n, x, negated_caps(c.l));
        else if constexpr (std::is_same_v<F, Ehrenfest>) return krawtchouk_multi<Rational>(n, x, c.p);
        else throw DomainError("eigenfunction: finite families only");
      },
      spec);
}

/// Rank of a dense rational matrix by fraction-exact Gaussian elimination.
inline int rational_rank(std::vector<std::vector<Rational>> m) {
  const std::size_t rows = m.size(), cols = rows ? m[0].size() : 0;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < cols && rank < rows; ++col) {
    std::size_t pivot = rank;
    while (pivot < rows && m[pivot][col] == 0) ++pivot;
    if (pivot == rows) continue;
    std::swap(m[pivot], m[rank]);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      if (m[r][col] == 0) continue;
      const Rational f = m[r][col] / m[rank][col];
      for (std::size_t k = col; k < cols; ++k) m[r][k] -= f * m[rank][k];
    }
    ++rank;
  }
  return static_cast<int>(rank);
}

}  // namespace detail

/// Checks K q_n = beta_{|n|} q_n exactly on every index up to max_n, the
/// formula eigenvalue multiset against the matrix numerically, and (for at
/// most 35 states) the exact nullity of K - beta I for each distinct beta.
inline EigenCheckReport verify_eigenfunctions(const ChainSpec& spec, const EigenCheckOptions& opt = {}) {
  validate(spec);
  if (!is_finite(spec)) throw DomainError("verify_eigenfunctions: finite families only");
  if (state_space_size(spec) > opt.state_cap) throw CapacityError("verify_eigenfunctions: state space too large");
  EigenCheckReport rep;
  const TransitionMatrix T = build_transition_matrix(spec, opt.state_cap);
  const int d = dimension(spec), N = population(spec), top = detail::top_degree(spec);
  const int max_n = opt.max_n < 0 ? top : std::min(opt.max_n, top);
  const auto caps = support_caps(spec);

  auto claimed = [&](int n) {
    Rational b = eigenvalue_exact(spec, n);
    if (opt.perturb && opt.perturb->first == n) b += opt.perturb->second;
    return b;
  };

  for (int deg = 0; deg <= max_n; ++deg) {
    const Rational beta = claimed(deg);
    for (const auto& idx : multi_indices(deg, d, caps, N)) {
      std::vector<Rational> q;
      q.reserve(T.size());
      bool nonzero = false;
      for (const auto& x : T.states) {
        q.push_back(detail::eigenfunction(spec, idx, x));
        nonzero = nonzero || q.back() != 0;
      }
      if (!nonzero) rep.fail("eigenfunction " + idx.to_string() + " vanishes identically");
      const auto Kq = T.right_multiply(q);
      for (std::size_t i = 0; i < q.size(); ++i) {
        const Rational r = Kq[i] - beta * q[i];
        if (r != 0) {
          rep.residuals_exact_zero = false;
          const double rd = std::abs(r.get_d());
          rep.max_residual = std::max(rep.max_residual, rd);
          rep.fail("residual " + std::to_string(rd) + " at index " + idx.to_string() + ", state " +
                   T.states[i].to_string());
        }
      }
      ++rep.indices_checked;
    }
  }

  // Formula multiset (with perturbation) against the symmetrized matrix.
  std::vector<double> formula;
  std::vector<std::pair<Rational, BigInt>> distinct;
  for (int deg = 0; deg <= top; ++deg) {
    const BigInt mult = multiplicity(spec, deg);
    if (mult == 0) continue;
    const Rational beta = claimed(deg);
    for (long k = 0; k < mult.get_si(); ++k) formula.push_back(beta.get_d());
    auto it = std::find_if(distinct.begin(), distinct.end(), [&](const auto& e) { return e.first == beta; });
    if (it == distinct.end()) distinct.emplace_back(beta, mult);
    else it->second += mult;
  }
  if (formula.size() != T.size()) {
    rep.multiset_match = false;
    rep.fail("multiplicities sum to " + std::to_string(formula.size()) + ", state space has " +
             std::to_string(T.size()));
  } else {
    const auto n = static_cast<Eigen::Index>(T.size());
    Eigen::VectorXd root(n);
    for (Eigen::Index i = 0; i < n; ++i) root[i] = std::sqrt(stationary_pmf(spec, T.states[static_cast<std::size_t>(i)]).get_d());
    const Eigen::MatrixXd K = T.dense();
    Eigen::MatrixXd S = root.asDiagonal() * K * root.cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    std::vector<double> numeric(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::sort(numeric.begin(), numeric.end());
    std::sort(formula.begin(), formula.end());
    for (std::size_t i = 0; i < numeric.size(); ++i)
      rep.max_eigen_diff = std::max(rep.max_eigen_diff, std::abs(numeric[i] - formula[i]));
    if (rep.max_eigen_diff > opt.tolerance) {
      rep.multiset_match = false;
      rep.fail("eigenvalue multiset differs by " + std::to_string(rep.max_eigen_diff));
    }
  }

  if (T.size() <= 35) {
    rep.exact_nullity_checked = true;
    for (const auto& [beta, mult] : distinct) {
      std::vector<std::vector<Rational>> M(T.size(), std::vector<Rational>(T.size(), Rational(0)));
      for (std::size_t i = 0; i < T.size(); ++i) {
        for (const auto& [j, v] : T.rows[i]) M[i][j] = v;
        M[i][i] -= beta;
      }
      const long nullity = static_cast<long>(T.size()) - detail::rational_rank(std::move(M));
      if (nullity != mult.get_si()) {
        rep.exact_nullity_ok = false;
        rep.fail("eigenvalue " + rational_string(beta) + " has nullity " + std::to_string(nullity) +
                 ", expected " + mult.get_str());
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Normal AR

struct NormalARSpectrum {
  Eigen::VectorXd lambdas;  ///< sorted by |lambda| descending
  Eigen::MatrixXd transform;
  Eigen::MatrixXd root;
  Eigen::MatrixXd inv_root;

  /// prod lambda_i^{n_i}
  double product_eigenvalue(const std::vector<int>& n) const {
    if (static_cast<Eigen::Index>(n.size()) != lambdas.size()) throw DomainError("multi-index length must equal d");
    double v = 1.0;
    for (std::size_t i = 0; i < n.size(); ++i) v *= std::pow(lambdas[static_cast<Eigen::Index>(i)], n[i]);
    return v;
  }
};

inline NormalARSpectrum normal_ar_spectrum(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma) {
  const auto chk = normal_ar_check(A, Sigma, Sigma - A * Sigma * A.transpose());
  if (!chk.reversible) throw DomainError("normal_ar_spectrum: A Sigma must be symmetric");
  if (!chk.spectral_radius_ok) throw DomainError("normal_ar_spectrum: spectral radius of A must be < 1");
  GaussianParams check(Eigen::VectorXd::Zero(Sigma.rows()), Sigma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sig(0.5 * (Sigma + Sigma.transpose()));
  const Eigen::VectorXd ev = sig.eigenvalues();
  NormalARSpectrum out;
  out.root = sig.eigenvectors() * ev.cwiseSqrt().asDiagonal() * sig.eigenvectors().transpose();
  out.inv_root = sig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * sig.eigenvectors().transpose();
  Eigen::MatrixXd M = out.inv_root * A * out.root;
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const Eigen::Index d = M.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
  });
  out.lambdas.resize(d);
  out.transform.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.lambdas[i] = es.eigenvalues()[order[static_cast<std::size_t>(i)]];
    out.transform.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline NormalARSpectrum normal_ar_spectrum(const NormalAR& ar) { return normal_ar_spectrum(ar.A, ar.Sigma); }

}  // namespace orthomix
