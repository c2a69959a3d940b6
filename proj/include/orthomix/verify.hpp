#pragma once

// Exact self-checks over small state spaces, shared by `orthomix verify`
// and the acceptance driver.

#include <sstream>
#include <string>
#include <vector>

#include "convergence.hpp"
#include "spectra.hpp"

namespace orthomix {

struct CheckResult {
  std::string check;
  std::string chain;
  bool passed = true;
  std::string detail;  ///< first counterexample, or a short summary
};

namespace detail {

inline Rational basis_polynomial(const KernelFamily& fam, const MultiIndex& n, const Composition& x) {
  if (auto* dm = std::get_if<DMKernel>(&fam)) return hahn_multi<Rational>(n, x, dm->alpha);
  if (auto* hg = std::get_if<HypergeometricKernel>(&fam)) return hahn_multi<Rational>(n, x, negated_caps(hg->caps));
  if (auto* mk = std::get_if<MultinomialKernel>(&fam)) return krawtchouk_multi<Rational>(n, x, mk->p);
  throw DomainError("basis_polynomial: continuous family");
}

inline Rational basis_norm2(const KernelFamily& fam, const MultiIndex& n, int N) {
  if (auto* dm = std::get_if<DMKernel>(&fam)) return hahn_norm2<Rational>(n, N, dm->alpha);
  if (auto* hg = std::get_if<HypergeometricKernel>(&fam)) return hahn_norm2<Rational>(n, N, negated_caps(hg->caps));
  if (auto* mk = std::get_if<MultinomialKernel>(&fam)) return krawtchouk_norm2<Rational>(n, N, mk->p);
  throw DomainError("basis_norm2: continuous family");
}

/// Basis indices of degree exactly `deg` for the stationary family of `spec`.
inline std::vector<MultiIndex> basis_indices(const ChainSpec& spec, int deg) {
  const auto caps = support_caps(spec);
  return multi_indices(deg, dimension(spec), caps, population(spec));
}

inline void require_small(const ChainSpec& spec, double cap) {
  if (!is_finite(spec)) throw DomainError("exact checks need a finite family");
  if (state_space_size(spec) > cap) {
    std::ostringstream os;
    os << "exact checks limited to " << cap << " states (got " << state_space_size(spec) << ")";
    throw CapacityError(os.str());
  }
}

template <class T>
std::string describe(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

/// Gram matrix of the stationary basis is diagonal with the closed-form norms.
inline CheckResult check_orthogonality(const ChainSpec& spec, double cap = 400) {
  detail::require_small(spec, cap);
  CheckResult r{"orthogonality", chain_name(spec), true, ""};
  const auto fam = stationary_kernel(spec);
  const auto states = state_space(spec);
  const int N = population(spec);
  std::vector<MultiIndex> idx;
  for (int deg = 0; deg <= N; ++deg)
    for (auto& n : detail::basis_indices(spec, deg)) idx.push_back(std::move(n));
  if (idx.size() != states.size()) {
    r.passed = false;
    r.detail = "basis size " + std::to_string(idx.size()) + " != state count " + std::to_string(states.size());
    return r;
  }
  std::vector<std::vector<Rational>> vals(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (const auto& x : states) vals[a].push_back(detail::basis_polynomial(fam, idx[a], x));
  std::vector<Rational> w;
  for (const auto& x : states) w.push_back(stationary_pmf(spec, x));
  for (std::size_t a = 0; a < idx.size() && r.passed; ++a) {
    for (std::size_t b = a; b < idx.size(); ++b) {
      Rational g(0);
      for (std::size_t k = 0; k < states.size(); ++k) g += w[k] * vals[a][k] * vals[b][k];
      const Rational expect = a == b ? detail::basis_norm2(fam, idx[a], N) : Rational(0);
      if (g != expect) {
        r.passed = false;
        r.detail = "<P" + detail::describe(idx[a]) + ",P" + detail::describe(idx[b]) + "> = " + rational_string(g) +
                   ", expected " + rational_string(expect);
        break;
      }
    }
  }
  if (r.passed) r.detail = std::to_string(idx.size()) + " polynomials";
  return r;
}

/// Kernel equals the basis bilinear sum, reproduces delta, and matches the
/// closed-form corner diagonal.
inline CheckResult check_kernels(const ChainSpec& spec, double cap = 200) {
  detail::require_small(spec, cap);
  CheckResult r{"kernels", chain_name(spec), true, ""};
  const auto fam = stationary_kernel(spec);
  const auto states = state_space(spec);
  const int N = population(spec), d = dimension(spec);
  const auto caps = support_caps(spec);
  auto fail = [&](const std::string& what) {
    r.passed = false;
    r.detail = what;
  };
  std::vector<std::vector<Rational>> total(states.size(), std::vector<Rational>(states.size(), Rational(0)));
  for (int n = 0; n <= N && r.passed; ++n) {
    const auto idx = detail::basis_indices(spec, n);
    std::vector<std::vector<Rational>> vals(idx.size());
    std::vector<Rational> norms;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      norms.push_back(detail::basis_norm2(fam, idx[a], N));
      for (const auto& x : states) vals[a].push_back(detail::basis_polynomial(fam, idx[a], x));
    }
    for (std::size_t i = 0; i < states.size() && r.passed; ++i) {
      for (std::size_t j = 0; j < states.size(); ++j) {
        Rational expect(0);
        for (std::size_t a = 0; a < idx.size(); ++a) expect += vals[a][i] * vals[a][j] / norms[a];
        const Rational h = kernel(fam, n, states[i], states[j]);
        if (h != expect) {
          fail("h_" + std::to_string(n) + "(" + detail::describe(states[i]) + "," + detail::describe(states[j]) +
               ") = " + rational_string(h) + ", bilinear sum " + rational_string(expect));
          break;
        }
        total[i][j] += h;
      }
    }
    for (int c = 0; c < d && r.passed; ++c) {
      if (caps && (*caps)[static_cast<std::size_t>(c)] < N) continue;
      const auto x = Composition::corner(N, d, c);
      const Rational closed = kernel_diag_start(fam, n, c);
      if (closed != kernel(fam, n, x, x))
        fail("corner diagonal h_" + std::to_string(n) + " at e_" + std::to_string(c + 1) + " = " +
             rational_string(closed));
    }
  }
  for (std::size_t i = 0; i < states.size() && r.passed; ++i) {
    for (std::size_t j = 0; j < states.size(); ++j) {
      const Rational s = total[i][j] * stationary_pmf(spec, states[j]);
      if (s != (i == j ? 1 : 0)) {
        fail("sum_n h_n(x,y) m(y) = " + rational_string(s) + " at x=" + detail::describe(states[i]) +
             " y=" + detail::describe(states[j]));
        break;
      }
    }
  }
  if (r.passed) r.detail = "degrees 0.." + std::to_string(N) + " on " + std::to_string(states.size()) + " states";
  return r;
}

/// Rows are probability vectors, detailed balance holds, and pi K = pi.
inline CheckResult check_balance(const ChainSpec& spec, double cap = 2000) {
  detail::require_small(spec, cap);
  CheckResult r{"balance", chain_name(spec), true, ""};
  const auto T = build_transition_matrix(spec, cap);
  std::vector<Rational> pi;
  for (const auto& x : T.states) pi.push_back(stationary_pmf(spec, x));
  std::vector<Rational> piK(T.states.size(), Rational(0));
  for (std::size_t i = 0; i < T.states.size() && r.passed; ++i) {
    Rational sum(0);
    for (const auto& [j, k] : T.rows[i]) {
      if (k < 0) {
        r.passed = false;
        r.detail = "negative entry in row " + detail::describe(T.states[i]);
        break;
      }
      sum += k;
      piK[j] += pi[i] * k;
      Rational back(0);
      for (const auto& [jj, kk] : T.rows[j])
        if (jj == i) back = kk;
      if (pi[i] * k != pi[j] * back) {
        r.passed = false;
        r.detail = "detailed balance fails between " + detail::describe(T.states[i]) + " and " +
                   detail::describe(T.states[j]);
        break;
      }
    }
    if (r.passed && sum != 1) {
      r.passed = false;
      r.detail = "row " + detail::describe(T.states[i]) + " sums to " + rational_string(sum);
    }
  }
  for (std::size_t j = 0; j < T.states.size() && r.passed; ++j) {
    if (piK[j] != pi[j]) {
      r.passed = false;
      r.detail = "pi K != pi at " + detail::describe(T.states[j]);
    }
  }
  if (r.passed) r.detail = std::to_string(T.states.size()) + " states";
  return r;
}

inline CheckResult check_eigenfunctions(const ChainSpec& spec, const EigenCheckOptions& opt = {}) {
  detail::require_small(spec, opt.state_cap);
  const auto rep = verify_eigenfunctions(spec, opt);
  CheckResult r{"eigenfunctions", chain_name(spec), rep.passed, ""};
  if (!rep.passed) {
    std::ostringstream os;
    os << rep.first_failure << " (max residual " << rep.max_residual << ")";
    r.detail = os.str();
  } else {
    r.detail = std::to_string(rep.indices_checked) + " eigenfunctions, residuals exactly 0";
  }
  return r;
}

/// Spectral chi-square equals the matrix-power oracle exactly, every start.
inline CheckResult check_chisq_oracle(const ChainSpec& spec, int l_max = 10, double cap = 200) {
  detail::require_small(spec, cap);
  CheckResult r{"chisq-oracle", chain_name(spec), true, ""};
  for (const auto& x : state_space(spec)) {
    const auto bf = brute_force_curve(spec, x, l_max);
    for (int l = 0; l <= l_max; ++l) {
      const Rational v = chisq_exact_rational(spec, x, l);
      if (v != bf.chisq[static_cast<std::size_t>(l)]) {
        r.passed = false;
        r.detail = "x=" + detail::describe(x) + " l=" + std::to_string(l) + ": spectral " + rational_string(v) +
                   " vs matrix " + rational_string(bf.chisq[static_cast<std::size_t>(l)]);
        return r;
      }
    }
  }
  r.detail = "all starts, l <= " + std::to_string(l_max);
  return r;
}

/// One representative of each finite family at population N, dimension d,
/// with s in {1, N}.
inline std::vector<ChainSpec> verification_specs(int N, int d) {
  if (N < 1 || d < 2) throw DomainError("verification_specs: need N >= 1 and d >= 2");
  std::vector<Rational> alpha, p;
  Caps caps;
  Rational psum(0);
  for (int i = 0; i < d; ++i) {
    alpha.emplace_back(i + 1, 2);
    alpha.back().canonicalize();
    psum += i + 1;
    caps.push_back(std::max(1, N - (i % 2)));
  }
  for (int i = 0; i < d; ++i) p.emplace_back(Rational((i + 1) / psum));
  std::vector<ChainSpec> out;
  std::vector<int> sizes{1};
  if (N > 1) sizes.push_back(N);
  for (int s : sizes) {
    out.emplace_back(PolyaLevel{N, alpha, s});
    out.emplace_back(PolyaDownUp{N, alpha, s});
    out.emplace_back(PolyaUpDown{N, alpha, s});
    out.emplace_back(BLLevel{caps, N, std::min(s, caps_total(caps) - N)});
    out.emplace_back(BLDownUp{caps, N, s});
    out.emplace_back(BLUpDown{caps, N, std::min(s, caps_total(caps) - N)});
    out.emplace_back(Ehrenfest{N, p, s});
  }
  out.emplace_back(Moran::from_alpha(N, alpha));
  if (N > 1) out.emplace_back(Hubbell::from_alpha(N, alpha));
  out.emplace_back(GibbsDM{N, alpha});
  return out;
}

}  // namespace orthomix
