#pragma once

// Chain families, exact transition rows, samplers and the brute-force
// transition-matrix oracle. The normal autoregressive process and the
// lattice image model live here too.

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "distributions.hpp"
#include "kernels.hpp"
#include "numerics.hpp"
#include "random.hpp"

namespace orthomix {

struct PolyaLevel {
  int N;
  std::vector<Rational> alpha;
  int s;
};
struct PolyaDownUp {
  int N;
  std::vector<Rational> alpha;
  int s;
};
struct PolyaUpDown {
  int N;
  std::vector<Rational> alpha;
  int s;
};

/// Moran process with mutation matrix (1-m) I + m 1 p^T.
struct Moran {
  int N;
  Rational m;
  std::vector<Rational> p;

  /// alpha_i = N m p_i / (1 - m)
  std::vector<Rational> alpha() const {
    std::vector<Rational> a;
    for (const auto& pi : p) a.emplace_back(Rational(N * m * pi / (1 - m)));
    return a;
  }
  static Moran from_alpha(int N, const std::vector<Rational>& alpha) {
    for (const auto& a : alpha)
      if (a <= 0) throw DomainError("alpha entries must be positive");
    const Rational A = vector_sum(alpha);
    std::vector<Rational> p;
    for (const auto& a : alpha) p.emplace_back(Rational(a / A));
    return Moran{N, Rational(A / (N + A)), std::move(p)};
  }
};

/// Hubbell local community: the dying individual cannot reproduce.
struct Hubbell {
  int N;
  Rational m;
  std::vector<Rational> p;

  /// alpha_i = (N-1) m p_i / (1 - m)
  std::vector<Rational> alpha() const {
    std::vector<Rational> a;
    for (const auto& pi : p) a.emplace_back(Rational((N - 1) * m * pi / (1 - m)));
    return a;
  }
  static Hubbell from_alpha(int N, const std::vector<Rational>& alpha) {
    for (const auto& a : alpha)
      if (a <= 0) throw DomainError("alpha entries must be positive");
    const Rational A = vector_sum(alpha);
    std::vector<Rational> p;
    for (const auto& a : alpha) p.emplace_back(Rational(a / A));
    return Hubbell{N, Rational(A / (N - 1 + A)), std::move(p)};
  }
};

/// Marginal x-chain of the Dirichlet-multinomial Gibbs sampler.
struct GibbsDM {
  int N;
  std::vector<Rational> alpha;
};

struct BLLevel {
  Caps l;
  int N;
  int s;
};
struct BLDownUp {
  Caps l;
  int N;
  int s;
};
struct BLUpDown {
  Caps l;
  int N;
  int s;
};

/// s balls are picked and redistributed independently according to p.
struct Ehrenfest {
  int N;
  std::vector<Rational> p;
  int s;
};

/// X_t = A X_{t-1} + xi_t with xi_t ~ N(0, Sigma - A Sigma A^T).
struct NormalAR {
  Eigen::MatrixXd A;
  Eigen::MatrixXd Sigma;
};

using ChainSpec = std::variant<PolyaLevel, PolyaDownUp, PolyaUpDown, Moran, Hubbell, GibbsDM, BLLevel, BLDownUp,
                               BLUpDown, Ehrenfest, NormalAR>;

template <class F>
inline constexpr bool is_polya_family_v =
    std::is_same_v<F, PolyaLevel> || std::is_same_v<F, PolyaDownUp> || std::is_same_v<F, PolyaUpDown> ||
    std::is_same_v<F, Moran> || std::is_same_v<F, Hubbell> || std::is_same_v<F, GibbsDM>;
template <class F>
inline constexpr bool is_bl_family_v =
    std::is_same_v<F, BLLevel> || std::is_same_v<F, BLDownUp> || std::is_same_v<F, BLUpDown>;

inline std::string chain_name(const ChainSpec& spec) {
  static const char* names[] = {"polya-level", "polya-downup", "polya-updown", "moran",    "hubbell",  "gibbs-dm",
                                "bl-level",    "bl-downup",    "bl-updown",    "ehrenfest", "normal-ar"};
  return names[spec.index()];
}

inline bool is_finite(const ChainSpec& spec) { return !std::holds_alternative<NormalAR>(spec); }

/// N for discrete families.
inline int population(const ChainSpec& spec) {
  return std::visit(
      [](const auto& c) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, NormalAR>) {
          throw DomainError("normal AR process has no population size");
        } else {
          return c.N;
        }
      },
      spec);
}

inline int dimension(const ChainSpec& spec) {
  return std::visit(
      [](const auto& c) -> int {
        using F = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<F, NormalAR>) return static_cast<int>(c.A.rows());
        else if constexpr (is_bl_family_v<F>) return static_cast<int>(c.l.size());
        else if constexpr (std::is_same_v<F, Moran> || std::is_same_v<F, Hubbell> || std::is_same_v<F, Ehrenfest>)
          return static_cast<int>(c.p.size());
        else return static_cast<int>(c.alpha.size());
      },
      spec);
}

/// Dirichlet-multinomial parameters of the stationary law (Polya-derived families).
inline std::vector<Rational> dm_alpha(const ChainSpec& spec) {
  return std::visit(
      [](const auto& c) -> std::vector<Rational> {
        using F = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<F, Moran> || std::is_same_v<F, Hubbell>) return c.alpha();
        else if constexpr (is_polya_family_v<F>) return c.alpha;
        else throw DomainError("family has no Dirichlet-multinomial stationary law");
      },
      spec);
}

inline std::optional<Caps> support_caps(const ChainSpec& spec) {
  return std::visit(
      [](const auto& c) -> std::optional<Caps> {
        if constexpr (is_bl_family_v<std::decay_t<decltype(c)>>) return c.l;
        else return std::nullopt;
      },
      spec);
}

/// Kernel family of the stationary law (discrete families).
inline KernelFamily stationary_kernel(const ChainSpec& spec) {
  return std::visit(
      [&](const auto& c) -> KernelFamily {
        using F = std::decay_t<decltype(c)>;
        if constexpr (is_polya_family_v<F>) return DMKernel{c.N, dm_alpha(spec)};
        else if constexpr (is_bl_family_v<F>) return HypergeometricKernel{c.N, c.l};
        else if constexpr (std::is_same_v<F, Ehrenfest>) return MultinomialKernel{c.N, c.p};
        else throw DomainError("normal AR process has no discrete kernel");
      },
      spec);
}

namespace detail {
inline void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}
inline void check_positive(const std::vector<Rational>& a, const char* what) {
  require(!a.empty(), std::string(what) + " must be nonempty");
  for (const auto& v : a) require(v > 0, std::string(what) + " entries must be positive");
}
inline void check_caps(const Caps& l) {
  require(l.size() >= 2, "caps need at least two colours");
  for (int v : l) require(v > 0, "caps must be positive integers");
}
}  // namespace detail

/// Throws DomainError when the spec violates its family's invariants.
inline void validate(const ChainSpec& spec) {
  using detail::require;
  std::visit(
      [&](const auto& c) {
        using F = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<F, PolyaLevel> || std::is_same_v<F, PolyaDownUp> ||
                      std::is_same_v<F, PolyaUpDown>) {
          require(c.N >= 1, "N must be >= 1");
          require(0 <= c.s && c.s <= c.N, "need 0 <= s <= N");
          require(c.alpha.size() >= 2, "need d >= 2");
          detail::check_positive(c.alpha, "alpha");
        } else if constexpr (std::is_same_v<F, Moran> || std::is_same_v<F, Hubbell>) {
          require(c.N >= (std::is_same_v<F, Hubbell> ? 2 : 1),
                  std::is_same_v<F, Hubbell> ? "Hubbell needs N >= 2" : "N must be >= 1");
          require(0 < c.m && c.m < 1, "need 0 < m < 1");
          require(c.p.size() >= 2, "need d >= 2");
          check_rational_simplex(c.p);
          detail::check_positive(c.p, "p");
        } else if constexpr (std::is_same_v<F, GibbsDM>) {
          require(c.N >= 1, "N must be >= 1");
          require(c.alpha.size() >= 2, "need d >= 2");
          detail::check_positive(c.alpha, "alpha");
        } else if constexpr (std::is_same_v<F, BLLevel>) {
          detail::check_caps(c.l);
          const int L = caps_total(c.l);
          require(1 <= c.N && c.N < L, "need 0 < N < |l|");
          require(0 <= c.s && c.s <= std::min(c.N, L - c.N), "need 0 <= s <= min(N, |l| - N)");
        } else if constexpr (std::is_same_v<F, BLDownUp>) {
          detail::check_caps(c.l);
          require(1 <= c.N && c.N < caps_total(c.l), "need 0 < N < |l|");
          require(0 <= c.s && c.s <= c.N, "need 0 <= s <= N");
        } else if constexpr (std::is_same_v<F, BLUpDown>) {
          detail::check_caps(c.l);
          const int L = caps_total(c.l);
          require(1 <= c.N && c.N < L, "need 0 < N < |l|");
          require(0 <= c.s && c.s <= std::min(c.N, L - c.N), "need 0 <= s <= min(N, |l| - N)");
        } else if constexpr (std::is_same_v<F, Ehrenfest>) {
          require(c.N >= 1, "N must be >= 1");
          require(0 <= c.s && c.s <= c.N, "need 0 <= s <= N");
          require(c.p.size() >= 2, "need d >= 2");
          check_rational_simplex(c.p);
          detail::check_positive(c.p, "p");
        } else {
          require(c.A.rows() == c.A.cols() && c.Sigma.rows() == c.Sigma.cols() && c.A.rows() == c.Sigma.rows() &&
                      c.A.rows() > 0,
                  "A and Sigma must be square with equal dimension");
          GaussianParams check(Eigen::VectorXd::Zero(c.Sigma.rows()), c.Sigma);
        }
      },
      spec);
}

/// Number of states, as a double (may be huge).
inline double state_space_size(const ChainSpec& spec) {
  const int N = population(spec), d = dimension(spec);
  if (auto caps = support_caps(spec)) return to_double(count_bounded_compositions(N, *caps));
  return to_double(binomial(N + d - 1, d - 1));
}

inline std::vector<Composition> state_space(const ChainSpec& spec, double cap = 2e5) {
  if (state_space_size(spec) > cap) throw CapacityError("state space exceeds the configured cap");
  return enumerate_compositions(population(spec), dimension(spec), support_caps(spec));
}

inline bool in_state_space(const ChainSpec& spec, const Composition& x) {
  if (x.dim() != dimension(spec) || x.total() != population(spec)) return false;
  if (auto caps = support_caps(spec)) return within_caps(x, *caps);
  return true;
}

/// Stationary probability of x (exact).
inline Rational stationary_pmf(const ChainSpec& spec, const Composition& x) {
  return std::visit(
      [&](const auto& c) -> Rational {
        using F = std::decay_t<decltype(c)>;
        if constexpr (is_polya_family_v<F>) return pmf_dirichlet_multinomial<Rational>(x, dm_alpha(spec));
        else if constexpr (is_bl_family_v<F>) return pmf_hypergeometric(x, c.l);
        else if constexpr (std::is_same_v<F, Ehrenfest>) return pmf_multinomial<Rational>(x, c.p);
        else throw DomainError("normal AR process has a density, not a pmf");
      },
      spec);
}

using Row = std::map<Composition, Rational>;

namespace detail {
/// x - y + z, or nullopt if any coordinate would be negative.
inline Composition shift(const Composition& x, const Composition& y, const Composition& z) {
  std::vector<int> c = x.counts();
  for (int i = 0; i < x.dim(); ++i) c[static_cast<std::size_t>(i)] += z[i] - y[i];
  return Composition(std::move(c));
}

inline std::vector<Rational> add_counts(const std::vector<Rational>& a, const Composition& x) {
  std::vector<Rational> out(a);
  for (int i = 0; i < x.dim(); ++i) out[static_cast<std::size_t>(i)] += x[i];
  return out;
}

inline Caps counts_caps(const Composition& x) { return x.counts(); }

inline Caps complement(const Caps& l, const Composition& x) {
  Caps out(l);
  for (int i = 0; i < x.dim(); ++i) out[static_cast<std::size_t>(i)] -= x[i];
  return out;
}

/// Hypergeometric draw of size s from a pool (caps) as a list of (Y, prob).
inline std::vector<std::pair<Composition, Rational>> hyper_outcomes(int s, const Caps& pool) {
  std::vector<std::pair<Composition, Rational>> out;
  for (auto& y : enumerate_compositions(s, static_cast<int>(pool.size()), pool)) {
    Rational pr = pmf_hypergeometric(y, pool);
    if (pr != 0) out.emplace_back(std::move(y), std::move(pr));
  }
  return out;
}

inline std::vector<std::pair<Composition, Rational>> dm_outcomes(int s, const std::vector<Rational>& weights) {
  std::vector<std::pair<Composition, Rational>> out;
  for (auto& z : enumerate_compositions(s, static_cast<int>(weights.size()))) {
    Rational pr = pmf_dirichlet_multinomial<Rational>(z, weights);
    if (pr != 0) out.emplace_back(std::move(z), std::move(pr));
  }
  return out;
}

inline std::vector<std::pair<Composition, Rational>> multinomial_outcomes(int s, const std::vector<Rational>& p) {
  std::vector<std::pair<Composition, Rational>> out;
  for (auto& z : enumerate_compositions(s, static_cast<int>(p.size()))) {
    Rational pr = pmf_multinomial<Rational>(z, p);
    if (pr != 0) out.emplace_back(std::move(z), std::move(pr));
  }
  return out;
}

/// Rows of the form x - Y + Z with Y ~ H(s, x) and Z drawn given (x, Y).
template <class ZLaw>
Row remove_then_add(const Composition& x, int s, ZLaw&& z_law) {
  Row row;
  for (const auto& [y, py] : hyper_outcomes(s, counts_caps(x)))
    for (const auto& [z, pz] : z_law(y)) row[shift(x, y, z)] += py * pz;
  return row;
}

/// Rows of the form x + Z - Y with Z first and Y ~ H(s, x + Z).
template <class ZLaw>
Row add_then_remove(const Composition& x, int s, ZLaw&& z_outcomes) {
  Row row;
  const Composition zero(std::vector<int>(static_cast<std::size_t>(x.dim()), 0));
  for (const auto& [z, pz] : z_outcomes) {
    const Composition up = x.plus(z);
    for (const auto& [y, py] : hyper_outcomes(s, counts_caps(up))) row[shift(up, y, zero)] += pz * py;
  }
  return row;
}

/// Moran / Hubbell rows from the birth-death formulas.
inline Row mutation_row(const Composition& x, const Rational& m, const std::vector<Rational>& p, bool exclude_self) {
  const int d = x.dim(), N = x.total();
  Row row;
  Rational off(0);
  auto mut = [&](int k, int i) {
    Rational v = m * p[static_cast<std::size_t>(i)];
    if (k == i) v += 1 - m;
    return v;
  };
  for (int j = 0; j < d; ++j) {
    if (x[j] == 0) continue;
    for (int i = 0; i < d; ++i) {
      if (i == j) continue;
      Rational repro(0);
      for (int k = 0; k < d; ++k) {
        const int count = (exclude_self && k == j) ? x[k] - 1 : x[k];
        repro += count * mut(k, i);
      }
      repro /= exclude_self ? N - 1 : N;
      Rational pr = Rational(x[j], N) * repro;
      pr.canonicalize();
      if (pr == 0) continue;
      std::vector<int> c = x.counts();
      ++c[static_cast<std::size_t>(i)];
      --c[static_cast<std::size_t>(j)];
      row[Composition(std::move(c))] += pr;
      off += pr;
    }
  }
  row[x] += 1 - off;
  return row;
}
}  // namespace detail

/// Exact row K(x, .) as a map state -> probability (zero entries omitted).
inline Row transition_row(const ChainSpec& spec, const Composition& x, double cap = 2e5) {
  if (!is_finite(spec)) throw DomainError("transition_row: finite families only");
  if (state_space_size(spec) > cap) throw CapacityError("state space exceeds the configured cap");
  if (!in_state_space(spec, x)) throw DomainError("transition_row: state outside the state space");
  Row row = std::visit(
      [&](const auto& c) -> Row {
        using F = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<F, PolyaLevel>) {
          const auto adds = detail::dm_outcomes(c.s, detail::add_counts(c.alpha, x));
          return detail::remove_then_add(x, c.s, [&](const Composition&) -> const auto& { return adds; });
        } else if constexpr (std::is_same_v<F, PolyaDownUp>) {
          return detail::remove_then_add(x, c.s, [&](const Composition& y) {
            return detail::dm_outcomes(c.s, detail::add_counts(c.alpha, x.minus(y)));
          });
        } else if constexpr (std::is_same_v<F, PolyaUpDown>) {
          return detail::add_then_remove(x, c.s, detail::dm_outcomes(c.s, detail::add_counts(c.alpha, x)));
        } else if constexpr (std::is_same_v<F, Moran>) {
          return detail::mutation_row(x, c.m, c.p, false);
        } else if constexpr (std::is_same_v<F, Hubbell>) {
          return detail::mutation_row(x, c.m, c.p, true);
        } else if constexpr (std::is_same_v<F, GibbsDM>) {
          Row r;
          for (auto& [y, pr] : detail::dm_outcomes(c.N, detail::add_counts(c.alpha, x))) r[y] += pr;
          return r;
        } else if constexpr (std::is_same_v<F, BLLevel>) {
          const auto adds = detail::hyper_outcomes(c.s, detail::complement(c.l, x));
          return detail::remove_then_add(x, c.s, [&](const Composition&) -> const auto& { return adds; });
        } else if constexpr (std::is_same_v<F, BLDownUp>) {
          return detail::remove_then_add(x, c.s, [&](const Composition& y) {
            return detail::hyper_outcomes(c.s, detail::complement(c.l, x.minus(y)));
          });
        } else if constexpr (std::is_same_v<F, BLUpDown>) {
          return detail::add_then_remove(x, c.s, detail::hyper_outcomes(c.s, detail::complement(c.l, x)));
        } else if constexpr (std::is_same_v<F, Ehrenfest>) {
          const auto adds = detail::multinomial_outcomes(c.s, c.p);
          return detail::remove_then_add(x, c.s, [&](const Composition&) -> const auto& { return adds; });
        } else {
          throw DomainError("transition_row: finite families only");
        }
      },
      spec);
  for (auto it = row.begin(); it != row.end();) it = it->second == 0 ? row.erase(it) : std::next(it);
  return row;
}

/// Sparse exact transition matrix over the colex-ordered state space.
struct TransitionMatrix {
  std::vector<Composition> states;
  std::map<Composition, std::size_t> index;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> rows;

  std::size_t size() const { return states.size(); }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i)
      for (const auto& [j, v] : rows[i]) K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v.get_d();
    return K;
  }

  /// mu K for a row vector mu.
  std::vector<Rational> left_multiply(const std::vector<Rational>& mu) const {
    std::vector<Rational> out(size(), Rational(0));
    for (std::size_t i = 0; i < size(); ++i) {
      if (mu[i] == 0) continue;
      for (const auto& [j, v] : rows[i]) out[j] += mu[i] * v;
    }
    return out;
  }

  /// K f for a column vector f.
  std::vector<Rational> right_multiply(const std::vector<Rational>& f) const {
    std::vector<Rational> out(size(), Rational(0));
    for (std::size_t i = 0; i < size(); ++i)
      for (const auto& [j, v] : rows[i]) out[i] += v * f[j];
    return out;
  }
};

inline TransitionMatrix build_transition_matrix(const ChainSpec& spec, double cap = 5000) {
  if (!is_finite(spec)) throw DomainError("build_transition_matrix: finite families only");
  if (state_space_size(spec) > cap) throw CapacityError("transition matrix limited to 5000 states");
  TransitionMatrix T;
  T.states = state_space(spec, cap);
  for (std::size_t i = 0; i < T.states.size(); ++i) T.index.emplace(T.states[i], i);
  T.rows.resize(T.states.size());
  for (std::size_t i = 0; i < T.states.size(); ++i) {
    for (auto& [y, v] : transition_row(spec, T.states[i], cap)) T.rows[i].emplace_back(T.index.at(y), std::move(v));
  }
  return T;
}

// ---------------------------------------------------------------------------
// Sampling

/// Precomputed single-step sampler for one chain.
class ChainSampler {
 public:
  explicit ChainSampler(ChainSpec spec) : spec_(std::move(spec)) {
    validate(spec_);
    if (std::holds_alternative<NormalAR>(spec_)) {
      const auto& ar = std::get<NormalAR>(spec_);
      const Eigen::MatrixXd V = ar.Sigma - ar.A * ar.Sigma * ar.A.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (V + V.transpose()));
      noise_root_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().transpose();
      return;
    }
    std::visit(
        [&](const auto& c) {
          using F = std::decay_t<decltype(c)>;
          if constexpr (is_polya_family_v<F>) alpha_ = to_doubles(dm_alpha(spec_));
          else if constexpr (std::is_same_v<F, Ehrenfest>) alpha_ = to_doubles(c.p);
        },
        spec_);
  }

  const ChainSpec& spec() const { return spec_; }

  Composition step(const Composition& x, RandomStream& rng) const {
    return std::visit(
        [&](const auto& c) -> Composition {
          using F = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<F, PolyaLevel> || std::is_same_v<F, Moran> || std::is_same_v<F, GibbsDM>) {
            const int s = level_size(c);
            const Composition y = sample(HypergeometricDist{s, x.counts()}, rng);
            const Composition z = sample(DirichletMultinomialDist{s, shifted(x)}, rng);
            return detail::shift(x, y, z);
          } else if constexpr (std::is_same_v<F, PolyaDownUp> || std::is_same_v<F, Hubbell>) {
            const int s = level_size(c);
            const Composition y = sample(HypergeometricDist{s, x.counts()}, rng);
            const Composition r = x.minus(y);
            return r.plus(sample(DirichletMultinomialDist{s, shifted(r)}, rng));
          } else if constexpr (std::is_same_v<F, PolyaUpDown>) {
            const Composition up = x.plus(sample(DirichletMultinomialDist{c.s, shifted(x)}, rng));
            return up.minus(sample(HypergeometricDist{c.s, up.counts()}, rng));
          } else if constexpr (std::is_same_v<F, BLLevel>) {
            const Composition y = sample(HypergeometricDist{c.s, x.counts()}, rng);
            const Composition z = sample(HypergeometricDist{c.s, detail::complement(c.l, x)}, rng);
            return detail::shift(x, y, z);
          } else if constexpr (std::is_same_v<F, BLDownUp>) {
            const Composition r = x.minus(sample(HypergeometricDist{c.s, x.counts()}, rng));
            return r.plus(sample(HypergeometricDist{c.s, detail::complement(c.l, r)}, rng));
          } else if constexpr (std::is_same_v<F, BLUpDown>) {
            const Composition up = x.plus(sample(HypergeometricDist{c.s, detail::complement(c.l, x)}, rng));
            return up.minus(sample(HypergeometricDist{c.s, up.counts()}, rng));
          } else if constexpr (std::is_same_v<F, Ehrenfest>) {
            const Composition y = sample(HypergeometricDist{c.s, x.counts()}, rng);
            const Composition z = sample(MultinomialDist{c.s, alpha_}, rng);
            return detail::shift(x, y, z);
          } else {
            throw DomainError("use step_vector for the normal AR process");
          }
        },
        spec_);
  }

  Eigen::VectorXd step_vector(const Eigen::VectorXd& x, RandomStream& rng) const {
    const auto& ar = std::get<NormalAR>(spec_);
    Eigen::VectorXd z(x.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return ar.A * x + noise_root_ * z;
  }

 private:
  template <class F>
  static int level_size(const F& c) {
    if constexpr (std::is_same_v<F, Moran> || std::is_same_v<F, Hubbell>) return 1;
    else if constexpr (std::is_same_v<F, GibbsDM>) return c.N;
    else return c.s;
  }
  std::vector<double> shifted(const Composition& x) const {
    std::vector<double> w = alpha_;
    for (int i = 0; i < x.dim(); ++i) w[static_cast<std::size_t>(i)] += x[i];
    return w;
  }

  ChainSpec spec_;
  std::vector<double> alpha_;
  Eigen::MatrixXd noise_root_;
};

inline Composition step(const ChainSpec& spec, const Composition& x, RandomStream& rng) {
  return ChainSampler(spec).step(x, rng);
}

inline Eigen::VectorXd step(const ChainSpec& spec, const Eigen::VectorXd& x, RandomStream& rng) {
  return ChainSampler(spec).step_vector(x, rng);
}

/// sum x_i^2 / N^2
inline double watterson(const Composition& x) {
  if (x.total() <= 0) throw DomainError("watterson: need N > 0");
  double s = 0.0;
  for (int c : x.counts()) s += static_cast<double>(c) * c;
  const double N = x.total();
  return s / (N * N);
}

// ---------------------------------------------------------------------------
// Normal AR and the lattice image model

struct NormalARCheck {
  bool stationary;
  bool reversible;
  bool spectral_radius_ok;
  double stationarity_residual;
  double reversibility_residual;
  double spectral_radius;
};

inline double spectral_radius(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline NormalARCheck normal_ar_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, const Eigen::MatrixXd& V) {
  if (A.rows() != A.cols() || Sigma.rows() != A.rows() || Sigma.cols() != A.cols() || V.rows() != A.rows() ||
      V.cols() != A.cols())
    throw DomainError("normal_ar_check: matrices must be square with equal dimension");
  NormalARCheck r{};
  r.stationarity_residual = (V - (Sigma - A * Sigma * A.transpose())).cwiseAbs().maxCoeff();
  r.reversibility_residual = (A * Sigma - Sigma * A.transpose()).cwiseAbs().maxCoeff();
  r.spectral_radius = spectral_radius(A);
  r.stationary = r.stationarity_residual <= 1e-10;
  r.reversible = r.reversibility_residual <= 1e-10;
  r.spectral_radius_ok = r.spectral_radius < 1.0;
  return r;
}

inline NormalARCheck normal_ar_check(const NormalAR& ar) {
  return normal_ar_check(ar.A, ar.Sigma, ar.Sigma - ar.A * ar.Sigma * ar.A.transpose());
}

struct ImageModel {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd A;
  Eigen::MatrixXd V;
  Eigen::MatrixXd Sigma;
};

/// Forward-backward Gibbs sweep for the Gaussian posterior on a rows x cols
/// 4-neighbour lattice without wraparound, pixels in row-major order.
inline ImageModel image_gibbs_model(double delta, double sigma, int rows, int cols) {
  if (delta < 0 || sigma <= 0 || rows < 1 || cols < 1) throw DomainError("image model: need delta >= 0, sigma > 0");
  const int n = rows * cols;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int i = r * cols + c;
      int neighbours = 0;
      const int dr[] = {1, -1, 0, 0}, dc[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
        Q(i, rr * cols + cc) = -2.0 * delta;
        ++neighbours;
      }
      Q(i, i) = 2.0 * delta * neighbours + 1.0 / (sigma * sigma);
    }
  }
  const Eigen::MatrixXd D = Q.diagonal().asDiagonal();
  const Eigen::MatrixXd L = Q.triangularView<Eigen::StrictlyLower>();
  const Eigen::MatrixXd upper_inv = (D + L.transpose()).inverse();
  const Eigen::MatrixXd lower_inv = (D + L).inverse();
  const Eigen::MatrixXd W = upper_inv * L * lower_inv;
  ImageModel m;
  m.A = W * L.transpose();
  m.V = W * D * W.transpose() + upper_inv * D * lower_inv;
  m.Sigma = Q.inverse();
  m.Sigma = 0.5 * (m.Sigma + m.Sigma.transpose());
  m.Q = std::move(Q);
  return m;
}

}  // namespace orthomix
