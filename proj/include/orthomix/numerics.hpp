#pragma once

// Scalar regimes and combinatorial primitives shared by every other header.
//
// Two numeric regimes are used throughout the library:
//   * Rational (GMP mpq_class) for exact evaluation of all rational formulas;
//   * double / LogScalar for large-N production curves, where factorial-heavy
//     products would overflow a plain double.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace orthomix {

using Rational = mpq_class;
using BigInt = mpz_class;

/// Raised when a computation would exceed a configured size limit.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when arguments violate a documented precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline double to_double(const Rational& q) { return q.get_d(); }
inline double to_double(double v) { return v; }
inline double to_double(const BigInt& z) { return z.get_d(); }

inline Rational abs_value(const Rational& q) { return abs(q); }
inline double abs_value(double v) { return std::abs(v); }

template <class T>
bool is_zero(const T& v) {
  return v == 0;
}

/// Maps GMP expression templates to their value type so generic helpers can
/// take e.g. `A + N` directly.
template <class T>
struct scalar_of {
  using type = T;
};
template <class T, class U>
struct scalar_of<__gmp_expr<T, U>> {
  using type = __gmp_expr<T, T>;
};
template <class T>
using scalar_t = typename scalar_of<T>::type;

/// Big integer converted to the working scalar type.
template <class T>
T scalar_from(const mpz_class& z) {
  if constexpr (std::is_same_v<T, double>) return z.get_d();
  else return T(z);
}

/// Integer power by repeated squaring; exponent must be nonnegative.
template <class A, class T = scalar_t<A>>
T ipow(const A& b, long exponent) {
  T base(b);
  T result(1);
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

/// a_(k) = a(a+1)...(a+k-1); a_(0) = 1.
template <class A, class T = scalar_t<A>>
T rising_factorial(const A& a, long k) {
  T result(1);
  for (long i = 0; i < k; ++i) {
    T factor = a;
    factor += i;
    if (is_zero(factor)) return T(0);
    result *= factor;
  }
  return result;
}

/// a_[k] = a(a-1)...(a-k+1); a_[0] = 1.
template <class A, class T = scalar_t<A>>
T falling_factorial(const A& a, long k) {
  T result(1);
  for (long i = 0; i < k; ++i) {
    T factor = a;
    factor -= i;
    if (is_zero(factor)) return T(0);
    result *= factor;
  }
  return result;
}

inline BigInt factorial(unsigned long n) {
  BigInt r;
  mpz_fac_ui(r.get_mpz_t(), n);
  return r;
}

/// Binomial coefficient C(n, k); zero outside 0 <= k <= n.
inline BigInt binomial(long n, long k) {
  if (k < 0 || n < 0 || k > n) return BigInt(0);
  BigInt r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return r;
}

/// A point of X_N^d: d nonnegative counts summing to N.
///
/// Ordering is colexicographic (compare the last coordinate first), which is
/// the canonical state order used by enumerations, matrices and output files.
class Composition {
 public:
  Composition() = default;
  explicit Composition(std::vector<int> counts) : counts_(std::move(counts)) {
    for (int c : counts_) {
      if (c < 0) throw DomainError("composition entries must be nonnegative");
      total_ += c;
    }
  }
  Composition(std::initializer_list<int> counts) : Composition(std::vector<int>(counts)) {}

  /// N * e_i (zero-based i).
  static Composition corner(int total, int dim, int i) {
    std::vector<int> c(static_cast<std::size_t>(dim), 0);
    c.at(static_cast<std::size_t>(i)) = total;
    return Composition(std::move(c));
  }

  int dim() const { return static_cast<int>(counts_.size()); }
  int total() const { return total_; }
  int operator[](int i) const { return counts_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& counts() const { return counts_; }

  /// |x_i| = x_0 + ... + x_{i-1} (zero-based, exclusive prefix).
  int prefix_sum(int i) const {
    return std::accumulate(counts_.begin(), counts_.begin() + i, 0);
  }
  /// |x^i| = x_i + ... + x_{d-1} (zero-based, inclusive suffix).
  int suffix_sum(int i) const {
    return std::accumulate(counts_.begin() + i, counts_.end(), 0);
  }

  /// Index of the single nonzero entry, if the composition is N * e_i with N > 0.
  std::optional<int> corner_index() const {
    std::optional<int> found;
    for (int i = 0; i < dim(); ++i) {
      if (counts_[static_cast<std::size_t>(i)] == 0) continue;
      if (found || counts_[static_cast<std::size_t>(i)] != total_) return std::nullopt;
      found = i;
    }
    return found;
  }

  Composition plus(const Composition& other) const {
    std::vector<int> c = counts_;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += other.counts_.at(i);
    return Composition(std::move(c));
  }
  Composition minus(const Composition& other) const {
    std::vector<int> c = counts_;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= other.counts_.at(i);
    return Composition(std::move(c));
  }

  bool operator==(const Composition& other) const { return counts_ == other.counts_; }
  std::strong_ordering operator<=>(const Composition& other) const {
    if (counts_.size() != other.counts_.size()) return counts_.size() <=> other.counts_.size();
    for (std::size_t k = counts_.size(); k-- > 0;) {
      if (auto c = counts_[k] <=> other.counts_[k]; c != 0) return c;
    }
    return std::strong_ordering::equal;
  }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(counts_[i]);
    }
    return s + ")";
  }

 private:
  std::vector<int> counts_;
  int total_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const Composition& x) { return os << x.to_string(); }

/// Upper bounds l_i for bounded compositions X_{N,l}^d.
using Caps = std::vector<int>;

inline int caps_total(const Caps& caps) { return std::accumulate(caps.begin(), caps.end(), 0); }

inline bool within_caps(const Composition& x, const Caps& caps) {
  if (static_cast<int>(caps.size()) != x.dim()) return false;
  for (int i = 0; i < x.dim(); ++i)
    if (x[i] > caps[static_cast<std::size_t>(i)]) return false;
  return true;
}

/// |x|! / prod x_i!
inline BigInt multinomial_coefficient(const Composition& x) {
  BigInt r = factorial(static_cast<unsigned long>(x.total()));
  for (int c : x.counts()) r /= factorial(static_cast<unsigned long>(c));
  return r;
}

namespace detail {
inline void enumerate_rec(int remaining, int pos, std::vector<int>& buf, const Caps* caps,
                          std::vector<Composition>& out) {
  if (pos == 0) {
    if (caps && remaining > (*caps)[0]) return;
    buf[0] = remaining;
    out.emplace_back(buf);
    return;
  }
  // Colex order: the last coordinate varies slowest, ascending.
  const int hi = caps ? std::min(remaining, (*caps)[static_cast<std::size_t>(pos)]) : remaining;
  for (int v = 0; v <= hi; ++v) {
    buf[static_cast<std::size_t>(pos)] = v;
    enumerate_rec(remaining - v, pos - 1, buf, caps, out);
  }
}
}  // namespace detail

/// Every element of X_N^d (or X_{N,caps}^d) exactly once, in colex order.
inline std::vector<Composition> enumerate_compositions(int total, int dim,
                                                       const std::optional<Caps>& caps = std::nullopt) {
  if (total < 0 || dim < 1) throw DomainError("enumerate_compositions: need N >= 0 and d >= 1");
  if (caps && static_cast<int>(caps->size()) != dim)
    throw DomainError("enumerate_compositions: caps length must equal d");
  std::vector<Composition> out;
  std::vector<int> buf(static_cast<std::size_t>(dim), 0);
  detail::enumerate_rec(total, dim - 1, buf, caps ? &*caps : nullptr, out);
  return out;
}

/// |X_{n,caps}^d| by polynomial-coefficient dynamic programming.
inline BigInt count_bounded_compositions(int n, const Caps& caps) {
  if (n < 0) return BigInt(0);
  std::vector<BigInt> ways(static_cast<std::size_t>(n) + 1, BigInt(0));
  ways[0] = 1;
  for (int cap : caps) {
    std::vector<BigInt> next(ways.size(), BigInt(0));
    for (int total = 0; total <= n; ++total) {
      for (int v = 0; v <= std::min(cap, total); ++v)
        next[static_cast<std::size_t>(total)] += ways[static_cast<std::size_t>(total - v)];
    }
    ways = std::move(next);
  }
  return ways[static_cast<std::size_t>(n)];
}

/// Signed real stored as (sign, natural log of magnitude).
class LogScalar {
 public:
  constexpr LogScalar() = default;

  static LogScalar zero() { return LogScalar(); }
  static LogScalar from_log(double log_magnitude, int sign = 1) {
    LogScalar s;
    if (sign == 0 || log_magnitude == -std::numeric_limits<double>::infinity()) return s;
    s.sign_ = sign > 0 ? 1 : -1;
    s.log_ = log_magnitude;
    return s;
  }
  static LogScalar from_double(double v) {
    if (v == 0.0) return zero();
    return from_log(std::log(std::abs(v)), v > 0 ? 1 : -1);
  }
  static LogScalar from_rational(const Rational& q) {
    if (q == 0) return zero();
    // mpz_get_d_2exp keeps precision for numerators far outside double range.
    long num_exp = 0, den_exp = 0;
    const double num = mpz_get_d_2exp(&num_exp, q.get_num_mpz_t());
    const double den = mpz_get_d_2exp(&den_exp, q.get_den_mpz_t());
    const double lg = std::log(std::abs(num)) - std::log(den) +
                      static_cast<double>(num_exp - den_exp) * std::log(2.0);
    return from_log(lg, sgn(q));
  }

  int sign() const { return sign_; }
  double log_magnitude() const { return log_; }
  bool is_zero() const { return sign_ == 0; }
  double to_double() const { return sign_ == 0 ? 0.0 : sign_ * std::exp(log_); }

  LogScalar operator*(const LogScalar& o) const {
    if (is_zero() || o.is_zero()) return zero();
    return from_log(log_ + o.log_, sign_ * o.sign_);
  }
  LogScalar operator/(const LogScalar& o) const {
    if (o.is_zero()) throw DomainError("LogScalar division by zero");
    if (is_zero()) return zero();
    return from_log(log_ - o.log_, sign_ * o.sign_);
  }
  LogScalar operator+(const LogScalar& o) const {
    if (is_zero()) return o;
    if (o.is_zero()) return *this;
    const LogScalar& big = log_ >= o.log_ ? *this : o;
    const LogScalar& small = log_ >= o.log_ ? o : *this;
    const double ratio = std::exp(small.log_ - big.log_);
    if (big.sign_ == small.sign_) return from_log(big.log_ + std::log1p(ratio), big.sign_);
    if (ratio == 1.0) return zero();
    return from_log(big.log_ + std::log1p(-ratio), big.sign_);
  }
  LogScalar operator-() const { return from_log(log_, -sign_); }
  LogScalar operator-(const LogScalar& o) const { return *this + (-o); }
  LogScalar pow(long k) const {
    if (k == 0) return from_log(0.0, 1);
    if (is_zero()) return zero();
    const int s = (sign_ < 0 && (k % 2 != 0)) ? -1 : 1;
    return from_log(log_ * static_cast<double>(k), s);
  }

 private:
  int sign_ = 0;
  double log_ = -std::numeric_limits<double>::infinity();
};

/// Compensated sum of nonnegative terms given in log form; returns log of the sum.
inline double log_sum_exp(std::span<const double> log_terms) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double t : log_terms) peak = std::max(peak, t);
  if (peak == -std::numeric_limits<double>::infinity()) return peak;
  double sum = 0.0, comp = 0.0;
  for (double t : log_terms) {
    const double v = std::exp(t - peak);
    const double s = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - s) + v : (v - s) + sum;
    sum = s;
  }
  return peak + std::log(sum + comp);
}

/// Exact decimal or fraction literal ("0.2", "-3", "1/5", "2.5e-1") as a Rational.
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw DomainError("empty number");
  if (auto slash = text.find('/'); slash != std::string::npos) {
    const Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw DomainError("zero denominator: " + text);
    return Rational(parse_rational(text.substr(0, slash)) / den);
  }
  std::string mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string::npos) {
    mantissa = text.substr(0, e);
    exponent = std::stol(text.substr(e + 1));
  }
  bool negative = false;
  std::size_t pos = 0;
  if (pos < mantissa.size() && (mantissa[pos] == '-' || mantissa[pos] == '+')) {
    negative = mantissa[pos] == '-';
    ++pos;
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_point = false;
  for (; pos < mantissa.size(); ++pos) {
    const char ch = mantissa[pos];
    if (ch == '.') {
      if (seen_point) throw DomainError("malformed number: " + text);
      seen_point = true;
    } else if (ch >= '0' && ch <= '9') {
      digits += ch;
      if (seen_point) ++frac_digits;
    } else {
      throw DomainError("malformed number: " + text);
    }
  }
  if (digits.empty()) throw DomainError("malformed number: " + text);
  BigInt num(digits, 10);
  if (negative) num = -num;
  const long scale = exponent - frac_digits;
  BigInt ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(scale)));
  Rational q = scale >= 0 ? Rational(num * ten_pow) : Rational(num, ten_pow);
  q.canonicalize();
  return q;
}

/// "p/q" for non-integers, "p" for integers.
inline std::string rational_string(const Rational& q) { return q.get_str(); }

}  // namespace orthomix
