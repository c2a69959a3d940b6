#pragma once

// Counter-based random streams.
//
// A stream is a pure function of (key, counter): draws do not depend on any
// hidden global state, and independent streams are obtained by splitting the
// key. Simulations key each replica and step as (seed, replica, step) so that
// results are identical regardless of how work is scheduled.

#include <cmath>
#include <cstdint>
#include <limits>

namespace orthomix {

namespace detail {
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : key_(detail::mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}
  RandomStream(std::uint64_t seed, std::uint64_t replica, std::uint64_t step)
      : RandomStream(RandomStream(seed).split(replica).split(step)) {}

  /// Child stream keyed by (this key, id); the parent is left untouched.
  RandomStream split(std::uint64_t id) const {
    RandomStream child(*this);
    child.key_ = detail::mix64(key_ ^ detail::mix64(id + 0xBB67AE8584CAA73BULL));
    child.counter_ = 0;
    return child;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return detail::mix64(key_ + detail::mix64(counter_));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t v;
    do {
      v = (*this)();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller (no cached second variate).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace orthomix
