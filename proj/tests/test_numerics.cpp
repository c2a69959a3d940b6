#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "orthomix/numerics.hpp"
#include "orthomix/random.hpp"

using namespace orthomix;

TEST(Numerics, FactorialsExact) {
  EXPECT_EQ(rising_factorial(Rational(3), 0), 1);
  EXPECT_EQ(rising_factorial(Rational(3), 4), 3 * 4 * 5 * 6);
  EXPECT_EQ(falling_factorial(Rational(5), 3), 60);
  EXPECT_EQ(falling_factorial(Rational(2), 3), 0);
  EXPECT_EQ(rising_factorial(Rational(-2), 4), 0);
  EXPECT_EQ(rising_factorial(Rational(1, 2), 2), Rational(3, 4));
  EXPECT_DOUBLE_EQ(rising_factorial(0.5, 3), 0.5 * 1.5 * 2.5);
  // expression templates decay to values
  const Rational a(2), b(3);
  EXPECT_EQ(rising_factorial(a + b, 2), 30);
  EXPECT_EQ(ipow(a / b, 3), Rational(8, 27));
  EXPECT_EQ(factorial(10), 3628800);
  EXPECT_EQ(binomial(10, 3), 120);
  EXPECT_EQ(binomial(3, 5), 0);
  EXPECT_EQ(binomial(3, -1), 0);
}

TEST(Numerics, CompositionBasics) {
  Composition x{2, 0, 1};
  EXPECT_EQ(x.total(), 3);
  EXPECT_EQ(x.dim(), 3);
  EXPECT_EQ(x.prefix_sum(0), 0);
  EXPECT_EQ(x.prefix_sum(2), 2);
  EXPECT_EQ(x.suffix_sum(1), 1);
  EXPECT_EQ(x.to_string(), "(2,0,1)");
  EXPECT_FALSE(x.corner_index().has_value());
  EXPECT_EQ(Composition::corner(4, 3, 1).corner_index(), 1);
  EXPECT_FALSE(Composition({0, 0}).corner_index().has_value());
  EXPECT_THROW(Composition({1, -1}), DomainError);
  EXPECT_EQ(x.minus(Composition{1, 0, 1}), (Composition{1, 0, 0}));
  EXPECT_THROW(x.minus(Composition{0, 1, 0}), DomainError);
}

TEST(Numerics, EnumerationCountsAndColexOrder) {
  for (int N = 0; N <= 6; ++N) {
    for (int d = 1; d <= 4; ++d) {
      auto all = enumerate_compositions(N, d);
      EXPECT_EQ(BigInt(static_cast<long>(all.size())), binomial(N + d - 1, d - 1));
      std::set<Composition> uniq(all.begin(), all.end());
      EXPECT_EQ(uniq.size(), all.size());
      for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LT(all[i - 1], all[i]);
      for (const auto& x : all) EXPECT_EQ(x.total(), N);
    }
  }
  auto small = enumerate_compositions(2, 2);
  ASSERT_EQ(small.size(), 3u);
  EXPECT_EQ(small[0], (Composition{2, 0}));
  EXPECT_EQ(small[2], (Composition{0, 2}));
}

TEST(Numerics, BoundedCompositions) {
  const Caps caps{2, 1, 3};
  for (int n = 0; n <= 7; ++n) {
    auto all = enumerate_compositions(n, 3, caps);
    EXPECT_EQ(BigInt(static_cast<long>(all.size())), count_bounded_compositions(n, caps));
    for (const auto& x : all) EXPECT_TRUE(within_caps(x, caps));
  }
  EXPECT_EQ(count_bounded_compositions(7, caps), 0);
  EXPECT_EQ(count_bounded_compositions(-1, caps), 0);
}

TEST(Numerics, MultinomialCoefficient) {
  EXPECT_EQ(multinomial_coefficient(Composition{2, 1, 1}), 12);
  EXPECT_EQ(multinomial_coefficient(Composition{0, 0}), 1);
}

TEST(Numerics, LogScalarArithmetic) {
  auto a = LogScalar::from_double(3.0), b = LogScalar::from_double(-2.0);
  EXPECT_NEAR((a + b).to_double(), 1.0, 1e-14);
  EXPECT_NEAR((a * b).to_double(), -6.0, 1e-13);
  EXPECT_NEAR((a / b).to_double(), -1.5, 1e-14);
  EXPECT_NEAR(b.pow(3).to_double(), -8.0, 1e-13);
  EXPECT_TRUE((a - a).is_zero());
  EXPECT_THROW(a / LogScalar::zero(), DomainError);
  // far outside double range
  const Rational big(factorial(3000));
  const auto lb = LogScalar::from_rational(big);
  EXPECT_NEAR(lb.log_magnitude(), std::lgamma(3001.0), 1e-8 * std::lgamma(3001.0));
  EXPECT_NEAR((lb / lb).to_double(), 1.0, 1e-12);
  EXPECT_NEAR(LogScalar::from_rational(Rational(1, 3)).to_double(), 1.0 / 3.0, 1e-15);
}

TEST(Numerics, LogSumExp) {
  std::vector<double> v{std::log(1.0), std::log(2.0), std::log(3.0)};
  EXPECT_NEAR(log_sum_exp(v), std::log(6.0), 1e-15);
  std::vector<double> huge{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(huge), 1000.0 + std::log(2.0), 1e-12);
  std::vector<double> none;
  EXPECT_EQ(log_sum_exp(none), -std::numeric_limits<double>::infinity());
}

TEST(Numerics, ParseRational) {
  EXPECT_EQ(parse_rational("0.2"), Rational(1, 5));
  EXPECT_EQ(parse_rational("1/5"), Rational(1, 5));
  EXPECT_EQ(parse_rational("-3"), -3);
  EXPECT_EQ(parse_rational("2.5e-1"), Rational(1, 4));
  EXPECT_EQ(parse_rational("7.407"), Rational(7407, 1000));
  EXPECT_THROW(parse_rational("abc"), DomainError);
  EXPECT_THROW(parse_rational("1/0"), DomainError);
  EXPECT_THROW(parse_rational(""), DomainError);
  EXPECT_EQ(rational_string(Rational(419, 420)), "419/420");
}

TEST(RandomStream, DeterministicAndSplittable) {
  RandomStream a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto va = a(), vb = b();
    EXPECT_EQ(va, vb);
  }
  EXPECT_NE(RandomStream(42)(), c());
  RandomStream r1(7, 3, 5), r2(7, 3, 5), r3(7, 3, 6);
  EXPECT_EQ(r1(), r2());
  EXPECT_NE(RandomStream(7, 3, 5)(), r3());
}

TEST(RandomStream, UniformMomentsAndBelow) {
  RandomStream rng(1);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  std::vector<int> hist(7, 0);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
    ++hist[static_cast<std::size_t>(rng.below(7))];
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n, 1.0 / 3.0, 0.005);
  for (int h : hist) EXPECT_NEAR(h, n / 7.0, 5 * std::sqrt(n / 7.0));
  double ns = 0.0, nsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    ns += z;
    nsq += z * z;
  }
  EXPECT_NEAR(ns / n, 0.0, 0.01);
  EXPECT_NEAR(nsq / n, 1.0, 0.015);
}
