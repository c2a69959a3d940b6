#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "orthomix/distributions.hpp"

using namespace orthomix;

namespace {
std::vector<Rational> R(std::initializer_list<int> v) {
  std::vector<Rational> out;
  for (int x : v) out.emplace_back(x);
  return out;
}
}  // namespace

TEST(Distributions, DirichletMultinomialSumsToOne) {
  const std::vector<Rational> alpha{Rational(1, 5), Rational(1), Rational(7, 3)};
  for (int N = 0; N <= 6; ++N) {
    Rational total(0);
    for (const auto& x : enumerate_compositions(N, 3)) total += pmf_dirichlet_multinomial<Rational>(x, alpha);
    EXPECT_EQ(total, 1) << "N=" << N;
  }
}

TEST(Distributions, DirichletMultinomialUniformAtOnes) {
  // alpha = 1 gives the uniform law on X_N^d
  const auto alpha = R({1, 1, 1});
  for (const auto& x : enumerate_compositions(4, 3))
    EXPECT_EQ(pmf_dirichlet_multinomial<Rational>(x, alpha), Rational(1, 15));
}

TEST(Distributions, DirichletMultinomialLogPathAgrees) {
  const std::vector<double> alpha{0.2, 0.2, 0.2, 0.2, 0.2};
  const std::vector<Rational> ar(5, Rational(1, 5));
  Composition x{4, 4, 4, 4, 4};
  EXPECT_NEAR(std::exp(log_pmf_dirichlet_multinomial(x, alpha)),
              pmf_dirichlet_multinomial<Rational>(x, ar).get_d(), 1e-12);
  DirichletParams params(ar);
  EXPECT_NEAR(pmf_dirichlet_multinomial_scaled(x, params).to_double(), pmf_dirichlet_multinomial(x, params).get_d(),
              1e-15);
  Composition big{300, 0, 0, 0, 0};
  const double lv = pmf_dirichlet_multinomial_scaled(big, params).log_magnitude();
  EXPECT_NEAR(lv, log_pmf_dirichlet_multinomial(big, alpha), 1e-9);
}

TEST(Distributions, NegativeAlphaIsHypergeometric) {
  const Caps caps{2, 3, 1};
  std::vector<Rational> neg;
  for (int c : caps) neg.emplace_back(-c);
  Rational total(0);
  for (const auto& x : enumerate_compositions(3, 3, caps)) {
    EXPECT_EQ(pmf_dirichlet_multinomial<Rational>(x, neg), pmf_hypergeometric(x, caps));
    total += pmf_hypergeometric(x, caps);
  }
  EXPECT_EQ(total, 1);
  EXPECT_EQ(pmf_hypergeometric(Composition{3, 0, 0}, caps), 0);
}

TEST(Distributions, MultinomialExactAndDouble) {
  const std::vector<Rational> p{Rational(1, 5), Rational(3, 10), Rational(1, 2)};
  Rational total(0);
  for (const auto& x : enumerate_compositions(4, 3)) {
    const Rational q = pmf_multinomial<Rational>(x, p);
    total += q;
    EXPECT_NEAR(pmf_multinomial(x, SimplexPoint({0.2, 0.3, 0.5})), q.get_d(), 1e-14);
  }
  EXPECT_EQ(total, 1);
  EXPECT_EQ(pmf_multinomial(Composition{1, 0}, SimplexPoint({0.0, 1.0})), 0.0);
}

TEST(Distributions, DirichletDensity) {
  // Dirichlet(1,1,1) is uniform with density 2 on the 2-simplex
  EXPECT_NEAR(pdf_dirichlet(SimplexPoint({0.2, 0.3, 0.5}), {1.0, 1.0, 1.0}), 2.0, 1e-13);
  // Beta(2,3) at 0.4: 12 * 0.4 * 0.6^2
  EXPECT_NEAR(pdf_dirichlet(SimplexPoint({0.4, 0.6}), {2.0, 3.0}), 12 * 0.4 * 0.36, 1e-13);
  EXPECT_THROW(pdf_dirichlet(SimplexPoint({0.0, 1.0}), {0.5, 1.0}), DomainError);
  EXPECT_THROW(SimplexPoint({0.5, 0.6}), DomainError);
  EXPECT_THROW(DirichletParams(R({1, 0})), DomainError);
}

TEST(Distributions, GaussianParamsValidation) {
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  EXPECT_THROW(GaussianParams(Eigen::VectorXd::Zero(2), bad), DomainError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.1, 0, 1;
  EXPECT_THROW(GaussianParams(Eigen::VectorXd::Zero(2), asym), DomainError);
}

namespace {
/// Empirical law of a composition sampler against an exact pmf, 4 standard errors.
template <class Dist, class Pmf>
void check_sampler(const Dist& dist, int N, int d, const std::optional<Caps>& caps, Pmf pmf) {
  RandomStream rng(2024);
  const int reps = 40000;
  std::map<Composition, int> counts;
  for (int r = 0; r < reps; ++r) ++counts[sample(dist, rng)];
  for (const auto& x : enumerate_compositions(N, d, caps)) {
    const double p = pmf(x);
    const double se = std::sqrt(p * (1 - p) / reps);
    EXPECT_NEAR(counts[x] / static_cast<double>(reps), p, 4 * se + 1e-12) << x;
  }
}
}  // namespace

TEST(Distributions, SamplersMatchPmfs) {
  const std::vector<Rational> alpha{Rational(1, 2), Rational(1), Rational(2)};
  check_sampler(DirichletMultinomialDist{3, {0.5, 1.0, 2.0}}, 3, 3, std::nullopt,
                [&](const Composition& x) { return pmf_dirichlet_multinomial<Rational>(x, alpha).get_d(); });
  const std::vector<Rational> p{Rational(1, 5), Rational(3, 10), Rational(1, 2)};
  check_sampler(MultinomialDist{3, {0.2, 0.3, 0.5}}, 3, 3, std::nullopt,
                [&](const Composition& x) { return pmf_multinomial<Rational>(x, p).get_d(); });
  const Caps caps{2, 3, 1};
  check_sampler(HypergeometricDist{3, caps}, 3, 3, caps,
                [&](const Composition& x) { return pmf_hypergeometric(x, caps).get_d(); });
}

TEST(Distributions, DirichletAndGaussianSamplerMoments) {
  RandomStream rng(5);
  const std::vector<double> alpha{1.0, 2.0, 3.0};
  std::vector<double> mean(3, 0.0);
  const int reps = 40000;
  for (int r = 0; r < reps; ++r) {
    auto z = sample(DirichletDist{alpha}, rng);
    for (int i = 0; i < 3; ++i) mean[static_cast<std::size_t>(i)] += z[static_cast<std::size_t>(i)] / reps;
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(mean[static_cast<std::size_t>(i)], alpha[static_cast<std::size_t>(i)] / 6.0, 0.005);

  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  GaussianDist g{GaussianParams(Eigen::Vector2d(1.0, -1.0), cov)};
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
  for (int r = 0; r < reps; ++r) {
    Eigen::VectorXd v = sample(g, rng);
    m += v / reps;
    c += (v - Eigen::Vector2d(1.0, -1.0)) * (v - Eigen::Vector2d(1.0, -1.0)).transpose() / reps;
  }
  EXPECT_NEAR(m[0], 1.0, 0.03);
  EXPECT_NEAR(m[1], -1.0, 0.03);
  EXPECT_NEAR(c(0, 1), 0.6, 0.05);
  EXPECT_NEAR(c(0, 0), 2.0, 0.06);
}
