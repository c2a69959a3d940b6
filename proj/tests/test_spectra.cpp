#include <gtest/gtest.h>

#include <cmath>

#include "orthomix/spectra.hpp"

using namespace orthomix;

namespace {
std::vector<Rational> R(std::initializer_list<int> v) {
  std::vector<Rational> out;
  for (int x : v) out.emplace_back(x);
  return out;
}
const std::vector<Rational> kP{Rational(1, 5), Rational(3, 10), Rational(1, 2)};
const std::vector<Rational> kA{Rational(1, 2), Rational(1), Rational(3, 2)};

std::vector<ChainSpec> small_specs() {
  return {
      PolyaLevel{4, kA, 2},          PolyaLevel{4, kA, 4},         PolyaDownUp{4, kA, 2}, PolyaDownUp{3, kA, 3},
      PolyaUpDown{4, kA, 2},         PolyaUpDown{3, kA, 3},        Moran{4, Rational(1, 3), kP},
      Hubbell{4, Rational(1, 3), kP}, GibbsDM{3, kA},               Moran::from_alpha(3, R({1, 1})),
      BLLevel{{2, 3, 2}, 3, 2},      BLLevel{{2, 3, 2}, 3, 1},     BLDownUp{{2, 3, 2}, 3, 2},
      BLDownUp{{2, 3, 2}, 3, 3},     BLUpDown{{2, 3, 2}, 3, 2},    BLUpDown{{4, 1, 2}, 4, 3},
      Ehrenfest{4, kP, 2},           Ehrenfest{3, kP, 1},          Ehrenfest{3, kP, 3},
      BLLevel{{1, 2, 1}, 2, 2},
  };
}
}  // namespace

TEST(Spectra, KnownEigenvalues) {
  ChainSpec moran = Moran::from_alpha(20, std::vector<Rational>(5, Rational(1, 5)));
  EXPECT_EQ(eigenvalue_exact(moran, 1), Rational(419, 420));
  ChainSpec ehr = Ehrenfest{20, std::vector<Rational>(5, Rational(1, 5)), 1};
  EXPECT_EQ(eigenvalue_exact(ehr, 1), Rational(19, 20));
  EXPECT_EQ(multiplicity(ehr, 1), 4);
  for (const auto& spec : small_specs()) {
    EXPECT_EQ(eigenvalue_exact(spec, 0), 1) << chain_name(spec);
    EXPECT_EQ(multiplicity(spec, 0), 1);
  }
}

TEST(Spectra, LevelFormAtFullSizeIsGibbs) {
  for (int n = 0; n <= 5; ++n)
    EXPECT_EQ(eigenvalue_exact(PolyaLevel{5, kA, 5}, n), eigenvalue_exact(GibbsDM{5, kA}, n));
  // Moran = level model with s = 1, Hubbell = down-up with s = 1
  const Moran m{6, Rational(1, 4), kP};
  const Hubbell h{6, Rational(1, 4), kP};
  for (int n = 0; n <= 6; ++n) {
    EXPECT_EQ(eigenvalue_exact(m, n), eigenvalue_exact(PolyaLevel{6, m.alpha(), 1}, n));
    EXPECT_EQ(eigenvalue_exact(h, n), eigenvalue_exact(PolyaDownUp{6, h.alpha(), 1}, n));
  }
}

TEST(Spectra, DependsOnlyOnTotals) {
  const std::vector<Rational> a1{Rational(1), Rational(2), Rational(3)}, a2{Rational(5, 2), Rational(5, 2), Rational(1)};
  for (int s = 0; s <= 5; ++s) {
    for (int n = 0; n <= 5; ++n) {
      EXPECT_EQ(eigenvalue_exact(PolyaLevel{5, a1, s}, n), eigenvalue_exact(PolyaLevel{5, a2, s}, n));
      EXPECT_EQ(eigenvalue_exact(PolyaUpDown{5, a1, s}, n), eigenvalue_exact(PolyaUpDown{5, a2, s}, n));
    }
  }
  for (int n = 0; n <= 3; ++n)
    EXPECT_EQ(eigenvalue_exact(BLDownUp{{2, 3, 2}, 3, 1}, n), eigenvalue_exact(BLDownUp{{4, 2, 1}, 3, 1}, n));
}

TEST(Spectra, BoundedAndMultiplicitiesSumToStates) {
  for (const auto& spec : small_specs()) {
    BigInt total(0);
    for (const auto& t : eigenvalues(spec)) {
      EXPECT_LE(abs(t.beta), 1) << chain_name(spec);
      EXPECT_GT(t.multiplicity, 0);
      total += t.multiplicity;
    }
    EXPECT_EQ(total, BigInt(static_cast<long>(state_space(spec).size()))) << chain_name(spec);
  }
}

TEST(Spectra, BLMultiplicityCountsIndexSet) {
  const Caps caps{2, 3, 2};
  ChainSpec spec = BLDownUp{caps, 3, 1};
  for (int n = 0; n <= 3; ++n)
    EXPECT_EQ(multiplicity(spec, n), BigInt(static_cast<long>(multi_indices(n, 3, caps, 3).size())));
}

TEST(Spectra, DoubleValuesMatchExact) {
  for (const auto& spec : small_specs()) {
    const auto v = eigenvalue_values(spec);
    const int top = static_cast<int>(v.size()) - 1;
    for (const auto& t : eigenvalues(spec)) EXPECT_NEAR(v[static_cast<std::size_t>(t.degree)], t.beta.get_d(), 1e-14);
    (void)top;
  }
  // large-N paths against exact evaluation
  const std::vector<Rational> a(4, Rational(3, 4));
  for (const ChainSpec& spec : std::vector<ChainSpec>{PolyaLevel{500, a, 3}, PolyaDownUp{500, a, 7},
                                                      PolyaUpDown{500, a, 7}, BLLevel{{300, 300, 300}, 500, 3},
                                                      BLDownUp{{300, 300, 300}, 500, 3}, Ehrenfest{500, kP, 9}}) {
    const auto v = eigenvalue_values(spec);
    for (int n : {1, 2, 7, 50, 300}) {
      const double exact = eigenvalue_exact(spec, n).get_d();
      EXPECT_NEAR(v[static_cast<std::size_t>(n)], exact, 1e-10 * std::max(1.0, std::abs(exact)) + 1e-300)
          << chain_name(spec) << " n=" << n;
    }
  }
}

TEST(Spectra, EigenfunctionsExact) {
  for (const auto& spec : small_specs()) {
    const auto rep = verify_eigenfunctions(spec);
    EXPECT_TRUE(rep.passed) << chain_name(spec) << ": " << rep.first_failure;
    EXPECT_TRUE(rep.residuals_exact_zero);
    EXPECT_TRUE(rep.exact_nullity_checked);
    EXPECT_LT(rep.max_eigen_diff, 1e-10);
    EXPECT_GT(rep.indices_checked, 0);
  }
}

TEST(Spectra, PerturbedEigenvalueFails) {
  EigenCheckOptions opt;
  opt.perturb = std::make_pair(1, Rational(1, 1000));
  const auto rep = verify_eigenfunctions(Moran::from_alpha(3, R({1, 1})), opt);
  EXPECT_FALSE(rep.passed);
  EXPECT_FALSE(rep.residuals_exact_zero);
  EXPECT_GT(rep.max_residual, 0.0);
  EXPECT_FALSE(rep.first_failure.empty());
}

TEST(Spectra, EhrenfestKrawtchoukNumericResidual) {
  ChainSpec spec = Ehrenfest{3, kP, 1};
  const auto T = build_transition_matrix(spec);
  const std::vector<double> pd{0.2, 0.3, 0.5};
  const auto K = T.dense();
  for (int deg = 0; deg <= 3; ++deg) {
    const double beta = eigenvalue_exact(spec, deg).get_d();
    for (const auto& n : multi_indices(deg, 3)) {
      Eigen::VectorXd q(static_cast<Eigen::Index>(T.size()));
      for (std::size_t i = 0; i < T.size(); ++i) q[static_cast<Eigen::Index>(i)] = krawtchouk_multi<double>(n, T.states[i], pd);
      EXPECT_LT((K * q - beta * q).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Spectra, FullStepStationarity) {
  // s = N in the down-up model reaches stationarity in one step
  for (int n = 1; n <= 3; ++n) EXPECT_EQ(eigenvalue_exact(PolyaDownUp{3, kA, 3}, n), 0);
  for (int n = 1; n <= 3; ++n) EXPECT_EQ(eigenvalue_exact(Ehrenfest{3, kP, 3}, n), 0);
}

TEST(Spectra, NormalARDiagonalCase) {
  const double lam = 0.6;
  const auto sp = normal_ar_spectrum(lam * Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(sp.lambdas[i], lam, 1e-14);
  EXPECT_LT((sp.transform.transpose() * sp.transform - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(sp.product_eigenvalue({1, 2, 0}), lam * lam * lam, 1e-14);
}

TEST(Spectra, NormalARRandomReversible) {
  RandomStream rng(8);
  const int d = 4;
  Eigen::MatrixXd G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rng.normal();
  const Eigen::MatrixXd Sigma = G * G.transpose() + Eigen::MatrixXd::Identity(d, d);
  // A = Sigma^{1/2} P D P^T Sigma^{-1/2} is reversible
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma);
  const Eigen::MatrixXd root = es.operatorSqrt(), inv = es.operatorInverseSqrt();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Random(d, d));
  const Eigen::MatrixXd P = qr.householderQ();
  const Eigen::VectorXd lam = Eigen::Vector4d(0.9, -0.7, 0.3, 0.1);
  const Eigen::MatrixXd A = root * P * lam.asDiagonal() * P.transpose() * inv;
  const auto sp = normal_ar_spectrum(A, Sigma);
  EXPECT_NEAR(sp.lambdas[0], 0.9, 1e-10);
  EXPECT_NEAR(sp.lambdas[1], -0.7, 1e-10);
  EXPECT_LT((sp.inv_root * A * sp.root - sp.transform * sp.lambdas.asDiagonal() * sp.transform.transpose())
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  Eigen::MatrixXd nonrev = A;
  nonrev(0, 1) += 0.2;
  EXPECT_THROW(normal_ar_spectrum(nonrev, Sigma), DomainError);
}

TEST(Spectra, NormalARTransformedChainIsIndependentAR1) {
  Eigen::MatrixXd Sigma(2, 2);
  Sigma << 2.0, 0.5, 0.5, 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma);
  const Eigen::MatrixXd A = es.operatorSqrt() * Eigen::Vector2d(0.8, 0.3).asDiagonal() * es.operatorInverseSqrt();
  const auto sp = normal_ar_spectrum(A, Sigma);
  ChainSampler sampler(NormalAR{A, Sigma});
  RandomStream rng(21);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  std::vector<double> resid_sq(2, 0.0);
  const int steps = 40000;
  Eigen::VectorXd z_prev = sp.transform.transpose() * sp.inv_root * x;
  for (int t = 0; t < steps; ++t) {
    x = sampler.step_vector(x, rng);
    const Eigen::VectorXd z = sp.transform.transpose() * sp.inv_root * x;
    for (int i = 0; i < 2; ++i) {
      const double r = z[i] - sp.lambdas[i] * z_prev[i];
      resid_sq[static_cast<std::size_t>(i)] += r * r / steps;
    }
    z_prev = z;
  }
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(resid_sq[static_cast<std::size_t>(i)], 1 - sp.lambdas[i] * sp.lambdas[i], 0.03);
}
