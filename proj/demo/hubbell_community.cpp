// Hubbell community of 20 individuals, 5 species, immigration 0.05, started
// from a single species. Prints the spectrum, the exact chi-square curve and
// the step thresholds.

#include <cstdio>

#include "orthomix/orthomix.hpp"

using namespace orthomix;

int main() {
  const std::vector<Rational> p(5, Rational(1, 5));
  const ChainSpec hub = Hubbell{20, Rational(1, 20), p};
  const auto start = Composition::corner(20, 5, 0);

  std::printf("stationary law: Dirichlet-multinomial, alpha_i = %s\n", rational_string(dm_alpha(hub)[0]).c_str());
  std::printf("\n  n  beta_n        multiplicity\n");
  for (const auto& t : eigenvalues(hub)) {
    if (t.degree > 4) break;
    std::printf("%3d  %-12s  %s\n", t.degree, rational_string(t.beta).c_str(), t.multiplicity.get_str().c_str());
  }

  const ChiSquareEvaluator chisq(hub, start);
  std::printf("\n     l  chi-square     TV bound\n");
  for (long l : {0L, 100L, 200L, 407L, 600L, 1000L, 1470L}) {
    const double v = chisq(l);
    std::printf("%6ld  %-12.6g  %.6g\n", l, v, tv_upper(v));
  }
  for (double eps : {1.0, 0.1, 0.01})
    std::printf("first l with chi-square <= %-4g : %ld\n", eps, steps_to_epsilon(chisq, eps));

  const auto b = mixing_bounds(hub, start, 0.0);
  std::printf("\nthreshold at c = 0: %.2f (large-N form %.2f)\n", b.upper, asymptotic_threshold(hub, start));

  // a few replicas of the chain itself
  const ChainSampler sampler(hub);
  for (std::uint64_t r = 0; r < 3; ++r) {
    Composition x = start;
    for (std::uint64_t t = 1; t <= 1000; ++t) {
      RandomStream rng(42, r, t);
      x = sampler.step(x, rng);
    }
    std::printf("replica %llu after 1000 steps: %s  watterson %.4f\n", static_cast<unsigned long long>(r),
                x.to_string().c_str(), watterson(x));
  }
}
