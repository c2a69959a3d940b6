// Acceptance driver: one PASS/FAIL line per criterion, details indented.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "orthomix/orthomix.hpp"

using namespace orthomix;

namespace {

struct Criterion {
  bool ok = true;
  std::ostringstream log;

  void check(bool cond, const std::string& what) {
    log << "    [" << (cond ? "ok" : "FAIL") << "] " << what << "\n";
    ok = ok && cond;
  }
  void info(const std::string& what) { log << "    " << what << "\n"; }
};

std::string num(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

std::vector<Rational> uniform(int d, const Rational& v) { return std::vector<Rational>(static_cast<std::size_t>(d), v); }

bool run_criterion(int id, const std::string& title, double budget_s, const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.check(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0) c.check(secs <= budget_s, "runtime " + num(secs, 3) + " s <= " + num(budget_s) + " s");
  std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " (" << num(secs, 3) << " s)\n"
            << c.log.str() << std::flush;
  return c.ok;
}

void record(Criterion& c, const CheckResult& r) {
  if (!r.passed) c.check(false, r.check + " " + r.chain + ": " + r.detail);
}

// 1 ---------------------------------------------------------------------------
void oracle_equivalence(Criterion& c) {
  int specs = 0;
  bool all = true;
  for (int N = 1; N <= 4; ++N) {
    for (int d = 2; d <= 3; ++d) {
      for (const auto& spec : verification_specs(N, d)) {
        const auto a = check_chisq_oracle(spec, 10);
        const auto b = check_eigenfunctions(spec);
        record(c, a);
        record(c, b);
        all = all && a.passed && b.passed;
        ++specs;
      }
    }
  }
  c.check(all, std::to_string(specs) + " chains (N <= 4, d in {2,3}): spectral chisq == matrix powers for all starts and "
                                       "l <= 10, eigenfunction residuals exactly 0");
}

// 2 ---------------------------------------------------------------------------
void orthogonality(Criterion& c) {
  int n = 0;
  for (int N = 1; N <= 4; ++N) {
    for (int d = 2; d <= 4; ++d) {
      const auto specs = verification_specs(N, d);
      for (const auto& spec : specs) {
        const auto name = chain_name(spec);
        if (name != "gibbs-dm" && name != "bl-level" && name != "ehrenfest") continue;
        if (name != "gibbs-dm" && std::visit([](const auto& f) {
              if constexpr (requires { f.s; }) return f.s != 1;
              else return false;
            }, spec))
          continue;
        record(c, check_orthogonality(spec));
        ++n;
      }
    }
  }
  // unequal capacities, including l_i < N
  for (const auto& [caps, N] : std::vector<std::pair<Caps, int>>{{{2, 3, 2}, 3}, {{1, 4, 2}, 4}, {{3, 1, 1, 2}, 3}}) {
    record(c, check_orthogonality(BLLevel{caps, N, 1}));
    ++n;
  }
  c.check(c.ok, std::to_string(n) + " exact Gram matrices (Hahn, negative-parameter Hahn, Krawtchouk; d <= 4) diagonal "
                                    "with closed-form norms");
}

// 3 ---------------------------------------------------------------------------
void kernel_identities(Criterion& c) {
  int n = 0;
  for (int N = 1; N <= 4; ++N) {
    for (int d = 2; d <= 3; ++d) {
      for (const auto& spec : verification_specs(N, d)) {
        const auto name = chain_name(spec);
        if (name != "gibbs-dm" && name != "bl-downup" && name != "ehrenfest") continue;
        record(c, check_kernels(spec));
        ++n;
      }
    }
  }
  c.check(c.ok, std::to_string(n) +
                    " families: kernel == basis bilinear sum, corner diagonal == closed form, sum_n h_n(x,y) m(y) == "
                    "delta_xy (all exact)");
}

// 4 ---------------------------------------------------------------------------
void reference_numbers(Criterion& c) {
  const auto x = Composition::corner(20, 5, 0);
  auto remark = [&](const std::string& label, const ChainSpec& spec, double target) {
    const double asym = asymptotic_threshold(spec, x);
    const auto b = mixing_bounds(spec, x, 0.0);
    c.info(label + ": bound threshold at c=0 " + num(b.upper) + ", large-N form " + num(asym));
    c.check(within(asym, target, 0.05), label + ": " + num(asym) + " within 5% of " + num(target));
    return b.upper;
  };
  const double moran_upper = remark("Moran alpha_i=0.2", Moran::from_alpha(20, uniform(5, Rational(1, 5))), 668);
  c.check(within(moran_upper, 668, 0.05), "Moran alpha_i=0.2: bound threshold " + num(moran_upper) + " within 5% of 668");
  remark("Moran alpha_i=1", Moran::from_alpha(20, uniform(5, Rational(1))), 205);
  remark("Gibbs alpha_i=0.2", GibbsDM{20, uniform(5, Rational(1, 5))}, 33);
  remark("Gibbs alpha_i=1", GibbsDM{20, uniform(5, Rational(1))}, 10);
  const double bl = remark("Bernoulli-Laplace l_i=20", BLDownUp{{20, 5, 5, 5, 5}, 20, 1}, 19);
  c.check(within(bl, 19, 0.05), "Bernoulli-Laplace: bound threshold " + num(bl) + " within 5% of 19");
  const double eh = remark("Ehrenfest p_i=0.2", Ehrenfest{20, uniform(5, Rational(1, 5)), 1}, 44);
  c.check(within(eh, 44, 0.05), "Ehrenfest: bound threshold " + num(eh) + " within 5% of 44");

  // Hubbell community, N = 20
  const ChainSpec hub = Hubbell{20, Rational(1, 20), uniform(5, Rational(1, 5))};
  const auto exact1470 = chisq_exact_rational(hub, x, 1470);
  c.check(exact1470.get_d() <= 0.01, "Hubbell exact chisq(1470) = " + num(exact1470.get_d()) + " <= 0.01");
  const ChiSquareEvaluator ev(hub, x);
  const long cross = steps_to_epsilon(ev, 1.0);
  const bool exact_cross = chisq_exact_rational(hub, x, cross) <= 1 && chisq_exact_rational(hub, x, cross - 1) > 1;
  c.info("Hubbell: chisq(" + std::to_string(cross - 1) + ") = " + num(ev(cross - 1)) + ", chisq(" +
         std::to_string(cross) + ") = " + num(ev(cross)) + " (confirmed in exact arithmetic: " +
         (exact_cross ? "yes" : "no") + ")");
  c.info("Hubbell: first l with chisq <= 0.01 is " + std::to_string(steps_to_epsilon(ev, 0.01)));
  c.check(exact_cross && cross >= 500 && cross <= 700,
          "Hubbell exact curve crosses chisq = 1 at l = " + std::to_string(cross) + ", required in [500, 700]");

  // McGill scale
  const auto t0 = std::chrono::steady_clock::now();
  const ChainSpec mcgill = Hubbell{20000, Rational(1, 10), uniform(300, Rational(1, 300))};
  const auto xm = Composition::corner(20000, 300, 0);
  const auto bm = mixing_bounds(mcgill, xm, 0.0);
  const double at = ChiSquareEvaluator(mcgill, xm)(static_cast<long>(std::ceil(bm.upper)));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.info("McGill: chisq at the threshold = " + num(at) + " (guaranteed <= " + num(bm.upper_level) + ")");
  c.check(within(bm.upper, 1.44e6, 0.05) && at <= bm.upper_level && secs <= 120,
          "McGill (N=20000, d=300): threshold " + num(bm.upper, 7) + " within 5% of 1.44e6 in " + num(secs, 3) + " s");

  // image restoration
  const auto model = image_gibbs_model(100.0, 0.5, 16, 16);
  const double lam = std::abs(normal_ar_spectrum(model.A, model.Sigma).lambdas[0]);
  const auto b0 = mixing_bounds_normal_ar(model.A, model.Sigma, 0.0);
  c.check(std::abs(lam - 0.9795) <= 1e-3, "image: lambda_1 = " + num(lam) + " (0.9795 +- 1e-3)");
  c.check(within(b0.upper, 8.3607, 0.005), "image: intercept " + num(b0.upper) + " within 0.5% of 8.3607");
  c.check(within(1.0 / b0.rate, 12.0620, 0.005), "image: slope " + num(1.0 / b0.rate) + " within 0.5% of 12.0620");
}

// 5 ---------------------------------------------------------------------------
double gaussian_oracle(const Eigen::VectorXd& mu, const Eigen::MatrixXd& S1, const Eigen::MatrixXd& S0) {
  // int N(mu,S1)^2 / N(0,S0) - 1, completing the square
  const Eigen::MatrixXd P1 = S1.inverse(), P0 = S0.inverse();
  const Eigen::MatrixXd M = 2.0 * P1 - P0;
  const Eigen::VectorXd b = 2.0 * P1 * mu;
  const double quad = 0.5 * b.dot(M.ldlt().solve(b)) - mu.dot(P1 * mu);
  const double log_det =
      0.5 * std::log(S0.determinant()) - std::log(S1.determinant()) - 0.5 * std::log(M.determinant());
  return std::expm1(log_det + quad);
}

void normal_ar(Criterion& c) {
  RandomStream rng(2024);
  const int d = 5;
  double worst = 0.0;
  int sandwich = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Eigen::MatrixXd G(d, d), H(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        G(i, j) = rng.normal();
        H(i, j) = rng.normal();
      }
    const Eigen::MatrixXd Sigma = G * G.transpose() / d + 0.25 * Eigen::MatrixXd::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma);
    const Eigen::MatrixXd P = Eigen::HouseholderQR<Eigen::MatrixXd>(H).householderQ();
    Eigen::VectorXd lam(d);
    for (int i = 0; i < d; ++i) lam[i] = 1.9 * rng.uniform() - 0.95;
    const Eigen::MatrixXd A = es.operatorSqrt() * P * lam.asDiagonal() * P.transpose() * es.operatorInverseSqrt();
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.normal();
    const NormalARChiSquare chi(A, Sigma, x);
    Eigen::MatrixXd Al = Eigen::MatrixXd::Identity(d, d);
    for (int l = 1; l <= 12; ++l) {
      Al = A * Al;
      const double oracle = gaussian_oracle(Al * x, Sigma - Al * Sigma * Al.transpose(), Sigma);
      worst = std::max(worst, std::abs(chi(l) - oracle) / std::max(1.0, std::abs(oracle)));
    }
    const NormalARChiSquare chi0(A, Sigma, Eigen::VectorXd::Zero(d));
    for (double cc : {std::log(d / 2.0) + 1.0, 5.0}) {
      const auto b = mixing_bounds_normal_ar(A, Sigma, cc);
      const long lu = std::max(1L, static_cast<long>(std::ceil(b.upper)));
      bool ok = !b.upper_applies || chi0(lu) <= b.upper_level;
      if (b.lower_applies && b.lower >= 1) ok = ok && chi0(static_cast<long>(std::floor(b.lower))) >= b.lower_level;
      if (!ok) c.check(false, "instance " + std::to_string(inst) + " c=" + num(cc) + ": sandwich violated");
      ++sandwich;
    }
  }
  c.check(worst <= 1e-9, "20 random reversible 5x5 instances, l <= 12: max deviation from the Gaussian determinant "
                         "oracle " + num(worst, 3) + " <= 1e-9");
  c.check(c.ok, std::to_string(sandwich) + " threshold checks from 0 at c in {log(d/2)+1, 5}");
}

// 6 ---------------------------------------------------------------------------
void bound_sandwich(Criterion& c) {
  const auto x = Composition::corner(20, 5, 0);
  const std::vector<ChainSpec> specs{
      Moran::from_alpha(20, uniform(5, Rational(1, 5))),
      Moran::from_alpha(20, uniform(5, Rational(1))),
      Hubbell{20, Rational(1, 20), uniform(5, Rational(1, 5))},
      GibbsDM{20, uniform(5, Rational(1, 5))},
      GibbsDM{20, uniform(5, Rational(1))},
      BLDownUp{{20, 5, 5, 5, 5}, 20, 1},
      BLDownUp{{20, 10, 10, 10, 10}, 20, 2},
      Ehrenfest{20, uniform(5, Rational(1, 5)), 1},
      Ehrenfest{20, {Rational(1, 10), Rational(1, 5), Rational(1, 5), Rational(1, 5), Rational(3, 10)}, 3},
  };
  int n = 0;
  for (const auto& spec : specs) {
    const ChiSquareEvaluator ev(spec, x);
    for (double cc : {0.5, 1.0, 2.0}) {
      const auto b = mixing_bounds(spec, x, cc);
      const long lu = static_cast<long>(std::ceil(b.upper));
      const double vu = ev(lu);
      c.check(vu <= b.upper_level, b.family + " c=" + num(cc) + ": chisq(" + std::to_string(lu) + ") = " + num(vu) +
                                       " <= " + num(b.upper_level));
      if (b.lower >= 0) {
        const long ll = static_cast<long>(std::floor(b.lower));
        const double vl = ev(ll);
        c.check(vl >= b.lower_level, b.family + " c=" + num(cc) + ": chisq(" + std::to_string(ll) + ") = " + num(vl) +
                                         " >= " + num(b.lower_level));
      }
      ++n;
    }
  }
  c.info(std::to_string(n) + " (family, c) pairs");
}

// 7 ---------------------------------------------------------------------------
void monte_carlo(Criterion& c) {
  const std::string cmd = std::string(ORTHOMIX_CLI_PATH) +
                          " simulate --chain hubbell --N 20 --d 5 --m 0.05 --p 0.2x5 --replicas 5000 --steps 1000 "
                          "--bins 16 --seed 1 --checkpoints 1000";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    c.check(false, "cannot launch the CLI");
    return;
  }
  std::string out;
  char buf[4096];
  std::size_t k;
  while ((k = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, k);
  const int status = pclose(pipe);
  c.check(WIFEXITED(status) && WEXITSTATUS(status) == 0, "simulate exited cleanly");
  std::istringstream is(out);
  int bins = 0;
  double worst = 0.0;
  for (std::string line; std::getline(is, line);) {
    if (line.empty() || line[0] == '#' || line.rfind("step,", 0) == 0) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string t; std::getline(ls, t, ',');) f.push_back(t);
    if (f.size() != 8 || f[0] != "1000") continue;
    const double freq = std::stod(f[5]), q = std::stod(f[6]), se = std::stod(f[7]);
    const double z = se > 0 ? std::abs(freq - q) / se : (freq == q ? 0.0 : 1e9);
    worst = std::max(worst, z);
    if (z > 3) c.info("bin " + f[1] + " [" + f[2] + ", " + f[3] + "): frequency " + f[5] + " vs " + num(q) + " (z=" +
                      num(z, 3) + ")");
    ++bins;
  }
  const Composition x = Composition::corner(20, 5, 0);
  c.info("exact chisq(1000) from N e_1 = " +
         num(ChiSquareEvaluator(Hubbell{20, Rational(1, 20), uniform(5, Rational(1, 5))}, x)(1000)));
  c.check(bins == 16, "16 histogram bins at step 1000");
  c.check(worst <= 3.0, "largest |frequency - stationary| / se = " + num(worst, 3) + " <= 3");
}

}  // namespace

int main() {
  std::cout << "orthomix " << kVersion << " acceptance\n";
  int failed = 0;
  failed += !run_criterion(1, "oracle equivalence (exact)", 60, oracle_equivalence);
  failed += !run_criterion(2, "orthogonality suites", 30, orthogonality);
  failed += !run_criterion(3, "kernel identities", 0, kernel_identities);
  failed += !run_criterion(4, "reference numbers", 0, reference_numbers);
  failed += !run_criterion(5, "normal AR oracle and thresholds", 0, normal_ar);
  failed += !run_criterion(6, "bound sandwich", 0, bound_sandwich);
  failed += !run_criterion(7, "Monte Carlo consistency", 300, monte_carlo);
  std::cout << (failed ? std::to_string(failed) + " criterion(s) FAILED" : std::string("all criteria PASS")) << "\n";
  return failed ? 1 : 0;
}
