#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "olab/numeric.hpp"
#include "olab/orlicz.hpp"

using namespace olab;

namespace {

// sup_t {s t - G(t)} by a dense scan followed by golden-section refinement.
double brute_conjugate(const OrliczG& og, double s) {
  double best_t = 0.0;
  double best = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    const double t = 1e-6 * std::pow(1e12, k / 20000.0);
    const double v = s * t - og.G(t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  double a = best_t * 0.99;
  double b = best_t * 1.01;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (s * c - og.G(c) > s * d - og.G(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  const double t = 0.5 * (a + b);
  return std::max(best, s * t - og.G(t));
}

// inf / sup of t g'(t)/g(t) via centered finite differences of log g in log t.
std::pair<double, double> brute_indices(const GrowthFunction& gf) {
  double lo = 1e300;
  double hi = -1e300;
  for (int k = 0; k <= 4000; ++k) {
    const double lt = std::log(1e-8) + k * (std::log(1e16) / 4000.0);
    const double d = 1e-5;
    const double idx = (std::log(gf.g(std::exp(lt + d))) - std::log(gf.g(std::exp(lt - d)))) / (2 * d);
    lo = std::min(lo, idx);
    hi = std::max(hi, idx);
  }
  return {lo, hi};
}

}  // namespace

TEST(Growth, PowerValue) { EXPECT_DOUBLE_EQ(GrowthFunction::power(3).g(2.0), 4.0); }

TEST(Growth, ZeroAtOrigin) {
  EXPECT_EQ(GrowthFunction::power(2).g(0.0), 0.0);
  EXPECT_EQ(GrowthFunction::power(3.5).g(0.0), 0.0);
  EXPECT_EQ(GrowthFunction::regularized_power(3, 1).g(0.0), 0.0);
  const auto tab = GrowthFunction::tabulated({0.5, 1, 2, 4}, {0.25, 1, 4, 16});
  EXPECT_EQ(tab.g(0.0), 0.0);
}

TEST(Growth, RegularizedValue) {
  EXPECT_NEAR(GrowthFunction::regularized_power(3, 1).g(1.0), std::sqrt(2.0), 1e-15);
}

TEST(Growth, NonFiniteArgumentIsDomainError) {
  const auto gf = GrowthFunction::power(3);
  EXPECT_THROW(gf.g(std::numeric_limits<double>::infinity()), DomainError);
  EXPECT_THROW(gf.g(std::nan("")), DomainError);
  EXPECT_THROW(OrliczG(gf).G(std::nan("")), DomainError);
}

TEST(Growth, RejectsInvalidParameters) {
  EXPECT_THROW(GrowthFunction::power(1.5), DataError);
  EXPECT_THROW(GrowthFunction::regularized_power(3, -1), DataError);
  EXPECT_THROW(GrowthFunction::tabulated({1, 2}, {1, 2}), InsufficientDataError);
  EXPECT_THROW(GrowthFunction::tabulated({1, 1, 2}, {1, 2, 3}), DataError);
}

TEST(Growth, TabulatedLowIndexPolicy) {
  // g(t) = sqrt(t) has index 1/2.
  const std::vector<double> t{0.25, 1, 4, 16};
  const std::vector<double> g{0.5, 1, 2, 4};
  EXPECT_THROW(GrowthFunction::tabulated(t, g), DataError);
  const auto gf = GrowthFunction::tabulated(t, g, LowIndexPolicy::warn);
  EXPECT_NEAR(gf.ig(), 0.5, 1e-9);
}

TEST(Growth, TabulatedReproducesPowerLaw) {
  std::vector<double> t;
  std::vector<double> g;
  for (int k = -6; k <= 6; ++k) {
    t.push_back(std::pow(2.0, k));
    g.push_back(std::pow(2.0, 2 * k));
  }
  const auto gf = GrowthFunction::tabulated(t, g);
  EXPECT_NEAR(gf.ig(), 2.0, 1e-9);
  EXPECT_NEAR(gf.sg(), 2.0, 1e-9);
  EXPECT_NEAR(gf.g(3.0), 9.0, 1e-9);
  const OrliczG og(gf);
  EXPECT_NEAR(og.G(3.0), 9.0, 1e-8);
  EXPECT_NEAR(og.inverse(9.0), 3.0, 1e-8);
}

TEST(Growth, TabulatedInverseOutsideCacheIsRangeError) {
  const auto gf = GrowthFunction::tabulated({0.5, 1, 2, 4}, {0.25, 1, 4, 16});
  const OrliczG og(gf, CacheOptions{256, 1e-3, 1e3});
  EXPECT_THROW(og.inverse(1e30), RangeError);
}

TEST(OrliczG, ClosedForms) {
  EXPECT_DOUBLE_EQ(OrliczG(GrowthFunction::power(2)).G(3.0), 4.5);
  EXPECT_DOUBLE_EQ(OrliczG(GrowthFunction::power(4)).G(1.0), 0.25);
}

TEST(OrliczG, RegularizedAgainstQuadrature) {
  const OrliczG og(GrowthFunction::regularized_power(3, 1));
  const double closed = (std::pow(2.0, 1.5) - 1.0) / 3.0;
  EXPECT_NEAR(og.G(1.0), 0.60947570824873, 1e-12);
  EXPECT_NEAR(og.G(1.0), closed, 1e-14);
  const double quad = numeric::gauss_legendre([&](double s) { return og.g(s); }, 0.0, 1.0);
  EXPECT_NEAR(og.G(1.0), quad, 1e-12);
}

TEST(OrliczG, Inverse) {
  EXPECT_NEAR(OrliczG(GrowthFunction::power(2)).inverse(2.0), 2.0, 1e-14);
  EXPECT_NEAR(OrliczG(GrowthFunction::power(3)).inverse(9.0), 3.0, 1e-14);
  EXPECT_EQ(OrliczG(GrowthFunction::power(3)).inverse(0.0), 0.0);
  EXPECT_EQ(OrliczG(GrowthFunction::regularized_power(3, 1)).inverse(0.0), 0.0);
}

TEST(OrliczG, Conjugate) {
  EXPECT_NEAR(OrliczG(GrowthFunction::power(2)).conjugate(1.0), 0.5, 1e-14);
  EXPECT_EQ(OrliczG(GrowthFunction::power(2)).conjugate(0.0), 0.0);
  const OrliczG og(GrowthFunction::power(3));
  const double expected = (2.0 / 3.0) * std::pow(4.0, 1.5);
  EXPECT_NEAR(og.conjugate(4.0), expected, 1e-12);
  EXPECT_NEAR(brute_conjugate(og, 4.0), expected, 1e-9);
}

TEST(OrliczG, ConjugateMatchesBruteForceForRegularized) {
  const OrliczG og(GrowthFunction::regularized_power(3, 0.5));
  for (double s : {0.1, 1.0, 3.0, 20.0}) {
    EXPECT_NEAR(og.conjugate(s), brute_conjugate(og, s), 1e-9 * std::max(1.0, og.conjugate(s)));
  }
}

TEST(Indices, ExactForPowers) {
  auto e = estimate_indices(GrowthFunction::power(3));
  EXPECT_DOUBLE_EQ(e.ig_hat, 2.0);
  EXPECT_DOUBLE_EQ(e.sg_hat, 2.0);
  e = estimate_indices(GrowthFunction::power(2.5));
  EXPECT_NEAR(e.ig_hat, 1.5, 1e-12);
  EXPECT_NEAR(e.sg_hat, 1.5, 1e-12);
}

TEST(Indices, RegularizedMatchesFiniteDifferenceOracle) {
  const auto gf = GrowthFunction::regularized_power(3, 1);
  const auto e = estimate_indices(gf);
  const auto [lo, hi] = brute_indices(gf);
  EXPECT_NEAR(e.ig_hat, 1.0, 1e-6);
  EXPECT_NEAR(e.sg_hat, 2.0, 1e-6);
  EXPECT_NEAR(e.ig_hat, lo, 1e-6);
  EXPECT_NEAR(e.sg_hat, hi, 1e-6);
}

TEST(Indices, TooFewSamples) {
  EXPECT_THROW(estimate_indices(GrowthFunction::power(2), 8), InsufficientDataError);
}

TEST(Sobolev, Examples) {
  const OrliczG p2(GrowthFunction::power(2));
  EXPECT_NEAR(p2.sobolev_S(2.0, 2), 2.0, 1e-14);
  EXPECT_NEAR(p2.sobolev_S(1.0, 2), 0.5 * std::pow(0.5, -0.5), 1e-14);
  const OrliczG p3(GrowthFunction::power(3));
  EXPECT_NEAR(p3.sobolev_S(1.0, 2), (1.0 / 3.0) * std::pow(1.0 / 3.0, -0.5), 1e-14);
  EXPECT_THROW(p2.sobolev_S(0.0, 2), DomainError);
  EXPECT_THROW(p2.sobolev_S(-1.0, 2), DomainError);
  EXPECT_NEAR(p3.sobolev_S_inverse(p3.sobolev_S(0.7, 2), 2), 0.7, 1e-10);
}

TEST(Increment, MatchesDirectDifference) {
  for (const auto& gf : {GrowthFunction::power(3), GrowthFunction::regularized_power(4, 0.3),
                         GrowthFunction::tabulated({0.5, 1, 2, 4}, {0.3, 1, 3.5, 11})}) {
    const OrliczG og(gf);
    for (double q0 : {0.0, 0.2, 1.5}) {
      for (double dq : {1e-3, 0.4, 2.0}) {
        const double direct = og.G(std::sqrt(q0 + dq)) - og.G(std::sqrt(q0));
        EXPECT_NEAR(og.increment_sq(q0, dq), direct, 1e-9 * std::max(1.0, direct));
      }
    }
  }
}

class Sandwich : public ::testing::TestWithParam<int> {};

TEST_P(Sandwich, ScalingAndRoundTrip) {
  const int which = GetParam();
  const GrowthFunction gf = which == 0   ? GrowthFunction::power(2)
                            : which == 1 ? GrowthFunction::power(3.5)
                                         : GrowthFunction::regularized_power(3, 0.7);
  const OrliczG og(gf);
  const double ig = gf.ig();
  const double sg = gf.sg();
  std::mt19937_64 rng(17 + which);
  std::uniform_real_distribution<double> lt(-4.0, 4.0);
  std::uniform_real_distribution<double> lb(-3.0, 3.0);
  const double slack = 1e-9;
  for (int k = 0; k < 2000; ++k) {
    const double t = std::pow(10.0, lt(rng));
    const double b = std::pow(10.0, lb(rng));
    const double lo = b >= 1 ? ig : sg;
    const double hi = b >= 1 ? sg : ig;
    const double rg = og.g(b * t) / og.g(t);
    EXPECT_GE(rg, std::pow(b, lo) * (1 - slack));
    EXPECT_LE(rg, std::pow(b, hi) * (1 + slack));
    const double rG = og.G(b * t) / og.G(t);
    EXPECT_GE(rG, std::pow(b, 1 + lo) * (1 - slack));
    EXPECT_LE(rG, std::pow(b, 1 + hi) * (1 + slack));
    const double ri = og.inverse(b * t) / og.inverse(t);
    EXPECT_GE(ri, std::pow(b, 1 / (1 + hi)) * (1 - slack));
    EXPECT_LE(ri, std::pow(b, 1 / (1 + lo)) * (1 + slack));
    EXPECT_NEAR(og.inverse(og.G(t)), t, 1e-10 * t);
    EXPECT_LE(og.conjugate(og.G(t) / t), og.G(t) * (1 + slack));
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, Sandwich, ::testing::Values(0, 1, 2));

TEST(Young, InequalityAndConjugateDomination) {
  const OrliczG og(GrowthFunction::power(3));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int k = 0; k < 500; ++k) {
    const double s = u(rng);
    const double t = u(rng);
    EXPECT_LE(s * t, og.conjugate(s) + og.G(t) + 1e-12);
    // G*(g(t)) = (p-1) G(t) for powers.
    EXPECT_NEAR(og.conjugate(og.g(t)), 2.0 * og.G(t), 1e-10 * std::max(1.0, og.G(t)));
  }
}

TEST(Doubling, DeltaTwoAndNablaTwo) {
  for (const auto& gf : {GrowthFunction::power(2), GrowthFunction::regularized_power(4, 1)}) {
    const OrliczG og(gf);
    for (double t : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
      EXPECT_LE(og.G(2 * t), std::pow(2.0, 1 + gf.sg()) * og.G(t) * (1 + 1e-12));
      EXPECT_GE(og.G(2 * t), std::pow(2.0, 1 + gf.ig()) * og.G(t) * (1 - 1e-12));
    }
  }
}

TEST(Kernel, OriginValues) {
  EXPECT_EQ(GrowthFunction::power(3).kernel(0.0), 0.0);
  EXPECT_EQ(GrowthFunction::power(2).kernel(0.0), 1.0);
  EXPECT_NEAR(GrowthFunction::regularized_power(4, 0.25).kernel(0.0), 0.25, 1e-15);
}
