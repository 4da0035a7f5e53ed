#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "olab/potentials.hpp"

using namespace olab;

namespace {

const Grid2D kG64({0, 0}, 1.0, 64);

MeasureData dirac(Vec2 at, double mass = 1.0) { return MeasureData{{{at, mass}}, std::nullopt}; }

WolffParams params(double beta, double p, double R, std::optional<double> r_min = std::nullopt) {
  WolffParams wp;
  wp.beta = beta;
  wp.p = p;
  wp.R = R;
  wp.r_min = r_min;
  return wp;
}

// Brute-force mean absolute deviation over the nodes of B_r(x).
double brute_oscillation(const GridFunction& f, Vec2 x, double r) {
  std::vector<double> vals;
  for (std::size_t k = 0; k < f.grid.size(); ++k) {
    if (distance(f.grid.node(k), x) <= r * (1 + 1e-12)) vals.push_back(f.values[k]);
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= vals.size();
  double osc = 0.0;
  for (double v : vals) osc += std::abs(v - mean);
  return osc / vals.size();
}

}  // namespace

TEST(Wolff, EmptyMeasure) {
  EXPECT_EQ(wolff(MeasureData{}, {0.5, 0.5}, params(0.5, 2, 0.25), kG64).value, 0.0);
}

TEST(Wolff, DiracClosedForm) {
  const WolffParams wp = params(0.5, 2.0, 0.5);
  const auto v = wolff(dirac({0.5, 0.5}), {0.6, 0.5}, wp, kG64);
  EXPECT_NEAR(v.value, 8.0, 8e-3);
  EXPECT_NEAR(v.value, 8.0, 1e-10);
  EXPECT_FALSE(v.truncated);
}

TEST(Wolff, DiracOtherExponents) {
  // (1/ρ^{2-βp})^{1/(p-1)} with β = 1, p = 3: ρ^{1/2}, integrated against dρ/ρ.
  const auto v = wolff(dirac({0.5, 0.5}), {0.5, 0.7}, params(1.0, 3.0, 0.45), kG64);
  EXPECT_NEAR(v.value, 2 * (std::sqrt(0.45) - std::sqrt(0.2)), 1e-10);
  // n - βp < 0: ρ^{-(2-4)} = ρ² for β = 2, p = 2.
  const auto w = wolff(dirac({0.5, 0.5}, 2.0), {0.5, 0.7}, params(2.0, 2.0, 0.45), kG64);
  EXPECT_NEAR(w.value, 2.0 * (0.45 * 0.45 - 0.04) / 2, 1e-10);
}

TEST(Wolff, Homogeneity) {
  MeasureData mu{{{{0.5, 0.5}, 1.0}, {{0.4, 0.6}, 0.5}}, GridFunction(kG64, 0.3)};
  for (double p : {2.0, 3.0, 1.5}) {
    const WolffParams wp = params(0.5, p, 0.3);
    const double base = wolff(mu, {0.45, 0.5}, wp, kG64).value;
    for (double lambda : {0.25, 4.0, 16.0}) {
      const double scaled = wolff(mu.scaled(lambda), {0.45, 0.5}, wp, kG64).value;
      EXPECT_NEAR(scaled, std::pow(lambda, 1 / (p - 1)) * base, 1e-12 * scaled);
    }
  }
}

TEST(Wolff, DivergesAtTheAtom) {
  const Grid2D g({0, 0}, 1.0, 128);
  const Vec2 x{0.5, 0.5};
  const double R = 0.4;
  WolffParams wp = params(0.5, 2.0, R, 0.05);
  const auto coarse = wolff(dirac(x), x, wp, g);
  wp.r_min = 0.025;
  const auto fine = wolff(dirac(x), x, wp, g);
  EXPECT_TRUE(coarse.truncated);
  EXPECT_NEAR(coarse.value, 1 / 0.05 - 1 / R, 1e-10);
  // W ~ r_min^{-(n-βp)/(p-1)} = r_min^{-1}.
  EXPECT_NEAR((fine.value + 1 / R) / (coarse.value + 1 / R), 2.0, 1e-10);
}

TEST(Wolff, ParameterErrors) {
  const auto mu = dirac({0.5, 0.5});
  EXPECT_THROW(wolff(mu, {0.5, 0.5}, params(0.5, 2.0, 0.01), kG64), RangeError);
  EXPECT_THROW(wolff(mu, {0.5, 0.5}, params(0.5, 2.0, 0.2, kG64.h()), kG64), ResolutionError);
  EXPECT_THROW(wolff(mu, {0.5, 0.5}, params(0.5, 1.0, 0.2), kG64), RangeError);
  EXPECT_THROW(wolff(mu, {0.5, 0.5}, params(2.5, 2.0, 0.2), kG64), RangeError);
}

TEST(WolffPsi, AffineAndZeroObstacle) {
  const auto gf = GrowthFunction::power(2);
  const double R = 0.3;
  const double rmin = 2 * kG64.h();
  for (const auto& psi : {GridFunction(kG64), GridFunction::sample(kG64, [](Vec2 x) { return 1 + x.x - 2 * x.y; })}) {
    const ObstacleDensity od(psi, gf);
    const auto v = wolff_psi(od, {0.5, 0.5}, params(0.5, 2.0, R));
    EXPECT_NEAR(v.value, kPi * (R - rmin), 1e-8);
    EXPECT_TRUE(v.truncated);
    const auto w = wolff_psi(od, {0.5, 0.5}, params(1.0, 3.0, R));
    EXPECT_NEAR(w.value, std::sqrt(kPi) * (std::pow(R, 1.5) - std::pow(rmin, 1.5)) / 1.5, 1e-8);
  }
}

TEST(ObstacleDensity, KernelFloorAndQuadratic) {
  const auto gf = GrowthFunction::power(2);
  const auto quad = GridFunction::sample(kG64, [](Vec2 x) { return 0.5 * dot(x, x); });
  const ObstacleDensity od(quad, gf);
  for (int j = 1; j < 63; ++j) {
    for (int i = 1; i < 63; ++i) EXPECT_NEAR(od.kernel().at(i, j), 1 + std::sqrt(2.0), 1e-9);
  }
  for (double v : od.kernel().values) EXPECT_GE(v, 1.0);
  EXPECT_NEAR(obstacle_maximal(od, {0.5, 0.5}, 0.5, 0.25), (1 + std::sqrt(2.0)) * std::sqrt(0.25), 1e-9);
}

TEST(ObstacleMaximal, AffineAndFloor) {
  const auto gf = GrowthFunction::power(3);
  const ObstacleDensity affine(GridFunction::sample(kG64, [](Vec2 x) { return x.x - x.y; }), gf);
  EXPECT_NEAR(obstacle_maximal(affine, {0.5, 0.5}, 0.7, 0.3), std::pow(0.3, 0.7), 1e-9);
  const ObstacleDensity wavy(GridFunction::sample(kG64, [](Vec2 x) { return std::sin(6 * x.x) * x.y; }), gf);
  EXPECT_GE(obstacle_maximal(wavy, {0.4, 0.6}, 0.0, 0.2), 1.0);
}

TEST(FracMaximal, ConstantFunction) {
  const GridFunction f(kG64, 2.5);
  EXPECT_NEAR(frac_maximal(f, {0.5, 0.5}, 0.5, 0.3), 2.5 * std::sqrt(0.3), 1e-12);
  EXPECT_NEAR(frac_maximal(f, {0.5, 0.5}, 0.0, 0.3), 2.5, 1e-12);
  EXPECT_THROW(frac_maximal(f, {0.5, 0.5}, 0.5, kG64.h()), RangeError);
  EXPECT_THROW(frac_maximal(f, {0.5, 0.5}, 2.5, 0.2), RangeError);
}

TEST(FracMaximal, AtomPeaksAtSmallestRadius) {
  const double beta = 0.5;
  std::vector<double> vals;
  for (int n : {64, 128}) {
    const Grid2D g({0, 0}, 1.0, n);
    const Vec2 x = g.node(n / 2, n / 2);
    const double r_min = 2 * g.h();
    const double v = frac_maximal(dirac(x), x, beta, 0.25, g);
    EXPECT_NEAR(v, std::pow(r_min, beta - 2) / kPi, 1e-9 * v);
    vals.push_back(v);
  }
  EXPECT_NEAR(vals[1] / vals[0], std::pow(2.0, 2 - beta), 1e-9);
}

TEST(SharpMaximal, Constant) {
  EXPECT_EQ(sharp_maximal(GridFunction(kG64, 4.0), {0.5, 0.5}, 0.3, 0.25), 0.0);
}

TEST(SharpMaximal, AffineAgainstBruteForceDisk) {
  const Vec2 a{0.6, -0.8};
  const auto f = GridFunction::sample(kG64, [&](Vec2 x) { return dot(a, x); });
  const Vec2 x = kG64.node(32, 32);
  const double R = 0.25;
  const double kappa = 4 / (3 * kPi);
  const double m0 = sharp_maximal(f, x, 0.0, R);
  EXPECT_NEAR(m0, brute_oscillation(f, x, R), 1e-12);
  EXPECT_NEAR(m0, R * norm(a) * kappa, 0.02 * R * kappa);
  const double m1 = sharp_maximal(f, x, 1.0, R);
  EXPECT_NEAR(m1, norm(a) * kappa, 0.1 * kappa);
  EXPECT_GE(m1, brute_oscillation(f, x, R) / R - 1e-12);
}

TEST(SharpMaximal, GradientVersionOfConstantField) {
  GradientField df(kG64, Vec2{1, 2});
  EXPECT_EQ(sharp_maximal(df, {0.5, 0.5}, 0.5, 0.2), 0.0);
}

TEST(PotentialCsv, Format) {
  std::ostringstream os;
  write_potential_csv(os, {{0.25, 0.5}}, {{1.5, true, 0.1}});
  EXPECT_EQ(os.str(), "x,y,value,truncation_flag\n0.25,0.5,1.5,1\n");
  EXPECT_THROW(write_potential_csv(os, {{0, 0}}, {}), ShapeError);
}
