#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "olab/grid.hpp"

using namespace olab;

namespace {

const Grid2D kUnit({0.0, 0.0}, 1.0, 64);

double max_interior_error(const GradientField& g, const std::function<Vec2(Vec2)>& exact) {
  double err = 0.0;
  for (int j = 1; j < g.grid.n() - 1; ++j) {
    for (int i = 1; i < g.grid.n() - 1; ++i) err = std::max(err, norm(g.at(i, j) - exact(g.grid.node(i, j))));
  }
  return err;
}

double max_diag_error(const HessianField& H, const std::function<double(Vec2)>& fxx) {
  double err = 0.0;
  for (int j = 1; j < H.grid.n() - 1; ++j) {
    for (int i = 1; i < H.grid.n() - 1; ++i) {
      const Vec2 x = H.grid.node(i, j);
      err = std::max(err, std::abs(H.at(i, j).xx - fxx(x)));
      err = std::max(err, std::abs(H.at(i, j).yy));
    }
  }
  return err;
}

}  // namespace

TEST(Grid2D, Geometry) {
  EXPECT_DOUBLE_EQ(kUnit.h(), 1.0 / 64);
  EXPECT_EQ(kUnit.size(), 64u * 64u);
  EXPECT_DOUBLE_EQ(kUnit.node(0, 0).x, 0.5 / 64);
  EXPECT_TRUE(kUnit.is_boundary(0, 5));
  EXPECT_FALSE(kUnit.is_boundary(1, 1));
  EXPECT_TRUE(kUnit.contains_ball({0.5, 0.5}, 0.5));
  EXPECT_FALSE(kUnit.contains_ball({0.2, 0.5}, 0.25));
  EXPECT_THROW(Grid2D({0, 0}, -1.0, 8), DomainError);
}

TEST(Gradient, AffineIsExact) {
  const auto f = GridFunction::sample(kUnit, [](Vec2 x) { return x.x; });
  const auto g = gradient(f);
  for (const Vec2& v : g.values) {
    EXPECT_NEAR(v.x, 1.0, 1e-12);
    EXPECT_NEAR(v.y, 0.0, 1e-12);
  }
}

TEST(Gradient, ConstantIsZero) {
  const auto g = gradient(GridFunction(kUnit, 3.7));
  for (const Vec2& v : g.values) EXPECT_LE(norm(v), 1e-12);
}

TEST(Gradient, QuadraticWithinSecondOrder) {
  const auto f = GridFunction::sample(kUnit, [](Vec2 x) { return x.x * x.x; });
  const double err = max_interior_error(gradient(f), [](Vec2 x) { return Vec2{2 * x.x, 0}; });
  EXPECT_LE(err, kUnit.h() * kUnit.h());
}

TEST(Gradient, SecondOrderConvergence) {
  std::vector<double> errs;
  for (int n : {32, 64, 128}) {
    const Grid2D g({0, 0}, 1.0, n);
    const auto f = GridFunction::sample(g, [](Vec2 x) { return std::sin(3 * x.x) * std::cos(2 * x.y); });
    errs.push_back(max_interior_error(gradient(f), [](Vec2 x) {
      return Vec2{3 * std::cos(3 * x.x) * std::cos(2 * x.y), -2 * std::sin(3 * x.x) * std::sin(2 * x.y)};
    }));
  }
  EXPECT_NEAR(std::log2(errs[0] / errs[1]), 2.0, 0.15);
  EXPECT_NEAR(std::log2(errs[1] / errs[2]), 2.0, 0.15);
}

TEST(Hessian, QuadraticIsExact) {
  const auto H = hessian(GridFunction::sample(kUnit, [](Vec2 x) { return x.x * x.y; }));
  for (const Mat2& m : H.values) {
    EXPECT_NEAR(m.xy, 1.0, 1e-9);
    EXPECT_NEAR(m.yx, 1.0, 1e-9);
    EXPECT_NEAR(m.xx, 0.0, 1e-9);
    EXPECT_NEAR(m.yy, 0.0, 1e-9);
  }
}

TEST(Hessian, AffineIsZero) {
  const auto H = hessian(GridFunction::sample(kUnit, [](Vec2 x) { return 2 - x.x + 3 * x.y; }));
  for (const Mat2& m : H.values) EXPECT_LE(frobenius_norm(m), 1e-9);
}

TEST(Hessian, SineConverges) {
  std::vector<double> errs;
  for (int n : {32, 64, 128}) {
    const Grid2D g({0, 0}, 1.0, n);
    errs.push_back(max_diag_error(hessian(GridFunction::sample(g, [](Vec2 x) { return std::sin(x.x); })),
                                  [](Vec2 x) { return -std::sin(x.x); }));
  }
  EXPECT_LT(errs[2], 1e-4);
  EXPECT_NEAR(std::log2(errs[0] / errs[1]), 2.0, 0.3);
}

TEST(Hessian, ConsistentWithGradientOfGradient) {
  const Grid2D g({0, 0}, 1.0, 128);
  const auto f = GridFunction::sample(g, [](Vec2 x) { return std::exp(x.x) * std::sin(2 * x.y); });
  const auto H = hessian(f);
  const auto D = gradient(f);
  GridFunction fx(g);
  for (std::size_t k = 0; k < g.size(); ++k) fx.values[k] = D.values[k].x;
  const auto Dfx = gradient(fx);
  double err = 0.0;
  for (int j = 2; j < g.n() - 2; ++j) {
    for (int i = 2; i < g.n() - 2; ++i) {
      err = std::max(err, std::abs(H.at(i, j).xx - Dfx.at(i, j).x));
      err = std::max(err, std::abs(H.at(i, j).xy - Dfx.at(i, j).y));
    }
  }
  EXPECT_LE(err, 10 * g.h());
}

TEST(BallAverage, Constant) { EXPECT_DOUBLE_EQ(ball_average(GridFunction(kUnit, 5.0), {0.3, 0.6}, 0.2), 5.0); }

TEST(BallAverage, Symmetric) {
  const auto f = GridFunction::sample(kUnit, [](Vec2 x) { return x.x; });
  EXPECT_NEAR(ball_average(f, {0.5, 0.5}, 0.25), 0.5, kUnit.h());
}

TEST(BallAverage, SquaredDistance) {
  const Vec2 c{0.5, 0.5};
  const double r = 0.25;
  for (int n : {64, 128}) {
    const Grid2D g({0, 0}, 1.0, n);
    const auto f = GridFunction::sample(g, [&](Vec2 x) { return dot(x - c, x - c); });
    EXPECT_NEAR(ball_average(f, c, r), r * r / 2, 2 * r * g.h());
  }
}

TEST(BallAverage, Linearity) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  GridFunction f(kUnit);
  GridFunction g(kUnit);
  for (auto& v : f.values) v = u(rng);
  for (auto& v : g.values) v = u(rng);
  GridFunction h(kUnit);
  for (std::size_t k = 0; k < h.values.size(); ++k) h.values[k] = 2 * f.values[k] - 3 * g.values[k];
  const Vec2 c{0.4, 0.55};
  EXPECT_NEAR(ball_average(h, c, 0.2), 2 * ball_average(f, c, 0.2) - 3 * ball_average(g, c, 0.2), 1e-13);
}

TEST(BallAverage, Errors) {
  const GridFunction f(kUnit, 1.0);
  EXPECT_THROW(ball_average(f, {0.1, 0.5}, 0.2), DomainError);
  EXPECT_THROW(ball_average(f, {0.5, 0.5}, kUnit.h()), ResolutionError);
}

TEST(BallMass, Atoms) {
  MeasureData mu;
  mu.atoms.push_back({{0.0, 0.0}, 1.0});
  EXPECT_DOUBLE_EQ(ball_mass(mu, {0, 0}, 0.01), 1.0);
  EXPECT_DOUBLE_EQ(ball_mass(mu, {0.3, 0.0}, 0.2), 0.0);
}

TEST(BallMass, UnitDensityDisk) {
  MeasureData mu;
  mu.density = GridFunction(kUnit, 1.0);
  const double r = 0.25;
  EXPECT_NEAR(ball_mass(mu, {0.5, 0.5}, r), kPi / 16, 2 * kUnit.h() * 2 * kPi * r);
}

TEST(BallMass, AdditiveAndMonotone) {
  MeasureData a;
  a.atoms = {{{0.5, 0.5}, 1.0}, {{0.6, 0.5}, -0.5}};
  MeasureData b;
  b.atoms = {{{0.45, 0.42}, 2.0}};
  MeasureData ab;
  ab.atoms = a.atoms;
  ab.atoms.push_back(b.atoms[0]);
  double prev = 0.0;
  for (double r : {0.01, 0.05, 0.1, 0.2}) {
    const double m = ball_mass(ab, {0.5, 0.5}, r);
    EXPECT_DOUBLE_EQ(m, ball_mass(a, {0.5, 0.5}, r) + ball_mass(b, {0.5, 0.5}, r));
    EXPECT_GE(m, prev);
    prev = m;
  }
  EXPECT_DOUBLE_EQ(ab.total_variation(), 3.5);
}

TEST(Median, Examples) {
  EXPECT_DOUBLE_EQ(median(GridFunction(kUnit, 2.5), {0.5, 0.5}, 0.1), 2.5);
  const auto f = GridFunction::sample(kUnit, [](Vec2 x) { return x.x; });
  EXPECT_NEAR(median(f, {0.5, 0.5}, 0.2), 0.5, kUnit.h());
  EXPECT_DOUBLE_EQ(largest_median({1, 1, 2, 3, 3}), 2.0);
  EXPECT_THROW(largest_median({}), StateError);
}

TEST(Median, MeanOscillationBound) {
  std::mt19937_64 rng(21);
  std::exponential_distribution<double> e(1.0);
  GridFunction f(kUnit);
  for (auto& v : f.values) v = e(rng);
  const Vec2 c{0.5, 0.5};
  const double r = 0.15;
  const BallScan scan(kUnit, c, r);
  const double mean = ball_average(f, c, r);
  double osc = 0.0;
  for (std::size_t k : scan.all_nodes()) osc += std::abs(f.values[k] - mean);
  osc /= scan.all_nodes().size();
  double best = 1e300;
  for (std::size_t q : scan.all_nodes()) {
    double s = 0.0;
    for (std::size_t k : scan.all_nodes()) s += std::abs(f.values[k] - f.values[q]);
    best = std::min(best, s / scan.all_nodes().size());
  }
  EXPECT_LE(osc, 2 * best);
  // The median attains the minimum over constants.
  const double m = median(f, c, r);
  double at_median = 0.0;
  for (std::size_t k : scan.all_nodes()) at_median += std::abs(f.values[k] - m);
  EXPECT_NEAR(at_median / scan.all_nodes().size(), best, 1e-12);
}

TEST(Truncate, Examples) {
  for (double v : truncate(GridFunction(kUnit, 5.0), 3).values) EXPECT_EQ(v, 3.0);
  for (double v : truncate(GridFunction(kUnit, -5.0), 3).values) EXPECT_EQ(v, -3.0);
  const auto f = GridFunction::sample(kUnit, [](Vec2 x) { return x.x - 0.5; });
  EXPECT_EQ(truncate(f, 1.0).values, f.values);
  EXPECT_THROW(truncate(f, 0.0), DomainError);
}

TEST(W11, Examples) {
  const auto f = GridFunction::sample(kUnit, [](Vec2 x) { return x.x; });
  EXPECT_EQ(w11_distance(f, f), 0.0);
  GridFunction shifted = f;
  for (auto& v : shifted.values) v += 0.3;
  EXPECT_NEAR(w11_distance(shifted, f), 0.3, 1e-12);
  EXPECT_NEAR(w11_distance(f, GridFunction(kUnit)), 1.5, kUnit.h());
  EXPECT_THROW(w11_distance(f, GridFunction(Grid2D({0, 0}, 1, 32))), ShapeError);
}

TEST(BallScan, PrefixesAreNestedDisks) {
  const BallScan scan(kUnit, {0.41, 0.52}, 0.2);
  for (double r : {0.03, 0.1, 0.2}) {
    std::size_t brute = 0;
    for (std::size_t k = 0; k < kUnit.size(); ++k) brute += distance(kUnit.node(k), {0.41, 0.52}) <= r;
    EXPECT_EQ(scan.count(r), brute);
  }
}

TEST(BallIndex, MatchesBallScan) {
  const BallIndex idx(kUnit, 0.0, 0.15);
  const auto nodes = idx.nodes(32, 30, 0.1);
  const BallScan scan(kUnit, kUnit.node(32, 30), 0.1);
  EXPECT_EQ(nodes.size(), scan.all_nodes().size());
  EXPECT_THROW(idx.nodes(2, 30, 0.1), DomainError);
  EXPECT_FALSE(idx.radii().empty());
}

TEST(RasterIO, RoundTrip) {
  const Grid2D g({0.25, -1}, 2.0, 16);
  const auto f = GridFunction::sample(g, [](Vec2 x) { return std::sin(x.x) + 1e-7 * x.y; });
  std::stringstream ss;
  write_raster(ss, f);
  const auto back = read_raster(ss);
  EXPECT_TRUE(back.grid == g);
  EXPECT_EQ(back.values, f.values);
}

TEST(RasterIO, Malformed) {
  std::stringstream bad("16 16 0 0 1\n1 2 3");
  EXPECT_THROW(read_raster(bad), DataError);
  std::stringstream rect("16 17 0 0 1\n");
  EXPECT_THROW(read_raster(rect), ShapeError);
}

TEST(MeasureIO, AtomsAndComments) {
  std::stringstream ss("# unit Dirac\natom 0.5 0.5 1\n\natom 0.2 0.3 -2 # negative\n");
  const auto mu = read_measure(ss);
  ASSERT_EQ(mu.atoms.size(), 2u);
  EXPECT_DOUBLE_EQ(mu.atoms[1].mass, -2.0);
  EXPECT_DOUBLE_EQ(mu.total_variation(), 3.0);
  std::stringstream bad("blob 1 2\n");
  EXPECT_THROW(read_measure(bad), DataError);
}
