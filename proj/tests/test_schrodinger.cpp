#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "katodyn/schrodinger.hpp"

using namespace katodyn;

namespace {

McOptions opts(long paths, double dt, std::uint64_t seed = 5) {
  McOptions o;
  o.paths = paths;
  o.dt = dt;
  o.seed = seed;
  return o;
}

Field sine() {
  return [](const Point& x) { return std::sin(x.c[0]); };
}

}  // namespace

TEST(Schrodinger, FreeCircleSpectrum) {
  const auto g = ManifoldModel::sphere(1);
  const SpectralOracle o = spectral_oracle(g, Potential::constant(0.0));
  EXPECT_LT(o.orthonormality_error, 1e-10);
  std::vector<double> lam(o.eig.lambda.data(), o.eig.lambda.data() + o.mesh());
  std::sort(lam.begin(), lam.end());
  const double want[] = {0, 1, 1, 4, 4, 9, 9};
  for (int k = 0; k < 7; ++k) EXPECT_NEAR(lam[k], want[k], 1e-3 * std::max(1.0, want[k]));
}

TEST(Schrodinger, ConstantShiftsSpectrum) {
  const auto g = ManifoldModel::sphere(1, 2.0);
  const SpectralOracle a = spectral_oracle(g, Potential::constant(0.0), 128);
  const SpectralOracle b = spectral_oracle(g, Potential::constant(1.5), 128);
  std::vector<double> la(a.eig.lambda.data(), a.eig.lambda.data() + 128), lb(b.eig.lambda.data(), b.eig.lambda.data() + 128);
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  for (int k = 0; k < 128; ++k) EXPECT_NEAR(lb[k] - la[k], 1.5, 1e-9);
}

TEST(Schrodinger, SemigroupPropertyAndSymmetry) {
  const auto g = ManifoldModel::conformal_circle({0.0, 0.1}, {0.0, 0.3}, 256);
  const Potential w = Potential::trig(g.chart_period(), {0.5, 1.0}, {0.0, -0.4});
  const SpectralOracle o = spectral_oracle(g, w, 256);
  const auto a = o.nodes(sine());
  const auto b = o.nodes([](const Point& x) { return std::exp(std::cos(2.0 * x.c[0])); });
  const auto two = o.apply(o.apply(a, 0.2), 0.3), one = o.apply(a, 0.5);
  double worst = 0.0;
  for (int i = 0; i < o.mesh(); ++i) worst = std::max(worst, std::abs(two[i] - one[i]));
  EXPECT_LT(worst, 1e-10);
  EXPECT_NEAR(o.inner(a, o.apply(b, 0.4)), o.inner(o.apply(a, 0.4), b), 1e-10);
  const auto z = o.apply(a, 0.0);
  for (int i = 0; i < o.mesh(); ++i) EXPECT_NEAR(z[i], a[i], 1e-10);
}

TEST(Schrodinger, FreeSineDecays) {
  const auto g = ManifoldModel::sphere(1);
  const SpectralOracle o = spectral_oracle(g, Potential::constant(0.0));
  const std::vector<Point> pts = {make_point(g, {0.3}), make_point(g, {1.9}), make_point(g, {4.4})};
  const SemigroupField f = spectral_field(o, sine(), {0.25, 1.0}, pts);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < pts.size(); ++j)
      EXPECT_NEAR(f.values[i][j], std::exp(-f.times[i]) * std::sin(pts[j].c[0]), 1e-4);
}

TEST(Schrodinger, PositivityPreserved) {
  const auto g = ManifoldModel::sphere(1);
  const SpectralOracle o = spectral_oracle(g, Potential::bump(origin(g), 1.0, 3.0), 256);
  const auto u = o.apply(o.nodes([](const Point& x) { return x.c[0] < 1.0 ? 1.0 : 0.0; }), 0.05);
  for (double v : u) EXPECT_GE(v, -1e-12);
}

TEST(Schrodinger, UnboundedPotentialRejected) {
  const auto g = ManifoldModel::sphere(1);
  EXPECT_THROW(spectral_oracle(g, Potential::power(origin(g), 0.5, 1.0)), InvalidArgument);
  EXPECT_THROW(spectral_oracle(ManifoldModel::euclidean(1), Potential::constant(0.0)), InvalidArgument);
}

TEST(Schrodinger, PrecheckHalvesUntilBelowOne) {
  const auto g = ManifoldModel::sphere(1);
  EXPECT_FALSE(fk_precheck(g, Potential::constant(2.0), 1.0).needed);
  const FkPrecheck p = fk_precheck(g, Potential::constant(-10.0), 1.0);
  EXPECT_TRUE(p.needed);
  EXPECT_DOUBLE_EQ(p.t0, 1.0 / 32.0);
  EXPECT_NEAR(p.norm, 20.0 / 32.0, 1e-6);
  EXPECT_NEAR(p.bound, khashminski_bound(p.norm, p.t0, 1.0), 1e-12);
}

TEST(Schrodinger, FeynmanKacMatchesSpectral) {
  const auto g = ManifoldModel::sphere(1);
  const Potential w = Potential::trig(2.0 * kPi, {0.0, 1.0});
  const SpectralOracle o = spectral_oracle(g, w, 512);
  const std::vector<Point> pts = {make_point(g, {0.5}), make_point(g, {2.0}), make_point(g, {5.0})};
  const SemigroupField ref = spectral_field(o, sine(), {0.25, 0.5}, pts);
  const SemigroupField mc = fk_semigroup(g, w, sine(), {0.25, 0.5}, pts, opts(20000, 1e-3));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < pts.size(); ++j)
      EXPECT_NEAR(mc.values[i][j], ref.values[i][j], 4.0 * mc.errors[i][j] + 2e-3);
}

TEST(Schrodinger, FeynmanKacTimesOnStepGrid) {
  const auto g = ManifoldModel::sphere(1);
  EXPECT_THROW(fk_semigroup(g, Potential::constant(0.0), sine(), {0.1, 0.2505}, {origin(g)}, opts(100, 1e-3)),
               InvalidArgument);
}

TEST(Schrodinger, ContinuityProbeOnSmoothAndRoughFields) {
  const auto g = ManifoldModel::sphere(1);
  auto level = [&](int l, bool rough) {
    SemigroupField f;
    refining_grid(g, 0.5, 2.5, 0.2, 0.5, l, f.points, f.times);
    for (double t : f.times) {
      std::vector<double> row;
      for (const auto& x : f.points) row.push_back(rough ? (x.c[0] < 1.3 ? 0.0 : 1.0) : std::exp(-t) * std::sin(x.c[0]));
      f.values.push_back(row);
      f.errors.emplace_back(row.size(), 0.0);
    }
    return f;
  };
  EXPECT_TRUE(continuity_probe(g, {level(2, false), level(3, false), level(4, false)}).pass);
  EXPECT_FALSE(continuity_probe(g, {level(2, true), level(3, true), level(4, true)}).pass);
}

TEST(Schrodinger, ExhaustionOnLine) {
  const auto g = ManifoldModel::euclidean(1);
  const ExhaustionResult r =
      exhaustion_convergence(g, Potential::bump(origin(g), 1.0, 1.0), [](const Point&) { return 1.0; }, origin(g),
                             {1.0, 2.0, 4.0}, {0.2, 0.4}, {origin(g), make_point(g, {0.3})}, opts(5000, 1e-3));
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_GT(r.rows[0].deviation, r.rows[2].deviation);
  // P(sup_{s<=0.4} |sqrt2 B_s| >= 4) is below 1e-7
  EXPECT_EQ(r.rows[2].deviation, 0.0);
  EXPECT_TRUE(r.pass);
}
