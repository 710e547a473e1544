#include <gtest/gtest.h>

#include <cmath>

#include "katodyn/stochastics.hpp"

using namespace katodyn;

namespace {

McOptions opts(long paths, double dt, std::uint64_t seed = 7) {
  McOptions o;
  o.paths = paths;
  o.dt = dt;
  o.seed = seed;
  return o;
}

}  // namespace

TEST(Stochastics, NormalMoments) {
  auto rng = path_rng(3, 0);
  Normal nrm;
  const int n = 1000000;
  std::vector<double> x(n), x2(n);
  for (int i = 0; i < n; ++i) {
    x[i] = nrm(rng);
    x2[i] = x[i] * x[i];
  }
  EXPECT_NEAR(pairwise_sum(x.data(), n) / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(pairwise_sum(x2.data(), n) / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Stochastics, PairwiseSumAccuracy) {
  std::vector<double> v(1 << 20, 0.1);
  long double ref = 0.0L;
  for (double d : v) ref += d;
  EXPECT_NEAR(pairwise_sum(v.data(), v.size()), static_cast<double>(ref), 1e-9);
  const MeanStd ms = mean_and_stderr({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_NEAR(ms.stderr_, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Stochastics, SubstreamsDiffer) {
  EXPECT_NE(path_rng(1, 0)(), path_rng(1, 1)());
  EXPECT_NE(path_rng(1, 0)(), path_rng(2, 0)());
  EXPECT_EQ(path_rng(5, 9)(), path_rng(5, 9)());
}

TEST(Stochastics, SecondMomentUsesGeneratorVariance) {
  // generator Delta: E|X_t - x|^2 = 2 m t
  const auto g = ManifoldModel::euclidean(2);
  const double t = 0.5;
  const FKEstimate e = fk_functional(g, Potential::constant(0.0), [](const Point& y) { return y.c[0] * y.c[0] + y.c[1] * y.c[1]; },
                                     origin(g), t, opts(40000, 0.05));
  EXPECT_NEAR(e.mean, 4.0 * t, 4.0 * e.stderr_);
}

TEST(Stochastics, CosineDecaysOnLineAndCircle) {
  // E cos(x + sqrt2 B_t) = e^{-t} cos x
  const double t = 0.3, x0 = 0.4;
  for (const auto& g : {ManifoldModel::euclidean(1), ManifoldModel::sphere(1)}) {
    const FKEstimate e = fk_functional(g, Potential::constant(0.0), [](const Point& y) { return std::cos(y.c[0]); },
                                       make_point(g, {x0}), t, opts(40000, 0.01));
    EXPECT_NEAR(e.mean, std::exp(-t) * std::cos(x0), 4.0 * e.stderr_ + 1e-4) << g.describe();
  }
}

TEST(Stochastics, ConstantPotentialIsExact) {
  const auto g = ManifoldModel::euclidean(3);
  const FKEstimate d = mc_dynkin_norm(g, Potential::constant(2.5), Region::whole(), origin(g), 0.2, opts(200, 1e-3));
  EXPECT_NEAR(d.mean, 0.5, 1e-12);
  EXPECT_LT(d.stderr_, 1e-15);
  const FKEstimate f = fk_functional(g, Potential::constant(2.5), [](const Point&) { return 1.0; }, origin(g), 0.2,
                                     opts(200, 1e-3));
  EXPECT_NEAR(f.mean, std::exp(-0.5), 1e-12);
}

TEST(Stochastics, MeanExitTimeOfUnitDisk) {
  // E tau = (1 - |x|^2) / (2m) for generator Delta; discrete monitoring overshoots slightly
  const auto g = ManifoldModel::euclidean(2);
  McOptions o = opts(10000, 1e-3);
  o.domain = Domain::open_ball(origin(g), 1.0);
  const FKEstimate e = mc_dynkin_norm(g, Potential::constant(1.0), Region::whole(), origin(g), 2.0, o);
  EXPECT_NEAR(e.mean, 0.25, 0.02);
}

TEST(Stochastics, McMatchesDeterministicNorm) {
  const auto g = ManifoldModel::euclidean(2);
  const Potential w = Potential::bump(origin(g), 1.0, 1.0);
  const double t = 0.2;
  DynkinEvaluator ev(g, w, {t, 0.0});
  const double det = ev.at(origin(g)).value;
  const FKEstimate e = mc_dynkin_norm(g, w, Region::whole(), origin(g), t, opts(20000, 1e-3));
  EXPECT_NEAR(e.mean, det, 4.0 * e.stderr_ + 1e-4);
}

TEST(Stochastics, DeterministicAcrossThreadCounts) {
  const auto g = ManifoldModel::euclidean(3);
  const Potential w = Potential::power(origin(g), 1.0, 1.0);
  McOptions a = opts(3000, 1e-3, 42), b = a;
  a.threads = 1;
  b.threads = 4;
  const FKEstimate x = mc_dynkin_norm(g, w, Region::whole(), origin(g), 0.1, a);
  const FKEstimate y = mc_dynkin_norm(g, w, Region::whole(), origin(g), 0.1, b);
  EXPECT_EQ(x.mean, y.mean);
  EXPECT_EQ(x.stderr_, y.stderr_);
  b.seed = 43;
  EXPECT_NE(mc_dynkin_norm(g, w, Region::whole(), origin(g), 0.1, b).mean, x.mean);
}

TEST(Stochastics, SingularCapIsFinite) {
  const auto g = ManifoldModel::euclidean(3);
  const CappedPotential cw(g, Potential::power(origin(g), 1.0, 1.0), 1e-4);
  EXPECT_TRUE(std::isfinite(cw(origin(g))));
  EXPECT_TRUE(std::isfinite(cw.cap()));
}

TEST(Stochastics, PathsStayOnChart) {
  const auto t2 = ManifoldModel::torus({1.0, 2.0});
  auto rng = path_rng(1, 0);
  const PathSample p = sample_path(t2, origin(t2), 1.0, 1e-2, rng);
  ASSERT_EQ(p.points.size(), 101u);
  for (const auto& y : p.points) {
    EXPECT_GE(y.c[0], 0.0);
    EXPECT_LT(y.c[0], 1.0);
    EXPECT_GE(y.c[1], 0.0);
    EXPECT_LT(y.c[1], 2.0);
  }
  const auto e2 = ManifoldModel::euclidean(2);
  auto r2 = path_rng(1, 1);
  const PathSample q = sample_path(e2, origin(e2), 1.0, 1e-2, r2);
  const auto [zeta, sigma] = first_times(e2, q, Domain::open_ball(origin(e2), 1e-9), Region::ball(origin(e2), 1.0));
  EXPECT_EQ(sigma, 0);
  EXPECT_GE(zeta, 1);
}

TEST(Stochastics, KhashminskiArithmetic) {
  EXPECT_NEAR(khashminski_bound(0.5, 1.0, 1.0), 4.0, 1e-14);
  EXPECT_NEAR(khashminski_bound(0.0, 1.0, 3.0), 1.0, 0.0);
  EXPECT_THROW(khashminski_bound(1.0, 1.0, 1.0), InvalidArgument);
  const auto g = ManifoldModel::euclidean(2);
  EXPECT_THROW(khashminski_check(g, Potential::constant(-1.0), Domain::open_ball(origin(g), 1.0), 0.1, 0.2,
                                 origin(g)),
               InvalidArgument);
}

TEST(Stochastics, KhashminskiHoldsForBoundedPotential) {
  const auto g = ManifoldModel::euclidean(3);
  const KhashminskiCheck k = khashminski_check(g, Potential::constant(1.0), Domain::open_ball(origin(g), 1.0), 0.3, 0.6,
                                               origin(g), opts(4000, 1e-3));
  EXPECT_TRUE(k.pass);
  EXPECT_LT(k.norm, 1.0);
}

TEST(Stochastics, ScalarExponentialInequality) {
  const ScalarInequalityCheck c = exp_holder_check(200000, 11);
  EXPECT_EQ(c.violations, 0);
  EXPECT_LE(c.worst_ratio, 1.0);
}
