#include <gtest/gtest.h>

#include <cmath>

#include "katodyn/dynkin.hpp"

using namespace katodyn;

namespace {

// Composite Simpson on [a, b].
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Dynkin, ConstantLawAcrossModels) {
  for (const auto& g : {ManifoldModel::euclidean(1), ManifoldModel::euclidean(2), ManifoldModel::euclidean(3),
                        ManifoldModel::torus({1.0}), ManifoldModel::torus({1.0, 1.5}), ManifoldModel::sphere(1),
                        ManifoldModel::sphere(3), ManifoldModel::hyperbolic(3)})
    for (double t : {0.1, 0.5}) {
      const DynkinEstimate e = dynkin_norm(g, Potential::constant(2.0), t);
      EXPECT_NEAR(e.value, 2.0 * t, 1e-6 * t) << g.describe();
    }
}

TEST(Dynkin, InverseDistanceAtCenter) {
  // int_0^t int_{|y|<1} p(s,0,y)/|y| dy ds = int_0^t (1 - e^{-1/4s}) / sqrt(pi s) ds, with s = u^2
  const auto g = ManifoldModel::euclidean(3);
  const Potential w = Potential::power(origin(g), 1.0, 1.0);
  for (double t : {0.05, 0.5}) {
    const double want = simpson(
        [](double u) { return u == 0.0 ? 2.0 / std::sqrt(kPi) : 2.0 * (1.0 - std::exp(-0.25 / (u * u))) / std::sqrt(kPi); },
        0.0, std::sqrt(t));
    const DynkinEstimate e = dynkin_norm(g, w, t);
    EXPECT_NEAR(e.value, want, 1e-7 * want);
    EXPECT_LT(distance(g, e.argmax, origin(g)), 1e-12);
  }
}

TEST(Dynkin, IndicatorOnTheLine) {
  // w = 1 on [-1, 1]: J(0) = int_0^t erf(1 / (2 sqrt s)) ds
  const auto g = ManifoldModel::euclidean(1);
  const Potential w = Potential::truncated(Potential::constant(1.0), Region::ball(origin(g), 1.0));
  const double t = 0.8;
  const double want = simpson([](double s) { return s == 0.0 ? 1.0 : std::erf(0.5 / std::sqrt(s)); }, 0.0, t);
  EXPECT_NEAR(dynkin_norm(g, w, t).value, want, 1e-7);
}

TEST(Dynkin, ResolventOfConstant) {
  for (const auto& g : {ManifoldModel::euclidean(2), ManifoldModel::euclidean(3), ManifoldModel::sphere(1)})
    for (double lam : {1.0, 5.0}) EXPECT_NEAR(resolvent_sup(g, Potential::constant(3.0), lam).value, 3.0 / lam, 1e-6);
}

TEST(Dynkin, DivergenceIsFlaggedNotThrown) {
  const auto g = ManifoldModel::euclidean(3);
  const DynkinEstimate e = dynkin_norm(g, Potential::power(origin(g), 2.5, 1.0), 0.1);
  EXPECT_TRUE(e.infinite);
  EXPECT_TRUE(std::isinf(e.value));
  EXPECT_THROW(dynkin_norm(g, Potential::constant(1.0), 1e-7), InvalidArgument);
  EXPECT_THROW(dynkin_norm(g, Potential::constant(1.0), 101.0), InvalidArgument);
}

TEST(Dynkin, KatoDetectionOnPowerFamily) {
  const auto g = ManifoldModel::euclidean(3);
  const auto ts = dyadic_sequence(0.5, 8);
  for (double a : {0.5, 1.0, 1.5})
    EXPECT_EQ(kato_detect(g, Potential::power(origin(g), a, 1.0), ts).verdict.verdict, Verdict::Kato) << a;
  for (double a : {2.0, 2.5})
    EXPECT_EQ(kato_detect(g, Potential::power(origin(g), a, 1.0), ts).verdict.verdict, Verdict::NotDynkin) << a;
  // bounded without decay
  EXPECT_EQ(kato_detect(g, Potential::constant(0.0), ts).verdict.verdict, Verdict::Kato);
  EXPECT_THROW(kato_detect(g, Potential::constant(1.0), dyadic_sequence(0.5, 7)), InvalidArgument);
}

TEST(Dynkin, VerdictRuleEdgeCases) {
  std::vector<EvidenceRow> flat;
  for (int k = 0; k < 8; ++k) flat.push_back({std::ldexp(1.0, -k), 1.0, 0.0, false});
  EXPECT_EQ(classify_sequence(flat).verdict, Verdict::DynkinNotKato);
  auto bumpy = flat;
  bumpy[6].value = 2.0;
  EXPECT_EQ(classify_sequence(bumpy).verdict, Verdict::Inconclusive);
  std::vector<EvidenceRow> decay;
  for (int k = 0; k < 8; ++k) decay.push_back({std::ldexp(1.0, -k), std::ldexp(1.0, -k), 0.0, false});
  const KatoVerdict v = classify_sequence(decay);
  EXPECT_EQ(v.verdict, Verdict::Kato);
  EXPECT_NEAR(v.decay_exponent, 1.0, 1e-12);
}

TEST(Dynkin, LocalizationGapSmall) {
  for (const auto& g : {ManifoldModel::euclidean(2), ManifoldModel::sphere(1)}) {
    const Region A = Region::ball(origin(g), 1.0);
    const LocalizedNorm ln =
        localized_norm(g, Potential::truncated(Potential::constant(1.0), A), A, 0.25);
    EXPECT_GE(ln.gap, 0.0);
    EXPECT_LE(ln.gap, 0.02) << g.describe();
  }
}

TEST(Dynkin, KuweFactor) {
  EXPECT_EQ(kuwe_factor(0.25, 0.75), 4);
  EXPECT_EQ(kuwe_factor(0.25, 0.7), 3);
  EXPECT_EQ(kuwe_factor(0.5, 0.6), 2);
  const auto g = ManifoldModel::euclidean(2);
  const KuweCheck k = kuwe_check(g, Potential::bump(origin(g), 1.0, 1.0), 0.1, 0.35);
  EXPECT_TRUE(k.pass);
  EXPECT_EQ(k.factor, 4);
}

TEST(Dynkin, ResolventSandwichBump) {
  const auto g = ManifoldModel::euclidean(3);
  for (double lam : {1.0, 5.0})
    for (double t : {0.1, 1.0}) EXPECT_TRUE(resolvent_sandwich(g, Potential::bump(origin(g), 1.0, 1.0), lam, t).pass);
}

TEST(Dynkin, HolderBoundAndPrecheck) {
  const auto g = ManifoldModel::euclidean(3);
  const Region A = Region::ball(origin(g), 1.0);
  auto phi1 = [](double s) { return std::pow(4.0 * kPi * s, -1.5); };
  auto one = [](const Point&) { return 1.0; };
  const HolderBound h = holder_bound(g, Potential::power(origin(g), 1.0, 1.0), A, 2.0, phi1, one, 0.1);
  EXPECT_TRUE(h.pass);
  EXPECT_LE(h.worst_kernel_ratio, 1.0 + 1e-12);
  // (int_A |y|^{-2} dy)^{1/2} = sqrt(4 pi)
  EXPECT_NEAR(h.lq, std::sqrt(4.0 * kPi), 1e-6);
  auto small = [](double s) { return 0.5 * std::pow(4.0 * kPi * s, -1.5); };
  EXPECT_THROW(holder_bound(g, Potential::power(origin(g), 1.0, 1.0), A, 2.0, small, one, 0.1), PreconditionError);
}

TEST(Dynkin, L1LowerEmbedding) {
  const auto g = ManifoldModel::euclidean(2);
  const Region K = Region::ball(origin(g), 0.5);
  const L1LowerCheck c = l1_lower_check(g, Potential::bump(origin(g), 1.0, 1.0), K, 0.2);
  EXPECT_TRUE(c.pass);
  EXPECT_GT(c.min_kernel, 0.0);
}

TEST(Dynkin, ConformalFlatMatchesRoundCircle) {
  const auto c = ManifoldModel::conformal_circle({0.0}, {}, 512);
  const auto s = ManifoldModel::sphere(1);
  const Potential wc = Potential::bump(make_point(c, {kPi}), 1.0, 1.0);
  const Potential ws = Potential::bump(make_point(s, {kPi}), 1.0, 1.0);
  const double a = dynkin_norm(c, wc, 0.2).value, b = dynkin_norm(s, ws, 0.2).value;
  EXPECT_NEAR(a, b, 1e-3 * b);
}

TEST(Dynkin, ComparabilityIsExactForEqualMetrics) {
  const auto flat = ManifoldModel::conformal_circle({0.0});
  const Potential w = to_chart_grid(flat, Potential::bump(make_point(flat, {kPi}), 0.8, 1.0));
  const MetricComparability m = metric_comparability(flat, flat, w, kPi, 1.0, {0.2, 0.1});
  EXPECT_EQ(m.c_k, 1.0);
  EXPECT_TRUE(m.pass);
}

TEST(Dynkin, NgArithmetic) {
  EXPECT_NEAR(n_g_compute(ManifoldModel::euclidean(3), dyadic_sequence(1.0, 12)).n_g, 3.0, 1e-12);
  const NgResult h = n_g_compute(ManifoldModel::hyperbolic(3, 1.0), dyadic_sequence(1.0, 12));
  EXPECT_NEAR(h.t_star, 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(h.n_g, 11.0 / 3.0, 1e-12);
  const NgResult d = n_g_compute(ManifoldModel::hyperbolic(2, 1.0), dyadic_sequence(1.0, 12));
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.n_g, 2.0);
  const NgResult s = n_g_from_norm(3, [](double t) { return 4.0 / 3.0 * t; }, dyadic_sequence(1.0, 12));
  EXPECT_NEAR(s.t_star, 0.25, 1e-9);
  EXPECT_NEAR(s.n_g, 4.0, 1e-8);
  EXPECT_NEAR(n_g_formula(3, 0.25), 4.0, 1e-15);
  const NgResult never = n_g_from_norm(3, [](double) { return 1.0; }, dyadic_sequence(1.0, 8));
  EXPECT_TRUE(std::isinf(never.t_star));
}

TEST(Dynkin, TorusImagesMatchPlaneForSmallTimes) {
  const auto t2 = ManifoldModel::torus({4.0, 4.0});
  const auto e2 = ManifoldModel::euclidean(2);
  const double a = dynkin_norm(t2, Potential::bump(origin(t2), 0.5, 1.0), 0.05).value;
  const double b = dynkin_norm(e2, Potential::bump(origin(e2), 0.5, 1.0), 0.05).value;
  EXPECT_NEAR(a, b, 1e-8);
}
