#include <gtest/gtest.h>

#include <cmath>

#include "katodyn/descriptor.hpp"
#include "katodyn/potentials.hpp"

using namespace katodyn;

TEST(Potentials, EvaluationOfFamilies) {
  const auto g = ManifoldModel::euclidean(3);
  const Point o = origin(g), p = make_point(g, {0.5, 0.0, 0.0}), q = make_point(g, {2.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(Potential::constant(2.5).eval(g, q), 2.5);
  const Potential pw = Potential::power(o, 1.5, 1.0);
  EXPECT_NEAR(pw.eval(g, p), std::pow(0.5, -1.5), 1e-14);
  EXPECT_EQ(pw.eval(g, q), 0.0);
  EXPECT_TRUE(std::isinf(pw.eval(g, o)));
  const Potential lg = Potential::log_singularity(o, 1.0);
  EXPECT_NEAR(lg.eval(g, p), std::log(2.0), 1e-14);
  const Potential b = Potential::bump(o, 1.0, 3.0);
  EXPECT_NEAR(b.eval(g, o), 3.0, 1e-14);
  EXPECT_EQ(b.eval(g, q), 0.0);
}

TEST(Potentials, CombinatorsAndSigns) {
  const auto g = ManifoldModel::euclidean(2);
  const Point o = origin(g), x = make_point(g, {0.3, 0.0});
  const Potential w = Potential::sum({Potential::bump(o, 1.0, 2.0), Potential::constant(-1.0)});
  EXPECT_EQ(w.sign(), 2);
  const double v = w.eval(g, x);
  EXPECT_NEAR(Potential::positive_part(w).eval(g, x), std::max(v, 0.0), 1e-15);
  EXPECT_NEAR(Potential::negative_part(w).eval(g, make_point(g, {5.0, 0.0})), 1.0, 1e-15);
  EXPECT_EQ(Potential::scaled(0.0, w).sign(), 0);
  const Potential t = Potential::truncated(Potential::constant(1.0), Region::ball(o, 1.0));
  EXPECT_EQ(t.eval(g, make_point(g, {1.0, 0.0})), 1.0);
  EXPECT_EQ(t.eval(g, make_point(g, {1.01, 0.0})), 0.0);
  ASSERT_TRUE(t.support().has_value());
  EXPECT_EQ(t.support()->size(), 1u);
}

TEST(Potentials, GridLayouts) {
  const auto g = ManifoldModel::torus({1.0});
  const Potential w = Potential::grid_periodic(1.0, {0.0, 1.0, 0.0, -1.0});
  EXPECT_NEAR(w.eval(g, make_point(g, {0.125})), 0.5, 1e-14);
  EXPECT_NEAR(w.eval(g, make_point(g, {0.875})), -0.5, 1e-14);
  const auto e1 = ManifoldModel::euclidean(1);
  const Potential iv = Potential::grid_interval(0.0, 1.0, {0.0, 2.0});
  EXPECT_NEAR(iv.eval(e1, make_point(e1, {0.25})), 0.5, 1e-14);
  EXPECT_EQ(iv.eval(e1, make_point(e1, {1.5})), 0.0);
  const Potential tr = Potential::trig(2.0 * kPi, {0.0, 1.0}, {}, 4096);
  const auto s1 = ManifoldModel::sphere(1);
  EXPECT_NEAR(tr.eval(s1, make_point(s1, {1.0})), std::cos(1.0), 1e-6);
}

TEST(Potentials, DescriptorRoundTrip) {
  const auto g = ManifoldModel::euclidean(3);
  for (const char* s :
       {"constant(2)", "power(center=[0,0,0], a=1, cutoff=1)", "log(center=[1,0,0], cutoff=0.5)",
        "truncated(bump(center=[1,0,0], radius=0.5, height=1), ball(center=[0,0,0], r=1))",
        "sum(scaled(-1, constant(1)), positive(constant(0.5)))",
        "truncated(constant(1), union(ball(center=[0,0,0], r=1), ball(center=[2,0,0], r=0.5)))",
        "grid(layout=radial, center=[0,0,0], extent=1, values=[1,0.5,0])"}) {
    const Potential w = parse_potential(g, s);
    EXPECT_EQ(w.describe(), s);
    EXPECT_EQ(parse_potential(g, w.describe()).describe(), w.describe());
  }
  for (const char* s : {"euclidean(2)", "torus(1, 2)", "sphere(2, radius=1.5)", "hyperbolic(3, kappa=0.5)",
                        "conformal_circle(cos=[0], sin=[0.25], mesh=128)"})
    EXPECT_EQ(parse_model(s).describe(), s);
  EXPECT_THROW(parse_potential(g, "power(a=1, bogus=2)"), DescriptorError);
  EXPECT_THROW(parse_potential(g, "constant(1"), DescriptorError);
  EXPECT_THROW(parse_model("klein_bottle(2)"), DescriptorError);
}

TEST(Potentials, ClassicalTestOnPowerFamily) {
  const auto g = ManifoldModel::euclidean(3);
  for (double a : {0.5, 1.0, 1.5}) {
    const KatoVerdict v = classical_kato_test_euclidean(g, Potential::power(origin(g), a, 1.0));
    EXPECT_EQ(v.verdict, Verdict::Kato) << a;
  }
  for (double a : {2.0, 2.5}) {
    const KatoVerdict v = classical_kato_test_euclidean(g, Potential::power(origin(g), a, 1.0));
    EXPECT_NE(v.verdict, Verdict::Kato) << a;
  }
}

TEST(Potentials, ClassicalValueForInverseDistance) {
  // sup_x int_{|x-y|<r} |x-y|^{-1} |y|^{-1} dy is attained at x = 0 and equals 4 pi r for r <= 1
  const auto g = ManifoldModel::euclidean(3);
  const KatoVerdict v = classical_kato_test_euclidean(g, Potential::power(origin(g), 1.0, 1.0));
  for (const auto& e : v.evidence) EXPECT_NEAR(e.value, 4.0 * kPi * e.scale, 1e-6 * 4.0 * kPi * e.scale) << e.scale;
}

TEST(Potentials, MollifyIsCloseAwayFromSingularity) {
  const auto g = ManifoldModel::euclidean(3);
  const Potential w = Potential::power(origin(g), 1.0, 2.0);
  const Potential m = mollify(g, w, 0.1);
  // Newtonian potential: the spherical average of 1/|y| equals 1/|x| outside the ball
  EXPECT_NEAR(m.eval(g, make_point(g, {0.5, 0.0, 0.0})), 2.0, 1e-3);
  EXPECT_LT(m.sup_abs(), 40.0);
  const auto s1 = ManifoldModel::sphere(1);
  const Potential b = Potential::bump(origin(s1), 1.0, 1.0);
  const Potential mb = mollify(s1, b, 0.01);
  EXPECT_NEAR(mb.eval(s1, make_point(s1, {0.3})), b.eval(s1, make_point(s1, {0.3})), 1e-3);
}
