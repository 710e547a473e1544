#include <gtest/gtest.h>

#include <cmath>

#include "katodyn/heat_kernel.hpp"
#include "katodyn/quadrature.hpp"

using namespace katodyn;

namespace {

// Fourier series on a circle of length L.
double circle_fourier(double t, double d, double L) {
  double s = 1.0 / L;
  for (int k = 1; k < 2000; ++k) {
    const double lam = std::pow(2.0 * kPi * k / L, 2);
    const double term = 2.0 / L * std::exp(-lam * t) * std::cos(2.0 * kPi * k * d / L);
    s += term;
    if (std::exp(-lam * t) < 1e-18) break;
  }
  return s;
}

// Legendre series on the unit 2-sphere.
double s2_series(double t, double th) {
  const double x = std::cos(th);
  double p0 = 1.0, p1 = x, s = 1.0 / (4.0 * kPi);
  for (int l = 1; l < 400; ++l) {
    s += (2.0 * l + 1.0) / (4.0 * kPi) * std::exp(-l * (l + 1.0) * t) * p1;
    const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return s;
}

}  // namespace

TEST(HeatKernel, MassIsOne) {
  const std::vector<ManifoldModel> models{ManifoldModel::euclidean(2), ManifoldModel::euclidean(3),
                                          ManifoldModel::torus({1.0}), ManifoldModel::sphere(1),
                                          ManifoldModel::sphere(2), ManifoldModel::sphere(3),
                                          ManifoldModel::hyperbolic(2), ManifoldModel::hyperbolic(3)};
  for (const auto& g : models)
    for (double t : {0.01, 0.1, 1.0}) EXPECT_NEAR(hk_mass(g, t, origin(g)), 1.0, 1e-6) << g.describe() << " t=" << t;
}

TEST(HeatKernel, CircleAgreesWithFourierSeries) {
  const auto g = ManifoldModel::torus({1.0});
  for (double t : {0.001, 0.01, 0.1, 1.0})
    for (double d : {0.0, 0.1, 0.37, 0.5}) {
      const double p = hk_eval(g, t, origin(g), make_point(g, {d})).value;
      EXPECT_NEAR(p, circle_fourier(t, d, 1.0), 1e-10 * std::max(1.0, p)) << t << " " << d;
    }
}

TEST(HeatKernel, SphereTwoAgreesWithLegendreSeries) {
  const auto g = ManifoldModel::sphere(2);
  for (double t : {0.05, 0.2, 1.0})
    for (double th : {0.0, 0.3, 1.5, 3.0}) {
      const double p = hk_eval(g, t, origin(g), make_point(g, {th, 0.0})).value;
      EXPECT_NEAR(p, s2_series(t, th), 1e-9 * std::max(1.0, p)) << t << " " << th;
    }
}

TEST(HeatKernel, HyperbolicThreeClosedForm) {
  const auto g = ManifoldModel::hyperbolic(3, 1.0);
  for (double t : {0.1, 1.0})
    for (double r : {0.2, 1.0, 3.0}) {
      const double want = std::pow(4.0 * kPi * t, -1.5) * r / std::sinh(r) * std::exp(-t - r * r / (4.0 * t));
      const double got = hk_eval(g, t, origin(g), geodesic_point(g, origin(g), r)).value;
      EXPECT_NEAR(got, want, 1e-12 * want);
    }
}

TEST(HeatKernel, ChapmanKolmogorov) {
  for (const auto& g : {ManifoldModel::euclidean(2), ManifoldModel::sphere(1), ManifoldModel::sphere(2),
                        ManifoldModel::hyperbolic(3)}) {
    const Point x = origin(g), y = geodesic_point(g, x, 0.4);
    EXPECT_LT(ck_residual(g, 0.1, 0.2, x, y), 1e-6) << g.describe();
  }
  const auto c = ManifoldModel::conformal_circle({0.0}, {0.3});
  EXPECT_LT(ck_residual(c, 0.1, 0.2, make_point(c, {0.3}), make_point(c, {1.9})), 1e-3);
}

TEST(HeatKernel, SymmetricAndPositive) {
  const auto g = ManifoldModel::conformal_circle({0.0, 0.2}, {0.3});
  const Point x = make_point(g, {0.4}), y = make_point(g, {2.5});
  const double a = hk_eval(g, 0.3, x, y).value, b = hk_eval(g, 0.3, y, x).value;
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a, b, 1e-10 * a);
}

TEST(HeatKernel, RejectsBadTimes) {
  const auto g = ManifoldModel::euclidean(2);
  EXPECT_THROW(hk_eval(g, 0.0, origin(g), origin(g)), InvalidArgument);
  EXPECT_THROW(hk_eval(g, -1.0, origin(g), origin(g)), InvalidArgument);
}

TEST(HeatKernel, EuclideanGaussianBoundFit) {
  const auto g = ManifoldModel::euclidean(3);
  const auto grid = kernel_sample_grid(g, {origin(g)}, 1.0, 3.0);
  const GaussianBoundFit up = gaussian_bound_fit(g, BoundSide::Upper, 1.0, grid, 0.25, 0.0);
  // p = (4 pi t)^{-3/2} e^{-d^2/4t} and mu(B(x, sqrt t)) = 4/3 pi t^{3/2}
  EXPECT_NEAR(up.alpha, 4.0 / 3.0 * kPi * std::pow(4.0 * kPi, -1.5), 1e-9);
  EXPECT_LE(check_gaussian_bound(g, BoundSide::Upper, up.alpha, 0.25, 0.0, grid, VolumeFactor::BallVolume, nullptr),
            1.0 + 1e-12);
}
