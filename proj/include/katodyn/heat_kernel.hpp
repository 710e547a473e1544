#pragma once

// Heat kernels p(t, x, y) of the Laplace-Beltrami operator (generator Delta,
// so the Euclidean kernel is (4 pi t)^{-m/2} e^{-d^2/4t}).
//
//   Euclidean(m)      Gaussian.
//   Torus, Sphere(1)  product of circle kernels: wrapped Gaussian for small
//                     t (2pi/L)^2, Fourier series otherwise.
//   Sphere(2)         Legendre series for t/R^2 >= 1/2; for smaller times the
//                     image-sum integral
//                       e^{t/4} (4 pi t)^{-3/2} sum_n (-1)^n
//                         int_theta^pi (phi + 2 pi n) e^{-(phi+2 pi n)^2/4t} sqrt(2) dphi / sqrt(cos theta - cos phi)
//                     evaluated after the substitution cos(phi/2) = cos(theta/2) cos(a/2).
//   Sphere(3)         wrapped form e^{t} (4 pi t)^{-3/2} sum_n (theta+2 pi n)/sin(theta) e^{-(theta+2 pi n)^2/4t}
//                     for t/R^2 < 1, Chebyshev series otherwise.
//   Hyperbolic(3)     (4 pi t)^{-3/2} (rho/sinh rho) e^{-t - rho^2/4t}.
//   Hyperbolic(2)     sqrt(2) e^{-t/4} (4 pi t)^{-3/2} int_rho^inf s e^{-s^2/4t} / sqrt(cosh s - cosh rho) ds,
//                     with s = rho + v^2.
//   ConformalCircle   finite-difference eigenpairs (spectral.hpp), bilinear in (x, y).
// Radius and curvature enter through p_R(t, d) = R^{-m} p_1(t/R^2, d/R) and
// p_k(t, d) = k^{m/2} p_1(k t, sqrt(k) d).

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "katodyn/error.hpp"
#include "katodyn/geometry.hpp"
#include "katodyn/quadrature.hpp"
#include "katodyn/spectral.hpp"

namespace katodyn {

inline constexpr double kMinTime = 1e-8;

enum class KernelMethod { ClosedForm, Series, Quadrature, Spectral };

inline const char* to_string(KernelMethod m) {
  switch (m) {
    case KernelMethod::ClosedForm: return "closed-form";
    case KernelMethod::Series: return "series";
    case KernelMethod::Quadrature: return "quadrature";
    case KernelMethod::Spectral: return "spectral";
  }
  return "?";
}

struct HeatKernelEval {
  double value = 0.0;
  KernelMethod method = KernelMethod::ClosedForm;
  int order = 0;  // series terms, or mesh size for the spectral method
  double truncation_bound = 0.0;
};

inline void check_time(double t) {
  if (!(t >= kMinTime) || !std::isfinite(t))
    throw InvalidArgument("time must be finite and at least 1e-8 (got " + std::to_string(t) + ")");
}

namespace detail {

inline double gauss_kernel(int m, double t, double d) {
  return std::exp(-d * d / (4.0 * t)) * std::pow(4.0 * kPi * t, -0.5 * m);
}

// Kernel of the circle of circumference L at arc offset d.
inline HeatKernelEval circle_kernel(double t, double d, double L) {
  d = wrap_period(d, L);
  if (d > 0.5 * L) d -= L;
  HeatKernelEval out;
  out.method = KernelMethod::Series;
  const double k1 = 2.0 * kPi / L;
  if (t * k1 * k1 < 2.0) {
    const double norm = 1.0 / std::sqrt(4.0 * kPi * t);
    double sum = std::exp(-d * d / (4.0 * t));
    int n = 1;
    for (;; ++n) {
      const double a = d + n * L, b = d - n * L;
      const double term = std::exp(-a * a / (4.0 * t)) + std::exp(-b * b / (4.0 * t));
      sum += term;
      const double far = std::min(std::abs(a), std::abs(b));
      if (far * far > 8.0 * t && term <= 1e-16 * sum) {
        const double a2 = d + (n + 1) * L, b2 = d - (n + 1) * L;
        out.truncation_bound = 2.0 * norm * (std::exp(-a2 * a2 / (4.0 * t)) + std::exp(-b2 * b2 / (4.0 * t)));
        break;
      }
    }
    out.value = norm * sum;
    out.order = 2 * n + 1;
    return out;
  }
  double sum = 1.0;
  int k = 1;
  for (;; ++k) {
    const double e = std::exp(-k1 * k1 * k * k * t);
    sum += 2.0 * e * std::cos(k1 * k * d);
    if (e < 1e-18) break;
  }
  const double q = std::exp(-k1 * k1 * t * (2 * k + 3));
  out.truncation_bound = 2.0 / L * std::exp(-k1 * k1 * (k + 1) * (k + 1) * t) / (1.0 - q);
  out.value = sum / L;
  out.order = k;
  return out;
}

// Unit round sphere S^2.
inline HeatKernelEval unit_s2(double tau, double th) {
  HeatKernelEval out;
  if (tau >= 0.5) {
    const double x = std::cos(th);
    double p0 = 1.0, p1 = x;
    double sum = 1.0;
    int l = 1;
    for (;; ++l) {
      const double e = std::exp(-l * (l + 1.0) * tau);
      sum += (2 * l + 1) * e * p1;
      if ((2 * l + 1) * e < 1e-18 && l * l * tau > 1.0) break;
      const double p2 = ((2 * l + 1) * x * p1 - l * p0) / (l + 1);
      p0 = p1;
      p1 = p2;
    }
    out.value = sum / (4.0 * kPi);
    out.method = KernelMethod::Series;
    out.order = l;
    out.truncation_bound = std::exp(-l * (l + 1.0) * tau) / (4.0 * kPi * tau);
    return out;
  }
  const double ch = std::cos(0.5 * th), sh = std::sin(0.5 * th);
  auto f = [&](double a) {
    const double sa = std::sin(0.5 * a), ca = std::cos(0.5 * a);
    const double c2 = ch * ca;
    const double s2 = std::sqrt(sh * sh + ch * ch * sa * sa);
    const double phi = 2.0 * std::atan2(s2, c2);
    double sum = 0.0;
    for (int n = -2; n <= 2; ++n) {
      const double u = phi + 2.0 * kPi * n;
      const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
      sum += sgn * u * std::exp(-(u * u - th * th) / (4.0 * tau));
    }
    return sum / s2;
  };
  std::vector<double> br{0.0};
  const double aw = 2.0 * std::sqrt(tau);
  for (double a = aw / 8.0; a < kPi; a *= 2.0) br.push_back(a);
  br.push_back(kPi);
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-300;
  const QuadResult q = integrate(f, br, opt);
  if (!q.finite) throw ConvergenceError("sphere(2) kernel quadrature produced a non-finite value");
  const double pre = std::exp(0.25 * tau - th * th / (4.0 * tau)) * std::pow(4.0 * kPi * tau, -1.5);
  out.value = pre * q.value;
  out.method = KernelMethod::Quadrature;
  out.order = q.evaluations;
  out.truncation_bound = pre * q.error;
  return out;
}

// Unit round sphere S^3.
inline HeatKernelEval unit_s3(double tau, double th) {
  HeatKernelEval out;
  if (tau >= 1.0) {
    const double x = std::cos(th);
    double u0 = 1.0, u1 = 2.0 * x;
    double sum = 1.0;
    int l = 1;
    for (;; ++l) {
      const double e = std::exp(-l * (l + 2.0) * tau);
      sum += (l + 1) * e * u1;
      if ((l + 1.0) * (l + 1.0) * e < 1e-18) break;
      const double u2 = 2.0 * x * u1 - u0;
      u0 = u1;
      u1 = u2;
    }
    out.value = sum / (2.0 * kPi * kPi);
    out.method = KernelMethod::Series;
    out.order = l;
    const double ln = l + 1.0;
    out.truncation_bound = 2.0 * (ln + 1) * (ln + 1) * std::exp(-ln * (ln + 2.0) * tau) / (2.0 * kPi * kPi);
    return out;
  }
  // Image terms paired so that the division by sin(theta) is exact near 0 and pi.
  const double pre = std::exp(tau) * std::pow(4.0 * kPi * tau, -1.5);
  auto pair = [&](double c, double delta) {
    // e^{-(c-delta)^2/4tau} times (cosh z, sinh z / z) weights, z = c delta / 2 tau
    const double E = std::exp(-(c - delta) * (c - delta) / (4.0 * tau));
    const double z = c * delta / (2.0 * tau);
    const double ch = 0.5 * E * (1.0 + std::exp(-2.0 * z));
    const double shc = z > 0 ? E * (-std::expm1(-2.0 * z)) / (2.0 * z) : E;
    return std::make_pair(ch, shc);
  };
  double sum = 0.0;
  int terms = 0;
  if (th <= 0.5 * kPi) {
    const double ratio = th > 0 ? th / std::sin(th) : 1.0;
    sum = ratio * std::exp(-th * th / (4.0 * tau));
    for (int n = 1;; ++n) {
      const double c = 2.0 * kPi * n;
      auto [chs, shc] = pair(c, th);
      const double term = 2.0 * ratio * (chs - c * c / (2.0 * tau) * shc);
      sum += term;
      ++terms;
      if (std::abs(term) <= 1e-17 * std::abs(sum) && (c - th) * (c - th) > 8.0 * tau) break;
    }
  } else {
    const double delta = kPi - th;
    const double ratio = delta > 0 ? delta / std::sin(delta) : 1.0;
    for (int n = 0;; ++n) {
      const double c = (2.0 * n + 1.0) * kPi;
      auto [chs, shc] = pair(c, delta);
      const double term = 2.0 * ratio * (c * c / (2.0 * tau) * shc - chs);
      sum += term;
      ++terms;
      if (std::abs(term) <= 1e-17 * std::abs(sum) && (c - delta) * (c - delta) > 8.0 * tau) break;
    }
  }
  out.value = pre * sum;
  out.method = KernelMethod::Series;
  out.order = terms;
  out.truncation_bound = 1e-16 * std::abs(out.value);
  return out;
}

inline double unit_h3(double tau, double rho) {
  const double ratio = rho > 1e-8 ? rho / std::sinh(rho) : 1.0;
  return std::pow(4.0 * kPi * tau, -1.5) * ratio * std::exp(-tau - rho * rho / (4.0 * tau));
}

inline HeatKernelEval unit_h2(double tau, double rho) {
  auto f = [&](double v) {
    const double v2 = v * v;
    const double s = rho + v2;
    const double y = 0.5 * v2;
    const double q = y > 1e-8 ? std::sinh(y) / y : 1.0;
    const double g = std::exp(-v2 * (2.0 * rho + v2) / (4.0 * tau));
    return 2.0 * s * g / std::sqrt(std::sinh(0.5 * (s + rho)) * q);
  };
  const double big = 46.0 * 4.0 * tau;
  const double vmax = std::sqrt(big / (rho + std::sqrt(rho * rho + big)));
  const double vw = std::min(std::sqrt(2.0 * tau / std::max(rho, 1e-300)), std::pow(4.0 * tau, 0.25));
  std::vector<double> br{0.0};
  for (double v = vw / 8.0; v < vmax; v *= 2.0) br.push_back(v);
  br.push_back(vmax);
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-300;
  const QuadResult q = integrate(f, br, opt);
  if (!q.finite) throw ConvergenceError("hyperbolic(2) kernel quadrature produced a non-finite value");
  const double pre = std::sqrt(2.0) * std::exp(-0.25 * tau - rho * rho / (4.0 * tau)) * std::pow(4.0 * kPi * tau, -1.5);
  HeatKernelEval out;
  out.value = pre * q.value;
  out.method = KernelMethod::Quadrature;
  out.order = q.evaluations;
  out.truncation_bound = pre * q.error;
  return out;
}

}  // namespace detail

// p(t, d) on models whose kernel depends on distance only (everything but
// Torus(m >= 2) and ConformalCircle).
inline HeatKernelEval kernel_at_distance(const ManifoldModel& g, double t, double d) {
  const int m = g.dim();
  switch (g.kind()) {
    case ModelKind::Euclidean: {
      HeatKernelEval e;
      e.value = detail::gauss_kernel(m, t, d);
      return e;
    }
    case ModelKind::Torus:
      require(m == 1, "torus kernel depends on more than the distance in dimension >= 2");
      return detail::circle_kernel(t, d, g.periods()[0]);
    case ModelKind::Sphere: {
      const double R = g.radius();
      if (m == 1) return detail::circle_kernel(t, d, 2.0 * kPi * R);
      const double tau = t / (R * R), th = std::min(d / R, kPi);
      HeatKernelEval e = m == 2 ? detail::unit_s2(tau, th) : detail::unit_s3(tau, th);
      const double sc = std::pow(R, -m);
      e.value *= sc;
      e.truncation_bound *= sc;
      return e;
    }
    case ModelKind::Hyperbolic: {
      const double k = g.kappa(), sk = std::sqrt(k);
      const double sc = std::pow(k, 0.5 * m);
      if (m == 3) {
        HeatKernelEval e;
        e.value = sc * detail::unit_h3(k * t, sk * d);
        return e;
      }
      HeatKernelEval e = detail::unit_h2(k * t, sk * d);
      e.value *= sc;
      e.truncation_bound *= sc;
      return e;
    }
    case ModelKind::ConformalCircle: break;
  }
  throw InvalidArgument("kernel_at_distance: model kernel is not a function of distance");
}

namespace detail {

inline HeatKernelEval conformal_kernel(const ManifoldModel& g, double t, double tx, double ty) {
  const auto eig = conformal_free_eigen(g);
  const CircleMesh& m = eig->mesh;
  const Stencil sx = locate(m, tx), sy = locate(m, ty);
  const int n = m.n;
  const int ix[2] = {sx.i0, sx.i1}, iy[2] = {sy.i0, sy.i1};
  const double wx[2] = {1.0 - sx.a, sx.a}, wy[2] = {1.0 - sy.a, sy.a};
  double value = 0.0, bound = 0.0;
  for (int k = 0; k < n; ++k) {
    const double e = std::exp(-std::max(0.0, eig->lambda(k)) * t);
    if (e == 0.0) break;
    double fx = 0.0, fy = 0.0;
    for (int a = 0; a < 2; ++a) {
      fx += wx[a] * eig->vec(ix[a], k);
      fy += wy[a] * eig->vec(iy[a], k);
    }
    value += e * fx * fy;
    bound += e * std::abs(fx * fy);
  }
  HeatKernelEval out;
  out.method = KernelMethod::Spectral;
  out.order = n;
  out.truncation_bound = 64.0 * std::numeric_limits<double>::epsilon() * bound;
  out.value = std::max(value, 0.0);
  return out;
}

}  // namespace detail

inline HeatKernelEval hk_eval(const ManifoldModel& g, double t, const Point& x, const Point& y) {
  check_time(t);
  check_point(g, x);
  check_point(g, y);
  switch (g.kind()) {
    case ModelKind::Torus: {
      HeatKernelEval out;
      out.method = KernelMethod::Series;
      out.value = 1.0;
      double rel = 0.0;
      for (int i = 0; i < g.dim(); ++i) {
        const HeatKernelEval e = detail::circle_kernel(t, x.c[i] - y.c[i], g.periods()[i]);
        out.value *= e.value;
        out.order = std::max(out.order, e.order);
        rel += e.truncation_bound / e.value;
      }
      out.truncation_bound = rel * out.value;
      return out;
    }
    case ModelKind::ConformalCircle: return detail::conformal_kernel(g, t, x.c[0], y.c[0]);
    default: return kernel_at_distance(g, t, distance(g, x, y));
  }
}

// Radius beyond which the kernel mass is negligible: the Gaussian factor is
// below e^{-40} after paying for the volume growth of the model.
inline double kernel_cutoff_radius(const ManifoldModel& g, double t) {
  double grow = 0.0;
  if (g.kind() == ModelKind::Hyperbolic) grow = (g.dim() - 1) * std::sqrt(g.kappa());
  const double r = 2.0 * t * grow + std::sqrt(4.0 * t * t * grow * grow + 4.0 * t * 40.0);
  return r;
}

namespace detail {

// Integral over the circle of f(arc offset) with breakpoints every sqrt(t).
template <class F>
QuadResult circle_integral(F&& f, double L, double t, double center = 0.0) {
  std::vector<double> br{center - 0.5 * L, center + 0.5 * L};
  const double w = std::sqrt(t);
  for (int j = -12; j <= 12; ++j) {
    const double s = center + j * w;
    if (s > center - 0.5 * L && s < center + 0.5 * L) br.push_back(s);
  }
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-15;
  opt.max_intervals = 2000;
  return integrate(f, br, opt);
}

// int_0^R f(r) dr with breakpoints at multiples of sqrt(t) and the extra points.
template <class F>
QuadResult radial_integral(F&& f, double R, double t, std::vector<double> extra = {}) {
  std::vector<double> br{0.0, R};
  const double w = std::sqrt(t);
  for (int j = 1; j <= 40; ++j)
    if (j * w < R) br.push_back(j * w);
  for (double e : extra)
    if (e > 0 && e < R) br.push_back(e);
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-15;
  opt.max_intervals = 4000;
  return integrate(f, br, opt);
}

}  // namespace detail

// Mean of p(s, x, .) over the geodesic sphere S(c, r), where d(x, c) = rho.
// Defined for the models whose kernel depends on distance only.
inline double sphere_mean(const ManifoldModel& g, double s, double rho, double r) {
  const int m = g.dim();
  if (g.kind() == ModelKind::Torus || (g.kind() == ModelKind::Sphere && m == 1)) {
    require(m == 1, "sphere_mean: torus of dimension >= 2 has no radial kernel");
    const double L = g.kind() == ModelKind::Torus ? g.periods()[0] : 2.0 * kPi * g.radius();
    return 0.5 * (detail::circle_kernel(s, rho - r, L).value + detail::circle_kernel(s, rho + r, L).value);
  }
  if (g.kind() == ModelKind::ConformalCircle) throw InvalidArgument("sphere_mean: not defined on a conformal circle");
  if (rho == 0.0) return kernel_at_distance(g, s, r).value;
  if (r == 0.0) return kernel_at_distance(g, s, rho).value;
  if (g.kind() == ModelKind::Euclidean) {
    if (m == 1) return 0.5 * (detail::gauss_kernel(1, s, rho - r) + detail::gauss_kernel(1, s, rho + r));
    const double dd = (rho - r) * (rho - r);
    if (m == 2) {
      const double z = rho * r / (2.0 * s);
      double i0e;
      if (z <= 500.0) {
        i0e = std::cyl_bessel_i(0.0, z) * std::exp(-z);
      } else {
        const double iz = 1.0 / z;
        i0e = (1.0 + iz / 8.0 + 9.0 * iz * iz / 128.0 + 225.0 * iz * iz * iz / 3072.0) / std::sqrt(2.0 * kPi * z);
      }
      return std::exp(-dd / (4.0 * s)) * i0e / (4.0 * kPi * s);
    }
    if (m == 3)
      return std::pow(4.0 * kPi * s, -1.5) * (s / (rho * r)) * std::exp(-dd / (4.0 * s)) *
             (-std::expm1(-rho * r / s));
  }
  if (g.kind() == ModelKind::Hyperbolic && m == 3) {
    const double k = g.kappa(), sk = std::sqrt(k);
    const double a = sk * rho, b = sk * r, tau = k * s;
    const double v = std::pow(4.0 * kPi * tau, -1.5) * std::exp(-tau) * (tau / (std::sinh(a) * std::sinh(b))) *
                     std::exp(-(a - b) * (a - b) / (4.0 * tau)) * (-std::expm1(-a * b / tau));
    return std::pow(k, 1.5) * v;
  }
  if (g.kind() == ModelKind::Sphere && m == 3) {
    const double R = g.radius();
    const double a = rho / R, b = r / R, tau = s / (R * R);
    if (std::sin(a) < 1e-12 || std::sin(b) < 1e-12) {
      // x or the sphere sits at a pole of the other: every point at one distance
      const double d = std::sin(a) < 1e-12 ? (a < 1.0 ? b : kPi - b) : (b < 1.0 ? a : kPi - a);
      return kernel_at_distance(g, s, d * R).value;
    }
    const double d1 = std::abs(a - b);
    const double d2 = (a + b <= kPi) ? a + b : 2.0 * kPi - a - b;
    // int_{d1}^{d2} sum_n (d + 2 pi n) e^{-(d+2 pi n)^2/4tau} dd, image by image
    double acc = 0.0;
    const int nmax = 2 + static_cast<int>(std::sqrt(4.0 * tau * 45.0) / (2.0 * kPi));
    for (int n = -nmax; n <= nmax; ++n) {
      const double u1 = d1 + 2.0 * kPi * n, u2 = d2 + 2.0 * kPi * n;
      const double e1 = -u1 * u1 / (4.0 * tau), e2 = -u2 * u2 / (4.0 * tau);
      // 2 tau (e^{e1} - e^{e2}) without cancellation
      const double hi = std::max(e1, e2);
      const double diff = std::exp(hi) * (-std::expm1(-std::abs(e1 - e2)));
      acc += 2.0 * tau * (e1 >= e2 ? diff : -diff);
    }
    const double v = std::exp(tau) * std::pow(4.0 * kPi * tau, -1.5) * acc / (2.0 * std::sin(a) * std::sin(b));
    return v / (R * R * R);
  }
  // Numerical angular average: S^2, H^2, Euclidean m >= 4.
  auto dist = [&](double psi) {
    const double sp = std::sin(0.5 * psi);
    switch (g.kind()) {
      case ModelKind::Euclidean: return std::sqrt((rho - r) * (rho - r) + 4.0 * rho * r * sp * sp);
      case ModelKind::Sphere: {
        const double R = g.radius(), a = rho / R, b = r / R;
        const double h0 = std::sin(0.5 * (a - b));
        const double h = std::clamp(h0 * h0 + std::sin(a) * std::sin(b) * sp * sp, 0.0, 1.0);
        return 2.0 * R * std::asin(std::sqrt(h));
      }
      default: {
        const double sk = std::sqrt(g.kappa()), a = sk * rho, b = sk * r;
        const double h0 = std::sinh(0.5 * (a - b));
        return 2.0 / sk * std::asinh(std::sqrt(h0 * h0 + std::sinh(a) * std::sinh(b) * sp * sp));
      }
    }
  };
  auto f = [&](double psi) {
    const double w = m == 2 ? 1.0 : std::pow(std::sin(psi), m - 2);
    return kernel_at_distance(g, s, dist(psi)).value * w;
  };
  std::vector<double> br{0.0, kPi};
  const double pw = std::sqrt(s) / std::sqrt(rho * r);
  for (double p = pw / 4.0; p < kPi; p *= 2.0) br.push_back(p);
  QuadOptions opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-300;
  const QuadResult q = integrate(f, br, opt);
  const double cm = std::sqrt(kPi) * std::tgamma(0.5 * (m - 1)) / std::tgamma(0.5 * m);
  return q.value / cm;
}

// int p(t, x, y) dmu(y).
inline double hk_mass(const ManifoldModel& g, double t, const Point& x) {
  check_time(t);
  check_point(g, x);
  QuadResult q;
  switch (g.kind()) {
    case ModelKind::Torus: {
      double mass = 1.0;
      for (int i = 0; i < g.dim(); ++i) {
        const double L = g.periods()[i];
        auto f = [&](double u) { return detail::circle_kernel(t, u, L).value; };
        QuadResult qi = detail::circle_integral(f, L, t);
        if (!qi.converged) throw ConvergenceError("hk_mass: circle quadrature did not converge");
        mass *= qi.value;
      }
      return mass;
    }
    case ModelKind::ConformalCircle: {
      const auto eig = detail::conformal_free_eigen(g);
      const CircleMesh& m = eig->mesh;
      auto f = [&](double th) {
        return detail::conformal_kernel(g, t, x.c[0], th).value * std::exp(g.conformal().phi(th));
      };
      QuadOptions opt;
      opt.rel_tol = 1e-12;
      opt.abs_tol = 1e-15;
      opt.max_intervals = 20 * m.n;
      std::vector<double> br(m.theta);
      br.push_back(m.period);
      q = integrate(f, br, opt);
      break;
    }
    default: {
      double R = kernel_cutoff_radius(g, t);
      if (g.compact()) R = std::min(R, g.diameter());
      if (g.kind() == ModelKind::Sphere && g.dim() == 1) {
        auto f = [&](double u) { return kernel_at_distance(g, t, std::abs(u)).value; };
        q = detail::circle_integral(f, g.circumference(), t);
        break;
      }
      auto f = [&](double r) { return kernel_at_distance(g, t, r).value * sphere_area(g, x, r); };
      q = detail::radial_integral(f, R, t);
      break;
    }
  }
  if (!q.converged || !q.finite) throw ConvergenceError("hk_mass: quadrature did not converge");
  return q.value;
}

// |int p(t,x,z) p(s,z,y) dmu(z) - p(t+s,x,y)| / p(t+s,x,y).
inline double ck_residual(const ManifoldModel& g, double t, double s, const Point& x, const Point& y) {
  check_time(t);
  check_time(s);
  check_point(g, x);
  check_point(g, y);
  const double target = hk_eval(g, t + s, x, y).value;
  double conv = 0.0;
  switch (g.kind()) {
    case ModelKind::Torus: {
      conv = 1.0;
      for (int i = 0; i < g.dim(); ++i) {
        const double L = g.periods()[i];
        const double dxy = x.c[i] - y.c[i];
        auto f = [&](double u) {
          return detail::circle_kernel(t, u, L).value * detail::circle_kernel(s, dxy - u, L).value;
        };
        QuadResult q = detail::circle_integral(f, L, std::min(t, s));
        if (!q.converged) throw ConvergenceError("ck_residual: quadrature did not converge");
        conv *= q.value;
      }
      break;
    }
    case ModelKind::ConformalCircle: {
      const auto eig = detail::conformal_free_eigen(g);
      const CircleMesh& m = eig->mesh;
      auto f = [&](double th) {
        return detail::conformal_kernel(g, t, x.c[0], th).value * detail::conformal_kernel(g, s, th, y.c[0]).value *
               std::exp(g.conformal().phi(th));
      };
      QuadOptions opt;
      opt.rel_tol = 1e-12;
      opt.abs_tol = 1e-15;
      opt.max_intervals = 20 * m.n;
      std::vector<double> br(m.theta);
      br.push_back(m.period);
      QuadResult q = integrate(f, br, opt);
      if (!q.converged) throw ConvergenceError("ck_residual: quadrature did not converge");
      conv = q.value;
      break;
    }
    default: {
      if (g.kind() == ModelKind::Sphere && g.dim() == 1) {
        const double L = g.circumference();
        const double dxy = g.radius() * (x.c[0] - y.c[0]);
        auto f = [&](double u) {
          return detail::circle_kernel(t, u, L).value * detail::circle_kernel(s, dxy - u, L).value;
        };
        QuadResult q = detail::circle_integral(f, L, std::min(t, s));
        if (!q.converged) throw ConvergenceError("ck_residual: quadrature did not converge");
        conv = q.value;
        break;
      }
      const double rho = distance(g, x, y);
      double R = kernel_cutoff_radius(g, t);
      if (g.compact()) R = std::min(R, g.diameter());
      auto f = [&](double r) {
        return kernel_at_distance(g, t, r).value * sphere_area(g, x, r) * sphere_mean(g, s, rho, r);
      };
      QuadResult q = detail::radial_integral(f, R, std::min(t, s), {rho});
      if (!q.converged) throw ConvergenceError("ck_residual: quadrature did not converge");
      conv = q.value;
      break;
    }
  }
  return std::abs(conv - target) / target;
}

// ---------------------------------------------------------------------------
// Gaussian bound constants.

enum class BoundSide { Upper, Lower };
// Volume factor in the bound: mu(x, sqrt t)^{-1}, or t^{-m/2}.
enum class VolumeFactor { BallVolume, PowerLaw };

struct KernelSample {
  double t = 0.0;
  Point x, y;
};

struct GaussianBoundFit {
  BoundSide side = BoundSide::Upper;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  double T = 0.0;
  VolumeFactor factor = VolumeFactor::BallVolume;
  double worst_ratio = 0.0;  // max over the grid of p / bound (upper) or bound / p (lower)
  KernelSample worst{};
  std::size_t samples = 0;
};

namespace detail {

inline double gaussian_shape(const ManifoldModel& g, BoundSide side, double beta, double gamma, VolumeFactor f,
                             const KernelSample& s) {
  const double d = distance(g, s.x, s.y);
  const double vol = f == VolumeFactor::BallVolume ? 1.0 / ball_volume(g, s.x, std::sqrt(s.t))
                                                   : std::pow(s.t, -0.5 * g.dim());
  const double time = side == BoundSide::Upper ? std::exp(gamma * s.t) : std::exp(-gamma * s.t);
  return vol * std::exp(-beta * d * d / s.t) * time;
}

// Samples where either side is subnormal carry no usable ratio.
inline bool underflows(double p, double b) {
  return std::abs(p) < std::numeric_limits<double>::min() || std::abs(b) < std::numeric_limits<double>::min();
}

}  // namespace detail

// Worst ratio of a given bound on the grid (<= 1 iff the bound holds).
inline double check_gaussian_bound(const ManifoldModel& g, BoundSide side, double alpha, double beta, double gamma,
                                   const std::vector<KernelSample>& grid, VolumeFactor f = VolumeFactor::BallVolume,
                                   KernelSample* worst = nullptr) {
  require(!grid.empty(), "gaussian bound: empty grid");
  double w = -kInf;
  for (const auto& s : grid) {
    const double p = hk_eval(g, s.t, s.x, s.y).value;
    const double b = alpha * detail::gaussian_shape(g, side, beta, gamma, f, s);
    if (detail::underflows(p, b)) continue;
    const double r = side == BoundSide::Upper ? p / b : b / p;
    if (r > w || std::isnan(r)) {
      w = std::isnan(r) ? kInf : r;
      if (worst) *worst = s;
    }
  }
  return w;
}

// Fit alpha for fixed (beta, gamma): the smallest alpha for an upper bound,
// the largest for a lower bound, over the samples with t in (0, T].
inline GaussianBoundFit gaussian_bound_fit(const ManifoldModel& g, BoundSide side, double T,
                                           const std::vector<KernelSample>& grid, double beta, double gamma,
                                           VolumeFactor f = VolumeFactor::BallVolume) {
  require(T > 0, "gaussian_bound_fit: window must be (0, T] with T > 0");
  require(beta > 0 && gamma >= 0, "gaussian_bound_fit: need beta > 0 and gamma >= 0");
  GaussianBoundFit fit;
  fit.side = side;
  fit.beta = beta;
  fit.gamma = gamma;
  fit.T = T;
  fit.factor = f;
  double best = side == BoundSide::Upper ? 0.0 : kInf;
  for (const auto& s : grid) {
    if (!(s.t > 0 && s.t <= T)) continue;
    const double p = hk_eval(g, s.t, s.x, s.y).value;
    const double shape = detail::gaussian_shape(g, side, beta, gamma, f, s);
    if (detail::underflows(p, shape)) continue;
    const double ratio = p / shape;
    ++fit.samples;
    if (side == BoundSide::Upper ? ratio > best : ratio < best) {
      best = ratio;
      fit.worst = s;
    }
  }
  require(fit.samples > 0, "gaussian_bound_fit: no grid samples inside the window");
  if (!std::isfinite(best) || !(best > 0) || std::isnan(best))
    throw ConvergenceError("gaussian_bound_fit: no finite positive constant fits the grid");
  fit.alpha = best;
  fit.worst_ratio = check_gaussian_bound(g, side, fit.alpha, beta, gamma, grid, f, &fit.worst);
  return fit;
}

// Samples (t, x0, y) with t log-spaced in [T/1000, T] and y at distances
// spread over [0, radius] from each x0.
inline std::vector<KernelSample> kernel_sample_grid(const ManifoldModel& g, const std::vector<Point>& centers,
                                                    double T, double radius, int nt = 8, int nd = 8) {
  std::vector<KernelSample> out;
  for (const auto& x : centers) {
    for (int i = 0; i < nt; ++i) {
      const double t = T * std::pow(1e-3, 1.0 - static_cast<double>(i) / std::max(1, nt - 1));
      for (int j = 0; j < nd; ++j) {
        const double d = radius * j / std::max(1, nd - 1);
        out.push_back({t, x, geodesic_point(g, x, d)});
      }
    }
  }
  return out;
}

}  // namespace katodyn
