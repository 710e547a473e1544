#pragma once

// Model manifolds with exact metric, volume and curvature data.
//
// Charts (Point::c):
//   Euclidean(m)        Cartesian coordinates.
//   Torus(L_1..L_m)     x_i in [0, L_i).
//   Sphere(1, R)        angle theta in [0, 2pi).
//   Sphere(2, R)        (theta in [0, pi], phi in [0, 2pi)); phi = 0 at the poles.
//   Sphere(3, R)        (chi, theta in [0, pi], phi in [0, 2pi)); degenerate angles set to 0.
//   Hyperbolic(m, k)    spatial part x of the hyperboloid point (x_0, x),
//                       x_0 = sqrt(1/k + |x|^2), Minkowski form -x_0 y_0 + x.y.
//   ConformalCircle     theta in [0, 2pi), metric e^{2 phi(theta)} dtheta^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "katodyn/error.hpp"
#include "katodyn/quadrature.hpp"

namespace katodyn {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr int kMaxDim = 8;

enum class ModelKind { Euclidean, Torus, Sphere, Hyperbolic, ConformalCircle };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Euclidean: return "euclidean";
    case ModelKind::Torus: return "torus";
    case ModelKind::Sphere: return "sphere";
    case ModelKind::Hyperbolic: return "hyperbolic";
    case ModelKind::ConformalCircle: return "conformal_circle";
  }
  return "?";
}

struct Point {
  ModelKind kind = ModelKind::Euclidean;
  int dim = 0;
  std::array<double, kMaxDim> c{};

  double operator[](int i) const { return c[i]; }
  std::vector<double> coords() const { return {c.begin(), c.begin() + dim}; }
  bool operator==(const Point& o) const {
    if (kind != o.kind || dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (c[i] != o.c[i]) return false;
    return true;
  }
};

inline double wrap_period(double x, double L) {
  double r = std::fmod(x, L);
  if (r < 0) r += L;
  if (r >= L) r = 0.0;
  return r;
}

namespace detail {

// Periodic arc length data for ConformalCircle: e^{phi} expanded in a
// trigonometric series from a fixed 256-point rule, integrated termwise.
struct ConformalData {
  std::vector<double> phi_cos, phi_sin;  // phi = sum_k phi_cos[k] cos k th + phi_sin[k] sin k th
  double mean = 0.0;                     // constant term of e^{phi}
  std::vector<double> ec, es;            // k >= 1 terms of e^{phi}
  double length = 0.0;                   // g-length of the circle

  double phi(double th) const {
    double v = 0.0;
    for (std::size_t k = 0; k < phi_cos.size(); ++k) v += phi_cos[k] * std::cos(k * th);
    for (std::size_t k = 1; k < phi_sin.size(); ++k) v += phi_sin[k] * std::sin(k * th);
    return v;
  }
  double dphi(double th) const {
    double v = 0.0;
    for (std::size_t k = 1; k < phi_cos.size(); ++k) v -= k * phi_cos[k] * std::sin(k * th);
    for (std::size_t k = 1; k < phi_sin.size(); ++k) v += k * phi_sin[k] * std::cos(k * th);
    return v;
  }
  // Arc length from 0 to th (th in [0, 2pi]).
  double arclength(double th) const {
    double v = mean * th;
    for (std::size_t k = 1; k < ec.size(); ++k)
      v += (ec[k] * std::sin(k * th) + es[k] * (1.0 - std::cos(k * th))) / static_cast<double>(k);
    return v;
  }
  // Inverse of arclength on [0, length].
  double angle_at(double s) const {
    s = wrap_period(s, length);
    double th = 2.0 * kPi * s / length;
    for (int it = 0; it < 60; ++it) {
      const double f = arclength(th) - s;
      const double step = f / std::exp(phi(th));
      th -= step;
      if (std::abs(step) < 1e-15) break;
    }
    return th;
  }

  static ConformalData build(std::vector<double> cc, std::vector<double> ss) {
    ConformalData d;
    if (cc.empty()) cc.push_back(0.0);
    if (ss.empty()) ss.push_back(0.0);
    d.phi_cos = std::move(cc);
    d.phi_sin = std::move(ss);
    constexpr int n = 256;
    std::vector<double> vals(n);
    for (int j = 0; j < n; ++j) vals[j] = std::exp(d.phi(2.0 * kPi * j / n));
    const int kmax = n / 2 - 1;
    d.ec.assign(kmax + 1, 0.0);
    d.es.assign(kmax + 1, 0.0);
    double m = 0.0;
    for (int j = 0; j < n; ++j) m += vals[j];
    d.mean = m / n;
    for (int k = 1; k <= kmax; ++k) {
      double a = 0.0, b = 0.0;
      for (int j = 0; j < n; ++j) {
        const double th = 2.0 * kPi * j / n;
        a += vals[j] * std::cos(k * th);
        b += vals[j] * std::sin(k * th);
      }
      d.ec[k] = 2.0 * a / n;
      d.es[k] = 2.0 * b / n;
    }
    d.length = 2.0 * kPi * d.mean;
    return d;
  }
};

}  // namespace detail

class ManifoldModel {
 public:
  static ManifoldModel euclidean(int m) {
    require(m >= 1 && m <= kMaxDim, "euclidean: dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    ManifoldModel g(ModelKind::Euclidean, m);
    return g;
  }
  static ManifoldModel torus(std::vector<double> periods) {
    require(!periods.empty() && static_cast<int>(periods.size()) <= kMaxDim, "torus: bad dimension");
    for (double L : periods) require(L > 0 && std::isfinite(L), "torus: periods must be positive");
    ManifoldModel g(ModelKind::Torus, static_cast<int>(periods.size()));
    g.periods_ = std::move(periods);
    return g;
  }
  static ManifoldModel sphere(int m, double radius = 1.0) {
    require(m >= 1 && m <= 3, "sphere: dimension must be 1, 2 or 3");
    require(radius > 0 && std::isfinite(radius), "sphere: radius must be positive");
    ManifoldModel g(ModelKind::Sphere, m);
    g.radius_ = radius;
    return g;
  }
  static ManifoldModel hyperbolic(int m, double kappa = 1.0) {
    require(m == 2 || m == 3, "hyperbolic: dimension must be 2 or 3");
    require(kappa > 0 && std::isfinite(kappa), "hyperbolic: curvature scale must be positive");
    ManifoldModel g(ModelKind::Hyperbolic, m);
    g.kappa_ = kappa;
    return g;
  }
  // phi(theta) = sum_k cos_coef[k] cos(k theta) + sum_{k>=1} sin_coef[k] sin(k theta).
  // `mesh` is the finite-difference mesh used by the spectral heat kernel.
  static ManifoldModel conformal_circle(std::vector<double> cos_coef, std::vector<double> sin_coef = {},
                                        int mesh = 256) {
    for (double v : cos_coef) require(std::isfinite(v), "conformal_circle: coefficients must be finite");
    for (double v : sin_coef) require(std::isfinite(v), "conformal_circle: coefficients must be finite");
    require(mesh >= 16, "conformal_circle: mesh must be at least 16");
    ManifoldModel g(ModelKind::ConformalCircle, 1);
    g.conf_ = std::make_shared<const detail::ConformalData>(
        detail::ConformalData::build(std::move(cos_coef), std::move(sin_coef)));
    g.mesh_ = mesh;
    return g;
  }

  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double radius() const { return radius_; }
  double kappa() const { return kappa_; }
  const std::vector<double>& periods() const { return periods_; }
  int mesh() const { return mesh_; }
  const detail::ConformalData& conformal() const { return *conf_; }

  bool compact() const {
    return kind_ == ModelKind::Torus || kind_ == ModelKind::Sphere || kind_ == ModelKind::ConformalCircle;
  }
  bool homogeneous() const { return kind_ != ModelKind::ConformalCircle; }
  // Circle-like 1-D compact models share the periodic machinery.
  bool is_circle() const { return compact() && dim_ == 1; }
  // Length of a 1-D compact model.
  double circumference() const {
    switch (kind_) {
      case ModelKind::Torus: return periods_[0];
      case ModelKind::Sphere: return 2.0 * kPi * radius_;
      case ModelKind::ConformalCircle: return conf_->length;
      default: return kInf;
    }
  }
  // Period of the chart coordinate of a 1-D compact model.
  double chart_period() const {
    if (kind_ == ModelKind::Torus) return periods_[0];
    return 2.0 * kPi;
  }

  double total_volume() const {
    switch (kind_) {
      case ModelKind::Torus: {
        double v = 1.0;
        for (double L : periods_) v *= L;
        return v;
      }
      case ModelKind::Sphere: {
        const double R = radius_;
        if (dim_ == 1) return 2.0 * kPi * R;
        if (dim_ == 2) return 4.0 * kPi * R * R;
        return 2.0 * kPi * kPi * R * R * R;
      }
      case ModelKind::ConformalCircle: return conf_->length;
      default: return kInf;
    }
  }

  double diameter() const {
    switch (kind_) {
      case ModelKind::Torus: {
        double s = 0.0;
        for (double L : periods_) s += 0.25 * L * L;
        return std::sqrt(s);
      }
      case ModelKind::Sphere: return kPi * radius_;
      case ModelKind::ConformalCircle: return 0.5 * conf_->length;
      default: return kInf;
    }
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case ModelKind::Euclidean: os << "euclidean(" << dim_ << ")"; break;
      case ModelKind::Torus:
        os << "torus(";
        for (std::size_t i = 0; i < periods_.size(); ++i) os << (i ? ", " : "") << periods_[i];
        os << ")";
        break;
      case ModelKind::Sphere: os << "sphere(" << dim_ << ", radius=" << radius_ << ")"; break;
      case ModelKind::Hyperbolic: os << "hyperbolic(" << dim_ << ", kappa=" << kappa_ << ")"; break;
      case ModelKind::ConformalCircle: {
        os << "conformal_circle(cos=[";
        for (std::size_t i = 0; i < conf_->phi_cos.size(); ++i) os << (i ? ", " : "") << conf_->phi_cos[i];
        os << "], sin=[";
        for (std::size_t i = 0; i < conf_->phi_sin.size(); ++i) os << (i ? ", " : "") << conf_->phi_sin[i];
        os << "], mesh=" << mesh_ << ")";
        break;
      }
    }
    return os.str();
  }

 private:
  ManifoldModel(ModelKind k, int m) : kind_(k), dim_(m) {}
  ModelKind kind_;
  int dim_;
  double radius_ = 1.0;
  double kappa_ = 1.0;
  std::vector<double> periods_;
  std::shared_ptr<const detail::ConformalData> conf_;
  int mesh_ = 256;
};

inline void check_point(const ManifoldModel& g, const Point& x) {
  if (x.kind != g.kind() || x.dim != g.dim())
    throw InvalidArgument(std::string("point does not belong to model ") + g.describe());
}

// Unit vector in R^{m+1} for a sphere point.
inline std::array<double, 4> sphere_embed(const Point& p) {
  std::array<double, 4> u{};
  if (p.dim == 1) {
    u[0] = std::cos(p.c[0]);
    u[1] = std::sin(p.c[0]);
  } else if (p.dim == 2) {
    const double st = std::sin(p.c[0]);
    u[0] = st * std::cos(p.c[1]);
    u[1] = st * std::sin(p.c[1]);
    u[2] = std::cos(p.c[0]);
  } else {
    const double sc = std::sin(p.c[0]), st = std::sin(p.c[1]);
    u[0] = sc * st * std::cos(p.c[2]);
    u[1] = sc * st * std::sin(p.c[2]);
    u[2] = sc * std::cos(p.c[1]);
    u[3] = std::cos(p.c[0]);
  }
  return u;
}

inline double normalized_angle(double phi) {
  double a = std::atan2(std::sin(phi), std::cos(phi));
  if (a < 0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

// Inverse of sphere_embed; u need not be normalized.
inline Point sphere_point_from_embedded(int m, const std::array<double, 4>& u) {
  Point p;
  p.kind = ModelKind::Sphere;
  p.dim = m;
  if (m == 1) {
    p.c[0] = normalized_angle(std::atan2(u[1], u[0]));
  } else if (m == 2) {
    const double rxy = std::hypot(u[0], u[1]);
    p.c[0] = std::atan2(rxy, u[2]);
    p.c[1] = rxy > 0 ? normalized_angle(std::atan2(u[1], u[0])) : 0.0;
    if (p.c[0] == 0.0 || p.c[0] == kPi) p.c[1] = 0.0;
  } else {
    const double rxy = std::hypot(u[0], u[1]);
    const double rxyz = std::hypot(rxy, u[2]);
    p.c[0] = std::atan2(rxyz, u[3]);
    if (rxyz > 0) {
      p.c[1] = std::atan2(rxy, u[2]);
      p.c[2] = rxy > 0 ? normalized_angle(std::atan2(u[1], u[0])) : 0.0;
      if (p.c[1] == 0.0 || p.c[1] == kPi) p.c[2] = 0.0;
    }
  }
  return p;
}

inline double hyperboloid_x0(const ManifoldModel& g, const Point& p) {
  double s = 1.0 / g.kappa();
  for (int i = 0; i < p.dim; ++i) s += p.c[i] * p.c[i];
  return std::sqrt(s);
}

// Build a point from chart coordinates, normalizing to the canonical chart.
inline Point make_point(const ManifoldModel& g, const std::vector<double>& coords) {
  if (static_cast<int>(coords.size()) != g.dim())
    throw InvalidArgument("point has " + std::to_string(coords.size()) + " coordinates, model " + g.describe() +
                          " needs " + std::to_string(g.dim()));
  for (double v : coords) require(std::isfinite(v), "point coordinates must be finite");
  Point p;
  p.kind = g.kind();
  p.dim = g.dim();
  for (int i = 0; i < p.dim; ++i) p.c[i] = coords[i];
  switch (g.kind()) {
    case ModelKind::Torus:
      for (int i = 0; i < p.dim; ++i) p.c[i] = wrap_period(p.c[i], g.periods()[i]);
      break;
    case ModelKind::Sphere:
      if (g.dim() == 1) p.c[0] = wrap_period(p.c[0], 2.0 * kPi);
      else p = sphere_point_from_embedded(g.dim(), sphere_embed(p));
      break;
    case ModelKind::ConformalCircle: p.c[0] = wrap_period(p.c[0], 2.0 * kPi); break;
    default: break;
  }
  return p;
}

inline Point make_point(const ManifoldModel& g, std::initializer_list<double> coords) {
  return make_point(g, std::vector<double>(coords));
}

// A reference point: the origin of the chart (north pole chi = 0 for Sphere(3)).
inline Point origin(const ManifoldModel& g) { return make_point(g, std::vector<double>(g.dim(), 0.0)); }

namespace detail {

inline double sphere_unit_distance(const std::array<double, 4>& u, const std::array<double, 4>& v) {
  double dm = 0.0, dp = 0.0;
  for (int i = 0; i < 4; ++i) {
    dm += (u[i] - v[i]) * (u[i] - v[i]);
    dp += (u[i] + v[i]) * (u[i] + v[i]);
  }
  return 2.0 * std::atan2(std::sqrt(dm), std::sqrt(dp));
}

inline double circle_chart_distance(double a, double b, double period) {
  double d = std::abs(a - b);
  d = std::fmod(d, period);
  return std::min(d, period - d);
}

}  // namespace detail

// Geodesic distance.
inline double distance(const ManifoldModel& g, const Point& x, const Point& y) {
  check_point(g, x);
  check_point(g, y);
  switch (g.kind()) {
    case ModelKind::Euclidean: {
      double s = 0.0;
      for (int i = 0; i < x.dim; ++i) s += (x.c[i] - y.c[i]) * (x.c[i] - y.c[i]);
      return std::sqrt(s);
    }
    case ModelKind::Torus: {
      double s = 0.0;
      for (int i = 0; i < x.dim; ++i) {
        const double d = detail::circle_chart_distance(x.c[i], y.c[i], g.periods()[i]);
        s += d * d;
      }
      return std::sqrt(s);
    }
    case ModelKind::Sphere:
      if (g.dim() == 1) return g.radius() * detail::circle_chart_distance(x.c[0], y.c[0], 2.0 * kPi);
      return g.radius() * detail::sphere_unit_distance(sphere_embed(x), sphere_embed(y));
    case ModelKind::Hyperbolic: {
      // Minkowski chord: |x - y|^2 - (x0 - y0)^2, with x0 - y0 formed without cancellation.
      double s = 0.0, nx = 0.0, ny = 0.0;
      for (int i = 0; i < x.dim; ++i) {
        s += (x.c[i] - y.c[i]) * (x.c[i] - y.c[i]);
        nx += x.c[i] * x.c[i];
        ny += y.c[i] * y.c[i];
      }
      const double x0 = hyperboloid_x0(g, x), y0 = hyperboloid_x0(g, y);
      const double d0 = (nx - ny) / (x0 + y0);
      const double chord = std::sqrt(std::max(0.0, s - d0 * d0));
      const double sk = std::sqrt(g.kappa());
      return 2.0 / sk * std::asinh(0.5 * sk * chord);
    }
    case ModelKind::ConformalCircle: {
      const auto& cd = g.conformal();
      const double a = cd.arclength(x.c[0]), b = cd.arclength(y.c[0]);
      double l = std::abs(a - b);
      return std::min(l, cd.length - l);
    }
  }
  return 0.0;
}

// Volume of the unit ball in R^m.
inline double unit_ball_volume(int m) { return std::pow(kPi, 0.5 * m) / std::tgamma(0.5 * m + 1.0); }
// Area of the unit sphere S^{m-1} in R^m.
inline double unit_sphere_area(int m) { return 2.0 * std::pow(kPi, 0.5 * m) / std::tgamma(0.5 * m); }

namespace detail {

// Volume of {y in R^m : |y| <= r, |y_i| <= h_i}.
inline double ball_box_volume(double r, const double* h, int m) {
  if (r <= 0.0) return 0.0;
  if (m == 1) return 2.0 * std::min(r, h[0]);
  double hmin = h[0];
  double hsq = 0.0;
  for (int i = 0; i < m; ++i) {
    hmin = std::min(hmin, h[i]);
    hsq += h[i] * h[i];
  }
  if (r <= hmin) return unit_ball_volume(m) * std::pow(r, m);
  if (r * r >= hsq) {
    double v = 1.0;
    for (int i = 0; i < m; ++i) v *= 2.0 * h[i];
    return v;
  }
  const double top = std::min(r, h[0]);
  auto f = [&](double y) { return ball_box_volume(std::sqrt(std::max(0.0, r * r - y * y)), h + 1, m - 1); };
  std::vector<double> br{0.0, top};
  for (int i = 1; i < m; ++i) {
    const double y = std::sqrt(std::max(0.0, r * r - h[i] * h[i]));
    if (y > 0.0 && y < top) br.push_back(y);
  }
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-15;
  return 2.0 * integrate(f, br, opt).value;
}

}  // namespace detail

// Area of the geodesic sphere of radius r (derivative of ball_volume in r).
inline double sphere_area(const ManifoldModel& g, const Point& x, double r) {
  check_point(g, x);
  require(r >= 0, "sphere_area: radius must be nonnegative");
  const int m = g.dim();
  switch (g.kind()) {
    case ModelKind::Euclidean: return m == 1 ? 2.0 : unit_sphere_area(m) * std::pow(r, m - 1);
    case ModelKind::Sphere: {
      const double R = g.radius();
      if (r >= kPi * R) return 0.0;
      if (m == 1) return 2.0;
      if (m == 2) return 2.0 * kPi * R * std::sin(r / R);
      const double s = std::sin(r / R);
      return 4.0 * kPi * R * R * s * s;
    }
    case ModelKind::Hyperbolic: {
      const double sk = std::sqrt(g.kappa());
      if (m == 2) return 2.0 * kPi * std::sinh(sk * r) / sk;
      const double s = std::sinh(sk * r) / sk;
      return 4.0 * kPi * s * s;
    }
    case ModelKind::ConformalCircle: return r < 0.5 * g.conformal().length ? 2.0 : 0.0;
    case ModelKind::Torus: {
      std::array<double, kMaxDim> h{};
      double hmin = kInf;
      for (int i = 0; i < m; ++i) {
        h[i] = 0.5 * g.periods()[i];
        hmin = std::min(hmin, h[i]);
      }
      if (m == 1) return r < h[0] ? 2.0 : 0.0;
      if (r <= hmin) return unit_sphere_area(m) * std::pow(r, m - 1);
      const double dr = 1e-6 * std::max(r, 1e-3);
      return (detail::ball_box_volume(r + dr, h.data(), m) - detail::ball_box_volume(r - dr, h.data(), m)) /
             (2.0 * dr);
    }
  }
  return 0.0;
}

// mu(B(x, r)).
inline double ball_volume(const ManifoldModel& g, const Point& x, double r) {
  check_point(g, x);
  if (!(r >= 0)) throw InvalidArgument("ball_volume: radius must be nonnegative");
  const int m = g.dim();
  switch (g.kind()) {
    case ModelKind::Euclidean: return unit_ball_volume(m) * std::pow(r, m);
    case ModelKind::Sphere: {
      const double R = g.radius();
      const double rho = std::min(r / R, kPi);
      if (m == 1) return 2.0 * R * rho;
      if (m == 2) return 2.0 * kPi * R * R * (1.0 - std::cos(rho));
      return 2.0 * kPi * R * R * R * (rho - std::sin(rho) * std::cos(rho));
    }
    case ModelKind::Hyperbolic: {
      const double k = g.kappa(), sk = std::sqrt(k);
      const double rho = sk * r;
      if (m == 2) return 2.0 * kPi * 2.0 * std::sinh(0.5 * rho) * std::sinh(0.5 * rho) / k;
      return kPi * (std::sinh(2.0 * rho) - 2.0 * rho) / (k * sk);
    }
    case ModelKind::ConformalCircle: return std::min(2.0 * r, g.conformal().length);
    case ModelKind::Torus: {
      std::array<double, kMaxDim> h{};
      for (int i = 0; i < m; ++i) h[i] = 0.5 * g.periods()[i];
      return detail::ball_box_volume(r, h.data(), m);
    }
  }
  return 0.0;
}

// Smallest eigenvalue of the Ricci tensor.
inline double ricci_lower(const ManifoldModel& g, const Point& x) {
  check_point(g, x);
  switch (g.kind()) {
    case ModelKind::Sphere: return (g.dim() - 1) / (g.radius() * g.radius());
    case ModelKind::Hyperbolic: return -(g.dim() - 1) * g.kappa();
    default: return 0.0;
  }
}

inline double ricci_negative_part(const ManifoldModel& g, const Point& x) {
  return std::max(0.0, -ricci_lower(g, x));
}

inline double injectivity_radius(const ManifoldModel& g, const Point& x) {
  check_point(g, x);
  switch (g.kind()) {
    case ModelKind::Sphere: return kPi * g.radius();
    case ModelKind::Torus: return 0.5 * *std::min_element(g.periods().begin(), g.periods().end());
    case ModelKind::ConformalCircle: return 0.5 * g.conformal().length;
    default: return kInf;
  }
}

// ---------------------------------------------------------------------------
// Regions (closed) and open domains.

struct Ball {
  Point center;
  double radius = 0.0;
};

class Region {
 public:
  static Region whole() { return Region(); }
  static Region ball(const Point& c, double r) {
    require(r >= 0 && std::isfinite(r), "region: ball radius must be finite and nonnegative");
    Region a;
    a.whole_ = false;
    a.balls_.push_back({c, r});
    return a;
  }
  static Region union_of(std::vector<Ball> balls) {
    require(!balls.empty(), "region: union needs at least one ball");
    for (const auto& b : balls) require(b.radius >= 0 && std::isfinite(b.radius), "region: bad radius");
    Region a;
    a.whole_ = false;
    a.balls_ = std::move(balls);
    return a;
  }

  bool is_whole() const { return whole_; }
  const std::vector<Ball>& balls() const { return balls_; }
  bool contains(const ManifoldModel& g, const Point& x) const {
    if (whole_) return true;
    for (const auto& b : balls_)
      if (distance(g, b.center, x) <= b.radius) return true;
    return false;
  }
  // Distance-to-region lower bound used to skip far computations (0 inside).
  double distance_from(const ManifoldModel& g, const Point& x) const {
    if (whole_) return 0.0;
    double d = kInf;
    for (const auto& b : balls_) d = std::min(d, std::max(0.0, distance(g, b.center, x) - b.radius));
    return d;
  }
  bool single_ball() const { return !whole_ && balls_.size() == 1; }

 private:
  Region() = default;
  bool whole_ = true;
  std::vector<Ball> balls_;
};

// Open set used for exit times: an open ball, or the whole manifold.
class Domain {
 public:
  static Domain whole() { return Domain(); }
  static Domain open_ball(const Point& c, double r) {
    require(r > 0, "domain: open ball radius must be positive");
    Domain d;
    d.whole_ = false;
    d.ball_ = {c, r};
    return d;
  }
  bool is_whole() const { return whole_; }
  const Ball& ball() const { return ball_; }
  bool contains(const ManifoldModel& g, const Point& x) const {
    return whole_ || distance(g, ball_.center, x) < ball_.radius;
  }
  Region closure() const { return whole_ ? Region::whole() : Region::ball(ball_.center, ball_.radius); }

 private:
  Domain() = default;
  bool whole_ = true;
  Ball ball_{};
};

// ---------------------------------------------------------------------------
// Exponential map, and geodesic shooting used as an independent check.

// exp_x(r * v) for a unit vector v given in the canonical frame of the
// embedding (Euclidean/Torus: chart axes; Sphere/Hyperbolic: ambient vector
// tangent at x, not necessarily normalized, will be projected and normalized).
inline Point exp_map(const ManifoldModel& g, const Point& x, const std::vector<double>& v, double r) {
  check_point(g, x);
  switch (g.kind()) {
    case ModelKind::Euclidean:
    case ModelKind::Torus: {
      double n = 0.0;
      for (int i = 0; i < g.dim(); ++i) n += v[i] * v[i];
      n = std::sqrt(n);
      std::vector<double> y(g.dim());
      for (int i = 0; i < g.dim(); ++i) y[i] = x.c[i] + r * v[i] / n;
      return make_point(g, y);
    }
    case ModelKind::ConformalCircle: {
      const auto& cd = g.conformal();
      const double s = cd.arclength(x.c[0]) + (v[0] >= 0 ? r : -r);
      return make_point(g, {cd.angle_at(s)});
    }
    case ModelKind::Sphere: {
      if (g.dim() == 1) return make_point(g, {x.c[0] + (v[0] >= 0 ? 1.0 : -1.0) * r / g.radius()});
      const int n = g.dim() + 1;
      auto u = sphere_embed(x);
      std::array<double, 4> t{};
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += v[i] * u[i];
      double nt = 0.0;
      for (int i = 0; i < n; ++i) {
        t[i] = v[i] - dot * u[i];
        nt += t[i] * t[i];
      }
      nt = std::sqrt(nt);
      require(nt > 0, "exp_map: direction is normal to the sphere");
      const double a = r / g.radius();
      std::array<double, 4> y{};
      for (int i = 0; i < n; ++i) y[i] = std::cos(a) * u[i] + std::sin(a) * t[i] / nt;
      return sphere_point_from_embedded(g.dim(), y);
    }
    case ModelKind::Hyperbolic: {
      // Ambient vector in R^{1,m}: v[0] is the x0 component.
      const int m = g.dim();
      const double x0 = hyperboloid_x0(g, x);
      const double k = g.kappa();
      // Project onto the tangent space: t = v + k <v, x>_L x.
      double dl = -v[0] * x0;
      for (int i = 0; i < m; ++i) dl += v[i + 1] * x.c[i];
      std::array<double, kMaxDim + 1> t{};
      t[0] = v[0] + k * dl * x0;
      for (int i = 0; i < m; ++i) t[i + 1] = v[i + 1] + k * dl * x.c[i];
      double nt = -t[0] * t[0];
      for (int i = 0; i < m; ++i) nt += t[i + 1] * t[i + 1];
      nt = std::sqrt(std::max(nt, 0.0));
      require(nt > 0, "exp_map: degenerate direction");
      const double sk = std::sqrt(k);
      const double ch = std::cosh(sk * r), sh = std::sinh(sk * r) / sk;
      std::vector<double> y(m);
      for (int i = 0; i < m; ++i) y[i] = ch * x.c[i] + sh * t[i + 1] / nt;
      return make_point(g, y);
    }
  }
  return x;
}

// The point at geodesic distance d from x along a fixed reference direction
// (chart axis `axis` where that makes sense).
inline Point geodesic_point(const ManifoldModel& g, const Point& x, double d, int axis = 0) {
  check_point(g, x);
  require(axis >= 0 && axis < g.dim(), "geodesic_point: bad axis");
  switch (g.kind()) {
    case ModelKind::Euclidean:
    case ModelKind::Torus: {
      std::vector<double> v(g.dim(), 0.0);
      v[axis] = 1.0;
      return exp_map(g, x, v, d);
    }
    case ModelKind::ConformalCircle: return exp_map(g, x, {1.0}, d);
    case ModelKind::Sphere: {
      if (g.dim() == 1) return exp_map(g, x, {1.0}, d);
      const auto u = sphere_embed(x);
      std::vector<double> v(4, 0.0);
      // pick the ambient axis least aligned with x, shifted by `axis`
      int best = 0;
      for (int i = 1; i <= g.dim(); ++i)
        if (std::abs(u[i]) < std::abs(u[best])) best = i;
      v[(best + axis) % (g.dim() + 1)] = 1.0;
      double dot = 0.0;
      for (int i = 0; i <= g.dim(); ++i) dot += v[i] * u[i];
      if (std::abs(std::abs(dot) - 1.0) < 1e-12) v[(best + axis + 1) % (g.dim() + 1)] = 1.0;
      return exp_map(g, x, v, d);
    }
    case ModelKind::Hyperbolic: {
      std::vector<double> v(g.dim() + 1, 0.0);
      v[axis + 1] = 1.0;
      return exp_map(g, x, v, d);
    }
  }
  return x;
}

// Integrate the hyperboloid geodesic equation X'' = k X with RK4 from x with
// unit-speed initial tangent direction v (ambient, projected), for arc length s.
inline Point hyperbolic_geodesic_shoot(const ManifoldModel& g, const Point& x, const std::vector<double>& v, double s,
                                       int steps = 4000) {
  require(g.kind() == ModelKind::Hyperbolic, "geodesic shooting needs a hyperbolic model");
  const int m = g.dim();
  const int n = m + 1;
  const double k = g.kappa();
  std::vector<double> X(n), V(n);
  X[0] = hyperboloid_x0(g, x);
  for (int i = 0; i < m; ++i) X[i + 1] = x.c[i];
  double dl = -v[0] * X[0];
  for (int i = 0; i < m; ++i) dl += v[i + 1] * X[i + 1];
  for (int i = 0; i < n; ++i) V[i] = v[i] + k * dl * X[i];
  double nv = -V[0] * V[0];
  for (int i = 1; i < n; ++i) nv += V[i] * V[i];
  nv = std::sqrt(nv);
  for (auto& c : V) c /= nv;
  const double h = s / steps;
  std::vector<double> k1x(n), k1v(n), k2x(n), k2v(n), k3x(n), k3v(n), k4x(n), k4v(n), tx(n), tv(n);
  for (int it = 0; it < steps; ++it) {
    for (int i = 0; i < n; ++i) { k1x[i] = V[i]; k1v[i] = k * X[i]; }
    for (int i = 0; i < n; ++i) { tx[i] = X[i] + 0.5 * h * k1x[i]; tv[i] = V[i] + 0.5 * h * k1v[i]; }
    for (int i = 0; i < n; ++i) { k2x[i] = tv[i]; k2v[i] = k * tx[i]; }
    for (int i = 0; i < n; ++i) { tx[i] = X[i] + 0.5 * h * k2x[i]; tv[i] = V[i] + 0.5 * h * k2v[i]; }
    for (int i = 0; i < n; ++i) { k3x[i] = tv[i]; k3v[i] = k * tx[i]; }
    for (int i = 0; i < n; ++i) { tx[i] = X[i] + h * k3x[i]; tv[i] = V[i] + h * k3v[i]; }
    for (int i = 0; i < n; ++i) { k4x[i] = tv[i]; k4v[i] = k * tx[i]; }
    for (int i = 0; i < n; ++i) {
      X[i] += h / 6.0 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i]);
      V[i] += h / 6.0 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
    }
  }
  return make_point(g, std::vector<double>(X.begin() + 1, X.end()));
}

// ---------------------------------------------------------------------------
// Volume doubling check: max over the grid of mu(x,R) / (a e^{aR} (R/r)^N mu(x,r)).

struct VdSample {
  Point x;
  double r = 0.0, R = 0.0;
};

struct VdReport {
  double worst_ratio = 0.0;
  VdSample worst{};
  bool pass = false;
};

inline VdReport vd_check(const ManifoldModel& g, double N, double a, const std::vector<VdSample>& grid,
                         double tol = 1e-12) {
  require(N > 0 && a > 0, "vd_check: N and a must be positive");
  require(!grid.empty(), "vd_check: empty grid");
  VdReport rep;
  rep.worst_ratio = -kInf;
  for (const auto& s : grid) {
    require(s.r > 0 && s.R > s.r, "vd_check: need 0 < r < R");
    const double lhs = ball_volume(g, s.x, s.R);
    const double rhs = a * std::exp(a * s.R) * std::pow(s.R / s.r, N) * ball_volume(g, s.x, s.r);
    const double ratio = lhs / rhs;
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst = s;
    }
  }
  rep.pass = rep.worst_ratio <= 1.0 + tol;
  return rep;
}

}  // namespace katodyn
