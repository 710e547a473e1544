#pragma once

// Dynkin norms ||w||_{g,t} = sup_x int_0^t int p(s,x,y) |w(y)| dmu(y) ds and
// the inequality checks built on them.
//
// Evaluation routes for J(x) = int_0^t int p(s,x,y)|w(y)| dmu(y) ds:
//   ConformalCircle   exact time integration of the spectral kernel:
//                     sum_k (1 - e^{-l_k t})/l_k phi_k(x) <phi_k, |w|>.
//   1-D models        J(x) = int T(d(x,y)) |w(y)| dmu(y), with the time-integrated
//                     kernel T in closed form (images of the line kernel).
//   radial terms      polar coordinates around the term's center:
//                     J = int |w|(r) area(r) Tbar(rho, r) dr, Tbar the time integral of
//                     the kernel mean over S(c, r), rho = d(x, c).
//   otherwise         polar coordinates around x with an angular rule.
// Torus(m >= 2) uses the Euclidean kernel on the universal cover.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "katodyn/error.hpp"
#include "katodyn/geometry.hpp"
#include "katodyn/heat_kernel.hpp"
#include "katodyn/potentials.hpp"
#include "katodyn/quadrature.hpp"
#include "katodyn/spectral.hpp"
#include "katodyn/verdict.hpp"

namespace katodyn {

// lambda == 0: int_0^t ds.  lambda > 0: int_0^inf e^{-lambda s} ds (t unused).
struct TimeWindow {
  double t = 0.0;
  double lambda = 0.0;
};

namespace detail {

inline double line_g1(double t, double d) {
  d = std::abs(d);
  const double st = std::sqrt(t);
  return st / std::sqrt(kPi) * std::exp(-d * d / (4.0 * t)) - 0.5 * d * std::erfc(d / (2.0 * st));
}

inline double i0e(double z) {
  if (z <= 500.0) return std::cyl_bessel_i(0.0, z) * std::exp(-z);
  const double iz = 1.0 / z;
  return (1.0 + iz / 8.0 + 9.0 * iz * iz / 128.0 + 225.0 * iz * iz * iz / 3072.0) / std::sqrt(2.0 * kPi * z);
}

inline double k0e(double z) {
  if (z <= 600.0) return std::cyl_bessel_k(0.0, z) * std::exp(z);
  const double iz = 1.0 / z;
  return std::sqrt(kPi / (2.0 * z)) * (1.0 - iz / 8.0 + 9.0 * iz * iz / 128.0 - 225.0 * iz * iz * iz / 3072.0);
}

// Time-integrated kernels on one model (the kernel model: Euclidean(m) for tori).
class TimeKernels {
 public:
  TimeKernels(ManifoldModel g, TimeWindow tw, double tol) : g_(std::move(g)), tw_(tw), tol_(tol) {
    extent_ = tw.lambda > 0 ? 30.0 / tw.lambda : tw.t;
  }
  const ManifoldModel& model() const { return g_; }
  // Effective time horizon for spatial truncation.
  double extent() const { return extent_; }

  // T(d) = int p(s, d) over the window; d > 0 for m >= 2.
  double point(double d) const {
    const int m = g_.dim();
    const double lam = tw_.lambda, t = tw_.t;
    const double k = std::sqrt(lam);
    if (g_.kind() == ModelKind::Euclidean && m <= 3) {
      if (lam == 0.0) {
        if (m == 1) return line_g1(t, d);
        if (m == 2) return -std::expint(-d * d / (4.0 * t)) / (4.0 * kPi);
        return std::erfc(d / (2.0 * std::sqrt(t))) / (4.0 * kPi * d);
      }
      if (m == 1) return std::exp(-k * d) / (2.0 * k);
      if (m == 2) return k0e(k * d) * std::exp(-k * d) / (2.0 * kPi);
      return std::exp(-k * d) / (4.0 * kPi * d);
    }
    if (g_.is_circle() && g_.kind() != ModelKind::ConformalCircle) return circle_point(d, g_.circumference());
    return quad([&](double s) { return kernel_at_distance(g_, s, d).value; }).value;
  }

  // Tbar(rho, r): time integral of the mean of p(s, x, .) over S(c, r), d(x,c) = rho.
  QuadResult mean(double rho, double r) const {
    const int m = g_.dim();
    const double lam = tw_.lambda, t = tw_.t;
    QuadResult out;
    if (rho == 0.0 || r == 0.0) {
      out.value = point(std::max(rho, r));
      return out;
    }
    if (m == 1) {
      out.value = 0.5 * (point(std::abs(rho - r)) + point(rho + r));
      return out;
    }
    if (g_.kind() == ModelKind::Euclidean && m == 3) {
      const double rl = std::min(rho, r), rg = std::max(rho, r);
      if (lam > 0.0) {
        const double k = std::sqrt(lam);
        out.value = std::exp(-k * (rg - rl)) * (-std::expm1(-2.0 * k * rl)) / (8.0 * kPi * k * rho * r);
        return out;
      }
      const double am = 0.25 * (rho - r) * (rho - r), ap = 0.25 * (rho + r) * (rho + r);
      const double st = std::sqrt(t);
      const double pre = std::pow(4.0 * kPi, -1.5) / (rho * r);
      if ((ap - am) / (0.5 * (ap + am)) < 1e-3) {
        // -h'(a) = sqrt(pi/a) erfc(sqrt(a/t)); three-point Gauss over [am, ap]
        const double c = 0.5 * (am + ap), h = 0.5 * (ap - am);
        const double z = std::sqrt(0.6);
        auto dh = [&](double a) { return std::sqrt(kPi / a) * std::erfc(std::sqrt(a / t)); };
        out.value = pre * h * (5.0 / 9.0 * dh(c - z * h) + 8.0 / 9.0 * dh(c) + 5.0 / 9.0 * dh(c + z * h));
        return out;
      }
      auto hf = [&](double a) {
        return 2.0 * st * std::exp(-a / t) - 2.0 * std::sqrt(kPi * a) * std::erfc(std::sqrt(a / t));
      };
      out.value = pre * (hf(am) - hf(ap));
      return out;
    }
    if (g_.kind() == ModelKind::Euclidean && m == 2 && lam > 0.0) {
      const double k = std::sqrt(lam);
      const double rl = std::min(rho, r), rg = std::max(rho, r);
      out.value = i0e(k * rl) * k0e(k * rg) * std::exp(k * (rl - rg)) / (2.0 * kPi);
      return out;
    }
    return quad([&](double s) { return sphere_mean(g_, s, rho, r); });
  }

 private:
  double circle_point(double d, double L) const {
    d = std::abs(std::remainder(d, L));
    if (tw_.lambda > 0.0) {
      const double k = std::sqrt(tw_.lambda);
      return (std::exp(-k * d) + std::exp(-k * (L - d))) / (2.0 * k * (1.0 - std::exp(-k * L)));
    }
    const double t = tw_.t;
    double s = line_g1(t, d);
    for (int n = 1;; ++n) {
      const double a = line_g1(t, d + n * L) + line_g1(t, d - n * L);
      s += a;
      if (a <= 1e-17 * s && (n * L - d) * (n * L - d) > 160.0 * t) break;
    }
    return s;
  }

  template <class F>
  QuadResult quad(F&& f) const {
    PanelOptions p;
    p.ratio = 0.25;
    p.diverge_window = 1 << 20;
    p.quad.rel_tol = 0.01 * tol_;
    p.quad.abs_tol = 1e-300;
    p.max_panels = 60;
    const double lam = tw_.lambda;
    auto h = [&](double u) {
      const double s = u * u;
      const double w = lam > 0.0 ? std::exp(-lam * s) : 1.0;
      return 2.0 * u * w * f(s);
    };
    QuadResult q = integrate_from_zero(h, std::sqrt(extent_), p);
    if (lam > 0.0) q.error += std::exp(-lam * extent_) / lam * std::abs(f(extent_));
    return q;
  }

  ManifoldModel g_;
  TimeWindow tw_;
  double tol_;
  double extent_;
};

inline PanelOptions space_panels(double tol) {
  PanelOptions p;
  p.quad.rel_tol = tol;
  p.quad.abs_tol = 1e-300;
  p.quad.max_intervals = 2000;
  p.max_panels = 120;
  return p;
}

// Chart positions (1-D models) where |w| has kinks, jumps or singularities.
inline void chart_features(const ManifoldModel& g, const Potential& w, std::vector<double>& br,
                           std::vector<double>& sing) {
  const auto& n = w.node();
  const double scale = g.kind() == ModelKind::Sphere ? g.radius() : 1.0;
  auto around = [&](const Point& c, double r) {
    if (!std::isfinite(r)) return;
    br.push_back(c.c[0] - r / scale);
    br.push_back(c.c[0] + r / scale);
  };
  switch (n.kind) {
    case PotentialKind::Power:
    case PotentialKind::Log:
      sing.push_back(n.center->c[0]);
      around(*n.center, n.radius);
      break;
    case PotentialKind::Bump:
      br.push_back(n.center->c[0]);
      around(*n.center, n.radius);
      break;
    case PotentialKind::Grid: {
      if (n.layout == GridLayout::Radial) {
        br.push_back(n.center->c[0]);
        around(*n.center, n.hi);
        break;
      }
      const int N = static_cast<int>(n.values.size());
      if (n.layout == GridLayout::Interval) {
        br.push_back(n.lo);
        br.push_back(n.hi);
      }
      if (N <= 2048) {
        for (int i = 0; i < N; ++i)
          br.push_back(n.layout == GridLayout::Periodic ? n.lo + (n.hi - n.lo) * i / N
                                                        : n.lo + (n.hi - n.lo) * i / (N - 1));
      }
      break;
    }
    case PotentialKind::Truncated:
      if (!n.region.is_whole())
        for (const auto& b : n.region.balls()) around(b.center, b.radius);
      chart_features(g, n.children[0], br, sing);
      break;
    default:
      for (const auto& c : n.children) chart_features(g, c, br, sing);
      break;
  }
}

}  // namespace detail

struct DynkinOptions {
  double tol = 1e-8;       // relative tolerance of the spatial quadrature
  int grid_points = 17;    // points per ray / axis of the default grid
  int circle_points = 64;  // default grid size on 1-D compact models
  bool refine = true;      // one refinement pass at +-h/2 around the argmax
  std::vector<Point> grid;  // explicit x-grid (replaces the default)
  unsigned threads = 0;     // 0: hardware concurrency
};

struct DynkinEstimate {
  double value = 0.0;
  double t = 0.0;
  Region region = Region::whole();
  std::size_t grid_size = 0;
  double error = 0.0;
  Point argmax{};
  bool infinite = false;
  long evaluations = 0;
};

// Evaluates J(x) for one (model, |w|, time window).
class DynkinEvaluator {
 public:
  DynkinEvaluator(const ManifoldModel& g, const Potential& w, TimeWindow tw, const DynkinOptions& opt = {})
      : g_(g), w_(w), tw_(tw), opt_(opt),
        tk_(g.kind() == ModelKind::Torus && g.dim() >= 2 ? ManifoldModel::euclidean(g.dim()) : g, tw, opt.tol) {
    if (tw.lambda == 0.0) {
      require(tw.t >= 1e-6 && tw.t <= 100.0, "dynkin norm: t must lie in [1e-6, 100]");
    } else {
      require(tw.lambda > 0.0 && std::isfinite(tw.lambda), "resolvent: lambda must be positive");
    }
    terms_ = radial_terms(g, w);
    if (g.kind() == ModelKind::ConformalCircle) setup_spectral();
    rtrunc_ = kernel_cutoff_radius(tk_.model(), tk_.extent());
    if (g.compact()) rtrunc_ = std::min(rtrunc_, g.kind() == ModelKind::Torus ? rtrunc_ : g.diameter());
  }

  QuadResult at(const Point& x) const {
    check_point(g_, x);
    if (w_.is_zero()) return {};
    if (g_.kind() == ModelKind::ConformalCircle) return spectral(x);
    if (g_.dim() == 1) return one_dim(x);
    if (terms_) {
      bool ok = true;
      for (const auto& t : *terms_)
        if (!radial_ok(t)) ok = false;
      if (ok) {
        QuadResult tot;
        for (const auto& t : *terms_) {
          QuadResult q = t.global ? global(t.constant, x) : radial(t, x);
          if (!q.finite) return q;
          tot.value += q.value;
          tot.error += q.error;
          tot.evaluations += q.evaluations;
          tot.converged = tot.converged && q.converged;
        }
        return tot;
      }
    }
    return angular(x);
  }

 private:
  bool radial_ok(const RadialTerm& t) const {
    if (t.global) return true;
    const int m = g_.dim();
    switch (g_.kind()) {
      case ModelKind::Euclidean: return true;
      case ModelKind::Torus: {
        const double Lmin = *std::min_element(g_.periods().begin(), g_.periods().end());
        return t.support < 0.5 * Lmin;
      }
      case ModelKind::Sphere:
      case ModelKind::Hyperbolic: return m == 3;
      default: return false;
    }
  }

  void setup_spectral() {
    eig_ = detail::conformal_free_eigen(g_);
    const auto& mesh = eig_->mesh;
    const int n = mesh.n;
    std::vector<double> aw(n);
    for (int i = 0; i < n; ++i) {
      aw[i] = std::abs(w_.eval(g_, make_point(g_, {mesh.theta[i]})));
      if (!std::isfinite(aw[i])) throw InvalidArgument("potential is unbounded at a spectral mesh node; mollify it first");
    }
    proj_.assign(n, 0.0);
    coef_.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += mesh.weight[i] * eig_->vec(i, k) * aw[i];
      proj_[k] = s;
      const double l = std::max(0.0, eig_->lambda(k));
      if (tw_.lambda > 0.0) coef_[k] = 1.0 / (tw_.lambda + l);
      else coef_[k] = l * tw_.t > 1e-12 ? -std::expm1(-l * tw_.t) / l : tw_.t;
    }
  }

  QuadResult spectral(const Point& x) const {
    const Stencil st = locate(eig_->mesh, x.c[0]);
    double s = 0.0, mag = 0.0;
    for (std::size_t k = 0; k < proj_.size(); ++k) {
      const double phi = (1.0 - st.a) * eig_->vec(st.i0, k) + st.a * eig_->vec(st.i1, k);
      s += coef_[k] * phi * proj_[k];
      mag += std::abs(coef_[k] * phi * proj_[k]);
    }
    QuadResult q;
    q.value = std::max(0.0, s);
    q.error = 64.0 * std::numeric_limits<double>::epsilon() * mag;
    q.evaluations = static_cast<int>(proj_.size());
    return q;
  }

  QuadResult one_dim(const Point& x) const {
    const double scale = g_.kind() == ModelKind::Sphere ? g_.radius() : 1.0;
    const bool periodic = g_.compact();
    const double P = g_.chart_period();
    double lo, hi;
    if (periodic) {
      lo = x.c[0] - 0.5 * P;
      hi = x.c[0] + 0.5 * P;
    } else {
      lo = x.c[0] - rtrunc_;
      hi = x.c[0] + rtrunc_;
      if (auto sup = w_.support()) {
        double a = kInf, b = -kInf;
        for (const auto& bl : *sup) {
          a = std::min(a, bl.center.c[0] - bl.radius);
          b = std::max(b, bl.center.c[0] + bl.radius);
        }
        lo = std::max(lo, a);
        hi = std::min(hi, b);
        if (!(hi > lo)) return {};
      }
    }
    std::vector<double> br, sg, cb, cs;
    detail::chart_features(g_, w_, cb, cs);
    auto place = [&](const std::vector<double>& pts, std::vector<double>& out) {
      for (double p : pts) {
        if (periodic) {
          const double q = x.c[0] + std::remainder(p - x.c[0], P);
          out.push_back(q);
          if (std::abs(q - lo) < 1e-13) out.push_back(hi);
          if (std::abs(q - hi) < 1e-13) out.push_back(lo);
        } else {
          out.push_back(p);
        }
      }
    };
    place(cb, br);
    place(cs, sg);
    br.push_back(x.c[0]);
    auto f = [&](double u) {
      const double aw = std::abs(w_.eval(g_, make_point(g_, {u})));
      if (aw == 0.0) return 0.0;
      return scale * tk_.point(scale * std::abs(u - x.c[0])) * aw;
    };
    return integrate_pieces(f, lo, hi, br, sg, detail::space_panels(opt_.tol));
  }

  QuadResult global(double c, const Point& x) const {
    const ManifoldModel& km = tk_.model();
    const Point kx = g_.kind() == ModelKind::Torus ? origin(km) : x;
    double R = rtrunc_;
    if (km.compact()) R = std::min(R, km.diameter());
    auto f = [&](double r) { return sphere_area(km, kx, r) * tk_.point(r); };
    QuadResult q = integrate_pieces(f, 0.0, R, {}, {0.0}, detail::space_panels(opt_.tol));
    q.value *= c;
    q.error *= c;
    return q;
  }

  QuadResult radial_one(const RadialTerm& t, double rho) const {
    const ManifoldModel& km = tk_.model();
    const Point kc = origin(km);
    double lo = std::max(0.0, rho - rtrunc_);
    double hi = std::min(t.support, rho + rtrunc_);
    if (km.kind() == ModelKind::Sphere) hi = std::min(hi, kPi * km.radius());
    if (!(hi > lo)) return {};
    std::vector<double> br = t.breaks, sg;
    if (lo == 0.0 && (t.singular || rho == 0.0)) sg.push_back(0.0);
    if (rho > lo && rho < hi) sg.push_back(rho);
    bool diverged = false;
    auto f = [&](double r) {
      const double p = radial_profile(g_, t, r);
      if (p == 0.0) return 0.0;
      const QuadResult m = tk_.mean(rho, r);
      if (!m.finite) diverged = true;
      return p * sphere_area(km, kc, r) * m.value;
    };
    QuadResult q = integrate_pieces(f, lo, hi, br, sg, detail::space_panels(opt_.tol));
    if (diverged) return infinite_result(q.evaluations);
    return q;
  }

  QuadResult radial(const RadialTerm& t, const Point& x) const {
    if (g_.kind() != ModelKind::Torus) return radial_one(t, distance(g_, x, t.center));
    // images of the center on the universal cover
    const int m = g_.dim();
    const auto& L = g_.periods();
    std::vector<double> off(m);
    for (int i = 0; i < m; ++i) off[i] = std::remainder(x.c[i] - t.center.c[i], L[i]);
    const double reach = t.support + rtrunc_;
    std::vector<int> nmax(m);
    for (int i = 0; i < m; ++i) nmax[i] = static_cast<int>(std::ceil(reach / L[i])) + 1;
    QuadResult tot;
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = -nmax[i];
    while (true) {
      double d2 = 0.0;
      for (int i = 0; i < m; ++i) {
        const double d = off[i] + idx[i] * L[i];
        d2 += d * d;
      }
      const double rho = std::sqrt(d2);
      if (rho < reach) {
        QuadResult q = radial_one(t, rho);
        if (!q.finite) return q;
        tot.value += q.value;
        tot.error += q.error;
        tot.evaluations += q.evaluations;
      }
      int i = 0;
      while (i < m && ++idx[i] > nmax[i]) {
        idx[i] = -nmax[i];
        ++i;
      }
      if (i == m) break;
    }
    return tot;
  }

  QuadResult angular(const Point& x) const {
    const int m = g_.dim();
    require(m <= 3, "dynkin norm: non-radial potentials need dimension <= 3");
    const ManifoldModel& km = tk_.model();
    const Point kx = g_.kind() == ModelKind::Torus ? origin(km) : x;
    double R = rtrunc_;
    if (km.compact()) R = std::min(R, km.diameter());
    std::vector<double> br, sg{0.0};
    if (auto sup = w_.support(); sup && g_.kind() != ModelKind::Torus) {
      double reach = 0.0;
      for (const auto& b : *sup) {
        const double d = distance(g_, x, b.center);
        reach = std::max(reach, d + b.radius);
        br.push_back(d);
        br.push_back(std::abs(d - b.radius));
        br.push_back(d + b.radius);
      }
      R = std::min(R, reach);
    }
    for (const auto& c : w_.singular_centers()) {
      const double d = distance(g_, x, c);
      if (d > 0.0) sg.push_back(d);
    }
    const auto rule = detail::angular_rule(m);
    const auto frame = detail::tangent_frame(g_, x);
    auto f = [&](double r) {
      const double a =
          sphere_average(g_, x, r, [&](const Point& y) { return std::abs(w_.eval(g_, y)); }, rule, frame);
      if (a == 0.0) return 0.0;
      return sphere_area(km, kx, r) * tk_.point(r) * a;
    };
    return integrate_pieces(f, 0.0, R, br, sg, detail::space_panels(opt_.tol));
  }

  ManifoldModel g_;
  Potential w_;
  TimeWindow tw_;
  DynkinOptions opt_;
  detail::TimeKernels tk_;
  std::optional<std::vector<RadialTerm>> terms_;
  std::shared_ptr<const CircleEigen> eig_;
  std::vector<double> proj_, coef_;
  double rtrunc_ = kInf;
};

// Default x-grid: a ray for single radial terms, the origin for constants on
// homogeneous models, a uniform grid on 1-D compact models, axis rays through
// the support balls otherwise.
inline std::vector<Point> default_x_grid(const ManifoldModel& g, const Potential& w, const DynkinOptions& opt = {}) {
  if (!opt.grid.empty()) return opt.grid;
  std::vector<Point> grid;
  if (g.is_circle()) {
    const int n = opt.circle_points;
    for (int i = 0; i < n; ++i) grid.push_back(make_point(g, {g.chart_period() * i / n}));
    std::vector<double> br, sg;
    detail::chart_features(g, w, br, sg);
    for (double s : sg) grid.push_back(make_point(g, {s}));
    if (auto sup = w.support())
      for (const auto& b : *sup) grid.push_back(b.center);
    return grid;
  }
  auto terms = radial_terms(g, w);
  if (terms && terms->size() == 1 && (*terms)[0].global && g.homogeneous()) return {origin(g)};
  if (terms && terms->size() == 1 && !(*terms)[0].global && !std::isfinite((*terms)[0].support)) {
    const auto& t = (*terms)[0];
    const double R = 3.0;
    for (int j = 0; j < opt.grid_points; ++j) grid.push_back(geodesic_point(g, t.center, R * j / (opt.grid_points - 1)));
    return grid;
  }
  double collar = 0.5;
  if (auto sup = w.support(); sup && !sup->empty()) {
    collar = 0.0;
    for (const auto& b : *sup) collar = std::max(collar, 0.5 * b.radius);
  }
  grid = detail::default_support_grid(g, w, opt.grid_points, collar);
  if (g.compact() && g.dim() >= 2) {
    std::vector<Point> keep;
    for (const auto& p : grid) keep.push_back(p);
    grid = keep;
  }
  return grid;
}

namespace detail {

inline std::vector<QuadResult> sweep(const DynkinEvaluator& ev, const std::vector<Point>& xs, unsigned threads) {
  std::vector<QuadResult> out(xs.size());
  unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  nt = std::min<unsigned>(nt, static_cast<unsigned>(xs.size()));
  if (nt <= 1) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = ev.at(xs[i]);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  for (unsigned k = 0; k < nt; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = k; i < xs.size(); i += nt) out[i] = ev.at(xs[i]);
      } catch (...) {
        errs[k] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::vector<Point> refine_points(const ManifoldModel& g, const Point& best, const std::vector<Point>& grid) {
  double h = kInf;
  for (const auto& p : grid) {
    const double d = distance(g, best, p);
    if (d > 0.0) h = std::min(h, d);
  }
  if (!std::isfinite(h)) return {};
  std::vector<Point> out;
  for (int axis = 0; axis < g.dim(); ++axis) {
    out.push_back(geodesic_point(g, best, 0.5 * h, axis));
    out.push_back(geodesic_point(g, best, -0.5 * h, axis));
  }
  return out;
}

}  // namespace detail

// sup over the grid of J; `restrict_to` limits both the grid and the refinement.
inline DynkinEstimate sup_over_grid(const ManifoldModel& g, const DynkinEvaluator& ev, std::vector<Point> grid,
                                    const DynkinOptions& opt, const Region* restrict_to = nullptr) {
  if (restrict_to) {
    std::vector<Point> keep;
    for (const auto& p : grid)
      if (restrict_to->contains(g, p)) keep.push_back(p);
    grid = std::move(keep);
  }
  require(!grid.empty(), "dynkin norm: empty x-grid");
  DynkinEstimate est;
  auto absorb = [&](const std::vector<Point>& xs, const std::vector<QuadResult>& rs) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      est.evaluations += rs[i].evaluations;
      if (!rs[i].finite) {
        if (!est.infinite) est.argmax = xs[i];
        est.infinite = true;
        est.value = kInf;
        continue;
      }
      if (!est.infinite && (rs[i].value > est.value || est.grid_size == 0)) {
        est.value = rs[i].value;
        est.error = rs[i].error;
        est.argmax = xs[i];
      }
      ++est.grid_size;
    }
  };
  absorb(grid, detail::sweep(ev, grid, opt.threads));
  if (opt.refine && !est.infinite && grid.size() > 1) {
    auto extra = detail::refine_points(g, est.argmax, grid);
    if (restrict_to) {
      std::vector<Point> keep;
      for (const auto& p : extra)
        if (restrict_to->contains(g, p)) keep.push_back(p);
      extra = std::move(keep);
    }
    absorb(extra, detail::sweep(ev, extra, opt.threads));
  }
  return est;
}

inline DynkinEstimate dynkin_norm(const ManifoldModel& g, const Potential& w, double t, const DynkinOptions& opt = {}) {
  DynkinEvaluator ev(g, w, {t, 0.0}, opt);
  DynkinEstimate est = sup_over_grid(g, ev, default_x_grid(g, w, opt), opt);
  est.t = t;
  return est;
}

// sup_x int_0^inf e^{-lambda s} int p(s,x,y)|w(y)| dmu(y) ds.
inline DynkinEstimate resolvent_sup(const ManifoldModel& g, const Potential& w, double lambda,
                                    const DynkinOptions& opt = {}) {
  DynkinEvaluator ev(g, w, {0.0, lambda}, opt);
  DynkinEstimate est = sup_over_grid(g, ev, default_x_grid(g, w, opt), opt);
  est.t = 0.0;
  return est;
}

// ---------------------------------------------------------------------------
// Localization: sup over the full grid against sup over the grid points in A.

struct LocalizedNorm {
  DynkinEstimate full, on_a;
  double gap = 0.0;  // (sup_X - sup_A) / sup_A
};

inline LocalizedNorm localized_norm(const ManifoldModel& g, const Potential& w, const Region& A, double t,
                                    const DynkinOptions& opt = {}) {
  LocalizedNorm out;
  const Potential wa = A.is_whole() ? w : Potential::truncated(w, A);
  DynkinEvaluator ev(g, wa, {t, 0.0}, opt);
  const auto grid = default_x_grid(g, wa, opt);
  out.full = sup_over_grid(g, ev, grid, opt);
  out.full.t = t;
  out.full.region = A;
  if (A.is_whole()) {
    out.on_a = out.full;
    out.gap = 0.0;
    return out;
  }
  for (const auto& b : A.balls()) require(b.radius > 0, "localized norm: region has empty interior");
  out.on_a = sup_over_grid(g, ev, grid, opt, &A);
  out.on_a.t = t;
  out.on_a.region = A;
  if (out.full.infinite || out.on_a.infinite) {
    out.gap = out.full.infinite && !out.on_a.infinite ? kInf : 0.0;
    return out;
  }
  out.gap = out.on_a.value > 0.0 ? (out.full.value - out.on_a.value) / out.on_a.value : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Kato detection along a dyadic time sequence.

struct KatoDetection {
  KatoVerdict verdict;
  std::vector<DynkinEstimate> estimates;
};

inline KatoDetection kato_detect(const ManifoldModel& g, const Potential& w, const std::vector<double>& times,
                                 const DynkinOptions& opt = {}, const VerdictRule& rule = {}) {
  require(static_cast<int>(times.size()) >= rule.terms, "kato_detect: need at least " + std::to_string(rule.terms) +
                                                            " times");
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] < times[i - 1], "kato_detect: times must decrease");
  KatoDetection out;
  std::vector<EvidenceRow> rows;
  for (double t : times) {
    DynkinEstimate e = dynkin_norm(g, w, t, opt);
    rows.push_back({t, e.value, e.error, e.infinite});
    out.estimates.push_back(e);
    if (e.infinite) break;
  }
  out.verdict = classify_sequence(std::move(rows), rule);
  return out;
}

// ---------------------------------------------------------------------------
// ||w||_{g,T} <= min{l : T < l t} ||w||_{g,t}.

struct KuweCheck {
  double lhs = 0.0, rhs = 0.0;
  int factor = 0;
  bool pass = false;
};

inline int kuwe_factor(double t, double T) {
  require(t > 0 && T > t, "kuwe: need 0 < t < T");
  int l = static_cast<int>(std::floor(T / t)) + 1;
  while (l > 1 && T < (l - 1) * t) --l;
  return l;
}

inline KuweCheck kuwe_check(const ManifoldModel& g, const Potential& w, double t, double T, double tol = 1e-3,
                            const DynkinOptions& opt = {}) {
  KuweCheck c;
  c.factor = kuwe_factor(t, T);
  DynkinOptions o = opt;
  if (o.grid.empty()) o.grid = default_x_grid(g, w, opt);
  const DynkinEstimate big = dynkin_norm(g, w, T, o);
  const DynkinEstimate small = dynkin_norm(g, w, t, o);
  require(!big.infinite && !small.infinite, "kuwe: both norms must be finite");
  c.lhs = big.value;
  c.rhs = c.factor * small.value;
  c.pass = c.lhs <= c.rhs * (1.0 + tol);
  return c;
}

// ---------------------------------------------------------------------------
// (1 - e^{-lambda t}) R <= ||w||_{g,t} <= e^{lambda t} R with R the resolvent sup.

struct ResolventSandwich {
  double lower = 0.0, norm = 0.0, upper = 0.0, resolvent = 0.0;
  bool pass = false;
};

inline ResolventSandwich resolvent_sandwich(const ManifoldModel& g, const Potential& w, double lambda, double t,
                                            double tol = 1e-3, const DynkinOptions& opt = {}) {
  require(lambda > 0, "resolvent sandwich: lambda must be positive");
  ResolventSandwich r;
  DynkinOptions o = opt;
  if (o.grid.empty()) o.grid = default_x_grid(g, w, opt);
  const DynkinEstimate res = resolvent_sup(g, w, lambda, o);
  if (res.infinite) throw ConvergenceError("resolvent sandwich: Laplace integral diverges");
  const DynkinEstimate n = dynkin_norm(g, w, t, o);
  r.resolvent = res.value;
  r.norm = n.value;
  r.lower = -std::expm1(-lambda * t) * res.value;
  r.upper = std::exp(lambda * t) * res.value;
  r.pass = r.lower <= r.norm * (1.0 + tol) + 1e-300 && r.norm <= r.upper * (1.0 + tol) + 1e-300;
  return r;
}

// ---------------------------------------------------------------------------
// Integrals over regions.

namespace detail {

// int_{B(c,R)} f dmu for f given on points, in polar coordinates around c.
template <class F>
QuadResult ball_integral(const ManifoldModel& g, const Ball& b, F&& f, const std::vector<double>& breaks,
                         double tol) {
  const PanelOptions p = space_panels(tol);
  if (g.dim() == 1) {
    if (g.kind() == ModelKind::ConformalCircle) {
      const auto& cd = g.conformal();
      const double s0 = cd.arclength(b.center.c[0]);
      const double R = std::min(b.radius, 0.5 * cd.length);
      auto h = [&](double s) { return f(make_point(g, {cd.angle_at(s)})); };
      return integrate_pieces(h, s0 - R, s0 + R, {s0}, {}, p);
    }
    double R = b.radius;
    if (g.compact()) R = std::min(R, 0.5 * g.circumference());
    auto h = [&](double s) { return f(geodesic_point(g, b.center, s)); };
    std::vector<double> br{0.0}, sg;
    for (double x : breaks) {
      br.push_back(x);
      br.push_back(-x);
    }
    return integrate_pieces(h, -R, R, br, {0.0}, p);
  }
  require(g.dim() <= 3, "region integrals need dimension <= 3");
  const auto rule = angular_rule(g.dim());
  const auto frame = tangent_frame(g, b.center);
  double R = b.radius;
  if (g.compact()) R = std::min(R, g.diameter());
  auto h = [&](double r) { return sphere_area(g, b.center, r) * sphere_average(g, b.center, r, f, rule, frame); };
  return integrate_pieces(h, 0.0, R, breaks, {0.0}, p);
}

}  // namespace detail

// (int_K |w|^q phi dmu)^{1/q} over a single closed ball K.
inline QuadResult weighted_lq_norm(const ManifoldModel& g, const Potential& w, const Region& K, double q,
                                   const std::function<double(const Point&)>& phi = nullptr, double tol = 1e-8) {
  require(K.single_ball(), "weighted L^q norm: region must be a single closed ball");
  require(q >= 1, "weighted L^q norm: q must be at least 1");
  const Ball& b = K.balls()[0];
  std::vector<double> br;
  if (auto terms = radial_terms(g, w))
    for (const auto& t : *terms)
      if (!t.global && distance(g, t.center, b.center) < 1e-12) br.insert(br.end(), t.breaks.begin(), t.breaks.end());
  auto f = [&](const Point& y) {
    const double v = std::abs(w.eval(g, y));
    if (v == 0.0) return 0.0;
    return std::pow(v, q) * (phi ? phi(y) : 1.0);
  };
  QuadResult r = detail::ball_integral(g, b, f, br, tol);
  if (r.finite) {
    const double v = std::pow(r.value, 1.0 / q);
    r.error = r.value > 0 ? v * r.error / (q * r.value) : 0.0;
    r.value = v;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Hoelder bound: ||w||_{g,t;A} <= int_0^t phi1(s)^{1/q} ds ||w||_{L^q_{phi2}(A)}.

struct HolderBound {
  double norm = 0.0, bound = 0.0, time_factor = 0.0, lq = 0.0;
  double worst_kernel_ratio = 0.0;  // max of p / (phi1 phi2) on the check grid
  bool pass = false;
};

inline HolderBound holder_bound(const ManifoldModel& g, const Potential& w, const Region& A, double q,
                                const std::function<double(double)>& phi1,
                                const std::function<double(const Point&)>& phi2, double t, double tol = 1e-3,
                                const DynkinOptions& opt = {}, int check_points = 7) {
  require(q > 1, "holder bound: q must exceed 1");
  require(A.single_ball(), "holder bound: region must be a single closed ball");
  HolderBound h;
  const Ball& b = A.balls()[0];
  // kernel domination on a sample grid of (s, x, y) in (0, t] x A x A
  std::vector<Point> pts{b.center};
  for (int axis = 0; axis < g.dim(); ++axis)
    for (int j = 1; j < check_points; ++j) {
      const double d = b.radius * j / (check_points - 1);
      pts.push_back(geodesic_point(g, b.center, d, axis));
      pts.push_back(geodesic_point(g, b.center, -d, axis));
    }
  double worst = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double s = t * std::pow(1e-3, i / 11.0);
    for (const auto& x : pts)
      for (const auto& y : pts) {
        const double p = hk_eval(g, s, x, y).value;
        worst = std::max(worst, p / (phi1(s) * phi2(y)));
      }
  }
  h.worst_kernel_ratio = worst;
  if (!(worst <= 1.0 + 1e-12))
    throw PreconditionError("holder bound: kernel bound p <= phi1 phi2 fails on the sample grid (ratio " +
                            std::to_string(worst) + ")");
  PanelOptions p = detail::space_panels(1e-10);
  QuadResult tf = integrate_from_zero([&](double s) { return std::pow(phi1(s), 1.0 / q); }, t, p);
  if (!tf.finite) throw InvalidArgument("holder bound: int_0^t phi1^{1/q} diverges");
  h.time_factor = tf.value;
  QuadResult lq = weighted_lq_norm(g, w, A, q, phi2, opt.tol);
  h.lq = lq.finite ? lq.value : kInf;
  h.bound = h.time_factor * h.lq;
  const LocalizedNorm ln = localized_norm(g, w, A, t, opt);
  h.norm = ln.on_a.value;
  h.pass = h.norm <= h.bound * (1.0 + tol);
  return h;
}

// ---------------------------------------------------------------------------
// L^1 lower embedding:
//   int_K |w| <= (2/t) (min p over [t/2,t] x K x K)^{-1} sup_{x in K} int_0^t int_K p |w|.

struct L1LowerCheck {
  double lhs = 0.0, rhs = 0.0, min_kernel = 0.0, local_norm = 0.0;
  bool pass = false;
};

inline L1LowerCheck l1_lower_check(const ManifoldModel& g, const Potential& w, const Region& K, double t,
                                   double tol = 1e-3, const DynkinOptions& opt = {}, int samples = 9) {
  require(K.single_ball(), "l1 lower check: K must be a single closed ball");
  const Ball& b = K.balls()[0];
  L1LowerCheck c;
  std::vector<Point> pts{b.center};
  for (int axis = 0; axis < g.dim(); ++axis)
    for (int j = 1; j < samples; ++j) {
      const double d = b.radius * j / (samples - 1);
      pts.push_back(geodesic_point(g, b.center, d, axis));
      pts.push_back(geodesic_point(g, b.center, -d, axis));
    }
  double mn = kInf;
  for (int i = 0; i < samples; ++i) {
    const double s = 0.5 * t + 0.5 * t * i / (samples - 1);
    for (const auto& x : pts)
      for (const auto& y : pts) mn = std::min(mn, hk_eval(g, s, x, y).value);
  }
  c.min_kernel = mn;
  if (!(mn > 1e-290))
    throw PreconditionError("l1 lower check: kernel minimum is numerically zero; use a smaller K or a larger t");
  QuadResult l1 = weighted_lq_norm(g, w, K, 1.0, nullptr, opt.tol);
  c.lhs = l1.finite ? l1.value : kInf;
  const LocalizedNorm ln = localized_norm(g, w, K, t, opt);
  c.local_norm = ln.on_a.value;
  c.rhs = 2.0 / t / mn * c.local_norm;
  c.pass = c.lhs <= c.rhs * (1.0 + tol);
  return c;
}

// ---------------------------------------------------------------------------
// Metric comparability on the circle: two conformal metrics on the same chart.

// The chart arc [theta_c - half, theta_c + half] as a closed geodesic ball of g.
inline Region chart_arc_region(const ManifoldModel& g, double theta_c, double half) {
  require(g.kind() == ModelKind::ConformalCircle, "chart arcs are defined on conformal circles");
  require(half > 0 && half < kPi, "chart arc half-width must lie in (0, pi)");
  const auto& cd = g.conformal();
  const double s0 = cd.arclength(theta_c);
  double s1 = cd.arclength(theta_c - half), s2 = cd.arclength(theta_c + half);
  auto unwrap = [&](double s) {
    while (s > s0 + 0.5 * cd.length) s -= cd.length;
    while (s < s0 - 0.5 * cd.length) s += cd.length;
    return s;
  };
  s1 = unwrap(s1);
  s2 = unwrap(s2);
  if (s1 > s0) s1 -= cd.length;
  if (s2 < s0) s2 += cd.length;
  const Point c = make_point(g, {cd.angle_at(0.5 * (s1 + s2))});
  return Region::ball(c, 0.5 * (s2 - s1));
}

// Samples of w on the chart (for carrying a function between conformal metrics).
inline Potential to_chart_grid(const ManifoldModel& g, const Potential& w, int n = 1024) {
  require(g.dim() == 1 && g.compact(), "chart grids need a 1-D compact model");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = w.eval(g, make_point(g, {g.chart_period() * i / n}));
  return Potential::grid_periodic(g.chart_period(), std::move(v));
}

struct ComparabilityRow {
  double t = 0.0, norm1 = 0.0, norm2 = 0.0, ratio = 0.0, c = 0.0;
};

struct MetricComparability {
  std::vector<ComparabilityRow> rows;
  double c_k = 0.0;
  double max_variation = 0.0;  // max |C(t/2) - C(t)| / C(t)
  bool pass = false;
};

// w is a chart function (grid) shared by both metrics; K = chart arc.
inline MetricComparability metric_comparability(const ManifoldModel& g1, const ManifoldModel& g2, const Potential& w,
                                                double theta_c, double half, const std::vector<double>& times,
                                                double max_variation = 0.2, const DynkinOptions& opt = {}) {
  require(g1.kind() == ModelKind::ConformalCircle && g2.kind() == ModelKind::ConformalCircle,
          "metric comparability compares two conformal circles");
  require(!times.empty(), "metric comparability: empty time sequence");
  MetricComparability out;
  const Region K1 = chart_arc_region(g1, theta_c, half), K2 = chart_arc_region(g2, theta_c, half);
  DynkinOptions o = opt;
  o.grid.clear();
  const int n = std::max(o.circle_points, 64);
  for (int i = 0; i <= n; ++i) o.grid.push_back(make_point(g1, {theta_c - half + 2.0 * half * i / n}));
  for (double t : times) {
    ComparabilityRow r;
    r.t = t;
    const DynkinEvaluator e1(g1, Potential::truncated(w, K1), {t, 0.0}, o);
    const DynkinEvaluator e2(g2, Potential::truncated(w, K2), {t, 0.0}, o);
    std::vector<Point> grid2;
    for (const auto& p : o.grid) grid2.push_back(make_point(g2, {p.c[0]}));
    const DynkinEstimate a = sup_over_grid(g1, e1, o.grid, o, &K1);
    const DynkinEstimate b = sup_over_grid(g2, e2, grid2, o, &K2);
    if (!(a.value > 0.0 && b.value > 0.0)) throw InvalidArgument("metric comparability: w vanishes on K");
    r.norm1 = a.value;
    r.norm2 = b.value;
    r.ratio = a.value / b.value;
    r.c = std::max(r.ratio, 1.0 / r.ratio);
    out.c_k = std::max(out.c_k, r.c);
    if (!out.rows.empty())
      out.max_variation = std::max(out.max_variation, std::abs(r.c - out.rows.back().c) / out.rows.back().c);
    out.rows.push_back(r);
  }
  out.pass = std::isfinite(out.c_k) && out.max_variation < max_variation;
  return out;
}

// ---------------------------------------------------------------------------
// ||1_K (w - mollify(w, eps))||_{g,t} along eps -> 0.

struct MollificationConvergence {
  std::vector<double> eps, diff;
  double reference = 0.0;  // ||1_K w||_{g,t}
  bool decreasing = false;
  bool pass = false;
};

inline MollificationConvergence mollification_convergence(const ManifoldModel& g, const Potential& w,
                                                          const Region& K, double t, const std::vector<double>& eps,
                                                          const DynkinOptions& opt = {},
                                                          const MollifyOptions& mopt = {}) {
  require(!eps.empty(), "mollification convergence: empty eps sequence");
  MollificationConvergence out;
  out.eps = eps;
  const LocalizedNorm ref = localized_norm(g, w, K, t, opt);
  if (ref.on_a.infinite) throw InvalidArgument("mollification convergence: w is not Dynkin on K");
  out.reference = ref.on_a.value;
  for (double e : eps) {
    const Potential we = mollify(g, w, e, mopt);
    const Potential d = Potential::sum({w, Potential::scaled(-1.0, we)});
    const LocalizedNorm ln = localized_norm(g, d, K, t, opt);
    out.diff.push_back(ln.on_a.value);
  }
  // decreasing in trend: least-squares slope of log diff against log eps is positive
  // and the last value is the smallest
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(out.diff[i] > 0)) continue;
    const double x = std::log(eps[i]), y = std::log(out.diff[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
  const double last = out.diff.back();
  bool last_min = true;
  for (double v : out.diff) last_min = last_min && last <= v;
  out.decreasing = (n < 2 && last == 0.0) || (slope > 0 && last_min);
  out.pass = out.decreasing && last < 0.1 * out.reference + 1e-300;
  if (out.reference == 0.0) out.pass = last == 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// t*_g and N_g = m + 4 (m-2)^2 t*_g for the curvature potential sigma_g^-.

struct NgResult {
  double t_star = 0.0;
  double n_g = 0.0;
  bool degenerate = false;  // m = 2: N_g = 2 without computing t*
  bool censored = false;    // norm below threshold on the whole window: t* is at least its end
  bool tie = false;         // a probed norm equals the threshold
  double threshold = 0.0;
  std::vector<EvidenceRow> evidence;
};

inline double n_g_formula(int m, double t_star) { return m + 4.0 * (m - 2) * (m - 2) * t_star; }

// Crossing of a nondecreasing norm(t) with 1/(3m-6), probed on `times` and
// bisected to `resolution`.
inline NgResult n_g_from_norm(int m, const std::function<double(double)>& norm, std::vector<double> times,
                              double resolution = 1e-10) {
  require(m >= 2, "N_g needs dimension >= 2");
  NgResult r;
  if (m == 2) {
    r.degenerate = true;
    r.n_g = 2.0;
    return r;
  }
  require(!times.empty(), "N_g: empty time sequence");
  std::sort(times.begin(), times.end());
  r.threshold = 1.0 / (3.0 * m - 6.0);
  double below = 0.0, above = kInf;
  for (double t : times) {
    const double v = norm(t);
    r.evidence.push_back({t, v, 0.0, !std::isfinite(v)});
    if (v == r.threshold) r.tie = true;
    if (v < r.threshold) below = std::max(below, t);
    else above = std::min(above, t);
  }
  if (below == 0.0 && !(norm(times.front() * 1e-6) < r.threshold)) {
    r.t_star = kInf;
    r.n_g = kInf;
    return r;
  }
  if (!std::isfinite(above)) {
    r.censored = true;
    r.t_star = below;
    r.n_g = n_g_formula(m, r.t_star);
    return r;
  }
  double lo = below, hi = above;
  while (hi - lo > resolution * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    const double v = norm(mid);
    if (v == r.threshold) r.tie = true;
    if (v < r.threshold) lo = mid;
    else hi = mid;
  }
  r.t_star = 0.5 * (lo + hi);
  r.n_g = n_g_formula(m, r.t_star);
  return r;
}

inline NgResult n_g_compute(const ManifoldModel& g, const std::vector<double>& times, const DynkinOptions& opt = {}) {
  const int m = g.dim();
  require(m >= 2, "N_g needs dimension >= 2");
  if (m == 2) return n_g_from_norm(m, nullptr, times);
  const Point x = origin(g);
  const double sigma = ricci_negative_part(g, x);
  NgResult r;
  if (g.homogeneous()) {
    if (sigma == 0.0) {
      r.threshold = 1.0 / (3.0 * m - 6.0);
      for (double t : times) r.evidence.push_back({t, 0.0, 0.0, false});
      r.t_star = 0.0;
      r.n_g = n_g_formula(m, 0.0);
      return r;
    }
    // bisection on the constant law sigma t, then the crossing in closed form
    r = n_g_from_norm(m, [&](double t) { return sigma * t; }, times);
    if (!r.censored && std::isfinite(r.t_star)) {
      r.t_star = r.threshold / sigma;
      r.n_g = n_g_formula(m, r.t_star);
    }
    return r;
  }
  const Potential s = Potential::constant(sigma);
  return n_g_from_norm(m, [&](double t) { return dynkin_norm(g, s, t, opt).value; }, times);
}

// ---------------------------------------------------------------------------
// Weighted-L^q inclusion chain: under an upper Gaussian bound (alpha, beta,
// gamma) and VD_loc(N) with constant a, for 0 < t < 1
//   p(t,x,y) <= alpha a e^{a} e^{gamma} t^{-N/2} mu(x,1)^{-1}.

struct InclusionChainCheck {
  double worst_ratio = 0.0;
  bool pass = false;
};

inline InclusionChainCheck inclusion_chain_check(const ManifoldModel& g, double alpha, double gamma, double N, double a,
                                                 const std::vector<KernelSample>& grid) {
  InclusionChainCheck c;
  for (const auto& s : grid) {
    require(s.t > 0 && s.t < 1, "inclusion chain: samples need 0 < t < 1");
    const double p = hk_eval(g, s.t, s.x, s.y).value;
    const double b = alpha * a * std::exp(a + gamma) * std::pow(s.t, -0.5 * N) / ball_volume(g, s.x, 1.0);
    c.worst_ratio = std::max(c.worst_ratio, p / b);
  }
  c.pass = c.worst_ratio <= 1.0 + 1e-12;
  return c;
}

}  // namespace katodyn
