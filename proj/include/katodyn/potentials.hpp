#pragma once

// Potential families w: X -> R (possibly +inf at singular centers), their
// signed parts, radial structure, the classical Euclidean Kato test and
// mollification.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "katodyn/error.hpp"
#include "katodyn/geometry.hpp"
#include "katodyn/quadrature.hpp"
#include "katodyn/verdict.hpp"

namespace katodyn {

enum class PotentialKind { Constant, Power, Log, Bump, Grid, Truncated, Sum, Scaled, Part };
enum class GridLayout { Periodic, Interval, Radial };

namespace detail {
struct PotentialNode;
}

class Potential {
 public:
  Potential();  // zero

  static Potential constant(double c);
  // d^{-a} for d <= cutoff, 0 beyond.
  static Potential power(const Point& center, double a, double cutoff = kInf);
  // log(cutoff / d) for d < cutoff, 0 beyond.
  static Potential log_singularity(const Point& center, double cutoff = 1.0);
  // height * exp(1 - 1/(1 - (d/R)^2)) for d < R.
  static Potential bump(const Point& center, double radius, double height = 1.0);
  // Linear interpolation of samples. Periodic: nodes lo + i (hi-lo)/n on the
  // chart circle. Interval: nodes lo + i (hi-lo)/(n-1), zero outside.
  // Radial: nodes r_i = i hi/(n-1) around center, zero beyond hi.
  static Potential grid_periodic(double period, std::vector<double> values);
  static Potential grid_interval(double lo, double hi, std::vector<double> values);
  static Potential grid_radial(const Point& center, double extent, std::vector<double> values);
  // Periodic samples of sum_k cos_coef[k] cos(k 2pi u/period) + sin_coef[k] sin(...).
  static Potential trig(double period, const std::vector<double>& cos_coef, const std::vector<double>& sin_coef = {},
                        int n = 1024);
  static Potential truncated(const Potential& inner, const Region& region);
  static Potential sum(std::vector<Potential> terms);
  static Potential scaled(double k, const Potential& inner);
  static Potential positive_part(const Potential& inner);
  static Potential negative_part(const Potential& inner);

  PotentialKind kind() const;
  const detail::PotentialNode& node() const { return *n_; }

  double eval(const ManifoldModel& g, const Point& x) const;
  // +1: w >= 0, -1: w <= 0, 0: w == 0, 2: both signs.
  int sign() const;
  bool is_zero() const { return sign() == 0; }
  // Upper bound for sup |w| (inf for singular families).
  double sup_abs() const;
  // Balls covering supp w, or nullopt when the support is unbounded.
  std::optional<std::vector<Ball>> support() const;
  std::vector<Point> singular_centers() const;
  // Canonical descriptor text (see config.hpp for the grammar).
  std::string describe() const;

 private:
  explicit Potential(std::shared_ptr<const detail::PotentialNode> n) : n_(std::move(n)) {}
  std::shared_ptr<const detail::PotentialNode> n_;
};

namespace detail {

struct PotentialNode {
  PotentialKind kind = PotentialKind::Constant;
  double c = 0.0;         // constant, bump height, scale factor
  double a = 0.0;         // power exponent
  double radius = kInf;   // power/log cutoff, bump radius
  bool positive = true;   // Part
  std::optional<Point> center;
  GridLayout layout = GridLayout::Periodic;
  double lo = 0.0, hi = 0.0;
  std::vector<double> values;
  Region region = Region::whole();
  std::vector<Potential> children;
};

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s == "inf") return "inf";
  return s;
}

inline std::string fmt_point(const Point& p) {
  std::string s = "[";
  for (int i = 0; i < p.dim; ++i) s += (i ? "," : "") + fmt(p.c[i]);
  return s + "]";
}

inline std::string fmt_region(const Region& r) {
  if (r.is_whole()) return "whole";
  std::string s = "union(";
  if (r.balls().size() == 1) s = "";
  for (std::size_t i = 0; i < r.balls().size(); ++i) {
    const auto& b = r.balls()[i];
    s += (i ? ", " : "") + std::string("ball(center=") + fmt_point(b.center) + ", r=" + fmt(b.radius) + ")";
  }
  return r.balls().size() == 1 ? s : s + ")";
}

inline double grid_lookup(const PotentialNode& n, double u) {
  const auto& v = n.values;
  const int N = static_cast<int>(v.size());
  switch (n.layout) {
    case GridLayout::Periodic: {
      const double L = n.hi - n.lo;
      const double s = wrap_period(u - n.lo, L) / L * N;
      int i = static_cast<int>(std::floor(s));
      double a = s - i;
      if (i >= N) {
        i = N - 1;
        a = 1.0;
      }
      return (1.0 - a) * v[i] + a * v[(i + 1) % N];
    }
    case GridLayout::Interval:
    case GridLayout::Radial: {
      const double lo = n.layout == GridLayout::Radial ? 0.0 : n.lo;
      if (u < lo || u > n.hi) return 0.0;
      const double s = (u - lo) / (n.hi - lo) * (N - 1);
      int i = std::min(static_cast<int>(std::floor(s)), N - 2);
      const double a = s - i;
      return (1.0 - a) * v[i] + a * v[i + 1];
    }
  }
  return 0.0;
}

}  // namespace detail

inline Potential::Potential() : n_(std::make_shared<const detail::PotentialNode>()) {}

inline PotentialKind Potential::kind() const { return n_->kind; }

inline Potential Potential::constant(double c) {
  require(std::isfinite(c), "constant potential must be finite");
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Constant;
  n->c = c;
  return Potential(n);
}

inline Potential Potential::power(const Point& center, double a, double cutoff) {
  require(a > 0 && std::isfinite(a), "power singularity: exponent must be positive");
  require(cutoff > 0, "power singularity: cutoff must be positive");
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Power;
  n->center = center;
  n->a = a;
  n->radius = cutoff;
  return Potential(n);
}

inline Potential Potential::log_singularity(const Point& center, double cutoff) {
  require(cutoff > 0 && std::isfinite(cutoff), "log singularity: cutoff must be positive and finite");
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Log;
  n->center = center;
  n->radius = cutoff;
  return Potential(n);
}

inline Potential Potential::bump(const Point& center, double radius, double height) {
  require(radius > 0 && std::isfinite(radius), "bump: radius must be positive");
  require(std::isfinite(height), "bump: height must be finite");
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Bump;
  n->center = center;
  n->radius = radius;
  n->c = height;
  return Potential(n);
}

inline Potential Potential::grid_periodic(double period, std::vector<double> values) {
  require(period > 0, "grid: period must be positive");
  require(values.size() >= 2, "grid: need at least two samples");
  for (double v : values) require(std::isfinite(v), "grid: samples must be finite");
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Grid;
  n->layout = GridLayout::Periodic;
  n->lo = 0.0;
  n->hi = period;
  n->values = std::move(values);
  return Potential(n);
}

inline Potential Potential::grid_interval(double lo, double hi, std::vector<double> values) {
  require(hi > lo, "grid: need lo < hi");
  require(values.size() >= 2, "grid: need at least two samples");
  for (double v : values) require(std::isfinite(v), "grid: samples must be finite");
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Grid;
  n->layout = GridLayout::Interval;
  n->lo = lo;
  n->hi = hi;
  n->values = std::move(values);
  return Potential(n);
}

inline Potential Potential::grid_radial(const Point& center, double extent, std::vector<double> values) {
  require(extent > 0, "grid: radial extent must be positive");
  require(values.size() >= 2, "grid: need at least two samples");
  for (double v : values) require(std::isfinite(v), "grid: samples must be finite");
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Grid;
  n->layout = GridLayout::Radial;
  n->center = center;
  n->lo = 0.0;
  n->hi = extent;
  n->values = std::move(values);
  return Potential(n);
}

inline Potential Potential::trig(double period, const std::vector<double>& cos_coef,
                                 const std::vector<double>& sin_coef, int n) {
  require(n >= 8, "trig: need at least 8 samples");
  std::vector<double> v(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double u = 2.0 * kPi * i / n;
    for (std::size_t k = 0; k < cos_coef.size(); ++k) v[i] += cos_coef[k] * std::cos(k * u);
    for (std::size_t k = 1; k < sin_coef.size(); ++k) v[i] += sin_coef[k] * std::sin(k * u);
  }
  return grid_periodic(period, std::move(v));
}

inline Potential Potential::truncated(const Potential& inner, const Region& region) {
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Truncated;
  n->children = {inner};
  n->region = region;
  return Potential(n);
}

inline Potential Potential::sum(std::vector<Potential> terms) {
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Sum;
  n->children = std::move(terms);
  return Potential(n);
}

inline Potential Potential::scaled(double k, const Potential& inner) {
  require(std::isfinite(k), "scale factor must be finite");
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Scaled;
  n->c = k;
  n->children = {inner};
  return Potential(n);
}

inline Potential Potential::positive_part(const Potential& inner) {
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Part;
  n->positive = true;
  n->children = {inner};
  return Potential(n);
}

inline Potential Potential::negative_part(const Potential& inner) {
  auto n = std::make_shared<detail::PotentialNode>();
  n->kind = PotentialKind::Part;
  n->positive = false;
  n->children = {inner};
  return Potential(n);
}

inline double Potential::eval(const ManifoldModel& g, const Point& x) const {
  const auto& n = *n_;
  switch (n.kind) {
    case PotentialKind::Constant: return n.c;
    case PotentialKind::Power: {
      const double d = distance(g, *n.center, x);
      if (d > n.radius) return 0.0;
      if (d == 0.0) return kInf;
      return std::pow(d, -n.a);
    }
    case PotentialKind::Log: {
      const double d = distance(g, *n.center, x);
      if (d >= n.radius) return 0.0;
      if (d == 0.0) return kInf;
      return std::log(n.radius / d);
    }
    case PotentialKind::Bump: {
      const double d = distance(g, *n.center, x);
      if (d >= n.radius) return 0.0;
      const double q = (d / n.radius) * (d / n.radius);
      return n.c * std::exp(1.0 - 1.0 / (1.0 - q));
    }
    case PotentialKind::Grid: {
      if (n.layout == GridLayout::Radial) return detail::grid_lookup(n, distance(g, *n.center, x));
      require(g.dim() == 1, "chart grid potentials need a 1-D model");
      return detail::grid_lookup(n, x.c[0]);
    }
    case PotentialKind::Truncated: return n.region.contains(g, x) ? n.children[0].eval(g, x) : 0.0;
    case PotentialKind::Sum: {
      double s = 0.0;
      for (const auto& c : n.children) s += c.eval(g, x);
      return s;
    }
    case PotentialKind::Scaled: return n.c == 0.0 ? 0.0 : n.c * n.children[0].eval(g, x);
    case PotentialKind::Part: {
      const double v = n.children[0].eval(g, x);
      return n.positive ? std::max(v, 0.0) : std::max(-v, 0.0);
    }
  }
  return 0.0;
}

inline int Potential::sign() const {
  const auto& n = *n_;
  auto of = [](double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };
  switch (n.kind) {
    case PotentialKind::Constant: return of(n.c);
    case PotentialKind::Power:
    case PotentialKind::Log: return 1;
    case PotentialKind::Bump: return of(n.c);
    case PotentialKind::Grid: {
      bool pos = false, neg = false;
      for (double v : n.values) {
        pos = pos || v > 0;
        neg = neg || v < 0;
      }
      return pos && neg ? 2 : (pos ? 1 : (neg ? -1 : 0));
    }
    case PotentialKind::Truncated: return n.children[0].sign();
    case PotentialKind::Sum: {
      int s = 0;
      for (const auto& c : n.children) {
        const int cs = c.sign();
        if (cs == 0) continue;
        if (cs == 2 || (s != 0 && s != cs)) return 2;
        s = cs;
      }
      return s;
    }
    case PotentialKind::Scaled: {
      const int s = n.children[0].sign();
      if (n.c == 0.0 || s == 0) return 0;
      if (s == 2) return 2;
      return n.c > 0 ? s : -s;
    }
    case PotentialKind::Part: {
      const int s = n.children[0].sign();
      if (s == 2) return 1;
      return (n.positive ? s == 1 : s == -1) ? 1 : 0;
    }
  }
  return 2;
}

inline double Potential::sup_abs() const {
  const auto& n = *n_;
  switch (n.kind) {
    case PotentialKind::Constant: return std::abs(n.c);
    case PotentialKind::Power:
    case PotentialKind::Log: return kInf;
    case PotentialKind::Bump: return std::abs(n.c);
    case PotentialKind::Grid: {
      double m = 0.0;
      for (double v : n.values) m = std::max(m, std::abs(v));
      return m;
    }
    case PotentialKind::Truncated:
    case PotentialKind::Part: return n.children[0].sup_abs();
    case PotentialKind::Sum: {
      double s = 0.0;
      for (const auto& c : n.children) s += c.sup_abs();
      return s;
    }
    case PotentialKind::Scaled: return n.c == 0.0 ? 0.0 : std::abs(n.c) * n.children[0].sup_abs();
  }
  return kInf;
}

inline std::optional<std::vector<Ball>> Potential::support() const {
  const auto& n = *n_;
  using Out = std::optional<std::vector<Ball>>;
  if (is_zero()) return std::vector<Ball>{};
  switch (n.kind) {
    case PotentialKind::Constant: return std::nullopt;
    case PotentialKind::Power:
    case PotentialKind::Log:
    case PotentialKind::Bump:
      if (!std::isfinite(n.radius)) return std::nullopt;
      return std::vector<Ball>{{*n.center, n.radius}};
    case PotentialKind::Grid:
      if (n.layout == GridLayout::Radial) return std::vector<Ball>{{*n.center, n.hi}};
      return std::nullopt;
    case PotentialKind::Truncated: {
      Out in = n.children[0].support();
      if (n.region.is_whole()) return in;
      if (!in) return n.region.balls();
      auto vol = [](const std::vector<Ball>& b) {
        double s = 0.0;
        for (const auto& x : b) s += x.radius;
        return s;
      };
      return vol(*in) <= vol(n.region.balls()) ? in : Out(n.region.balls());
    }
    case PotentialKind::Sum: {
      std::vector<Ball> all;
      for (const auto& c : n.children) {
        Out s = c.support();
        if (!s) return std::nullopt;
        all.insert(all.end(), s->begin(), s->end());
      }
      return all;
    }
    case PotentialKind::Scaled:
    case PotentialKind::Part: return n.children[0].support();
  }
  return std::nullopt;
}

inline std::vector<Point> Potential::singular_centers() const {
  const auto& n = *n_;
  std::vector<Point> out;
  if (n.kind == PotentialKind::Power || n.kind == PotentialKind::Log) out.push_back(*n.center);
  if (n.kind == PotentialKind::Scaled && n.c == 0.0) return out;
  for (const auto& c : n.children) {
    auto s = c.singular_centers();
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

inline std::string Potential::describe() const {
  using detail::fmt;
  using detail::fmt_point;
  const auto& n = *n_;
  switch (n.kind) {
    case PotentialKind::Constant: return "constant(" + fmt(n.c) + ")";
    case PotentialKind::Power: {
      std::string s = "power(center=" + fmt_point(*n.center) + ", a=" + fmt(n.a);
      if (std::isfinite(n.radius)) s += ", cutoff=" + fmt(n.radius);
      return s + ")";
    }
    case PotentialKind::Log: return "log(center=" + fmt_point(*n.center) + ", cutoff=" + fmt(n.radius) + ")";
    case PotentialKind::Bump:
      return "bump(center=" + fmt_point(*n.center) + ", radius=" + fmt(n.radius) + ", height=" + fmt(n.c) + ")";
    case PotentialKind::Grid: {
      std::string s = "grid(";
      if (n.layout == GridLayout::Periodic) s += "layout=periodic, period=" + fmt(n.hi);
      else if (n.layout == GridLayout::Interval) s += "layout=interval, lo=" + fmt(n.lo) + ", hi=" + fmt(n.hi);
      else s += "layout=radial, center=" + fmt_point(*n.center) + ", extent=" + fmt(n.hi);
      s += ", values=[";
      for (std::size_t i = 0; i < n.values.size(); ++i) s += (i ? "," : "") + fmt(n.values[i]);
      return s + "])";
    }
    case PotentialKind::Truncated:
      return "truncated(" + n.children[0].describe() + ", " + detail::fmt_region(n.region) + ")";
    case PotentialKind::Sum: {
      std::string s = "sum(";
      for (std::size_t i = 0; i < n.children.size(); ++i) s += (i ? ", " : "") + n.children[i].describe();
      return s + ")";
    }
    case PotentialKind::Scaled: return "scaled(" + fmt(n.c) + ", " + n.children[0].describe() + ")";
    case PotentialKind::Part: return std::string(n.positive ? "positive(" : "negative(") + n.children[0].describe() + ")";
  }
  return "?";
}

inline std::pair<double, double> eval_parts(const ManifoldModel& g, const Potential& w, const Point& x) {
  const double v = w.eval(g, x);
  if (std::isnan(v)) throw InvalidArgument("potential is undefined at this point");
  return {std::max(v, 0.0), std::max(-v, 0.0)};
}

// ---------------------------------------------------------------------------
// Radial structure: |w| written as a sum of terms, each radial around a
// center (or constant everywhere).

struct RadialTerm {
  bool global = false;  // |w| is the constant `constant` everywhere
  double constant = 0.0;
  Point center;
  double support = kInf;       // |term| vanishes beyond this distance from center
  std::vector<double> breaks;  // distances with kinks or jumps
  bool singular = false;       // unbounded at the center
  Potential piece;             // the term is |scale * piece|
  double scale = 1.0;
};

namespace detail {

struct RadialShape {
  int kind = 0;  // 0: not radial, 1: constant, 2: radial about center
  Point center;
  double support = 0.0;
  std::vector<double> breaks;
  bool singular = false;
};

inline bool same_point(const ManifoldModel& g, const Point& a, const Point& b) {
  return distance(g, a, b) <= 1e-12;
}

inline RadialShape radial_shape(const ManifoldModel& g, const Potential& w) {
  const auto& n = w.node();
  RadialShape s;
  switch (n.kind) {
    case PotentialKind::Constant:
      s.kind = 1;
      s.support = n.c == 0.0 ? 0.0 : kInf;
      return s;
    case PotentialKind::Power:
    case PotentialKind::Log:
    case PotentialKind::Bump:
      s.kind = 2;
      s.center = *n.center;
      s.support = n.radius;
      if (std::isfinite(n.radius)) s.breaks.push_back(n.radius);
      s.singular = n.kind != PotentialKind::Bump;
      return s;
    case PotentialKind::Grid:
      if (n.layout != GridLayout::Radial) return s;
      s.kind = 2;
      s.center = *n.center;
      s.support = n.hi;
      s.breaks.push_back(n.hi);
      return s;
    case PotentialKind::Truncated: {
      RadialShape in = radial_shape(g, n.children[0]);
      if (n.region.is_whole() || in.kind == 0) return n.region.is_whole() ? in : s;
      if (!n.region.single_ball()) return s;
      const Ball& b = n.region.balls()[0];
      if (in.kind == 1) {
        s.kind = 2;
        s.center = b.center;
        s.support = in.support == 0.0 ? 0.0 : b.radius;
        s.breaks = {b.radius};
        return s;
      }
      if (!same_point(g, in.center, b.center)) return s;
      in.support = std::min(in.support, b.radius);
      in.breaks.push_back(b.radius);
      return in;
    }
    case PotentialKind::Sum: {
      RadialShape acc;
      acc.kind = 1;
      for (const auto& c : n.children) {
        RadialShape cs = radial_shape(g, c);
        if (cs.kind == 0) return s;
        if (cs.kind == 1) {
          acc.support = std::max(acc.support, cs.support);
          continue;
        }
        if (acc.kind == 2 && !same_point(g, acc.center, cs.center)) return s;
        if (acc.kind == 1) {
          const double sup = acc.support;
          acc = cs;
          acc.support = std::max(sup, cs.support);
          continue;
        }
        acc.support = std::max(acc.support, cs.support);
        acc.breaks.insert(acc.breaks.end(), cs.breaks.begin(), cs.breaks.end());
        acc.singular = acc.singular || cs.singular;
      }
      return acc;
    }
    case PotentialKind::Scaled:
      if (n.c == 0.0) {
        s.kind = 1;
        return s;
      }
      return radial_shape(g, n.children[0]);
    case PotentialKind::Part: return radial_shape(g, n.children[0]);
  }
  return s;
}

}  // namespace detail

// Decompose |w| into radial terms, or nullopt when no such decomposition is
// recognized. The models must have a distance-only kernel for the terms to
// be useful; the decomposition itself is purely metric.
inline std::optional<std::vector<RadialTerm>> radial_terms(const ManifoldModel& g, const Potential& w) {
  using Out = std::optional<std::vector<RadialTerm>>;
  if (w.is_zero()) return std::vector<RadialTerm>{};
  const detail::RadialShape s = detail::radial_shape(g, w);
  if (s.kind == 1) {
    if (s.support == 0.0) return std::vector<RadialTerm>{};
    RadialTerm t;
    t.global = true;
    t.constant = std::abs(w.eval(g, origin(g)));
    t.piece = w;
    return std::vector<RadialTerm>{t};
  }
  if (s.kind == 2) {
    RadialTerm t;
    t.center = s.center;
    t.support = s.support;
    t.breaks = s.breaks;
    std::sort(t.breaks.begin(), t.breaks.end());
    t.breaks.erase(std::unique(t.breaks.begin(), t.breaks.end()), t.breaks.end());
    t.singular = s.singular;
    t.piece = w;
    if (t.support == 0.0) return std::vector<RadialTerm>{};
    return std::vector<RadialTerm>{t};
  }
  const auto& n = w.node();
  switch (n.kind) {
    case PotentialKind::Sum: {
      const int sg = w.sign();
      if (sg == 2) return std::nullopt;
      std::vector<RadialTerm> all;
      for (const auto& c : n.children) {
        Out ct = radial_terms(g, c);
        if (!ct) return std::nullopt;
        all.insert(all.end(), ct->begin(), ct->end());
      }
      return all;
    }
    case PotentialKind::Scaled: {
      Out in = radial_terms(g, n.children[0]);
      if (!in) return std::nullopt;
      for (auto& t : *in) {
        t.scale *= std::abs(n.c);
        t.constant *= std::abs(n.c);
      }
      return in;
    }
    case PotentialKind::Part: {
      const int sg = n.children[0].sign();
      if (sg == 2) return std::nullopt;
      if (n.positive ? sg == 1 : sg == -1) return radial_terms(g, n.children[0]);
      return std::vector<RadialTerm>{};
    }
    case PotentialKind::Truncated: {
      const detail::RadialShape in = detail::radial_shape(g, n.children[0]);
      if (in.kind != 1 || n.region.is_whole()) return std::nullopt;
      const auto& balls = n.region.balls();
      for (std::size_t i = 0; i < balls.size(); ++i)
        for (std::size_t j = i + 1; j < balls.size(); ++j)
          if (distance(g, balls[i].center, balls[j].center) <= balls[i].radius + balls[j].radius) return std::nullopt;
      std::vector<RadialTerm> all;
      for (const auto& b : balls) {
        Out t = radial_terms(g, Potential::truncated(n.children[0], Region::ball(b.center, b.radius)));
        if (!t) return std::nullopt;
        all.insert(all.end(), t->begin(), t->end());
      }
      return all;
    }
    default: return std::nullopt;
  }
}

// |term| at distance r from its center.
inline double radial_profile(const ManifoldModel& g, const RadialTerm& t, double r) {
  if (t.global) return t.constant;
  if (r > t.support) return 0.0;
  return t.scale * std::abs(t.piece.eval(g, geodesic_point(g, t.center, r)));
}

// Signed value of a potential radial about `center` at distance r.
inline double radial_signed(const ManifoldModel& g, const Potential& w, const Point& center, double r) {
  return w.eval(g, geodesic_point(g, center, r));
}

// ---------------------------------------------------------------------------
// Angular averages.

namespace detail {

// Orthonormal tangent frame at x in the coordinates exp_map expects.
inline std::vector<std::vector<double>> tangent_frame(const ManifoldModel& g, const Point& x) {
  const int m = g.dim();
  std::vector<std::vector<double>> frame;
  switch (g.kind()) {
    case ModelKind::Euclidean:
    case ModelKind::Torus:
      for (int i = 0; i < m; ++i) {
        std::vector<double> v(m, 0.0);
        v[i] = 1.0;
        frame.push_back(v);
      }
      return frame;
    case ModelKind::Sphere: {
      if (m == 1) return {{1.0}};
      const auto u = sphere_embed(x);
      for (int i = 0; i <= m && static_cast<int>(frame.size()) < m; ++i) {
        std::vector<double> v(m + 1, 0.0);
        v[i] = 1.0;
        double d = 0.0;
        for (int j = 0; j <= m; ++j) d += v[j] * u[j];
        for (int j = 0; j <= m; ++j) v[j] -= d * u[j];
        for (const auto& f : frame) {
          double p = 0.0;
          for (int j = 0; j <= m; ++j) p += v[j] * f[j];
          for (int j = 0; j <= m; ++j) v[j] -= p * f[j];
        }
        double nv = 0.0;
        for (double c : v) nv += c * c;
        nv = std::sqrt(nv);
        if (nv < 1e-6) continue;
        for (double& c : v) c /= nv;
        frame.push_back(v);
      }
      return frame;
    }
    case ModelKind::Hyperbolic: {
      const double k = g.kappa();
      std::vector<double> X(m + 1);
      X[0] = hyperboloid_x0(g, x);
      for (int i = 0; i < m; ++i) X[i + 1] = x.c[i];
      auto mink = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = -a[0] * b[0];
        for (int i = 1; i <= m; ++i) s += a[i] * b[i];
        return s;
      };
      for (int i = 1; i <= m; ++i) {
        std::vector<double> v(m + 1, 0.0);
        v[i] = 1.0;
        const double d = mink(v, X);
        for (int j = 0; j <= m; ++j) v[j] += k * d * X[j];
        for (const auto& f : frame) {
          const double p = mink(v, f);
          for (int j = 0; j <= m; ++j) v[j] -= p * f[j];
        }
        const double nv = std::sqrt(mink(v, v));
        for (double& c : v) c /= nv;
        frame.push_back(v);
      }
      return frame;
    }
    case ModelKind::ConformalCircle: return {{1.0}};
  }
  return frame;
}

struct AngularRule {
  std::vector<std::vector<double>> coef;  // direction = sum_i coef[i] frame[i]
  std::vector<double> weight;             // sums to 1
};

inline AngularRule angular_rule(int m, int n_phi = 96, int n_z = 32) {
  AngularRule r;
  if (m == 1) {
    r.coef = {{1.0}, {-1.0}};
    r.weight = {0.5, 0.5};
    return r;
  }
  if (m == 2) {
    for (int j = 0; j < n_phi; ++j) {
      const double a = 2.0 * kPi * (j + 0.5) / n_phi;
      r.coef.push_back({std::cos(a), std::sin(a)});
      r.weight.push_back(1.0 / n_phi);
    }
    return r;
  }
  require(m == 3, "angular averages are implemented for dimension <= 3");
  std::vector<double> z, wz;
  gauss_legendre(n_z, z, wz);
  for (int i = 0; i < n_z; ++i) {
    const double s = std::sqrt(1.0 - z[i] * z[i]);
    for (int j = 0; j < n_phi; ++j) {
      const double a = 2.0 * kPi * (j + 0.5) / n_phi;
      r.coef.push_back({s * std::cos(a), s * std::sin(a), z[i]});
      r.weight.push_back(0.5 * wz[i] / n_phi);
    }
  }
  return r;
}

}  // namespace detail

// Mean of f over the geodesic sphere S(x, r) by a fixed angular rule.
template <class F>
double sphere_average(const ManifoldModel& g, const Point& x, double r, F&& f, const detail::AngularRule& rule,
                      const std::vector<std::vector<double>>& frame) {
  if (r == 0.0) return f(x);
  double s = 0.0;
  const std::size_t amb = frame[0].size();
  std::vector<double> v(amb);
  for (std::size_t k = 0; k < rule.coef.size(); ++k) {
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = 0; i < rule.coef[k].size(); ++i)
      for (std::size_t j = 0; j < amb; ++j) v[j] += rule.coef[k][i] * frame[i][j];
    s += rule.weight[k] * f(exp_map(g, x, v, r));
  }
  return s;
}

namespace detail {

inline double sphere_constant(int m) { return std::sqrt(kPi) * std::tgamma(0.5 * (m - 1)) / std::tgamma(0.5 * m); }

// Mean over S(x, r) in R^m of f(|y - c|), with |x - c| = rho.
template <class F>
QuadResult euclid_sphere_average(int m, F&& f, double rho, double r, const std::vector<double>& breaks, bool singular,
                                 const PanelOptions& popt) {
  QuadResult out;
  if (rho == 0.0 || r == 0.0) {
    out.value = f(std::max(rho, r));
    if (!std::isfinite(out.value)) return infinite_result();
    return out;
  }
  if (m == 1) {
    out.value = 0.5 * (f(std::abs(rho - r)) + f(rho + r));
    if (!std::isfinite(out.value)) return infinite_result();
    return out;
  }
  const double lo = std::abs(rho - r), hi = rho + r;
  if (m == 3) {
    std::vector<double> sing;
    if (singular && lo == 0.0) sing.push_back(0.0);
    auto h = [&](double s) { return f(s) * s; };
    QuadResult q = integrate_pieces(h, lo, hi, breaks, sing, popt);
    if (!q.finite) return q;
    q.value /= 2.0 * rho * r;
    q.error /= 2.0 * rho * r;
    return q;
  }
  auto dist = [&](double psi) {
    const double sp = std::sin(0.5 * psi);
    return std::sqrt((rho - r) * (rho - r) + 4.0 * rho * r * sp * sp);
  };
  auto h = [&](double psi) {
    const double w = m == 2 ? 1.0 : std::pow(std::sin(psi), m - 2);
    return f(dist(psi)) * w;
  };
  std::vector<double> pb;
  for (double b : breaks) {
    const double q = (b * b - (rho - r) * (rho - r)) / (4.0 * rho * r);
    if (q > 0.0 && q < 1.0) pb.push_back(2.0 * std::asin(std::sqrt(q)));
  }
  std::vector<double> sing;
  if (singular && lo == 0.0) sing.push_back(0.0);
  else {
    const double pw = std::min(kPi, 2.0 * std::max(lo, 1e-300) / std::sqrt(rho * r));
    for (double p = pw; p < kPi; p *= 4.0) pb.push_back(p);
  }
  QuadResult q = integrate_pieces(h, 0.0, kPi, pb, sing, popt);
  if (!q.finite) return q;
  const double cm = sphere_constant(m);
  q.value /= cm;
  q.error /= cm;
  return q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classical Euclidean Kato test: sup_x int_{|x-y|<r} k_m(|x-y|) |w(y)| dy with
// k_m = d^{2-m} (m >= 3), log(1/d) (m = 2); for m = 1 the unit-window sup
// sup_x int_{x-1}^{x+1} |w| is evaluated once and Kato means finite.

struct ClassicalKatoOptions {
  std::vector<double> radii = dyadic_sequence(1.0, 8);
  std::vector<Point> grid;  // empty: ray from each radial center, or a box grid
  int grid_points = 9;
  double tol = 1e-8;
  VerdictRule rule{};
};

namespace detail {

inline double classical_kernel(int m, double d) {
  if (m == 2) return d < 1.0 ? std::log(1.0 / d) : 0.0;
  return std::pow(d, 2 - m);
}

inline PanelOptions panel_options(double tol) {
  PanelOptions p;
  p.quad.rel_tol = tol;
  p.quad.abs_tol = 1e-300;
  p.quad.max_intervals = 2000;
  return p;
}

inline std::vector<Point> default_support_grid(const ManifoldModel& g, const Potential& w, int n, double collar) {
  std::vector<Point> grid;
  auto sup = w.support();
  auto terms = radial_terms(g, w);
  if (terms && terms->size() == 1 && !(*terms)[0].global && std::isfinite((*terms)[0].support)) {
    const auto& t = (*terms)[0];
    const double R = t.support + collar;
    for (int j = 0; j < n; ++j) grid.push_back(geodesic_point(g, t.center, R * j / (n - 1)));
    grid.push_back(geodesic_point(g, t.center, t.support));
    return grid;
  }
  if (!sup || sup->empty()) {
    grid.push_back(origin(g));
    return grid;
  }
  for (const auto& b : *sup) {
    const double R = b.radius + collar;
    grid.push_back(b.center);
    for (int axis = 0; axis < g.dim(); ++axis)
      for (int j = 1; j < n; ++j) grid.push_back(geodesic_point(g, b.center, R * j / (n - 1), axis));
  }
  return grid;
}

}  // namespace detail

inline KatoVerdict classical_kato_test_euclidean(const ManifoldModel& g, const Potential& w,
                                                 const ClassicalKatoOptions& opt = {}) {
  require(g.kind() == ModelKind::Euclidean, "classical Kato test needs a Euclidean model");
  require(!opt.radii.empty(), "classical Kato test: empty radius sequence");
  const int m = g.dim();
  const PanelOptions popt = detail::panel_options(opt.tol);
  std::vector<Point> grid = opt.grid;
  if (grid.empty()) grid = detail::default_support_grid(g, w, opt.grid_points, 1.0);
  const auto terms = radial_terms(g, w);
  const auto sing = w.singular_centers();

  if (m == 1) {
    double best = 0.0;
    bool inf = false;
    for (const auto& x : grid) {
      std::vector<double> br, sg;
      for (const auto& c : sing) sg.push_back(c.c[0]);
      if (terms)
        for (const auto& t : *terms)
          if (!t.global) {
            br.push_back(t.center.c[0] - t.support);
            br.push_back(t.center.c[0] + t.support);
            for (double b : t.breaks) {
              br.push_back(t.center.c[0] - b);
              br.push_back(t.center.c[0] + b);
            }
          }
      auto f = [&](double y) { return std::abs(w.eval(g, make_point(g, {y}))); };
      QuadResult q = integrate_pieces(f, x.c[0] - 1.0, x.c[0] + 1.0, br, sg, popt);
      if (!q.finite) inf = true;
      else best = std::max(best, q.value);
    }
    std::vector<EvidenceRow> rows;
    for (double r : opt.radii) rows.push_back({r, inf ? kInf : best, 0.0, inf});
    KatoVerdict v;
    v.evidence = rows;
    v.verdict = inf ? Verdict::NotDynkin : Verdict::Kato;
    v.reason = inf ? "unit-window integral diverges" : "unit-window integral is finite";
    return v;
  }

  auto integral_at = [&](const Point& x, double r) -> QuadResult {
    if (terms) {
      QuadResult tot;
      for (const auto& t : *terms) {
        QuadResult q;
        if (t.global) {
          auto f = [&](double s) { return detail::classical_kernel(m, s) * unit_sphere_area(m) * std::pow(s, m - 1); };
          q = integrate_from_zero(f, r, popt);
          q.value *= t.constant;
          q.error *= t.constant;
        } else {
          const double rho = distance(g, x, t.center);
          auto prof = [&](double s) { return radial_profile(g, t, s); };
          auto f = [&](double s) {
            QuadResult a = detail::euclid_sphere_average(m, prof, rho, s, t.breaks, t.singular, popt);
            if (!a.finite) return kInf;
            return detail::classical_kernel(m, s) * unit_sphere_area(m) * std::pow(s, m - 1) * a.value;
          };
          std::vector<double> br;
          for (double b : t.breaks) {
            if (rho + b < r) br.push_back(rho + b);
            if (std::abs(rho - b) < r) br.push_back(std::abs(rho - b));
          }
          std::vector<double> sg{0.0};
          if (t.singular && rho > 0.0 && rho < r) sg.push_back(rho);
          if (rho > 0.0 && rho < r) br.push_back(rho);
          const double top = std::min(r, rho + t.support);
          const double bottom = std::max(0.0, rho - t.support);
          if (top <= bottom) continue;
          if (bottom > 0.0) {
            sg.erase(sg.begin());
            q = integrate_pieces(f, bottom, top, br, sg, popt);
          } else {
            q = integrate_pieces(f, 0.0, top, br, sg, popt);
          }
        }
        if (!q.finite) return q;
        tot.value += q.value;
        tot.error += q.error;
        tot.evaluations += q.evaluations;
      }
      return tot;
    }
    require(m <= 3, "classical Kato test: non-radial potentials need dimension <= 3");
    const auto rule = detail::angular_rule(m);
    const auto frame = detail::tangent_frame(g, x);
    auto f = [&](double s) {
      const double a = sphere_average(g, x, s, [&](const Point& y) { return std::abs(w.eval(g, y)); }, rule, frame);
      return detail::classical_kernel(m, s) * unit_sphere_area(m) * std::pow(s, m - 1) * a;
    };
    return integrate_from_zero(f, r, popt);
  };

  std::vector<EvidenceRow> rows;
  for (double r : opt.radii) {
    EvidenceRow row;
    row.scale = r;
    for (const auto& x : grid) {
      QuadResult q = integral_at(x, r);
      if (!q.finite) {
        row.infinite = true;
        row.value = kInf;
        break;
      }
      if (q.value > row.value) {
        row.value = q.value;
        row.error = q.error;
      }
    }
    rows.push_back(row);
  }
  return classify_sequence(std::move(rows), opt.rule);
}

// ---------------------------------------------------------------------------
// Mollification with eta(z) = C exp(-1/(1-|z|^2)), scaled to width eps.

struct MollifyOptions {
  int mesh = 257;
  // chart window [lo, hi] for Euclidean(1); ignored elsewhere
  double lo = 0.0, hi = 0.0;
  double tol = 1e-8;
};

namespace detail {

inline double mollifier_profile(double z) { return z < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0; }

// int_{|z|<1} exp(-1/(1-|z|^2)) dz in R^m.
inline double mollifier_mass(int m) {
  auto f = [&](double r) { return mollifier_profile(r) * (m == 1 ? 2.0 : unit_sphere_area(m) * std::pow(r, m - 1)); };
  QuadOptions opt;
  opt.rel_tol = 1e-14;
  opt.abs_tol = 1e-300;
  return integrate(f, 0.0, 1.0, opt).value;
}

}  // namespace detail

inline Potential mollify(const ManifoldModel& g, const Potential& w, double eps, const MollifyOptions& opt = {}) {
  require(eps > 0 && std::isfinite(eps), "mollify: eps must be positive");
  require(opt.mesh >= 8, "mollify: mesh must have at least 8 nodes");
  const auto& n = w.node();
  if (n.kind == PotentialKind::Constant || w.is_zero()) return w;
  const PanelOptions popt = detail::panel_options(opt.tol);
  const int m = g.dim();

  if (m == 1 && g.kind() != ModelKind::ConformalCircle) {
    const bool periodic = g.compact();
    const double scale = g.kind() == ModelKind::Sphere ? g.radius() : 1.0;
    double lo = opt.lo, hi = opt.hi;
    if (periodic) {
      lo = 0.0;
      hi = g.chart_period();
    } else {
      require(hi > lo, "mollify: Euclidean(1) needs a chart window lo < hi");
      auto sup = w.support();
      require(sup.has_value(), "mollify: window cannot contain an unbounded support");
      for (const auto& b : *sup)
        require(b.center.c[0] - b.radius - eps >= lo && b.center.c[0] + b.radius + eps <= hi,
                "mollify: window does not contain the support plus eps padding");
    }
    const double C = 1.0 / detail::mollifier_mass(1);
    std::vector<double> sing_chart;
    for (const auto& c : w.singular_centers()) sing_chart.push_back(c.c[0]);
    std::vector<double> brk_chart;
    if (auto terms = radial_terms(g, w))
      for (const auto& t : *terms) {
        if (t.global) continue;
        for (double b : t.breaks) {
          brk_chart.push_back(t.center.c[0] - b / scale);
          brk_chart.push_back(t.center.c[0] + b / scale);
        }
      }
    const int N = opt.mesh;
    std::vector<double> vals(N);
    for (int i = 0; i < N; ++i) {
      const double u = periodic ? lo + (hi - lo) * i / N : lo + (hi - lo) * i / (N - 1);
      auto f = [&](double s) {
        const double y = u - s / scale;
        return C / eps * detail::mollifier_profile(std::abs(s) / eps) * w.eval(g, make_point(g, {y}));
      };
      std::vector<double> sg, br{0.0};
      auto offsets = [&](const std::vector<double>& pts, std::vector<double>& out) {
        for (double p : pts) {
          for (int k = -1; k <= 1; ++k) {
            const double y = p + (periodic ? k * (hi - lo) : 0.0);
            const double s = (u - y) * scale;
            if (s > -eps && s < eps) out.push_back(s);
            if (!periodic) break;
          }
        }
      };
      offsets(sing_chart, sg);
      offsets(brk_chart, br);
      QuadResult q = integrate_pieces(f, -eps, eps, br, sg, popt);
      require(q.finite, "mollify: potential is not locally integrable");
      vals[i] = q.value;
    }
    return periodic ? Potential::grid_periodic(hi - lo, std::move(vals))
                    : Potential::grid_interval(lo, hi, std::move(vals));
  }

  require(g.kind() == ModelKind::Euclidean, "mollify: supported on 1-D models and radial Euclidean potentials");
  const detail::RadialShape s = detail::radial_shape(g, w);
  require(s.kind == 2 && std::isfinite(s.support), "mollify: needs a compactly supported radial potential");
  const Point c = s.center;
  const double C = 1.0 / detail::mollifier_mass(m);
  const double extent = s.support + eps;
  const int N = opt.mesh;
  auto prof = [&](double r) { return radial_signed(g, w, c, r); };
  std::vector<double> vals(N);
  for (int i = 0; i < N; ++i) {
    const double rho = extent * i / (N - 1);
    auto f = [&](double r) {
      QuadResult a = detail::euclid_sphere_average(m, prof, rho, r, s.breaks, s.singular, popt);
      if (!a.finite) return kInf;
      const double area = m == 1 ? 2.0 : unit_sphere_area(m) * std::pow(r, m - 1);
      return C * std::pow(eps, -m) * detail::mollifier_profile(r / eps) * area * a.value;
    };
    std::vector<double> br;
    for (double b : s.breaks) {
      if (std::abs(rho - b) < eps) br.push_back(std::abs(rho - b));
      if (rho + b < eps) br.push_back(rho + b);
    }
    std::vector<double> sg;
    if (s.singular && rho > 0.0 && rho < eps) sg.push_back(rho);
    QuadResult q = integrate_pieces(f, 0.0, eps, br, sg, popt);
    require(q.finite, "mollify: potential is not locally integrable");
    vals[i] = q.value;
  }
  vals.back() = 0.0;
  return Potential::grid_radial(c, extent, std::move(vals));
}

}  // namespace katodyn
