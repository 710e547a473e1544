#pragma once

// Schroedinger semigroups e^{-tH} for H = -Delta + w: a dense spectral oracle
// on compact 1-D models, Feynman-Kac fields, exhaustion and continuity probes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "katodyn/dynkin.hpp"
#include "katodyn/error.hpp"
#include "katodyn/geometry.hpp"
#include "katodyn/potentials.hpp"
#include "katodyn/spectral.hpp"
#include "katodyn/stochastics.hpp"

namespace katodyn {

using Field = std::function<double(const Point&)>;

struct SpectralOracle {
  ManifoldModel model = ManifoldModel::euclidean(1);
  Potential w = Potential::constant(0.0);
  CircleEigen eig;
  std::vector<double> w_nodes;
  double orthonormality_error = 0.0;

  int mesh() const { return eig.mesh.n; }

  // Coefficients <phi_k, psi>_M of node values.
  Eigen::VectorXd project(const std::vector<double>& psi) const {
    const int n = mesh();
    require(static_cast<int>(psi.size()) == n, "spectral oracle: node vector has the wrong size");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += eig.mesh.weight[i] * eig.vec(i, k) * psi[i];
      c(k) = s;
    }
    return c;
  }

  std::vector<double> nodes(const Field& f) const {
    std::vector<double> v(mesh());
    for (int i = 0; i < mesh(); ++i) v[i] = f(make_point(model, {eig.mesh.theta[i]}));
    return v;
  }

  // e^{-tH} psi at the mesh nodes.
  std::vector<double> apply(const std::vector<double>& psi, double t) const {
    require(t >= 0, "spectral oracle: t must be nonnegative");
    const Eigen::VectorXd c = project(psi);
    Eigen::VectorXd d(mesh());
    for (int k = 0; k < mesh(); ++k) d(k) = std::exp(-eig.lambda(k) * t) * c(k);
    const Eigen::VectorXd u = eig.vec * d;
    return {u.data(), u.data() + u.size()};
  }

  // Linear interpolation of node values at x.
  double interpolate(const std::vector<double>& u, const Point& x) const {
    const Stencil s = locate(eig.mesh, x.c[0]);
    return (1.0 - s.a) * u[s.i0] + s.a * u[s.i1];
  }

  // Weighted inner product of node vectors.
  double inner(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0.0;
    for (int i = 0; i < mesh(); ++i) s += eig.mesh.weight[i] * a[i] * b[i];
    return s;
  }
};

inline SpectralOracle spectral_oracle(const ManifoldModel& g, const Potential& w, int mesh = 512) {
  require(g.is_circle(), "spectral oracle needs a compact 1-D model");
  SpectralOracle o;
  o.model = g;
  o.w = w;
  const CircleMesh m = circle_mesh(g, mesh);
  o.w_nodes.resize(mesh);
  for (int i = 0; i < mesh; ++i) {
    o.w_nodes[i] = w.eval(g, make_point(g, {m.theta[i]}));
    if (!std::isfinite(o.w_nodes[i])) throw InvalidArgument("spectral oracle: w is unbounded at a mesh node; mollify it first");
  }
  o.eig = circle_eigen(g, mesh, o.w_nodes);
  // M-orthonormality of the eigenvectors
  Eigen::MatrixXd V = o.eig.vec;
  for (int i = 0; i < mesh; ++i) V.row(i) *= std::sqrt(o.eig.mesh.weight[i]);
  o.orthonormality_error = (V.transpose() * V - Eigen::MatrixXd::Identity(mesh, mesh)).cwiseAbs().maxCoeff();
  if (o.orthonormality_error > 1e-10) throw ConvergenceError("spectral oracle: eigenvectors are not orthonormal");
  return o;
}

enum class FieldMethod { Spectral, MonteCarlo };

inline const char* to_string(FieldMethod m) { return m == FieldMethod::Spectral ? "spectral" : "monte_carlo"; }

struct SemigroupField {
  std::vector<double> times;
  std::vector<Point> points;
  std::vector<std::vector<double>> values;  // [time][point]
  std::vector<std::vector<double>> errors;
  FieldMethod method = FieldMethod::Spectral;
};

inline void check_times(const std::vector<double>& times) {
  require(!times.empty(), "semigroup field: empty time grid");
  require(times[0] > 0, "semigroup field: times must be positive");
  for (std::size_t i = 1; i < times.size(); ++i) require(times[i] > times[i - 1], "semigroup field: times must increase");
}

inline SemigroupField spectral_field(const SpectralOracle& o, const Field& psi, const std::vector<double>& times,
                                     const std::vector<Point>& points) {
  check_times(times);
  SemigroupField f;
  f.times = times;
  f.points = points;
  f.method = FieldMethod::Spectral;
  const auto p = o.nodes(psi);
  for (double t : times) {
    const auto u = o.apply(p, t);
    std::vector<double> row;
    for (const auto& x : points) row.push_back(o.interpolate(u, x));
    f.values.push_back(row);
    f.errors.emplace_back(points.size(), 0.0);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Feynman-Kac fields with common random numbers across grid nodes.

struct FkPrecheck {
  double t0 = 0.0, norm = 0.0, bound = 1.0;
  bool needed = false;
};

// Khashminski precheck for 2 w^-: largest dyadic t0 <= t with ||2 w^-||_{g,t0} < 1.
inline FkPrecheck fk_precheck(const ManifoldModel& g, const Potential& w, double t, const DynkinOptions& opt = {}) {
  FkPrecheck p;
  if (w.sign() == 0 || w.sign() == 1) return p;
  p.needed = true;
  const Potential neg2 = Potential::scaled(2.0, Potential::negative_part(w));
  double t0 = std::min(t, 100.0);
  for (int k = 0; k < 40 && t0 >= 1e-6; ++k, t0 *= 0.5) {
    const DynkinEstimate e = dynkin_norm(g, neg2, t0, opt);
    if (!e.infinite && e.value < 1.0) {
      p.t0 = t0;
      p.norm = e.value;
      p.bound = khashminski_bound(e.value, t0, t);
      return p;
    }
  }
  throw PreconditionError("Feynman-Kac: Khashminski precheck fails for 2 w^-");
}

inline SemigroupField fk_semigroup(const ManifoldModel& g, const Potential& w, const Field& psi,
                                   const std::vector<double>& times, const std::vector<Point>& points,
                                   const McOptions& o = {}, FkPrecheck* pre = nullptr) {
  check_times(times);
  require(o.paths >= 100, "Monte Carlo needs at least 100 paths");
  const double T = times.back();
  check_dt(times.front(), o.dt);
  const FkPrecheck pc = fk_precheck(g, w, T);
  if (pre) *pre = pc;
  const int n = step_count(T, o.dt);
  const double h = T / n;
  std::vector<int> idx;
  for (double t : times) {
    const int i = static_cast<int>(std::lround(t / h));
    require(std::abs(i * h - t) < 1e-9 * std::max(1.0, t), "fk_semigroup: times must be multiples of dt");
    idx.push_back(i);
  }
  CappedPotential cw(g, w, h);
  SemigroupField f;
  f.times = times;
  f.points = points;
  f.method = FieldMethod::MonteCarlo;
  f.values.assign(times.size(), std::vector<double>(points.size(), 0.0));
  f.errors = f.values;
  const std::size_t nt = times.size();
  for (std::size_t j = 0; j < points.size(); ++j) {
    const Point x = points[j];
    check_point(g, x);
    std::vector<std::vector<double>> per(nt, std::vector<double>(o.paths));
    detail::per_path(o.paths, o.threads, [&](long k) {
      auto rng = path_rng(o.seed, static_cast<std::uint64_t>(k));
      double integral = 0.0, prev = 0.0;
      std::size_t next = 0;
      bool alive = true;
      detail::walk(g, x, n, h, rng, [&](int i, const Point& y) {
        if (!o.domain.is_whole() && !o.domain.contains(g, y)) alive = false;
        if (!alive) {
          for (; next < nt; ++next) per[next][k] = 0.0;
          return false;
        }
        const double v = cw(y);
        if (i > 0) integral += 0.5 * h * (prev + v);
        prev = v;
        while (next < nt && idx[next] == i) {
          if (-integral > 700.0)
            throw ConvergenceError("Feynman-Kac weight overflows; the Khashminski precheck for the negative part fails");
          per[next][k] = std::exp(-integral) * psi(y);
          ++next;
        }
        return next < nt;
      });
      return 0.0;
    });
    for (std::size_t i = 0; i < nt; ++i) {
      const MeanStd ms = mean_and_stderr(per[i]);
      f.values[i][j] = ms.mean;
      f.errors[i][j] = ms.stderr_;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Exhaustion by balls U_l: sup over (t, x) in I x K of |u_free - u_killed,l|,
// with per-path differences from the same free paths.

struct ExhaustionRow {
  double radius = 0.0, deviation = 0.0, stderr_ = 0.0;
};

struct ExhaustionResult {
  std::vector<ExhaustionRow> rows;
  bool decreasing = false;
  bool pass = false;
};

inline ExhaustionResult exhaustion_convergence(const ManifoldModel& g, const Potential& w, const Field& psi,
                                               const Point& center, const std::vector<double>& radii,
                                               const std::vector<double>& times, const std::vector<Point>& K,
                                               const McOptions& o = {}, double tol = 1e-2) {
  check_times(times);
  require(!radii.empty() && !K.empty(), "exhaustion: need radii and compact samples");
  for (std::size_t i = 1; i < radii.size(); ++i) require(radii[i] > radii[i - 1], "exhaustion: radii must increase");
  for (const auto& x : K)
    require(distance(g, center, x) < radii.front(), "exhaustion: K is not contained in the smallest domain");
  fk_precheck(g, w, times.back());
  const double T = times.back();
  const int n = step_count(T, o.dt);
  const double h = T / n;
  std::vector<int> idx;
  for (double t : times) {
    const int i = static_cast<int>(std::lround(t / h));
    require(std::abs(i * h - t) < 1e-9 * std::max(1.0, t), "exhaustion: times must be multiples of dt");
    idx.push_back(i);
  }
  CappedPotential cw(g, w, h);
  const std::size_t nr = radii.size(), nt = times.size();
  ExhaustionResult res;
  res.rows.resize(nr);
  for (std::size_t l = 0; l < nr; ++l) res.rows[l].radius = radii[l];
  for (const auto& x : K) {
    // diff[l][i][k] = weight * psi * 1{zeta_l <= t_i}
    std::vector<std::vector<std::vector<double>>> diff(nr, std::vector<std::vector<double>>(nt, std::vector<double>(o.paths)));
    detail::per_path(o.paths, o.threads, [&](long k) {
      auto rng = path_rng(o.seed, static_cast<std::uint64_t>(k));
      double integral = 0.0, prev = 0.0, far = 0.0;
      std::size_t next = 0;
      detail::walk(g, x, n, h, rng, [&](int i, const Point& y) {
        const double v = cw(y);
        if (i > 0) integral += 0.5 * h * (prev + v);
        prev = v;
        far = std::max(far, distance(g, center, y));
        while (next < nt && idx[next] == i) {
          const double val = std::exp(-integral) * psi(y);
          for (std::size_t l = 0; l < nr; ++l) diff[l][next][k] = far >= radii[l] ? val : 0.0;
          ++next;
        }
        return next < nt;
      });
      return 0.0;
    });
    for (std::size_t l = 0; l < nr; ++l)
      for (std::size_t i = 0; i < nt; ++i) {
        const MeanStd ms = mean_and_stderr(diff[l][i]);
        if (std::abs(ms.mean) >= res.rows[l].deviation) {
          res.rows[l].deviation = std::abs(ms.mean);
          res.rows[l].stderr_ = ms.stderr_;
        }
      }
  }
  bool mono = true;
  for (std::size_t l = 1; l < nr; ++l)
    mono = mono && res.rows[l].deviation <= res.rows[l - 1].deviation + 3.0 * std::hypot(res.rows[l].stderr_, res.rows[l - 1].stderr_);
  res.decreasing = mono && res.rows.back().deviation <= res.rows.front().deviation;
  res.pass = res.decreasing && res.rows.back().deviation <= std::max(3.0 * res.rows.back().stderr_, tol);
  return res;
}

// ---------------------------------------------------------------------------
// Discrete moduli of continuity on refining grids.

struct ContinuityRow {
  double spacing = 0.0;
  double max_jump = 0.0;   // max |Delta u| over adjacent nodes
  double modulus = 0.0;    // max |Delta u| / spacing
  double noise = 0.0;      // 3 sigma of the largest jump
};

struct ContinuityProbe {
  std::vector<ContinuityRow> rows;
  bool pass = false;
};

// Each level is a field on a 1-parameter grid of points (adjacent in order)
// and increasing times; spacing is the largest adjacent distance in x and t.
inline ContinuityProbe continuity_probe(const ManifoldModel& g, const std::vector<SemigroupField>& levels) {
  require(levels.size() >= 3, "continuity probe: need at least 3 refinement levels");
  ContinuityProbe p;
  for (const auto& f : levels) {
    ContinuityRow r;
    const std::size_t nt = f.times.size(), nx = f.points.size();
    auto consider = [&](double du, double e1, double e2, double h) {
      const double a = std::abs(du);
      if (a > r.max_jump) {
        r.max_jump = a;
        r.noise = 3.0 * std::hypot(e1, e2);
      }
      if (h > 0) r.modulus = std::max(r.modulus, a / h);
      r.spacing = std::max(r.spacing, h);
    };
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t j = 1; j < nx; ++j)
        consider(f.values[i][j] - f.values[i][j - 1], f.errors[i][j], f.errors[i][j - 1],
                 distance(g, f.points[j], f.points[j - 1]));
    for (std::size_t i = 1; i < nt; ++i)
      for (std::size_t j = 0; j < nx; ++j)
        consider(f.values[i][j] - f.values[i - 1][j], f.errors[i][j], f.errors[i - 1][j], f.times[i] - f.times[i - 1]);
    p.rows.push_back(r);
  }
  bool ok = true;
  for (std::size_t l = 1; l < p.rows.size(); ++l) {
    const auto &a = p.rows[l - 1], &b = p.rows[l];
    ok = ok && b.max_jump < a.max_jump - std::max(a.noise, b.noise);
    ok = ok && std::isfinite(b.modulus) && b.modulus <= 2.0 * a.modulus + 1e-12;
  }
  p.pass = ok;
  return p;
}

// Tensor grid on the chart interval [a, b] x [t_lo, t_hi] with 2^level + 1
// nodes per axis.
inline void refining_grid(const ManifoldModel& g, double a, double b, double t_lo, double t_hi, int level,
                          std::vector<Point>& points, std::vector<double>& times) {
  require(g.dim() == 1, "refining grids are 1-D in space");
  const int n = (1 << level) + 1;
  points.clear();
  times.clear();
  for (int i = 0; i < n; ++i) {
    points.push_back(make_point(g, {a + (b - a) * i / (n - 1)}));
    times.push_back(t_lo + (t_hi - t_lo) * i / (n - 1));
  }
}

}  // namespace katodyn
