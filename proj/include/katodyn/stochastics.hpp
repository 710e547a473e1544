#pragma once

// Brownian motion for the generator Delta on the catalog models, path
// functionals and Monte Carlo estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "katodyn/dynkin.hpp"
#include "katodyn/error.hpp"
#include "katodyn/geometry.hpp"
#include "katodyn/potentials.hpp"

namespace katodyn {

// Variance per unit time and coordinate of the increments (generator Delta).
inline constexpr double kGeneratorVariance = 2.0;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent substream for path `index` under `seed`.
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed), b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq sq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                   static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(sq);
}

// Box-Muller on 53-bit uniforms; fixed across standard libraries.
class Normal {
 public:
  double operator()(std::mt19937_64& rng) {
    if (has_) {
      has_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    } while (u1 == 0.0);
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  double spare_ = 0.0;
  bool has_ = false;
};

// Order-fixed pairwise sum.
inline double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

struct MeanStd {
  double mean = 0.0, stderr_ = 0.0;
};

inline MeanStd mean_and_stderr(const std::vector<double>& v) {
  MeanStd r;
  const std::size_t n = v.size();
  if (n == 0) return r;
  r.mean = pairwise_sum(v.data(), n) / n;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = (v[i] - r.mean) * (v[i] - r.mean);
  const double var = n > 1 ? pairwise_sum(d.data(), n) / (n - 1) : 0.0;
  r.stderr_ = std::sqrt(var / n);
  return r;
}

// One step of Brownian motion from x over dt.
class BrownianStepper {
 public:
  explicit BrownianStepper(const ManifoldModel& g) : g_(g) {}

  Point step(const Point& x, double dt, std::mt19937_64& rng, Normal& nrm) const {
    const double sd = std::sqrt(kGeneratorVariance * dt);
    const int m = g_.dim();
    switch (g_.kind()) {
      case ModelKind::Euclidean:
      case ModelKind::Torus: {
        Point y = x;
        for (int i = 0; i < m; ++i) y.c[i] += sd * nrm(rng);
        if (g_.kind() == ModelKind::Torus)
          for (int i = 0; i < m; ++i) y.c[i] = wrap_period(y.c[i], g_.periods()[i]);
        return y;
      }
      case ModelKind::ConformalCircle: {
        // d theta = -e^{-2 phi} phi' dt + sqrt(2) e^{-phi} dB
        const auto& cd = g_.conformal();
        const double th = x.c[0];
        const double ph = cd.phi(th);
        Point y = x;
        y.c[0] = wrap_period(th - std::exp(-2.0 * ph) * cd.dphi(th) * dt + std::exp(-ph) * sd * nrm(rng), 2.0 * kPi);
        return y;
      }
      case ModelKind::Sphere:
        if (m == 1) {
          Point y = x;
          y.c[0] = wrap_period(x.c[0] + sd * nrm(rng) / g_.radius(), 2.0 * kPi);
          return y;
        }
        [[fallthrough]];
      case ModelKind::Hyperbolic: {
        const auto frame = detail::tangent_frame(g_, x);
        std::vector<double> v(frame[0].size(), 0.0);
        double r2 = 0.0;
        for (int i = 0; i < m; ++i) {
          const double z = sd * nrm(rng);
          r2 += z * z;
          for (std::size_t j = 0; j < v.size(); ++j) v[j] += z * frame[i][j];
        }
        const double r = std::sqrt(r2);
        if (r == 0.0) return x;
        return exp_map(g_, x, v, r);
      }
    }
    return x;
  }

 private:
  const ManifoldModel& g_;
};

inline void check_dt(double t, double dt) {
  require(dt > 0 && t > 0, "path: t and dt must be positive");
  require(dt <= 0.1, "path: dt must not exceed 0.1");
  require(dt <= t / 10.0 * (1.0 + 1e-12), "path: dt must not exceed t/10");
}

inline int step_count(double t, double dt) { return std::max(1, static_cast<int>(std::lround(t / dt))); }

// Node values of a potential with singularities capped at the mollified value
// for eps = sqrt(dt).
class CappedPotential {
 public:
  CappedPotential(const ManifoldModel& g, const Potential& w, double dt) : g_(g), w_(w) {
    const auto sing = w.singular_centers();
    if (sing.empty()) return;
    const double eps = std::sqrt(dt);
    try {
      cap_ = mollify(g, w, eps).sup_abs();
    } catch (const Error&) {
      cap_ = 0.0;
      for (const auto& c : sing) {
        for (int axis = 0; axis < g.dim(); ++axis)
          cap_ = std::max(cap_, std::abs(w.eval(g, geodesic_point(g, c, eps, axis))));
      }
    }
    if (!std::isfinite(cap_)) cap_ = std::numeric_limits<double>::max();
  }
  double operator()(const Point& x) const {
    const double v = w_.eval(g_, x);
    if (std::isfinite(cap_) && std::abs(v) > cap_) return v > 0 ? cap_ : -cap_;
    if (std::isnan(v)) return cap_;
    return v;
  }
  double cap() const { return cap_; }

 private:
  const ManifoldModel& g_;
  Potential w_;
  double cap_ = kInf;
};

struct PathSample {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Point> points;
  int alive_until = 0;                   // first node outside the domain, n if never
  std::vector<double> int_abs, int_sgn;  // trapezoid integrals of |w| and w per potential
};

inline PathSample sample_path(const ManifoldModel& g, const Point& x0, double t, double dt, std::mt19937_64& rng,
                              const Domain& U = Domain::whole(), const std::vector<Potential>& ws = {}) {
  check_point(g, x0);
  check_dt(t, dt);
  const int n = step_count(t, dt);
  PathSample p;
  p.dt = t / n;
  p.times.resize(n + 1);
  p.points.resize(n + 1);
  p.points[0] = x0;
  BrownianStepper bm(g);
  Normal nrm;
  for (int i = 0; i <= n; ++i) p.times[i] = i * p.dt;
  for (int i = 1; i <= n; ++i) p.points[i] = bm.step(p.points[i - 1], p.dt, rng, nrm);
  p.alive_until = n;
  if (!U.is_whole()) {
    for (int i = 0; i <= n; ++i)
      if (!U.contains(g, p.points[i])) {
        p.alive_until = i;
        break;
      }
  }
  for (const auto& w : ws) {
    CappedPotential cw(g, w, p.dt);
    double sa = 0.0, ss = 0.0;
    double prev = cw(p.points[0]);
    for (int i = 1; i <= n; ++i) {
      const double cur = cw(p.points[i]);
      sa += 0.5 * p.dt * (std::abs(prev) + std::abs(cur));
      ss += 0.5 * p.dt * (prev + cur);
      prev = cur;
    }
    p.int_abs.push_back(sa);
    p.int_sgn.push_back(ss);
  }
  return p;
}

// (first node outside U, first node in A); n-sentinel when never.
inline std::pair<int, int> first_times(const ManifoldModel& g, const PathSample& p, const Domain& U, const Region& A) {
  const int n = static_cast<int>(p.points.size()) - 1;
  int zeta = n, sigma = n;
  bool zf = false, sf = false;
  for (int i = 0; i <= n && !(zf && sf); ++i) {
    if (!zf && !U.contains(g, p.points[i])) {
      zeta = i;
      zf = true;
    }
    if (!sf && A.contains(g, p.points[i])) {
      sigma = i;
      sf = true;
    }
  }
  return {zeta, sigma};
}

struct FKEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long paths = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::string domain = "whole";
  double bias = 0.0;  // |mean(dt) - mean(dt/2)| when requested
  double cap = kInf;  // cap applied to singular node values
};

struct McOptions {
  long paths = 100000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  Domain domain = Domain::whole();
  bool bias_check = false;
  unsigned threads = 0;
};

namespace detail {

inline std::string domain_text(const Domain& U) {
  if (U.is_whole()) return "whole";
  std::string s = "open_ball(center=[";
  const auto& b = U.ball();
  for (int i = 0; i < b.center.dim; ++i) s += (i ? "," : "") + std::to_string(b.center.c[i]);
  return s + "], r=" + std::to_string(b.radius) + ")";
}

// Per-path values f(index) computed in parallel, reduced in index order.
inline std::vector<double> per_path(long n, unsigned threads, const std::function<double(long)>& f) {
  std::vector<double> out(n);
  unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  nt = static_cast<unsigned>(std::min<long>(nt, std::max<long>(1, n / 256)));
  if (nt <= 1) {
    for (long i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  for (unsigned k = 0; k < nt; ++k)
    pool.emplace_back([&, k] {
      try {
        for (long i = k; i < n; i += nt) out[i] = f(i);
      } catch (...) {
        errs[k] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

// Streams one path and hands each node to `visit(i, point)`; stops early when
// visit returns false.
template <class V>
void walk(const ManifoldModel& g, const Point& x0, int n, double dt, std::mt19937_64& rng, V&& visit) {
  BrownianStepper bm(g);
  Normal nrm;
  Point x = x0;
  if (!visit(0, x)) return;
  for (int i = 1; i <= n; ++i) {
    x = bm.step(x, dt, rng, nrm);
    if (!visit(i, x)) return;
  }
}

inline FKEstimate fk_once(const ManifoldModel& g, const Potential& w, const std::function<double(const Point&)>& psi,
                          const Point& x, double t, const McOptions& o, double dt) {
  const int n = step_count(t, dt);
  const double h = t / n;
  CappedPotential cw(g, w, h);
  const bool zero = w.is_zero();
  auto f = [&](long k) {
    auto rng = path_rng(o.seed, static_cast<std::uint64_t>(k));
    double integral = 0.0, prev = 0.0;
    bool alive = true;
    Point last = x;
    walk(g, x, n, h, rng, [&](int i, const Point& y) {
      if (!o.domain.is_whole() && !o.domain.contains(g, y)) {
        alive = false;
        return false;
      }
      if (!zero) {
        const double v = cw(y);
        if (i > 0) integral += 0.5 * h * (prev + v);
        prev = v;
      }
      last = y;
      return true;
    });
    if (!alive) return 0.0;
    if (-integral > 700.0)
      throw ConvergenceError("Feynman-Kac weight overflows; the Khashminski precheck for the negative part fails");
    return std::exp(-integral) * psi(last);
  };
  const auto vals = per_path(o.paths, o.threads, f);
  const MeanStd ms = mean_and_stderr(vals);
  FKEstimate e;
  e.mean = ms.mean;
  e.stderr_ = ms.stderr_;
  e.paths = o.paths;
  e.seed = o.seed;
  e.dt = h;
  e.domain = domain_text(o.domain);
  e.cap = cw.cap();
  return e;
}

}  // namespace detail

// E^x[1_{t<zeta} e^{-int_0^t w(X_s) ds} psi(X_t)].
inline FKEstimate fk_functional(const ManifoldModel& g, const Potential& w,
                                const std::function<double(const Point&)>& psi, const Point& x, double t,
                                const McOptions& o = {}) {
  check_point(g, x);
  check_dt(t, o.dt);
  require(o.paths >= 100, "Monte Carlo needs at least 100 paths");
  FKEstimate e = detail::fk_once(g, w, psi, x, t, o, o.dt);
  if (o.bias_check) {
    const FKEstimate half = detail::fk_once(g, w, psi, x, t, o, 0.5 * o.dt);
    e.bias = std::abs(e.mean - half.mean);
  }
  return e;
}

// E^x[int_0^t 1_{s<zeta} |1_A w|(X_s) ds].
inline FKEstimate mc_dynkin_norm(const ManifoldModel& g, const Potential& w, const Region& A, const Point& x, double t,
                                 const McOptions& o = {}) {
  check_point(g, x);
  check_dt(t, o.dt);
  require(o.paths >= 100, "Monte Carlo needs at least 100 paths");
  const int n = step_count(t, o.dt);
  const double h = t / n;
  const Potential wa = A.is_whole() ? w : Potential::truncated(w, A);
  CappedPotential cw(g, wa, h);
  auto f = [&](long k) {
    auto rng = path_rng(o.seed, static_cast<std::uint64_t>(k));
    double integral = 0.0, prev = 0.0;
    detail::walk(g, x, n, h, rng, [&](int i, const Point& y) {
      if (!o.domain.is_whole() && !o.domain.contains(g, y)) return false;
      const double v = std::abs(cw(y));
      if (i > 0) integral += 0.5 * h * (prev + v);
      prev = v;
      return true;
    });
    return integral;
  };
  const MeanStd ms = mean_and_stderr(detail::per_path(o.paths, o.threads, f));
  FKEstimate e;
  e.mean = ms.mean;
  e.stderr_ = ms.stderr_;
  e.paths = o.paths;
  e.seed = o.seed;
  e.dt = h;
  e.domain = detail::domain_text(o.domain);
  e.cap = cw.cap();
  return e;
}

// ---------------------------------------------------------------------------
// Khashminski: E^x[1_{t<zeta_U} e^{int_0^t w}] <= C exp((t/t0) log C), C = 1/(1-||w^U||).

inline double khashminski_bound(double norm, double t0, double t) {
  require(norm >= 0 && norm < 1, "khashminski: norm must lie in [0, 1)");
  require(t0 > 0 && t >= 0, "khashminski: t0 must be positive");
  const double C = 1.0 / (1.0 - norm);
  return C * std::exp(t / t0 * std::log(C));
}

struct KhashminskiCheck {
  double norm = 0.0;  // localized norm on the closure of U (upper proxy for the Dirichlet norm)
  double bound = 0.0;
  FKEstimate estimate;
  bool pass = false;
};

inline KhashminskiCheck khashminski_check(const ManifoldModel& g, const Potential& w, const Domain& U, double t0,
                                          double t, const Point& x, const McOptions& o = {},
                                          const DynkinOptions& dopt = {}) {
  require(w.sign() == 0 || w.sign() == 1, "khashminski: w must be nonnegative");
  require(U.contains(g, x), "khashminski: x must lie in U");
  KhashminskiCheck k;
  if (w.is_zero()) {
    k.norm = 0.0;
  } else {
    const LocalizedNorm ln = localized_norm(g, w, U.closure(), t0, dopt);
    k.norm = ln.on_a.value;
    if (ln.on_a.infinite || !(k.norm < 1.0))
      throw PreconditionError("khashminski: localized norm " + std::to_string(k.norm) + " is not below 1");
  }
  k.bound = khashminski_bound(k.norm, t0, t);
  McOptions mo = o;
  mo.domain = U;
  const Potential neg = Potential::scaled(-1.0, U.is_whole() ? w : Potential::truncated(w, U.closure()));
  k.estimate = fk_functional(g, neg, [](const Point&) { return 1.0; }, x, t, mo);
  k.pass = k.estimate.mean <= k.bound + 3.0 * k.estimate.stderr_;
  return k;
}

// ---------------------------------------------------------------------------
// Monte Carlo localization: sup over x outside A <= sup over x in A + 3 sigma.

struct LocalizationMc {
  std::vector<FKEstimate> inside, outside;
  double sup_in = 0.0, sup_out = 0.0, sigma = 0.0;
  bool pass = false;
};

inline LocalizationMc localization_mc(const ManifoldModel& g, const Potential& w, const Region& A, double t,
                                      const std::vector<Point>& xs_in, const std::vector<Point>& xs_out,
                                      const McOptions& o = {}) {
  LocalizationMc r;
  int bi = -1, bo = -1;
  for (const auto& x : xs_in) {
    require(A.contains(g, x), "localization_mc: inside sample not in A");
    r.inside.push_back(mc_dynkin_norm(g, w, A, x, t, o));
    if (bi < 0 || r.inside.back().mean > r.sup_in) {
      r.sup_in = r.inside.back().mean;
      bi = static_cast<int>(r.inside.size()) - 1;
    }
  }
  for (const auto& x : xs_out) {
    r.outside.push_back(mc_dynkin_norm(g, w, A, x, t, o));
    if (bo < 0 || r.outside.back().mean > r.sup_out) {
      r.sup_out = r.outside.back().mean;
      bo = static_cast<int>(r.outside.size()) - 1;
    }
  }
  if (bo < 0) {
    r.pass = true;
    return r;
  }
  require(bi >= 0, "localization_mc: need at least one sample in A");
  r.sigma = std::hypot(r.inside[bi].stderr_, r.outside[bo].stderr_);
  r.pass = r.sup_out <= r.sup_in + 3.0 * r.sigma;
  return r;
}

// ---------------------------------------------------------------------------
// |e^{-a} - e^{-b}| <= e^{1 + a^- + b^-} |a - b|^{1/2} on random pairs.

struct ScalarInequalityCheck {
  long pairs = 0, violations = 0;
  double worst_ratio = 0.0;
};

inline ScalarInequalityCheck exp_holder_check(long pairs, std::uint64_t seed, double range = 20.0) {
  ScalarInequalityCheck c;
  c.pairs = pairs;
  auto rng = path_rng(seed, 0);
  for (long i = 0; i < pairs; ++i) {
    const double u1 = static_cast<double>(rng() >> 11) * 0x1.0p-53, u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double u3 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double a = range * (2.0 * u1 - 1.0);
    // mix of far and near pairs
    const double b = u3 < 0.5 ? range * (2.0 * u2 - 1.0) : a + std::ldexp(2.0 * u2 - 1.0, -static_cast<int>(40 * u3));
    const double lhs = std::abs(std::exp(-a) - std::exp(-b));
    const double rhs = std::exp(1.0 + std::max(-a, 0.0) + std::max(-b, 0.0)) * std::sqrt(std::abs(a - b));
    if (lhs > 0) c.worst_ratio = std::max(c.worst_ratio, lhs / rhs);
    if (lhs > rhs) ++c.violations;
  }
  return c;
}

}  // namespace katodyn
