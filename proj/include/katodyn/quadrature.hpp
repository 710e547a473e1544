#pragma once

// Adaptive Gauss-Kronrod (10/21) integration, plus a geometric-panel driver
// for integrands that are singular (or sharply peaked) at the left endpoint 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace katodyn {

struct QuadOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_intervals = 400;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
  bool finite = true;  // false: the integrand produced inf/nan or the panels diverged
};

inline QuadResult infinite_result(int evals = 0) {
  QuadResult r;
  r.value = std::numeric_limits<double>::infinity();
  r.error = 0.0;
  r.evaluations = evals;
  r.finite = false;
  r.converged = true;
  return r;
}

namespace detail {

inline constexpr double kGkNodes[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr double kGkWeights[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights for the odd-indexed Kronrod nodes 1,3,5,7,9.
inline constexpr double kGaussWeights[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
bool gk21(F& f, double a, double b, double& result, double& abserr) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fv1[10], fv2[10];
  const double fc = f(center);
  if (!std::isfinite(fc)) return false;
  double resk = fc * kGkWeights[10];
  double resg = 0.0;
  double resabs = std::abs(resk);
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kGkNodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    if (!std::isfinite(f1) || !std::isfinite(f2)) return false;
    fv1[j] = f1;
    fv2[j] = f2;
    resk += kGkWeights[j] * (f1 + f2);
    resabs += kGkWeights[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += kGaussWeights[j / 2] * (f1 + f2);
  }
  const double reskh = 0.5 * resk;
  double resasc = kGkWeights[10] * std::abs(fc - reskh);
  for (int j = 0; j < 10; ++j)
    resasc += kGkWeights[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  result = resk * half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  abserr = std::abs((resk - resg) * half);
  if (resasc != 0.0 && abserr != 0.0)
    abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
    abserr = std::max(50.0 * eps * resabs, abserr);
  return true;
}

}  // namespace detail

// Integrate f over [breaks.front(), breaks.back()], starting from the given
// subdivision and bisecting the panel with the largest error estimate.
template <class F>
QuadResult integrate(F&& f, std::vector<double> breaks, const QuadOptions& opt = {}) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  QuadResult out;
  if (breaks.size() < 2) return out;
  std::priority_queue<detail::Panel> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    detail::Panel p{breaks[i], breaks[i + 1], 0.0, 0.0};
    out.evaluations += 21;
    if (!detail::gk21(f, p.a, p.b, p.value, p.error)) return infinite_result(out.evaluations);
    total += p.value;
    err += p.error;
    heap.push(p);
  }
  int count = static_cast<int>(heap.size());
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (count >= opt.max_intervals) {
      out.converged = false;
      break;
    }
    detail::Panel p = heap.top();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) {  // panel at machine resolution
      out.converged = false;
      break;
    }
    heap.pop();
    detail::Panel l{p.a, mid, 0.0, 0.0}, r{mid, p.b, 0.0, 0.0};
    out.evaluations += 42;
    if (!detail::gk21(f, l.a, l.b, l.value, l.error) || !detail::gk21(f, r.a, r.b, r.value, r.error))
      return infinite_result(out.evaluations);
    total += l.value + r.value - p.value;
    err += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
    ++count;
  }
  // Re-sum to shed the drift of the running update.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  return out;
}

template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  if (a == b) return {};
  if (a > b) {
    QuadResult r = integrate(f, std::vector<double>{b, a}, opt);
    r.value = -r.value;
    return r;
  }
  return integrate(f, std::vector<double>{a, b}, opt);
}

struct PanelOptions {
  QuadOptions quad{};
  double ratio = 0.5;      // panel k is [b*ratio^(k+1), b*ratio^k]
  int min_panels = 2;
  int max_panels = 200;
  double diverge_ratio = 0.985;  // sustained panel ratio at or above this reads as divergence
  int diverge_window = 12;
};

// Integrate f over (0, b] with geometric panels shrinking toward 0. Handles
// integrable endpoint singularities and peaks at unknown small scales;
// reports a non-finite result when the panel contributions stop decaying.
template <class F>
QuadResult integrate_from_zero(F&& f, double b, const PanelOptions& opt = {}) {
  QuadResult out;
  if (b <= 0.0) return out;
  double hi = b;
  double sum = 0.0, err = 0.0;
  std::vector<double> contrib;
  contrib.reserve(64);
  for (int k = 0; k < opt.max_panels; ++k) {
    const double lo = hi * opt.ratio;
    QuadResult c = integrate(f, lo, hi, opt.quad);
    out.evaluations += c.evaluations;
    if (!c.finite) return infinite_result(out.evaluations);
    out.converged = out.converged && c.converged;
    sum += c.value;
    err += c.error;
    contrib.push_back(std::abs(c.value));
    hi = lo;
    const int n = static_cast<int>(contrib.size());
    if (n >= opt.diverge_window + 4) {
      bool sustained = true;
      for (int j = n - opt.diverge_window; j < n; ++j) {
        if (contrib[j - 1] == 0.0 || contrib[j] < opt.diverge_ratio * contrib[j - 1]) {
          sustained = false;
          break;
        }
      }
      if (sustained) return infinite_result(out.evaluations);
    }
    if (n < std::max(2, opt.min_panels)) continue;
    const double tol = std::max(opt.quad.abs_tol, opt.quad.rel_tol * std::abs(sum));
    const double c1 = contrib[n - 1], c0 = contrib[n - 2];
    if (c1 > tol || c0 > 8.0 * tol) continue;
    if (c1 == 0.0) {
      out.value = sum;
      out.error = err;
      return out;
    }
    const double q = c0 > 0.0 ? c1 / c0 : 1.0;
    if (q < 0.9) {
      const double tail = c1 * q / (1.0 - q);
      if (tail <= tol) {
        out.value = sum;
        out.error = err + tail;
        return out;
      }
    }
  }
  // Panels exhausted while still contributing: decide by the trend.
  const int n = static_cast<int>(contrib.size());
  const double q = (n >= 2 && contrib[n - 2] > 0.0) ? contrib[n - 1] / contrib[n - 2] : 0.0;
  if (q >= opt.diverge_ratio) return infinite_result(out.evaluations);
  const double tail = q < 1.0 ? contrib[n - 1] * q / (1.0 - q) : contrib[n - 1];
  out.value = sum;
  out.error = err + tail;
  out.converged = false;
  return out;
}

// Integrate f over [a, b] split at `breaks`; a piece ending at a point listed
// in `singular` is integrated with geometric panels toward that point.
template <class F>
QuadResult integrate_pieces(F&& f, double a, double b, std::vector<double> breaks,
                            const std::vector<double>& singular, const PanelOptions& opt = {}) {
  QuadResult out;
  if (!(b > a)) return out;
  std::vector<double> pts{a, b};
  for (double x : breaks)
    if (x > a && x < b) pts.push_back(x);
  for (double x : singular)
    if (x > a && x < b) pts.push_back(x);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto is_sing = [&](double x) {
    for (double s : singular)
      if (std::abs(s - x) <= 1e-14 * (1.0 + std::abs(x))) return true;
    return false;
  };
  auto add = [&](const QuadResult& r) {
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
    out.converged = out.converged && r.converged;
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double l = pts[i], r = pts[i + 1];
    const bool sl = is_sing(l), sr = is_sing(r);
    std::vector<std::pair<double, double>> parts;
    if (sl && sr) parts = {{l, 0.5 * (l + r)}, {0.5 * (l + r), r}};
    else parts = {{l, r}};
    for (auto [lo, hi] : parts) {
      QuadResult q;
      if (is_sing(lo)) q = integrate_from_zero([&](double u) { return f(lo + u); }, hi - lo, opt);
      else if (is_sing(hi)) q = integrate_from_zero([&](double u) { return f(hi - u); }, hi - lo, opt);
      else q = integrate(f, lo, hi, opt.quad);
      if (!q.finite) return infinite_result(out.evaluations + q.evaluations);
      add(q);
    }
  }
  return out;
}

// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace katodyn
