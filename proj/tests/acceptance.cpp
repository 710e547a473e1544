// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "katodyn/dynkin.hpp"
#include "katodyn/schrodinger.hpp"
#include "katodyn/stochastics.hpp"

using namespace katodyn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

McOptions mc(long paths, double dt, std::uint64_t seed) {
  McOptions o;
  o.paths = paths;
  o.dt = dt;
  o.seed = seed;
  return o;
}

// 1 kernel identities
Outcome c1() {
  double mass = 0.0, ck = 0.0, ck_conf = 0.0;
  for (const auto& g : {ManifoldModel::euclidean(2), ManifoldModel::euclidean(3), ManifoldModel::torus({1.0}),
                        ManifoldModel::sphere(1), ManifoldModel::sphere(2)})
    for (double t : {0.01, 0.1, 1.0}) mass = std::max(mass, std::abs(hk_mass(g, t, origin(g)) - 1.0));
  for (const auto& g : {ManifoldModel::euclidean(2), ManifoldModel::euclidean(3), ManifoldModel::torus({1.0}),
                        ManifoldModel::sphere(1), ManifoldModel::sphere(2), ManifoldModel::hyperbolic(3)})
    for (double t : {0.05, 0.3}) ck = std::max(ck, ck_residual(g, t, 0.5 * t, origin(g), geodesic_point(g, origin(g), 0.4)));
  const auto cc = ManifoldModel::conformal_circle({0.0}, {0.0, 0.3}, 512);
  for (double t : {0.05, 0.3})
    ck_conf = std::max(ck_conf, ck_residual(cc, t, 0.5 * t, make_point(cc, {1.0}), make_point(cc, {1.6})));
  return {mass <= 1e-6 && ck <= 1e-6 && ck_conf <= 1e-3,
          fmt("max |mass-1| %.2e (<=1e-6), CK closed form %.2e (<=1e-6), CK conformal %.2e (<=1e-3)", mass, ck, ck_conf)};
}

// 2 constant-potential law
Outcome c2() {
  double worst = 0.0;
  for (const auto& g : {ManifoldModel::euclidean(2), ManifoldModel::torus({1.0})})
    for (double c : {0.5, 2.0})
      for (double t : {0.1, 0.5})
        worst = std::max(worst, std::abs(dynkin_norm(g, Potential::constant(c), t).value - c * t) / (c * t));
  return {worst <= 1e-3, fmt("max relative error %.2e (<=1e-3)", worst)};
}

// 3 Kato threshold in three dimensions
Outcome c3() {
  const auto g = ManifoldModel::euclidean(3);
  bool ok = true;
  std::string d;
  for (double a : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    const Potential w = Potential::power(origin(g), a, 1.0);
    const Verdict heat = kato_detect(g, w, dyadic_sequence(0.5, 8)).verdict.verdict;
    const Verdict classical = classical_kato_test_euclidean(g, w).verdict;
    const bool want = a < 2.0;
    const bool hk = heat == Verdict::Kato, cl = classical == Verdict::Kato;
    ok = ok && hk == want && cl == want;
    d += fmt("a=%.1f %s/%s; ", a, to_string(heat), to_string(classical));
  }
  return {ok, d + "(heat/classical)"};
}

// 4 localization
Outcome c4() {
  bool ok = true;
  std::string d;
  for (const auto& g : {ManifoldModel::euclidean(2), ManifoldModel::sphere(1)}) {
    const Region A = Region::ball(origin(g), 1.0);
    const Potential w = Potential::truncated(Potential::constant(1.0), A);
    const double t = 0.25;
    const LocalizedNorm ln = localized_norm(g, w, A, t);
    std::vector<Point> in{origin(g), ln.on_a.argmax, geodesic_point(g, origin(g), 0.5)};
    std::vector<Point> out{geodesic_point(g, origin(g), 1.1), geodesic_point(g, origin(g), 1.5),
                           geodesic_point(g, origin(g), 2.0)};
    const LocalizationMc m = localization_mc(g, w, A, t, in, out, mc(100000, 1e-3, 11));
    ok = ok && ln.gap <= 0.02 && m.pass;
    d += fmt("%s gap %.2e (<=0.02), mc out %.5f <= in %.5f + 3*%.1e %s; ", g.describe().c_str(), ln.gap, m.sup_out,
             m.sup_in, m.sigma, m.pass ? "ok" : "no");
  }
  return {ok, d};
}

// 5 randomized time-scaling inequality
Outcome c5() {
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const std::vector<ManifoldModel> models{ManifoldModel::euclidean(1), ManifoldModel::euclidean(2),
                                          ManifoldModel::euclidean(3), ManifoldModel::torus({2.0}),
                                          ManifoldModel::sphere(1), ManifoldModel::torus({3.0, 3.0})};
  int passed = 0;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const ManifoldModel& g = models[k % models.size()];
    const double t = 0.05 + 0.45 * U(rng), T = t * (1.0 + 4.0 * U(rng));
    Potential w = Potential::constant(0.5 + 2.0 * U(rng));
    const int kind = static_cast<int>(3 * U(rng));
    if (kind == 1) w = Potential::bump(origin(g), 0.5 + U(rng), 0.5 + 1.5 * U(rng));
    if (kind == 2 && g.kind() == ModelKind::Euclidean)
      w = Potential::power(origin(g), (g.dim() >= 2 ? 0.9 : 0.45) * U(rng) * std::min(2, g.dim()), 1.0);
    const KuweCheck c = kuwe_check(g, w, t, T);
    passed += c.pass;
    worst = std::max(worst, c.lhs / c.rhs);
  }
  return {passed == 20, fmt("%d/20 cases, worst lhs/rhs %.4f (<=1+1e-3)", passed, worst)};
}

// 6 resolvent sandwich
Outcome c6() {
  int passed = 0, n = 0;
  const auto g = ManifoldModel::euclidean(3);
  for (const Potential& w : {Potential::constant(1.5), Potential::bump(origin(g), 1.0, 1.0)})
    for (double lam : {1.0, 5.0})
      for (double t : {0.1, 1.0}) {
        ++n;
        passed += resolvent_sandwich(g, w, lam, t, 1e-3).pass;
      }
  return {passed == n, fmt("%d/%d cases at tol 1e-3", passed, n)};
}

// 7 Hoelder bound with kernel domination
Outcome c7() {
  bool ok = true;
  std::string d;
  auto one = [](const Point&) { return 1.0; };
  {
    const auto g = ManifoldModel::euclidean(3);
    auto phi1 = [](double s) { return std::pow(4.0 * kPi * s, -1.5); };
    const HolderBound h =
        holder_bound(g, Potential::power(origin(g), 1.0, 1.0), Region::ball(origin(g), 1.0), 2.0, phi1, one, 0.1);
    ok = ok && h.pass && h.worst_kernel_ratio <= 1.0 + 1e-12;
    d += fmt("E3 power q=2: %.4f <= %.4f, kernel ratio %.6f; ", h.norm, h.bound, h.worst_kernel_ratio);
  }
  {
    const auto g = ManifoldModel::euclidean(2);
    auto phi1 = [](double s) { return 1.0 / (4.0 * kPi * s); };
    const HolderBound h =
        holder_bound(g, Potential::bump(origin(g), 1.0, 1.0), Region::ball(origin(g), 1.0), 3.0, phi1, one, 0.1);
    ok = ok && h.pass && h.worst_kernel_ratio <= 1.0 + 1e-12;
    d += fmt("E2 bump q=3: %.4f <= %.4f, kernel ratio %.6f", h.norm, h.bound, h.worst_kernel_ratio);
  }
  return {ok, d};
}

// 8 lower L1 embedding
Outcome c8() {
  struct Case {
    ManifoldModel g;
    Potential w;
    Region K;
    double t;
  };
  const auto e1 = ManifoldModel::euclidean(1), e2 = ManifoldModel::euclidean(2), e3 = ManifoldModel::euclidean(3);
  const auto s1 = ManifoldModel::sphere(1), t2 = ManifoldModel::torus({3.0, 3.0});
  const std::vector<Case> cases{
      {e1, Potential::bump(origin(e1), 1.0, 2.0), Region::ball(origin(e1), 0.5), 0.2},
      {e2, Potential::bump(origin(e2), 1.0, 1.0), Region::ball(origin(e2), 0.5), 0.2},
      {e3, Potential::power(origin(e3), 1.0, 1.0), Region::ball(origin(e3), 0.5), 0.1},
      {s1, Potential::bump(origin(s1), 1.0, 1.0), Region::ball(origin(s1), 0.5), 0.3},
      {t2, Potential::bump(origin(t2), 1.0, 1.0), Region::ball(origin(t2), 0.5), 0.2}};
  int passed = 0;
  std::string d;
  for (const auto& c : cases) {
    const L1LowerCheck r = l1_lower_check(c.g, c.w, c.K, c.t, 1e-3);
    passed += r.pass;
    d += fmt("%.4f<=%.4f ", r.lhs, r.rhs);
  }
  return {passed == 5, fmt("%d/5 scenarios at tol 1e-3: ", passed) + d};
}

double c9_norm(double t0) {
  const auto g = ManifoldModel::euclidean(3);
  return localized_norm(g, Potential::constant(1.0), Region::ball(origin(g), 1.0), t0).on_a.value;
}

// t short enough that paths survive in the ball with non-negligible probability
KhashminskiCheck c9_run(double t0) {
  const auto g = ManifoldModel::euclidean(3);
  return khashminski_check(g, Potential::constant(1.0), Domain::open_ball(origin(g), 1.0), t0, 0.25, origin(g),
                           mc(100000, 1e-3, 9));
}

// The norm increases to 1/2 (Green potential of the ball at its center) and
// never reaches it; aim for 0.48.
double c9_t0() {
  double lo = 0.05, hi = 100.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = std::sqrt(lo * hi);
    (c9_norm(mid) < 0.48 ? lo : hi) = mid;
  }
  return std::round(lo * 1000.0) / 1000.0;
}

// 9 exponential moment bound
Outcome c9() {
  const double t0 = c9_t0();
  const KhashminskiCheck k = c9_run(t0);
  const double arith = khashminski_bound(0.5, 1.0, 2.0);
  return {k.pass && std::abs(k.norm - 0.5) <= 0.025 && arith == 8.0,
          fmt("t0 %.3f norm %.4f (|norm-0.5|<=0.025): mc %.5f +- %.1e <= bound %.4f; arithmetic bound %.17g (==8)", t0, k.norm,
              k.estimate.mean, k.estimate.stderr_, k.bound, arith)};
}

SemigroupField c10_field(const ManifoldModel& g, const Potential& w, int level, long paths) {
  std::vector<Point> pts;
  std::vector<double> times;
  refining_grid(g, 0.5, 2.5, 0.2, 0.52, level, pts, times);
  return fk_semigroup(g, w, [](const Point& x) { return std::sin(x.c[0]); }, times, pts, mc(paths, 1e-3, 21));
}

// 10 semigroup representation
Outcome c10() {
  const auto start = std::chrono::steady_clock::now();
  const auto g = ManifoldModel::sphere(1);
  const Potential w = Potential::trig(2.0 * kPi, {0.0, 1.0});
  const Field psi = [](const Point& x) { return std::sin(x.c[0]); };
  std::vector<Point> nodes;
  for (int i = 0; i < 9; ++i) nodes.push_back(make_point(g, {2.0 * kPi * i / 9}));
  const SemigroupField ref = spectral_field(spectral_oracle(g, w, 512), psi, {0.5}, nodes);
  const SemigroupField fk = fk_semigroup(g, w, psi, {0.5}, nodes, mc(100000, 1e-3, 10));
  double worst = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j)
    worst = std::max(worst, std::abs(fk.values[0][j] - ref.values[0][j]) / std::max(3.0 * fk.errors[0][j], 1e-2));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto e2 = ManifoldModel::euclidean(2);
  const ExhaustionResult ex = exhaustion_convergence(
      e2, Potential::bump(origin(e2), 1.0, 1.0), [](const Point&) { return 1.0; }, origin(e2), {2.0, 3.0, 4.0, 6.0},
      {0.2, 0.35, 0.5}, {origin(e2), make_point(e2, {0.5, 0.0})}, mc(20000, 1e-3, 12));
  std::string devs;
  for (const auto& r : ex.rows) devs += fmt("%.4f ", r.deviation);

  const ContinuityProbe cp = continuity_probe(g, {c10_field(g, w, 2, 10000), c10_field(g, w, 3, 10000),
                                                  c10_field(g, w, 4, 10000)});
  std::string mods;
  for (const auto& r : cp.rows) mods += fmt("%.4f ", r.max_jump);
  const bool ok = worst <= 1.0 && secs <= 600.0 && ex.decreasing && cp.pass;
  return {ok, fmt("fk/spectral worst %.3f of max(3sigma,1e-2) in %.0fs; exhaustion ", worst, secs) + devs +
                  (ex.decreasing ? "decreasing" : "not decreasing") + "; continuity jumps " + mods +
                  (cp.pass ? "decreasing" : "not decreasing")};
}

// 11 mollification
Outcome c11() {
  const auto g = ManifoldModel::euclidean(3);
  const MollificationConvergence m = mollification_convergence(g, Potential::power(origin(g), 1.0, 1.0),
                                                               Region::ball(origin(g), 1.0), 0.1, {0.4, 0.2, 0.1, 0.05});
  std::string d;
  for (double v : m.diff) d += fmt("%.4f ", v);
  return {m.pass, "differences " + d + fmt("reference %.4f, %s", m.reference, m.decreasing ? "decreasing" : "not decreasing")};
}

// 12 metric comparability
Outcome c12() {
  const auto flat = ManifoldModel::conformal_circle({0.0}, {}, 512);
  const auto bent = ManifoldModel::conformal_circle({0.0}, {0.0, 0.3}, 512);
  const Potential w = to_chart_grid(flat, Potential::bump(make_point(flat, {kPi}), 0.8, 1.0));
  const MetricComparability a = metric_comparability(flat, bent, w, kPi, 1.0, {0.2, 0.1, 0.05, 0.025});
  const MetricComparability b = metric_comparability(flat, flat, w, kPi, 1.0, {0.2, 0.1, 0.05, 0.025});
  return {a.pass && std::isfinite(a.c_k) && a.max_variation < 0.2 && b.c_k == 1.0,
          fmt("C_K %.4f, max variation %.4f (<0.2); identical metrics C_K %.17g (==1)", a.c_k, a.max_variation, b.c_k)};
}

// 13 dimension shift
Outcome c13() {
  const auto ts = dyadic_sequence(1.0, 12);
  const double e3 = n_g_compute(ManifoldModel::euclidean(3), ts).n_g;
  const double h3 = n_g_compute(ManifoldModel::hyperbolic(3, 1.0), ts).n_g;
  const double syn = n_g_from_norm(3, [](double t) { return 4.0 / 3.0 * t; }, ts).n_g;
  const double m2 = n_g_compute(ManifoldModel::hyperbolic(2, 1.0), ts).n_g;
  bool chain = true;
  std::vector<VdSample> vd;
  for (const auto& g : {ManifoldModel::euclidean(3), ManifoldModel::hyperbolic(3, 1.0)}) {
    const auto grid = kernel_sample_grid(g, {origin(g)}, 0.9, 3.0);
    const GaussianBoundFit up = gaussian_bound_fit(g, BoundSide::Upper, 0.9, grid, 0.2, 0.0);
    vd.clear();
    for (double r : {0.1, 0.5, 1.0, 2.0})
      for (double s : {1.5, 2.0, 4.0}) vd.push_back({origin(g), r, r * s});
    chain = chain && vd_check(g, 3.0, 2.0, vd).pass && inclusion_chain_check(g, up.alpha, 0.0, 3.0, 2.0, grid).pass;
  }
  const bool ok = std::abs(e3 - 3.0) < 1e-9 && std::abs(h3 - 11.0 / 3.0) < 1e-9 && std::abs(syn - 4.0) < 1e-6 && m2 == 2.0 && chain;
  return {ok, fmt("E3 %.6f, H3 %.6f, synthetic %.6f, m=2 %.1f, inclusion chain %s", e3, h3, syn, m2, chain ? "holds" : "fails")};
}

// 14 determinism
Outcome c14() {
  const auto g = ManifoldModel::sphere(1);
  const Region A = Region::ball(origin(g), 1.0);
  const Potential w = Potential::truncated(Potential::constant(1.0), A);
  auto once = [&](unsigned threads) {
    McOptions o = mc(100000, 1e-3, 11);
    o.threads = threads;
    return localization_mc(g, w, A, 0.25, {origin(g)}, {geodesic_point(g, origin(g), 1.5)}, o);
  };
  const LocalizationMc a = once(0), b = once(0), c = once(3);
  const double t0 = c9_t0();
  const KhashminskiCheck k1 = c9_run(t0), k2 = c9_run(t0);
  const bool ok = a.sup_in == b.sup_in && a.sup_out == b.sup_out && a.sup_in == c.sup_in && a.sup_out == c.sup_out &&
                  k1.estimate.mean == k2.estimate.mean && k1.estimate.stderr_ == k2.estimate.stderr_;
  return {ok, fmt("rerun means %.17g %.17g, exponential moment %.17g", a.sup_in, a.sup_out, k1.estimate.mean)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"kernel identities", c1},         {"constant-potential law", c2},  {"Kato threshold", c3},
      {"localization", c4},              {"time scaling", c5},            {"resolvent sandwich", c6},
      {"Hoelder bound", c7},             {"L1 lower embedding", c8},      {"exponential moment bound", c9},
      {"semigroup representation", c10}, {"mollification", c11},          {"metric comparability", c12},
      {"dimension shift", c13},          {"determinism", c14}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("criterion %2zu %s  %s [%.1fs]: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
