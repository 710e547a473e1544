#pragma once

// Scenario execution: config -> computation -> JSON report (+ CSV tables).
// Exit codes: 0 all checks pass, 1 a check failed, 2 schema or usage error.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "katodyn/config.hpp"
#include "katodyn/descriptor.hpp"
#include "katodyn/dynkin.hpp"
#include "katodyn/schrodinger.hpp"
#include "katodyn/stochastics.hpp"

namespace katodyn {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

enum ExitCode { kExitPass = 0, kExitFail = 1, kExitUsage = 2 };

// JSON number, with "inf"/"-inf"/"nan" strings for non-finite values.
inline json jnum(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double jdouble(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::nan("");
  }
  return j.get<double>();
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline json table_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = json::array();
    for (double v : r) row.push_back(jnum(v));
    rows.push_back(row);
  }
  return {{"columns", t.columns}, {"rows", rows}};
}

inline std::string table_csv(const json& t) {
  std::string out;
  const auto& cols = t.at("columns");
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i].get<std::string>();
  out += "\n";
  for (const auto& r : t.at("rows")) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += i ? "," : "";
      out += r[i].is_string() ? r[i].get<std::string>() : detail::fmt(r[i].get<double>());
    }
    out += "\n";
  }
  return out;
}

// Reads typed values from the scenario config with line-level diagnostics.
class ScenarioReader {
 public:
  explicit ScenarioReader(const Config& c) : c_(c) {}

  std::string str(const std::string& sec, const std::string& key) const {
    const std::string* v = c_.find(sec, key);
    if (!v) throw ConfigError(c_.source + " [" + sec + "]", "missing required key '" + key + "'");
    return *v;
  }
  std::string str(const std::string& sec, const std::string& key, const std::string& def) const {
    const std::string* v = c_.find(sec, key);
    return v ? *v : def;
  }
  bool has(const std::string& sec, const std::string& key) const { return c_.has(sec, key); }

  double num(const std::string& sec, const std::string& key) const {
    const std::string v = str(sec, key);
    try {
      return detail::as_number(parse_expr(v), key);
    } catch (const Error&) {
      throw ConfigError(c_.where(sec, key), "expected a number, got '" + v + "'");
    }
  }
  double num(const std::string& sec, const std::string& key, double def) const {
    return has(sec, key) ? num(sec, key) : def;
  }
  long integer(const std::string& sec, const std::string& key, long def) const {
    if (!has(sec, key)) return def;
    const double v = num(sec, key);
    if (v != std::floor(v) || std::abs(v) > 1e15) throw ConfigError(c_.where(sec, key), "expected an integer");
    return static_cast<long>(v);
  }
  std::vector<double> list(const std::string& sec, const std::string& key) const {
    const std::string v = str(sec, key);
    try {
      return detail::as_numbers(parse_expr(v), key);
    } catch (const Error&) {
      throw ConfigError(c_.where(sec, key), "expected a number or a list of numbers, got '" + v + "'");
    }
  }
  std::vector<double> list(const std::string& sec, const std::string& key, std::vector<double> def) const {
    return has(sec, key) ? list(sec, key) : def;
  }
  std::vector<Point> points(const ManifoldModel& g, const std::string& sec, const std::string& key) const {
    const std::string v = str(sec, key);
    try {
      const Expr e = parse_expr(v);
      if (e.kind != Expr::Kind::List) throw DescriptorError("expected a list of points");
      std::vector<Point> out;
      for (const auto& it : e.items) out.push_back(point_from_expr(g, it));
      return out;
    } catch (const Error& err) {
      throw ConfigError(c_.where(sec, key), err.what());
    }
  }
  ManifoldModel model() const {
    try {
      return parse_model(str("model", "descriptor"));
    } catch (const DescriptorError& e) {
      throw ConfigError(c_.where("model", "descriptor"), e.what());
    }
  }
  Potential potential(const ManifoldModel& g, const std::string& sec = "potential") const {
    try {
      return parse_potential(g, str(sec, "descriptor"));
    } catch (const DescriptorError& e) {
      throw ConfigError(c_.where(sec, "descriptor"), e.what());
    }
  }
  Region region(const ManifoldModel& g, const std::string& sec, const std::string& key) const {
    try {
      return parse_region(g, str(sec, key));
    } catch (const DescriptorError& e) {
      throw ConfigError(c_.where(sec, key), e.what());
    }
  }
  const Config& config() const { return c_; }

 private:
  const Config& c_;
};

struct ScenarioOutcome {
  json report;
  int exit_code = kExitPass;
};

class ScenarioRun {
 public:
  explicit ScenarioRun(const Config& c) : cfg_(c), rd_(c) {}

  ScenarioOutcome run() {
    const auto start = std::chrono::steady_clock::now();
    ScenarioOutcome out;
    json& r = out.report;
    r["schema"] = "katodyn.report";
    r["schema_version"] = kReportSchemaVersion;
    const std::string name = rd_.str("", "name", "scenario");
    const std::string op = rd_.str("", "operation");
    r["scenario"] = {{"name", name}, {"operation", op}, {"config", emit_config(cfg_)}};
    results_ = json::object();
    checks_ = json::array();
    tables_ = json::object();
    if (op == "norm") op_norm();
    else if (op == "classify") op_classify();
    else if (op == "localize") op_localize();
    else if (op == "fk") op_fk();
    else if (op == "verify") op_verify();
    else throw ConfigError(cfg_.where("", "operation"), "unknown operation '" + op + "'");
    bool pass = true;
    for (const auto& c : checks_) pass = pass && c.at("pass").get<bool>();
    r["results"] = results_;
    r["checks"] = checks_;
    r["tables"] = tables_;
    r["pass"] = pass;
    r["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r["versions"] = {{"katodyn", kVersion}, {"compiler", __VERSION__}, {"report_schema", kReportSchemaVersion}};
    out.exit_code = pass ? kExitPass : kExitFail;
    return out;
  }

 private:
  void check(const std::string& name, bool pass, double lhs, double rhs, double tol, const std::string& relation) {
    checks_.push_back({{"name", name}, {"pass", pass}, {"lhs", jnum(lhs)}, {"rhs", jnum(rhs)}, {"tol", jnum(tol)},
                       {"relation", relation}});
  }
  void table(const std::string& name, const Table& t) { tables_[name] = table_json(t); }

  double tol(double def) const { return rd_.num("tolerances", "tol", def); }

  DynkinOptions dopt() const {
    DynkinOptions o;
    o.grid_points = static_cast<int>(rd_.integer("params", "grid_points", o.grid_points));
    o.circle_points = static_cast<int>(rd_.integer("params", "grid_points", o.circle_points));
    if (o.grid_points < 2) throw ConfigError(cfg_.where("params", "grid_points"), "need at least 2 grid points");
    o.tol = rd_.num("params", "quad_tol", o.tol);
    return o;
  }

  McOptions mopt() const {
    McOptions o;
    o.paths = rd_.integer("params", "paths", 10000);
    o.dt = rd_.num("params", "dt", 1e-3);
    if (!rd_.has("params", "seed")) throw ConfigError(cfg_.source + " [params]", "missing required key 'seed' for a stochastic operation");
    o.seed = static_cast<std::uint64_t>(rd_.integer("params", "seed", 1));
    return o;
  }

  void expect_value(double v) {
    if (!rd_.has("expect", "value")) return;
    const double e = rd_.num("expect", "value");
    const double t = rd_.num("expect", "tol", tol(1e-3));
    check("expected_value", std::abs(v - e) <= t * std::max(std::abs(e), 1e-300), v, e, t, "|lhs-rhs| <= tol |rhs|");
  }

  static json estimate_json(const DynkinEstimate& e) {
    return {{"value", jnum(e.value)}, {"t", e.t}, {"error", jnum(e.error)}, {"infinite", e.infinite},
            {"grid_size", e.grid_size}, {"argmax", detail::fmt_point(e.argmax)}, {"region", detail::fmt_region(e.region)}};
  }

  void op_norm() {
    const ManifoldModel g = rd_.model();
    const Potential w = rd_.potential(g);
    const auto ts = rd_.list("params", "t");
    Table t{{"t", "value", "error"}, {}};
    json ests = json::array();
    for (double s : ts) {
      const DynkinEstimate e = dynkin_norm(g, w, s, dopt());
      t.rows.push_back({s, e.value, e.error});
      ests.push_back(estimate_json(e));
    }
    results_["model"] = g.describe();
    results_["potential"] = w.describe();
    results_["estimates"] = ests;
    table("norm", t);
    if (ts.size() == 1) expect_value(t.rows[0][1]);
  }

  void op_classify() {
    const ManifoldModel g = rd_.model();
    const Potential w = rd_.potential(g);
    const double t0 = rd_.num("params", "t0", 0.5);
    const int terms = static_cast<int>(rd_.integer("params", "terms", 8));
    const KatoDetection k = kato_detect(g, w, dyadic_sequence(t0, terms), dopt());
    auto verdict_json = [&](const KatoVerdict& v, const std::string& tname, const std::string& scale) {
      Table t{{scale, "value", "error"}, {}};
      for (const auto& r : v.evidence) t.rows.push_back({r.scale, r.infinite ? kInf : r.value, r.error});
      table(tname, t);
      return json{{"verdict", to_string(v.verdict)}, {"decay_exponent", v.decay_exponent}, {"reason", v.reason}};
    };
    results_["heat_kernel"] = verdict_json(k.verdict, "evidence", "t");
    std::string classical;
    if (g.kind() == ModelKind::Euclidean) {
      ClassicalKatoOptions co;
      co.radii = dyadic_sequence(rd_.num("params", "r0", 1.0), terms);
      const KatoVerdict c = classical_kato_test_euclidean(g, w, co);
      results_["classical"] = verdict_json(c, "classical_evidence", "r");
      classical = to_string(c.verdict);
      const bool agree = (c.verdict == Verdict::Kato) == (k.verdict.verdict == Verdict::Kato);
      check("tests_agree", agree, k.verdict.verdict == Verdict::Kato, c.verdict == Verdict::Kato, 0, "Kato(heat) == Kato(classical)");
    }
    if (rd_.has("expect", "verdict")) {
      const std::string want = rd_.str("expect", "verdict");
      auto matches = [&](Verdict v) {
        if (want == "NotKato") return v == Verdict::NotDynkin || v == Verdict::DynkinNotKato;
        return want == to_string(v);
      };
      if (want != "NotKato" && want != "Kato" && want != "DynkinNotKato" && want != "NotDynkin" && want != "Inconclusive")
        throw ConfigError(cfg_.where("expect", "verdict"), "unknown verdict '" + want + "'");
      check("expected_verdict", matches(k.verdict.verdict), 0, 0, 0, "verdict matches " + want);
    }
  }

  void op_localize() {
    const ManifoldModel g = rd_.model();
    const Potential w = rd_.potential(g);
    const Region A = rd_.region(g, "params", "region");
    const double t = rd_.num("params", "t");
    const DynkinOptions o = dopt();
    const LocalizedNorm ln = localized_norm(g, w, A, t, o);
    results_["full"] = estimate_json(ln.full);
    results_["on_region"] = estimate_json(ln.on_a);
    results_["gap"] = jnum(ln.gap);
    const double gt = rd_.num("tolerances", "gap", 0.02);
    check("localization_gap", ln.gap <= gt, ln.gap, gt, 0, "gap <= tol");
    if (rd_.has("params", "paths")) {
      const McOptions mo = mopt();
      const Potential wa = A.is_whole() ? w : Potential::truncated(w, A);
      const auto grid = default_x_grid(g, wa, o);
      std::vector<Point> in, out;
      for (const auto& p : grid) (A.contains(g, p) ? in : out).push_back(p);
      auto thin = [](std::vector<Point> v, std::size_t n) {
        if (v.size() <= n) return v;
        std::vector<Point> r;
        for (std::size_t i = 0; i < n; ++i) r.push_back(v[i * (v.size() - 1) / (n - 1)]);
        return r;
      };
      in = thin(in, 3);
      in.push_back(ln.on_a.argmax);
      out = thin(out, 4);
      const LocalizationMc mc = localization_mc(g, w, A, t, in, out, mo);
      results_["mc"] = {{"sup_in", mc.sup_in}, {"sup_out", mc.sup_out}, {"sigma", mc.sigma}, {"paths", mo.paths},
                        {"seed", mo.seed}, {"dt", mo.dt}};
      check("localization_mc", mc.pass, mc.sup_out, mc.sup_in + 3.0 * mc.sigma, 0, "sup_out <= sup_in + 3 sigma");
    }
  }

  void op_fk() {
    const ManifoldModel g = rd_.model();
    const Potential w = rd_.potential(g);
    const Potential psi_p = rd_.potential(g, "psi");
    const Field psi = [&](const Point& x) { return psi_p.eval(g, x); };
    const auto times = rd_.list("params", "t", {0.5});
    std::vector<Point> pts;
    if (rd_.has("params", "points")) {
      pts = rd_.points(g, "params", "points");
    } else if (g.is_circle()) {
      const long n = rd_.integer("params", "nodes", 9);
      for (long i = 0; i < n; ++i) pts.push_back(make_point(g, {g.chart_period() * i / n}));
    } else {
      pts.push_back(origin(g));
    }
    const McOptions mo = mopt();
    FkPrecheck pre;
    const SemigroupField f = fk_semigroup(g, w, psi, times, pts, mo, &pre);
    results_["precheck"] = {{"needed", pre.needed}, {"t0", pre.t0}, {"norm", pre.norm}, {"bound", jnum(pre.bound)}};
    results_["paths"] = mo.paths;
    results_["seed"] = mo.seed;
    results_["dt"] = mo.dt;
    Table t{{"t", "x", "value", "error"}, {}};
    for (std::size_t i = 0; i < times.size(); ++i)
      for (std::size_t j = 0; j < pts.size(); ++j) t.rows.push_back({times[i], pts[j].c[0], f.values[i][j], f.errors[i][j]});
    if (g.is_circle()) {
      const SpectralOracle so = spectral_oracle(g, w, static_cast<int>(rd_.integer("params", "mesh", 512)));
      const SemigroupField s = spectral_field(so, psi, times, pts);
      const double floor_tol = tol(1e-2);
      double worst = 0.0;
      bool ok = true;
      t.columns.push_back("spectral");
      std::size_t row = 0;
      for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j, ++row) {
          const double d = std::abs(f.values[i][j] - s.values[i][j]);
          const double allow = std::max(3.0 * f.errors[i][j], floor_tol);
          worst = std::max(worst, d / allow);
          ok = ok && d <= allow;
          t.rows[row].push_back(s.values[i][j]);
        }
      results_["ground_eigenvalue"] = so.eig.lambda(0);
      check("fk_vs_spectral", ok, worst, 1.0, floor_tol, "max |fk - spectral| / max(3 sigma, tol) <= 1");
    }
    table("field", t);
  }

  void op_verify() {
    const std::string what = rd_.str("params", "check");
    const double tl = tol(1e-3);
    if (what == "n_g") return verify_ng();
    const ManifoldModel g = rd_.model();
    if (what == "khashminski" && rd_.has("params", "norm")) {
      const double n = rd_.num("params", "norm"), t0 = rd_.num("params", "t0"), t = rd_.num("params", "t");
      const double b = khashminski_bound(n, t0, t);
      results_["bound"] = b;
      if (rd_.has("expect", "value")) expect_value(b);
      return;
    }
    const Potential w = rd_.potential(g);
    const DynkinOptions o = dopt();
    if (what == "kuwe") {
      const double t = rd_.num("params", "t"), T = rd_.num("params", "T");
      const KuweCheck k = kuwe_check(g, w, t, T, tl, o);
      results_["factor"] = k.factor;
      check("kuwe", k.pass, k.lhs, k.rhs, tl, "lhs <= rhs (1 + tol)");
    } else if (what == "sandwich") {
      const double lam = rd_.num("params", "lambda"), t = rd_.num("params", "t");
      const ResolventSandwich s = resolvent_sandwich(g, w, lam, t, tl, o);
      results_["resolvent"] = s.resolvent;
      results_["norm"] = s.norm;
      check("sandwich_lower", s.lower <= s.norm * (1 + tl), s.lower, s.norm, tl, "lhs <= rhs (1 + tol)");
      check("sandwich_upper", s.norm <= s.upper * (1 + tl), s.norm, s.upper, tl, "lhs <= rhs (1 + tol)");
    } else if (what == "holder") {
      const Region A = rd_.region(g, "params", "region");
      const double q = rd_.num("params", "q"), t = rd_.num("params", "t");
      const double alpha = rd_.num("params", "alpha", 1.0), gamma = rd_.num("params", "gamma", 0.0);
      const int m = g.dim();
      auto phi1 = [=](double s) { return alpha * std::pow(4.0 * kPi * s, -0.5 * m) * std::exp(gamma * s); };
      auto phi2 = [](const Point&) { return 1.0; };
      try {
        const HolderBound h = holder_bound(g, w, A, q, phi1, phi2, t, tl, o);
        results_["time_factor"] = h.time_factor;
        results_["lq"] = jnum(h.lq);
        results_["kernel_ratio"] = h.worst_kernel_ratio;
        check("kernel_domination", true, h.worst_kernel_ratio, 1.0, 0, "p / (phi1 phi2) <= 1");
        check("holder", h.pass, h.norm, h.bound, tl, "lhs <= rhs (1 + tol)");
      } catch (const PreconditionError& e) {
        results_["precondition"] = e.what();
        check("kernel_domination", false, 0, 0, 0, e.what());
      }
    } else if (what == "l1_lower") {
      const Region K = rd_.region(g, "params", "region");
      const double t = rd_.num("params", "t");
      const L1LowerCheck c = l1_lower_check(g, w, K, t, tl, o);
      results_["min_kernel"] = c.min_kernel;
      results_["local_norm"] = c.local_norm;
      check("l1_lower", c.pass, c.lhs, c.rhs, tl, "lhs <= rhs (1 + tol)");
    } else if (what == "khashminski") {
      const Region A = rd_.region(g, "params", "region");
      if (!A.single_ball()) throw ConfigError(cfg_.where("params", "region"), "khashminski needs a single ball");
      const Domain U = Domain::open_ball(A.balls()[0].center, A.balls()[0].radius);
      const double t0 = rd_.num("params", "t0"), t = rd_.num("params", "t");
      const McOptions mo = mopt();
      const KhashminskiCheck k = khashminski_check(g, w, U, t0, t, A.balls()[0].center, mo, o);
      results_["norm"] = k.norm;
      results_["bound"] = k.bound;
      results_["estimate"] = {{"mean", k.estimate.mean}, {"stderr", k.estimate.stderr_}, {"paths", k.estimate.paths},
                              {"seed", k.estimate.seed}};
      check("khashminski", k.pass, k.estimate.mean, k.bound + 3.0 * k.estimate.stderr_, 0, "mc <= bound + 3 sigma");
    } else if (what == "comparability") {
      if (g.kind() != ModelKind::ConformalCircle)
        throw ConfigError(cfg_.where("model", "descriptor"), "comparability needs a conformal_circle model");
      const ManifoldModel flat = ManifoldModel::conformal_circle({0.0}, {}, g.mesh());
      const Potential wc = to_chart_grid(flat, parse_potential(flat, rd_.str("potential", "descriptor")));
      const auto times = rd_.list("params", "times", {0.2, 0.1, 0.05, 0.025});
      const MetricComparability mc =
          metric_comparability(flat, g, wc, rd_.num("params", "theta_c", kPi), rd_.num("params", "half", 1.0), times,
                               rd_.num("tolerances", "variation", 0.2), o);
      Table tb{{"t", "norm_flat", "norm_deformed", "c"}, {}};
      for (const auto& r : mc.rows) tb.rows.push_back({r.t, r.norm1, r.norm2, r.c});
      table("comparability", tb);
      results_["c_k"] = jnum(mc.c_k);
      check("comparability", mc.pass, mc.max_variation, rd_.num("tolerances", "variation", 0.2), 0,
            "max relative change of C as t halves < tol");
    } else if (what == "mollification") {
      const Region K = rd_.region(g, "params", "region");
      const double t = rd_.num("params", "t");
      const auto eps = rd_.list("params", "eps", {0.4, 0.2, 0.1, 0.05});
      const MollificationConvergence mc = mollification_convergence(g, w, K, t, eps, o);
      Table tb{{"eps", "value", "error"}, {}};
      for (std::size_t i = 0; i < eps.size(); ++i) tb.rows.push_back({eps[i], mc.diff[i], 0.0});
      table("mollification", tb);
      results_["reference"] = mc.reference;
      check("mollification", mc.pass, mc.diff.back(), 0.1 * mc.reference, 0, "decreasing and last < 0.1 reference");
    } else {
      throw ConfigError(cfg_.where("params", "check"), "unknown check '" + what + "'");
    }
  }

  void verify_ng() {
    if (rd_.has("params", "t_star")) {
      const int m = static_cast<int>(rd_.integer("params", "dim", 3));
      const double n = m == 2 ? 2.0 : n_g_formula(m, rd_.num("params", "t_star"));
      results_["n_g"] = n;
      expect_value(n);
      return;
    }
    const ManifoldModel g = rd_.model();
    const NgResult r = n_g_compute(g, rd_.list("params", "times", dyadic_sequence(1.0, 12)), dopt());
    results_["t_star"] = jnum(r.t_star);
    results_["n_g"] = jnum(r.n_g);
    results_["degenerate"] = r.degenerate;
    results_["censored"] = r.censored;
    results_["tie"] = r.tie;
    Table tb{{"t", "value", "error"}, {}};
    for (const auto& e : r.evidence) tb.rows.push_back({e.scale, e.value, e.error});
    table("n_g", tb);
    expect_value(r.n_g);
  }

  const Config& cfg_;
  ScenarioReader rd_;
  json results_, checks_, tables_;
};

// Runs one scenario; library and schema errors become exit codes.
inline ScenarioOutcome run_scenario(const Config& cfg) {
  try {
    return ScenarioRun(cfg).run();
  } catch (const PreconditionError& e) {
    ScenarioOutcome o;
    o.report = {{"schema", "katodyn.report"}, {"schema_version", kReportSchemaVersion}, {"pass", false},
                {"error", {{"kind", "precondition"}, {"message", e.what()}}}};
    o.exit_code = kExitFail;
    return o;
  } catch (const ConvergenceError& e) {
    ScenarioOutcome o;
    o.report = {{"schema", "katodyn.report"}, {"schema_version", kReportSchemaVersion}, {"pass", false},
                {"error", {{"kind", "convergence"}, {"message", e.what()}}}};
    o.exit_code = kExitFail;
    return o;
  } catch (const Error& e) {
    ScenarioOutcome o;
    o.report = {{"schema", "katodyn.report"}, {"schema_version", kReportSchemaVersion}, {"pass", false},
                {"error", {{"kind", "usage"}, {"message", e.what()}}}};
    o.exit_code = kExitUsage;
    return o;
  }
}

inline std::string safe_name(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
  return s.empty() ? "scenario" : s;
}

// Writes <name>.json and <name>_<table>.csv into dir; returns the JSON path.
inline std::string emit_report(const json& report, const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
  const std::string base = (fs::path(dir) / safe_name(name)).string();
  {
    std::ofstream f(base + ".json");
    if (!f) throw Error("cannot write " + base + ".json");
    f << report.dump(2) << "\n";
  }
  if (report.contains("tables"))
    for (const auto& [tname, t] : report.at("tables").items()) {
      std::ofstream f(base + "_" + safe_name(tname) + ".csv");
      if (!f) throw Error("cannot write " + base + "_" + tname + ".csv");
      f << table_csv(t);
    }
  return base + ".json";
}

inline std::string default_output_dir() {
  const char* e = std::getenv("KATODYN_OUT");
  return e && *e ? e : "katodyn_out";
}

}  // namespace katodyn
