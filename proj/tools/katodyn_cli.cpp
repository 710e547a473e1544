// katodyn: scenario-driven front end.
//
//   katodyn norm --model "euclidean(2)" --potential "constant(2)" --t 0.5
//   katodyn verify scenarios/kuwe_e3.cfg --out results
//   katodyn report results/e2_constant.json

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "katodyn/scenario.hpp"

namespace {

using katodyn::json;

struct Flags {
  std::vector<std::string> inputs;
  std::string model, potential, t, out, check;
  int grid = 0;
  long paths = 0;
  double dt = 0.0, tol = 0.0;
  long seed = -1;
  std::vector<std::string> sets;
};

std::string as_list(const std::string& s) {
  if (s.find(',') != std::string::npos && s.front() != '[') return "[" + s + "]";
  return s;
}

void apply_flags(katodyn::Config& c, const Flags& f, const std::string& op) {
  if (!c.has("", "name")) c.set("", "name", op);
  c.set("", "operation", op);
  if (!f.model.empty()) c.set("model", "descriptor", f.model);
  if (!f.potential.empty()) c.set("potential", "descriptor", f.potential);
  if (!f.t.empty()) c.set("params", "t", as_list(f.t));
  if (!f.check.empty()) c.set("params", "check", f.check);
  if (f.grid > 0) c.set("params", "grid_points", std::to_string(f.grid));
  if (f.paths > 0) c.set("params", "paths", std::to_string(f.paths));
  if (f.dt > 0) c.set("params", "dt", katodyn::detail::fmt(f.dt));
  if (f.seed >= 0) c.set("params", "seed", std::to_string(f.seed));
  if (f.tol > 0) c.set("tolerances", "tol", katodyn::detail::fmt(f.tol));
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    const auto dot = s.rfind('.', eq);
    if (eq == std::string::npos || dot == std::string::npos || dot == 0)
      throw katodyn::ConfigError("--set " + s, "expected section.key=value");
    c.set(s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1));
  }
}

int run_scenarios(const Flags& f, const std::string& op) {
  const std::string dir = f.out.empty() ? katodyn::default_output_dir() : f.out;
  std::vector<katodyn::Config> configs;
  try {
    if (f.inputs.empty()) {
      configs.emplace_back();
      configs.back().source = "<flags>";
    }
    for (const auto& p : f.inputs) configs.push_back(katodyn::load_config(p));
    for (auto& c : configs) apply_flags(c, f, op);
  } catch (const katodyn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return katodyn::kExitUsage;
  }
  int code = katodyn::kExitPass;
  json index = json::array();
  for (const auto& c : configs) {
    const std::string name = c.find("", "name") ? *c.find("", "name") : op;
    const katodyn::ScenarioOutcome o = katodyn::run_scenario(c);
    std::string path;
    try {
      path = katodyn::emit_report(o.report, dir, name);
    } catch (const katodyn::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return katodyn::kExitUsage;
    }
    if (o.report.contains("error")) std::cerr << name << ": " << o.report["error"]["message"].get<std::string>() << "\n";
    std::cout << name << ": " << (o.exit_code == 0 ? "PASS" : o.exit_code == 1 ? "FAIL" : "ERROR") << " -> " << path
              << "\n";
    index.push_back({{"name", name}, {"report", path}, {"exit_code", o.exit_code}});
    code = std::max(code, o.exit_code);
  }
  if (configs.size() > 1) {
    std::ofstream fi(dir + "/index.json");
    fi << json{{"schema", "katodyn.index"}, {"schema_version", katodyn::kReportSchemaVersion}, {"scenarios", index}}.dump(2)
       << "\n";
  }
  return code;
}

// Re-renders CSV tables and a summary from existing JSON reports.
int run_report(const Flags& f) {
  if (f.inputs.empty()) {
    std::cerr << "error: report needs at least one JSON report\n";
    return katodyn::kExitUsage;
  }
  int code = katodyn::kExitPass;
  for (const auto& p : f.inputs) {
    json r;
    try {
      std::ifstream in(p);
      if (!in) throw katodyn::Error("cannot open " + p);
      r = json::parse(in);
      if (r.value("schema", "") != "katodyn.report") throw katodyn::Error(p + ": not a katodyn report");
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return katodyn::kExitUsage;
    }
    const std::string name = r.contains("scenario") ? r["scenario"].value("name", "report") : "report";
    const std::string dir = f.out.empty() ? katodyn::default_output_dir() : f.out;
    katodyn::emit_report(r, dir, name);
    const bool pass = r.value("pass", false);
    std::cout << name << ": " << (pass ? "PASS" : "FAIL") << "\n";
    if (r.contains("checks"))
      for (const auto& c : r["checks"])
        std::cout << "  " << c.value("name", "?") << " " << (c.value("pass", false) ? "pass" : "FAIL") << "  lhs="
                  << c["lhs"].dump() << " rhs=" << c["rhs"].dump() << " tol=" << c["tol"].dump() << "\n";
    if (!pass) code = std::max(code, r.contains("error") && r["error"].value("kind", "") == "usage" ? 2 : 1);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynkin and Kato class diagnostics for potentials on model manifolds"};
  app.require_subcommand(1);
  Flags f;
  auto shared = [&](CLI::App* s) {
    s->add_option("configs", f.inputs, "scenario files (several: suite run with index.json)");
    s->add_option("--model", f.model, "model descriptor, e.g. \"sphere(2, radius=1)\"");
    s->add_option("--potential", f.potential, "potential descriptor, e.g. \"power(center=[0,0,0], a=1, cutoff=1)\"");
    s->add_option("--t", f.t, "time or comma-separated times");
    s->add_option("--grid", f.grid, "points per axis of the default x-grid");
    s->add_option("--paths", f.paths, "Monte Carlo paths");
    s->add_option("--dt", f.dt, "time step of simulated paths");
    s->add_option("--seed", f.seed, "random seed");
    s->add_option("--out", f.out, "output directory (default $KATODYN_OUT or ./katodyn_out)");
    s->add_option("--tol", f.tol, "check tolerance");
    s->add_option("--set", f.sets, "override any config value: section.key=value");
  };
  std::vector<std::pair<CLI::App*, std::string>> ops;
  for (const char* op : {"norm", "classify", "localize", "fk", "verify"}) {
    CLI::App* s = app.add_subcommand(op, std::string("run the ") + op + " operation");
    shared(s);
    if (std::string(op) == "verify")
      s->add_option("--check", f.check, "kuwe, sandwich, holder, l1_lower, khashminski, n_g, comparability, mollification");
    ops.emplace_back(s, op);
  }
  CLI::App* rep = app.add_subcommand("report", "re-render JSON reports to CSV and print a summary");
  rep->add_option("reports", f.inputs, "JSON reports")->required();
  rep->add_option("--out", f.out, "output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return katodyn::kExitUsage;
  }
  if (rep->parsed()) return run_report(f);
  for (const auto& [s, op] : ops)
    if (s->parsed()) return run_scenarios(f, op);
  return katodyn::kExitUsage;
}
