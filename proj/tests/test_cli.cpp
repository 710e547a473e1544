#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "katodyn/scenario.hpp"

using namespace katodyn;

namespace {

const char* kNorm = R"(# constant on the plane
name = e2_constant
operation = norm

[model]
descriptor = euclidean(2)

[potential]
descriptor = constant(2)

[params]
t = [0.5]

[expect]
value = 1.0
tol = 1e-6
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "x.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::string& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, ParseEmitRoundTrip) {
  const Config c = parse_config(kNorm, "a.cfg");
  EXPECT_EQ(*c.find("", "name"), "e2_constant");
  EXPECT_EQ(*c.find("params", "t"), "[0.5]");
  EXPECT_EQ(c.where("model", "descriptor"), "a.cfg:6 [model] descriptor");
  const Config d = parse_config(emit_config(c));
  EXPECT_EQ(c, d);
  EXPECT_EQ(emit_config(d), emit_config(c));
}

TEST(Config, RootKeysComeFirstWhenSetLater) {
  Config c;
  c.set("model", "descriptor", "sphere(2)");
  c.set("", "operation", "norm");
  const std::string text = emit_config(c);
  EXPECT_EQ(text.rfind("operation = norm", 0), 0u);
  EXPECT_EQ(parse_config(text), c);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_of("a = 1\n[s\n").find("x.cfg:2"), std::string::npos);
  EXPECT_NE(error_of("a = 1\nb\n").find("x.cfg:2: expected 'key = value'"), std::string::npos);
  EXPECT_NE(error_of("[s]\na = 1\na = 2\n").find("x.cfg:3: duplicate key"), std::string::npos);
  EXPECT_NE(error_of("[s]\n[s]\n").find("duplicate section"), std::string::npos);
  EXPECT_NE(error_of("bad key = 1\n").find("bad key"), std::string::npos);
  EXPECT_NE(error_of("[a..b]\n").find("bad section name"), std::string::npos);
  EXPECT_EQ(error_of("# only a comment\n\n[a.b]\nk = v = w\n"), "");
}

TEST(Descriptor, ErrorsAreInvalidArgument) {
  EXPECT_THROW(parse_model("euclidean("), InvalidArgument);
  EXPECT_THROW(parse_model("klein(2)"), InvalidArgument);
  EXPECT_THROW(parse_potential(ManifoldModel::euclidean(2), "power(center=[0,0], a=1, colour=2)"), InvalidArgument);
  EXPECT_EQ(parse_model("sphere(2, radius=3)").describe(), ManifoldModel::sphere(2, 3.0).describe());
}

TEST(Report, NumbersAndTables) {
  EXPECT_EQ(jnum(kInf), "inf");
  EXPECT_EQ(jnum(-kInf), "-inf");
  EXPECT_TRUE(std::isinf(jdouble(jnum(kInf))));
  EXPECT_EQ(jdouble(jnum(0.25)), 0.25);
  const json empty = table_json({{"t", "value"}, {}});
  EXPECT_EQ(table_csv(empty), "t,value\n");
  const json one = table_json({{"t", "value"}, {{0.5, kInf}}});
  EXPECT_EQ(table_csv(one), "t,value\n0.5,inf\n");
  EXPECT_EQ(safe_name("a b/c"), "a_b_c");
  EXPECT_EQ(safe_name(""), "scenario");
}

TEST(Report, OutputDirectoryFromEnvironment) {
  ::setenv("KATODYN_OUT", "/tmp/katodyn_env_dir", 1);
  EXPECT_EQ(default_output_dir(), "/tmp/katodyn_env_dir");
  ::unsetenv("KATODYN_OUT");
  EXPECT_EQ(default_output_dir(), "katodyn_out");
}

TEST(Scenario, NormPassesAndWritesReport) {
  const ScenarioOutcome o = run_scenario(parse_config(kNorm, "a.cfg"));
  EXPECT_EQ(o.exit_code, kExitPass);
  EXPECT_TRUE(o.report.at("pass").get<bool>());
  EXPECT_EQ(o.report.at("schema_version"), kReportSchemaVersion);
  EXPECT_NEAR(jdouble(o.report["results"]["estimates"][0]["value"]), 1.0, 1e-6);
  const std::string dir = (std::filesystem::temp_directory_path() / "katodyn_test_cli").string();
  std::filesystem::remove_all(dir);
  const std::string path = emit_report(o.report, dir, "e2_constant");
  const json back = json::parse(slurp(path));
  EXPECT_EQ(back, o.report);
  const std::string csv = slurp(dir + "/e2_constant_norm.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,value,error");
  // the embedded config reproduces the scenario
  EXPECT_EQ(parse_config(o.report["scenario"]["config"].get<std::string>()), parse_config(kNorm));
}

TEST(Scenario, ExitCodes) {
  Config c = parse_config(kNorm, "a.cfg");
  c.set("expect", "value", "1.5");
  EXPECT_EQ(run_scenario(c).exit_code, kExitFail);
  c = parse_config(kNorm, "a.cfg");
  c.set("", "operation", "dance");
  EXPECT_EQ(run_scenario(c).exit_code, kExitUsage);
  c = parse_config(kNorm, "a.cfg");
  c.set("model", "descriptor", "euclidean(");
  const ScenarioOutcome bad = run_scenario(c);
  EXPECT_EQ(bad.exit_code, kExitUsage);
  EXPECT_NE(bad.report["error"]["message"].get<std::string>().find("a.cfg:6 [model] descriptor"), std::string::npos);
  c = parse_config(kNorm, "a.cfg");
  c.set("params", "t", "[0]");
  EXPECT_EQ(run_scenario(c).exit_code, kExitUsage);
}

TEST(Scenario, StochasticOperationsNeedSeed) {
  Config c;
  c.set("", "operation", "localize");
  c.set("model", "descriptor", "euclidean(2)");
  c.set("potential", "descriptor", "truncated(constant(1), ball(center=[0,0], r=1))");
  c.set("params", "region", "ball(center=[0,0], r=1)");
  c.set("params", "t", "0.25");
  c.set("params", "paths", "200");
  const ScenarioOutcome o = run_scenario(c);
  EXPECT_EQ(o.exit_code, kExitUsage);
  EXPECT_NE(o.report["error"]["message"].get<std::string>().find("seed"), std::string::npos);
}

TEST(Scenario, VerifyNgArithmetic) {
  Config c;
  c.set("", "operation", "verify");
  c.set("model", "descriptor", "hyperbolic(3)");
  c.set("params", "check", "n_g");
  c.set("params", "t_star", "0.25");
  c.set("params", "dim", "3");
  c.set("expect", "value", "4");
  const ScenarioOutcome o = run_scenario(c);
  EXPECT_EQ(o.exit_code, kExitPass) << o.report.dump();
}
