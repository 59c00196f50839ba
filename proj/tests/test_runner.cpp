#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "reachkit/errors.hpp"
#include "reachkit/runner.hpp"

using namespace reachkit;
using nlohmann::json;

namespace {

const ScenarioResult& circle_result() {
  static const ScenarioResult r = run_scenario(default_config("circle"));
  return r;
}

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "reachkit_test_runner";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = temp_dir() / name;
  std::ofstream(path) << text;
  return path.string();
}

int cli(const std::string& args) {
  const std::string command = std::string(REACHKIT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void expect_config_error(const std::string& text) {
  EXPECT_THROW(parse_config(text), ConfigError) << text;
}

}  // namespace

TEST(Config, ParsesMinimalAndFullForms) {
  const RunConfig a = parse_config(R"({"schema_version": 1, "scenarios": [{"name": "circle"}]})");
  ASSERT_EQ(a.scenarios.size(), 1u);
  EXPECT_EQ(a.scenarios[0].name, "circle");
  EXPECT_EQ(a.output.format, "json");

  const RunConfig b = parse_config(R"({
    "schema_version": 1,
    "threads": 2,
    "output": {"format": "csv", "path": "out.csv"},
    "scenarios": [{"name": "torus", "params": {"R": 3.0},
                   "resolution": {"surface_samples": 8, "fractions": [0.5]},
                   "tolerances": {"reach_rel": 0.05}}]})");
  EXPECT_EQ(b.threads, 2);
  EXPECT_EQ(b.output.format, "csv");
  EXPECT_EQ(b.output.path, "out.csv");
  EXPECT_EQ(*b.scenarios[0].resolution.surface_samples, 8);
  EXPECT_EQ(b.scenarios[0].resolution.fractions, std::vector<double>{0.5});
  EXPECT_DOUBLE_EQ(b.scenarios[0].tolerances.reach_rel, 0.05);
  EXPECT_DOUBLE_EQ(b.scenarios[0].params.at("R"), 3.0);
}

TEST(Config, RejectsInvalidInput) {
  expect_config_error("not json");
  expect_config_error(R"({"scenarios": [{"name": "circle"}]})");
  expect_config_error(R"({"schema_version": 2, "scenarios": [{"name": "circle"}]})");
  expect_config_error(R"({"schema_version": 1, "scenarios": [{"name": "no-such-scenario"}]})");
  expect_config_error(R"({"schema_version": 1, "scenarios": [{"name": "circle", "colour": 1}]})");
  expect_config_error(
      R"({"schema_version": 1, "scenarios": [{"name": "circle", "resolution": {"surface_samples": 0}}]})");
  expect_config_error(
      R"({"schema_version": 1, "scenarios": [{"name": "circle", "tolerances": {"bound": -1}}]})");
  expect_config_error(
      R"({"schema_version": 1, "scenarios": [{"name": "circle", "params": {"height": 1}}]})");
  expect_config_error(
      R"({"schema_version": 1, "output": {"format": "xml"}, "scenarios": [{"name": "circle"}]})");
}

TEST(Config, OdeStepsNeedsAChart) {
  RunConfig c = parse_config(
      R"({"schema_version": 1, "scenarios": [{"name": "circle", "resolution": {"ode_steps": 32}}]})");
  EXPECT_THROW(run_scenario(c.scenarios[0]), ConfigError);
}

TEST(Config, MissingFileIsAnIoError) {
  EXPECT_THROW(load_config((temp_dir() / "absent.json").string()), IoError);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"registry.json", "circle.json"}) {
    const RunConfig c = load_config(std::string(REACHKIT_CONFIG_DIR) + "/" + name);
    EXPECT_FALSE(c.scenarios.empty()) << name;
  }
}

TEST(Config, UnknownScenarioInDefaults) {
  EXPECT_THROW(default_config("no-such-scenario"), ConfigError);
}

TEST(RunScenario, CirclePasses) {
  const ScenarioResult& r = circle_result();
  EXPECT_TRUE(r.error.empty()) << r.error;
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.normal.tau_hat, 2.0, 0.04);
  EXPECT_NEAR(r.medial.tau_hat, 2.0, 0.04);
  bool all = true;
  for (const CheckRecord& c : r.checks) all = all && c.pass;
  EXPECT_EQ(r.pass, all);
}

TEST(RunScenario, GreatCircleShapeNormsVanish) {
  const ScenarioResult r = run_scenario(default_config("great-circle-on-sphere"));
  EXPECT_TRUE(r.pass);
  ASSERT_FALSE(r.bounds.empty());
  for (const BoundReport& b : r.bounds) {
    EXPECT_NEAR(b.shape_norm, 0.0, 1e-8);
    EXPECT_NEAR(b.B, 0.11302, 1e-5);
  }
}

TEST(RunScenario, FailingToleranceFailsOverall) {
  ScenarioConfig c = default_config("circle");
  c.tolerances.reach_rel = 1e-14;
  const ScenarioResult r = run_scenario(c);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.find("reach_normal_collision")->pass);
}

TEST(Report, EmptyResultListIsValid) {
  RunConfig config;
  const json j = json::parse(report_json({}, config));
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_TRUE(j["results"].is_array());
  EXPECT_TRUE(j["results"].empty());
  EXPECT_EQ(report_csv({}), "scenario,check,lhs,rhs,residual,pass\n");
}

TEST(Report, CsvHasOneRowPerCheck) {
  const ScenarioResult& r = circle_result();
  const std::string csv = report_csv({r});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "scenario,check,lhs,rhs,residual,pass");
  int rows = 0;
  bool accel = false;
  while (std::getline(in, line)) {
    ++rows;
    if (line.rfind("circle,accel_norm_bound,0.5,0.5", 0) == 0 && line.ends_with(",true")) {
      accel = true;
    }
  }
  EXPECT_EQ(rows, static_cast<int>(r.checks.size()));
  EXPECT_TRUE(accel) << csv;
}

TEST(Report, JsonRoundTripIsBitIdentical) {
  const ScenarioResult& r = circle_result();
  RunConfig config;
  const json j = json::parse(report_json({r}, config));
  const json& s = j["results"][0];
  EXPECT_EQ(s["name"], "circle");
  const json& checks = s["checks"];
  ASSERT_EQ(checks.size(), r.checks.size());
  for (std::size_t i = 0; i < r.checks.size(); ++i) {
    EXPECT_EQ(checks[i]["check"], r.checks[i].check);
    EXPECT_EQ(checks[i]["lhs"].get<double>(), r.checks[i].lhs);
    EXPECT_EQ(checks[i]["rhs"].get<double>(), r.checks[i].rhs);
    EXPECT_EQ(checks[i]["residual"].get<double>(), r.checks[i].residual);
    EXPECT_EQ(checks[i]["pass"].get<bool>(), r.checks[i].pass);
  }
  EXPECT_EQ(j["pass"].get<bool>(), r.pass);
}

TEST(Report, DeterministicWithoutTimes) {
  RunConfig config;
  const ScenarioResult a = run_scenario(default_config("circle"));
  const ScenarioResult b = run_scenario(default_config("circle"));
  EXPECT_EQ(report_json({a}, config, false), report_json({b}, config, false));
}

TEST(Report, PlotsAreWritten) {
  const auto dir = temp_dir() / "plots";
  std::filesystem::remove_all(dir);
  write_plots(circle_result(), dir.string());
  int svg = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".svg") ++svg;
  }
  EXPECT_GE(svg, 2);
}

TEST(Report, UnwritablePathIsAnIoError) {
  RunConfig config;
  config.output.path = (temp_dir() / "missing" / "dir" / "report.json").string();
  EXPECT_THROW(emit_report({}, config), IoError);
}

TEST(Cli, ExitStatuses) {
  EXPECT_EQ(cli("list"), 0);
  EXPECT_EQ(cli("check circle -q --out " + (temp_dir() / "circle.json").string()), 0);
  EXPECT_EQ(cli("check no-such-scenario -q"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("run --config " + write_temp("bad.json", "{") + " -q"), 2);
  EXPECT_EQ(cli("run --config " + (temp_dir() / "absent.json").string() + " -q"), 4);

  const std::string strict = write_temp(
      "strict.json",
      R"({"schema_version": 1, "scenarios": [{"name": "circle", "tolerances": {"reach_rel": 1e-14}}]})");
  EXPECT_EQ(cli("run --config " + strict + " -q --out " + (temp_dir() / "strict.json.out").string()),
            1);

  const std::string ok = write_temp(
      "ok.json", R"({"schema_version": 1, "scenarios": [{"name": "circle"}]})");
  EXPECT_EQ(cli("run --config " + ok + " -q --out " + (temp_dir() / "missing" / "x.json").string()),
            4);
}

TEST(Cli, CsvOutputFile) {
  const auto out = temp_dir() / "circle.csv";
  std::filesystem::remove(out);
  ASSERT_EQ(cli("run --config " + std::string(REACHKIT_CONFIG_DIR) + "/circle.json -q --out " +
                out.string()),
            0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "scenario,check,lhs,rhs,residual,pass");
}

TEST(Threads, EnvironmentOverride) {
  setenv("REACHKIT_THREADS", "3", 1);
  EXPECT_EQ(default_threads(1), 3);
  setenv("REACHKIT_THREADS", "zero", 1);
  EXPECT_EQ(default_threads(1), 1);
  unsetenv("REACHKIT_THREADS");
  EXPECT_EQ(default_threads(2), 2);
}
