// reachkit: list scenarios, run a config, or check one built-in scenario.
// Exit status: 0 pass, 1 check failure, 2 config error, 3 numeric error, 4 I/O error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reachkit/errors.hpp"
#include "reachkit/runner.hpp"

namespace {

enum Exit { kPass = 0, kCheckFailure = 1, kConfigError = 2, kNumericError = 3, kIoError = 4 };

int fail(int status, const std::string& kind, const std::string& message) {
  nlohmann::json record = {{"error", {{"kind", kind}, {"message", message}, {"status", status}}}};
  std::cerr << record.dump() << "\n";
  return status;
}

int status_of(const std::vector<reachkit::ScenarioResult>& results) {
  bool numeric = false, failed = false;
  for (const auto& r : results) {
    if (!r.error.empty()) numeric = true;
    if (!r.pass) failed = true;
  }
  if (numeric) return kNumericError;
  return failed ? kCheckFailure : kPass;
}

void summarize(const reachkit::ScenarioResult& r) {
  std::fprintf(stderr, "%s: tau_hat %.10g (normal collision) %.10g (medial infimum), %.1f s\n",
               r.name.c_str(), r.normal.tau_hat, r.medial.tau_hat, r.wall_time);
  for (const auto& c : r.checks) {
    std::fprintf(stderr, "  %-4s %-30s lhs %-14.8g rhs %-14.8g residual %.3g\n",
                 c.pass ? "ok" : "FAIL", c.check.c_str(), c.lhs, c.rhs, c.residual);
  }
  if (!r.error.empty()) std::fprintf(stderr, "  error: %s\n", r.error.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reach, medial axis and second-variation checks on analytic submanifolds"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "print the built-in scenario registry");

  std::string config_path, out_path, format, plots;
  int threads = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run every scenario of a JSON config");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--out", out_path, "report path (default: config output.path or stdout)");
  run->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--plots", plots, "directory for SVG plots");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("-q,--quiet", quiet, "no per-check summary on stderr");

  std::string scenario;
  auto* check = app.add_subcommand("check", "run one built-in scenario with defaults");
  check->add_option("scenario", scenario, "scenario name")->required();
  check->add_option("--out", out_path, "report path (default: stdout)");
  check->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  check->add_option("--plots", plots, "directory for SVG plots");
  check->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  check->add_flag("-q,--quiet", quiet, "no per-check summary on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    if (list->parsed()) {
      for (const auto& info : reachkit::scenario_registry()) {
        std::cout << info.name << "  " << info.description;
        for (const auto& [k, v] : info.defaults) std::cout << "  " << k << "=" << v;
        std::cout << "\n";
      }
      return kPass;
    }

    reachkit::RunConfig config;
    if (run->parsed()) {
      config = reachkit::load_config(config_path);
    } else {
      config.scenarios.push_back(reachkit::default_config(scenario));
      config.threads = reachkit::default_threads(1);
      config.source = nlohmann::json({{"schema_version", reachkit::kSchemaVersion},
                                      {"scenarios", {{{"name", scenario}}}}})
                          .dump();
    }
    if (!out_path.empty()) config.output.path = out_path;
    if (!format.empty()) config.output.format = format;
    if (!plots.empty()) config.output.plots = plots;
    if (threads > 0) config.threads = threads;

    std::vector<reachkit::ScenarioResult> results;
    for (const auto& sc : config.scenarios) {
      results.push_back(reachkit::run_scenario(sc, config.threads));
      if (!quiet) summarize(results.back());
    }
    reachkit::emit_report(results, config);
    return status_of(results);
  } catch (const reachkit::ConfigError& e) {
    return fail(kConfigError, "config", e.what());
  } catch (const reachkit::IoError& e) {
    return fail(kIoError, "io", e.what());
  } catch (const reachkit::GeometryError& e) {
    return fail(kNumericError, "numeric", e.what());
  }
}
