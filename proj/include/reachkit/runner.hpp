#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reachkit/scenario.hpp"
#include "reachkit/variation.hpp"

namespace reachkit {

inline constexpr int kSchemaVersion = 1;

struct ResolutionConfig {
  std::optional<int> surface_samples;
  std::optional<int> normal_samples;
  std::optional<int> ambient_samples;
  std::optional<int> starts;
  std::optional<int> ode_steps;  // chart scenarios only
  int quadrature_order{8};
  int geodesic_probes{4};          // bound probes per parameter axis
  int normal_probes{4};            // normal directions, codimension 2
  int second_variation_probes{2};  // per parameter axis
  std::vector<double> fractions{0.25, 0.5, 0.9};
  double fd_step{1e-3};
};

struct ToleranceConfig {
  std::optional<double> dist_tol;
  std::optional<double> cluster_tol;
  double reach_rel{0.02};
  double bound{1e-6};
  double equality_rel{1e-3};
  double assigner{1e-6};
  double defect_value{1e-5};
  double defect_identity{1e-4};
  double tangential{1e-6};
};

struct ScenarioConfig {
  std::string name;
  ScenarioParams params;
  ResolutionConfig resolution;
  ToleranceConfig tolerances;
};

struct OutputConfig {
  std::string path;  // empty: stdout
  std::string format{"json"};
  std::string plots;  // directory; empty disables plots
};

struct RunConfig {
  int schema_version{kSchemaVersion};
  std::vector<ScenarioConfig> scenarios;
  OutputConfig output;
  int threads{1};
  std::string source;  // config text, echoed in the report
};

// Parses and validates a JSON config. Malformed input raises ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// REACHKIT_THREADS when set and valid, otherwise `fallback`.
int default_threads(int fallback = 1);

struct CheckRecord {
  std::string check;
  double lhs{0.0};
  double rhs{0.0};
  double residual{0.0};
  bool pass{false};
  std::string note;
};

struct ScenarioResult {
  std::string name;
  ScenarioParams params;
  std::optional<double> analytic_reach;
  ReachEstimate normal;
  ReachEstimate medial;
  double normal_seconds{0.0};
  double medial_seconds{0.0};
  double tau_check{0.0};  // smaller finite estimate, used by every check
  std::vector<ReachAssigner> assigners;
  std::vector<BoundReport> bounds;
  std::vector<SecondVariationReport> second_variation;
  std::optional<CurvatureIntegral> curvature_integral;
  std::optional<double> curvature_oracle;
  std::optional<BottleneckReport> bottleneck;
  std::optional<DefectReport> defect;
  std::vector<CheckRecord> checks;
  std::string error;  // numeric failure that stopped the scenario
  bool pass{false};
  double wall_time{0.0};

  const CheckRecord* find(const std::string& check) const;
};

ScenarioConfig default_config(const std::string& name);

// Raises ConfigError for unknown scenarios or parameters. Numeric failures
// are recorded in `error` with pass = false.
ScenarioResult run_scenario(const ScenarioConfig& config, int threads = 1);

std::string report_json(const std::vector<ScenarioResult>& results, const RunConfig& config,
                        bool include_time = true);
std::string report_csv(const std::vector<ScenarioResult>& results);

// Writes the report to `path` (stdout when empty) and plots when a directory
// is given. Raises IoError.
void emit_report(const std::vector<ScenarioResult>& results, const RunConfig& config);

// SVG traces of f(s), L(s) and per-check residuals, one file each.
void write_plots(const ScenarioResult& result, const std::string& directory);

}  // namespace reachkit
