#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reachkit/immersion.hpp"
#include "reachkit/reach.hpp"

namespace reachkit {

using ScenarioParams = std::map<std::string, double>;

// A built-in analytic test case with its known answers.
struct Scenario {
  std::string name;
  std::string description;
  Immersion immersion;
  double c_lower;  // curvature lower bound of the ambient
  bool constant_curvature;
  std::optional<double> analytic_reach;
  // |alpha-ddot| = |A_eta| = 1/tau somewhere on M (equality case, c = 0).
  bool expect_equality{false};
  std::optional<AssignerKind> expected_assigner;
  std::optional<double> analytic_defect;
  ReachOptions reach;
  // Unit-speed length-1 curve for the transport defect.
  ParamPoint defect_start;
  Vector defect_direction;
  Vector defect_vector;
  ScenarioParams params;  // effective parameters, defaults filled in
};

struct ScenarioInfo {
  std::string name;
  std::string description;
  ScenarioParams defaults;
};

const std::vector<ScenarioInfo>& scenario_registry();
bool has_scenario(const std::string& name);

// Unknown names or parameters raise ConfigError.
Scenario make_scenario(const std::string& name, const ScenarioParams& overrides = {});

// 4 / (1 + |x|^2)^2 I: the unit round sphere in stereographic coordinates.
AmbientSpace stereographic_sphere_chart(int ode_steps = 256);

// exp(2 a exp(-|x|^2)) I on the box [-6, 6]^2.
AmbientSpace conformal_bump_chart(double amplitude, int ode_steps = 256);

}  // namespace reachkit
