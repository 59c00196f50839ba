#include "reachkit/scenario.hpp"

#include <cmath>
#include <functional>

#include "reachkit/errors.hpp"

namespace reachkit {

namespace {

using CurveMap = std::function<Point(double)>;

ParamDomain periodic_circle() {
  return {Vector::Constant(1, 0.0), Vector::Constant(1, 2.0 * M_PI), {AxisKind::kPeriodic}};
}

// One-parameter immersion from closed-form F, F', F''.
Immersion curve_immersion(std::string name, AmbientSpace ambient, CurveMap f, CurveMap df,
                          CurveMap ddf) {
  auto map = [f](const ParamPoint& u) { return f(u(0)); };
  auto jet = [f, df, ddf](const ParamPoint& u) {
    ImmersionJet j;
    j.point = f(u(0));
    j.jacobian = df(u(0));
    j.hessian = {ddf(u(0))};
    return j;
  };
  return Immersion(std::move(name), std::move(ambient), periodic_circle(), map, jet);
}

Point vec(std::initializer_list<double> values) {
  Point p(static_cast<Eigen::Index>(values.size()));
  int i = 0;
  for (double v : values) p(i++) = v;
  return p;
}

double param(const ScenarioParams& params, const std::string& key) { return params.at(key); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

Scenario base(const std::string& name, const std::string& description, Immersion imm,
              double c_lower, bool constant, const ScenarioParams& params) {
  Scenario s{name, description, std::move(imm), c_lower, constant, {}, false, {}, {}, {},
             {},   {},          {},              {}};
  s.params = params;
  const int k = s.immersion.param_dim();
  s.defect_start = ParamPoint::Zero(k);
  s.defect_direction = Vector::Unit(k, 0);
  s.defect_vector = Vector::Unit(k, 0);
  return s;
}

Scenario circle(const ScenarioParams& p) {
  const double r = param(p, "radius");
  require(r > 0.0, "circle radius must be positive");
  Immersion imm = curve_immersion(
      "circle", AmbientSpace::euclidean(2),
      [r](double t) { return vec({r * std::cos(t), r * std::sin(t)}); },
      [r](double t) { return vec({-r * std::sin(t), r * std::cos(t)}); },
      [r](double t) { return vec({-r * std::cos(t), -r * std::sin(t)}); });
  Scenario s = base("circle", "circle of radius r in the Euclidean plane", std::move(imm), 0.0,
                    true, p);
  s.analytic_reach = r;
  s.expect_equality = true;
  s.expected_assigner = AssignerKind::kBottleneck;
  // Unit-speed arc of length 1 turns by 1/r.
  s.analytic_defect = std::cos(1.0 / r) - 1.0;
  return s;
}

Scenario ellipse(const ScenarioParams& p) {
  const double a = param(p, "a");
  const double b = param(p, "b");
  require(a >= b && b > 0.0, "ellipse needs a >= b > 0");
  Immersion imm = curve_immersion(
      "ellipse", AmbientSpace::euclidean(2),
      [a, b](double t) { return vec({a * std::cos(t), b * std::sin(t)}); },
      [a, b](double t) { return vec({-a * std::sin(t), b * std::cos(t)}); },
      [a, b](double t) { return vec({-a * std::cos(t), -b * std::sin(t)}); });
  Scenario s = base("ellipse", "ellipse with semi-axes a >= b in the Euclidean plane",
                    std::move(imm), 0.0, true, p);
  // The largest curvature a / b^2 sits at the vertex and is not cut earlier.
  s.analytic_reach = b * b / a;
  s.expect_equality = true;
  s.expected_assigner = AssignerKind::kUniqueFootPoint;
  s.reach.surface_samples = 64;
  return s;
}

Scenario round_sphere(const ScenarioParams& p) {
  const double r = param(p, "radius");
  require(r > 0.0, "sphere radius must be positive");
  auto map = [r](const ParamPoint& u) {
    return vec({r * std::sin(u(0)) * std::cos(u(1)), r * std::sin(u(0)) * std::sin(u(1)),
                r * std::cos(u(0))});
  };
  auto jet = [r, map](const ParamPoint& u) {
    const double st = std::sin(u(0)), ct = std::cos(u(0)), sp = std::sin(u(1)), cp = std::cos(u(1));
    ImmersionJet j;
    j.point = map(u);
    j.jacobian.resize(3, 2);
    j.jacobian.col(0) = vec({r * ct * cp, r * ct * sp, -r * st});
    j.jacobian.col(1) = vec({-r * st * sp, r * st * cp, 0.0});
    const Point mixed = vec({-r * ct * sp, r * ct * cp, 0.0});
    j.hessian = {-j.point, mixed, mixed, vec({-r * st * cp, -r * st * sp, 0.0})};
    return j;
  };
  ParamDomain domain{vec({0.0, 0.0}), vec({M_PI, 2.0 * M_PI}),
                     {AxisKind::kClosed, AxisKind::kPeriodic}};
  Immersion imm("round-sphere", AmbientSpace::euclidean(3), domain, map, jet);
  Scenario s = base("round-sphere", "round sphere of radius r in Euclidean 3-space", std::move(imm),
                    0.0, true, p);
  s.analytic_reach = r;
  s.expect_equality = true;
  s.expected_assigner = AssignerKind::kBottleneck;
  s.reach.surface_samples = 16;
  s.reach.ambient_samples = 16;
  s.defect_start = vec({M_PI / 3.0, 0.0});
  s.defect_direction = vec({0.0, 1.0});
  s.defect_vector = vec({1.0, 1.0});
  return s;
}

Scenario torus(const ScenarioParams& p) {
  const double big = param(p, "R");
  const double r = param(p, "r");
  require(big > r && r > 0.0, "torus needs R > r > 0");
  auto map = [big, r](const ParamPoint& u) {
    const double w = big + r * std::cos(u(0));
    return vec({w * std::cos(u(1)), w * std::sin(u(1)), r * std::sin(u(0))});
  };
  auto jet = [big, r, map](const ParamPoint& u) {
    const double st = std::sin(u(0)), ct = std::cos(u(0)), sp = std::sin(u(1)), cp = std::cos(u(1));
    const double w = big + r * ct;
    ImmersionJet j;
    j.point = map(u);
    j.jacobian.resize(3, 2);
    j.jacobian.col(0) = vec({-r * st * cp, -r * st * sp, r * ct});
    j.jacobian.col(1) = vec({-w * sp, w * cp, 0.0});
    const Point mixed = vec({r * st * sp, -r * st * cp, 0.0});
    j.hessian = {vec({-r * ct * cp, -r * ct * sp, -r * st}), mixed, mixed,
                 vec({-w * cp, -w * sp, 0.0})};
    return j;
  };
  ParamDomain domain{vec({0.0, 0.0}), vec({2.0 * M_PI, 2.0 * M_PI}),
                     {AxisKind::kPeriodic, AxisKind::kPeriodic}};
  Immersion imm("torus", AmbientSpace::euclidean(3), domain, map, jet);
  Scenario s = base("torus", "torus of revolution with radii R > r in Euclidean 3-space",
                    std::move(imm), 0.0, true, p);
  s.analytic_reach = std::min(r, big - r);
  s.expect_equality = r <= big - r;
  s.expected_assigner = AssignerKind::kBottleneck;
  s.reach.surface_samples = 16;
  s.reach.ambient_samples = 16;
  s.defect_start = vec({M_PI / 4.0, 0.0});
  s.defect_direction = vec({1.0, 1.0});
  s.defect_vector = vec({1.0, 0.0});
  return s;
}

Scenario great_circle(const ScenarioParams& p) {
  const double radius = param(p, "radius");
  require(radius > 0.0, "sphere radius must be positive");
  Immersion imm = curve_immersion(
      "great-circle-on-sphere", AmbientSpace::sphere(2, radius),
      [radius](double t) { return vec({radius * std::cos(t), radius * std::sin(t), 0.0}); },
      [radius](double t) { return vec({-radius * std::sin(t), radius * std::cos(t), 0.0}); },
      [radius](double t) { return vec({-radius * std::cos(t), -radius * std::sin(t), 0.0}); });
  Scenario s = base("great-circle-on-sphere", "equator of the round 2-sphere of radius R",
                    std::move(imm), 1.0 / (radius * radius), true, p);
  s.analytic_reach = M_PI * radius / 2.0;
  s.expected_assigner = AssignerKind::kBottleneck;
  s.analytic_defect = 0.0;
  return s;
}

Scenario small_circle(const ScenarioParams& p) {
  const double rho = param(p, "rho");
  require(rho > 0.0 && rho < M_PI, "colatitude must lie in (0, pi)");
  const double sr = std::sin(rho), cr = std::cos(rho);
  Immersion imm = curve_immersion(
      "small-circle-on-sphere", AmbientSpace::sphere(2, 1.0),
      [sr, cr](double t) { return vec({sr * std::cos(t), sr * std::sin(t), cr}); },
      [sr](double t) { return vec({-sr * std::sin(t), sr * std::cos(t), 0.0}); },
      [sr](double t) { return vec({-sr * std::cos(t), -sr * std::sin(t), 0.0}); });
  Scenario s = base("small-circle-on-sphere", "circle at colatitude rho on the unit 2-sphere",
                    std::move(imm), 1.0, true, p);
  s.analytic_reach = std::min(rho, M_PI - rho);
  s.expected_assigner = AssignerKind::kBottleneck;
  return s;
}

Scenario hyperbolic_circle(const ScenarioParams& p) {
  const double rho = param(p, "rho");
  const double c = param(p, "curvature");
  require(rho > 0.0, "radius must be positive");
  require(c < 0.0, "hyperbolic curvature must be negative");
  const double big = 1.0 / std::sqrt(-c);
  const double ch = big * std::cosh(rho / big), sh = big * std::sinh(rho / big);
  Immersion imm = curve_immersion(
      "circle-in-hyperbolic-plane", AmbientSpace::hyperbolic(2, c),
      [ch, sh](double t) { return vec({ch, sh * std::cos(t), sh * std::sin(t)}); },
      [sh](double t) { return vec({0.0, -sh * std::sin(t), sh * std::cos(t)}); },
      [sh](double t) { return vec({0.0, -sh * std::cos(t), -sh * std::sin(t)}); });
  Scenario s = base("circle-in-hyperbolic-plane",
                    "geodesic circle of radius rho in the hyperbolic plane of curvature c",
                    std::move(imm), c, true, p);
  s.analytic_reach = rho;
  s.expected_assigner = AssignerKind::kBottleneck;
  return s;
}

Scenario chart_great_circle(const ScenarioParams& p) {
  const double beta = param(p, "tilt");
  const int steps = static_cast<int>(param(p, "ode_steps"));
  require(std::abs(beta) < M_PI / 2.0, "tilt must lie in (-pi/2, pi/2)");
  require(steps >= 8, "ode_steps must be >= 8");
  const double cb = std::cos(beta), sb = std::sin(beta);
  // Great circle cos t e1 + sin t e2 with e1 = (cos b, 0, -sin b), e2 = (0, 1, 0),
  // projected by x = (Y0, Y1) / (1 + Y2).
  struct Lift {
    double y[3], dy[3], ddy[3];
  };
  auto lift = [cb, sb](double t) {
    const double c = std::cos(t), s = std::sin(t);
    return Lift{{cb * c, s, -sb * c}, {-cb * s, c, sb * s}, {-cb * c, -s, sb * c}};
  };
  auto f = [lift](double t) {
    const Lift l = lift(t);
    const double w = 1.0 + l.y[2];
    return vec({l.y[0] / w, l.y[1] / w});
  };
  auto df = [lift](double t) {
    const Lift l = lift(t);
    const double w = 1.0 + l.y[2], dw = l.dy[2];
    return vec({(l.dy[0] * w - l.y[0] * dw) / (w * w), (l.dy[1] * w - l.y[1] * dw) / (w * w)});
  };
  auto ddf = [lift](double t) {
    const Lift l = lift(t);
    const double w = 1.0 + l.y[2], dw = l.dy[2], ddw = l.ddy[2];
    Point out(2);
    for (int i = 0; i < 2; ++i) {
      out(i) = l.ddy[i] / w - 2.0 * l.dy[i] * dw / (w * w) - l.y[i] * ddw / (w * w) +
               2.0 * l.y[i] * dw * dw / (w * w * w);
    }
    return out;
  };
  Immersion imm = curve_immersion("geodesic-on-chart-sphere-metric",
                                  stereographic_sphere_chart(steps), f, df, ddf);
  Scenario s = base("geodesic-on-chart-sphere-metric",
                    "tilted great circle of the unit sphere in stereographic chart coordinates",
                    std::move(imm), 1.0, true, p);
  s.analytic_reach = M_PI / 2.0;
  s.expected_assigner = AssignerKind::kBottleneck;
  s.analytic_defect = 0.0;
  // Chart distances need shooting; coarser resolutions keep the run short.
  s.reach.starts = 6;
  s.reach.surface_samples = 4;
  s.reach.ambient_samples = 8;
  s.reach.candidates_per_level = 2;
  s.reach.window_radius = 1;
  s.reach.min_spacing_rel = 1e-4;
  return s;
}

Scenario conformal_circle(const ScenarioParams& p) {
  const double amp = param(p, "amplitude");
  const double r = param(p, "radius");
  const int steps = static_cast<int>(param(p, "ode_steps"));
  require(amp >= 0.0, "amplitude must be >= 0");
  require(r > 0.0 && r < 4.0, "radius must lie in (0, 4)");
  require(steps >= 8, "ode_steps must be >= 8");
  Immersion imm = curve_immersion(
      "circle-in-conformal-chart", conformal_bump_chart(amp, steps),
      [r](double t) { return vec({r * std::cos(t), r * std::sin(t)}); },
      [r](double t) { return vec({-r * std::sin(t), r * std::cos(t)}); },
      [r](double t) { return vec({-r * std::cos(t), -r * std::sin(t)}); });
  // kappa = 4 a (1 - |x|^2) exp(-|x|^2) exp(-2 f) >= -4 a e^{-2} for a >= 0.
  Scenario s = base("circle-in-conformal-chart",
                    "coordinate circle in the flat metric with a radial conformal bump",
                    std::move(imm), -4.0 * amp * std::exp(-2.0), amp == 0.0, p);
  // Radial lines are geodesics by symmetry and meet only at the centre.
  double tau = 0.0;
  constexpr int kPanels = 2000;
  for (int j = 0; j <= kPanels; ++j) {
    const double x = r * j / kPanels;
    const double w = (j == 0 || j == kPanels) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    tau += w * std::exp(amp * std::exp(-x * x));
  }
  s.analytic_reach = tau * r / (3.0 * kPanels);
  s.expected_assigner = AssignerKind::kBottleneck;
  s.reach.starts = 6;
  s.reach.surface_samples = 4;
  s.reach.ambient_samples = 8;
  s.reach.candidates_per_level = 2;
  s.reach.window_radius = 1;
  s.reach.min_spacing_rel = 1e-4;
  return s;
}

struct Entry {
  ScenarioInfo info;
  std::function<Scenario(const ScenarioParams&)> build;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {{"circle", "circle of radius r in the Euclidean plane", {{"radius", 2.0}}}, circle},
      {{"ellipse", "ellipse with semi-axes a >= b", {{"a", 2.0}, {"b", 1.0}}}, ellipse},
      {{"round-sphere", "round sphere in Euclidean 3-space", {{"radius", 1.0}}}, round_sphere},
      {{"torus", "torus of revolution in Euclidean 3-space", {{"R", 2.0}, {"r", 0.5}}}, torus},
      {{"great-circle-on-sphere", "equator of the round 2-sphere", {{"radius", 1.0}}},
       great_circle},
      {{"small-circle-on-sphere", "circle at colatitude rho on the unit sphere",
        {{"rho", M_PI / 3.0}}},
       small_circle},
      {{"geodesic-on-chart-sphere-metric", "tilted great circle, stereographic chart",
        {{"tilt", M_PI / 6.0}, {"ode_steps", 64.0}}},
       chart_great_circle},
      {{"circle-in-hyperbolic-plane", "geodesic circle in the hyperbolic plane",
        {{"rho", 0.75}, {"curvature", -1.0}}},
       hyperbolic_circle},
      {{"circle-in-conformal-chart", "circle in a conformally perturbed flat chart",
        {{"amplitude", 0.3}, {"radius", 1.0}, {"ode_steps", 64.0}}},
       conformal_circle},
  };
  return table;
}

}  // namespace

AmbientSpace stereographic_sphere_chart(int ode_steps) {
  auto metric = [](const Point& x) {
    const double s = 1.0 + x.squaredNorm();
    return Matrix(4.0 / (s * s) * Matrix::Identity(2, 2));
  };
  return AmbientSpace::chart(2, metric, ChartBox{Vector::Constant(2, -20.0), Vector::Constant(2, 20.0)},
                             1.0, ode_steps);
}

AmbientSpace conformal_bump_chart(double amplitude, int ode_steps) {
  auto metric = [amplitude](const Point& x) {
    const double f = amplitude * std::exp(-x.squaredNorm());
    return Matrix(std::exp(2.0 * f) * Matrix::Identity(2, 2));
  };
  std::optional<double> curvature;
  if (amplitude == 0.0) curvature = 0.0;
  return AmbientSpace::chart(2, metric, ChartBox{Vector::Constant(2, -6.0), Vector::Constant(2, 6.0)},
                             curvature, ode_steps);
}

const std::vector<ScenarioInfo>& scenario_registry() {
  static const std::vector<ScenarioInfo> infos = [] {
    std::vector<ScenarioInfo> out;
    for (const auto& e : entries()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

bool has_scenario(const std::string& name) {
  for (const auto& e : entries()) {
    if (e.info.name == name) return true;
  }
  return false;
}

Scenario make_scenario(const std::string& name, const ScenarioParams& overrides) {
  for (const auto& e : entries()) {
    if (e.info.name != name) continue;
    ScenarioParams params = e.info.defaults;
    for (const auto& [key, value] : overrides) {
      if (!params.count(key)) throw ConfigError("unknown parameter '" + key + "' for " + name);
      if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' must be finite");
      params[key] = value;
    }
    return e.build(params);
  }
  throw ConfigError("scenario not found: " + name);
}

}  // namespace reachkit
