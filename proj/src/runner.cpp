#include "reachkit/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "reachkit/errors.hpp"

namespace reachkit {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- config parsing ---------------------------------------------------------

void reject_unknown(const json& object, std::initializer_list<const char*> keys,
                    const std::string& where) {
  std::set<std::string> known(keys.begin(), keys.end());
  for (auto it = object.begin(); it != object.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

const json& object_at(const json& parent, const char* key, const std::string& where) {
  const json& v = parent.at(key);
  if (!v.is_object()) throw ConfigError(where + "." + key + " must be an object");
  return v;
}

int positive_int(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw ConfigError(where + " must be a positive integer");
  }
  return static_cast<int>(v.get<long long>());
}

double positive_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || x <= 0.0) throw ConfigError(where + " must be positive and finite");
  return x;
}

ResolutionConfig parse_resolution(const json& j, const std::string& where) {
  reject_unknown(j,
                 {"surface_samples", "normal_samples", "ambient_samples", "starts", "ode_steps",
                  "quadrature_order", "geodesic_probes", "normal_probes",
                  "second_variation_probes", "fractions", "fd_step"},
                 where);
  ResolutionConfig r;
  auto opt_int = [&](const char* key, std::optional<int>& out) {
    if (j.contains(key)) out = positive_int(j[key], where + "." + key);
  };
  opt_int("surface_samples", r.surface_samples);
  opt_int("normal_samples", r.normal_samples);
  opt_int("ambient_samples", r.ambient_samples);
  opt_int("starts", r.starts);
  opt_int("ode_steps", r.ode_steps);
  if (j.contains("quadrature_order")) {
    r.quadrature_order = positive_int(j["quadrature_order"], where + ".quadrature_order");
  }
  if (j.contains("geodesic_probes")) {
    r.geodesic_probes = positive_int(j["geodesic_probes"], where + ".geodesic_probes");
  }
  if (j.contains("normal_probes")) {
    r.normal_probes = positive_int(j["normal_probes"], where + ".normal_probes");
  }
  if (j.contains("second_variation_probes")) {
    r.second_variation_probes =
        positive_int(j["second_variation_probes"], where + ".second_variation_probes");
  }
  if (j.contains("fractions")) {
    const json& f = j["fractions"];
    if (!f.is_array() || f.empty()) throw ConfigError(where + ".fractions must be a nonempty array");
    r.fractions.clear();
    for (const json& x : f) {
      const double v = positive_number(x, where + ".fractions");
      if (v >= 1.0) throw ConfigError(where + ".fractions must lie in (0, 1)");
      r.fractions.push_back(v);
    }
  }
  if (j.contains("fd_step")) r.fd_step = positive_number(j["fd_step"], where + ".fd_step");
  return r;
}

ToleranceConfig parse_tolerances(const json& j, const std::string& where) {
  reject_unknown(j,
                 {"dist_tol", "cluster_tol", "reach_rel", "bound", "equality_rel", "assigner",
                  "defect_value", "defect_identity", "tangential"},
                 where);
  ToleranceConfig t;
  if (j.contains("dist_tol")) t.dist_tol = positive_number(j["dist_tol"], where + ".dist_tol");
  if (j.contains("cluster_tol")) {
    t.cluster_tol = positive_number(j["cluster_tol"], where + ".cluster_tol");
  }
  auto number = [&](const char* key, double& out) {
    if (j.contains(key)) out = positive_number(j[key], where + "." + key);
  };
  number("reach_rel", t.reach_rel);
  number("bound", t.bound);
  number("equality_rel", t.equality_rel);
  number("assigner", t.assigner);
  number("defect_value", t.defect_value);
  number("defect_identity", t.defect_identity);
  number("tangential", t.tangential);
  return t;
}

ScenarioConfig parse_scenario(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown(j, {"name", "params", "resolution", "tolerances"}, where);
  if (!j.contains("name") || !j["name"].is_string()) {
    throw ConfigError(where + ".name must be a string");
  }
  ScenarioConfig c;
  c.name = j["name"].get<std::string>();
  if (!has_scenario(c.name)) throw ConfigError("scenario not found: " + c.name);
  if (j.contains("params")) {
    const json& p = object_at(j, "params", where);
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (!it.value().is_number()) {
        throw ConfigError(where + ".params." + it.key() + " must be a number");
      }
      c.params[it.key()] = it.value().get<double>();
    }
  }
  if (j.contains("resolution")) {
    c.resolution = parse_resolution(object_at(j, "resolution", where), where + ".resolution");
  }
  if (j.contains("tolerances")) {
    c.tolerances = parse_tolerances(object_at(j, "tolerances", where), where + ".tolerances");
  }
  // Resolve now so bad parameters fail at load time.
  make_scenario(c.name, c.params);
  return c;
}

// ---- running ----------------------------------------------------------------

ReachOptions options_for(const Scenario& s, const ScenarioConfig& c, int threads) {
  ReachOptions o = s.reach;
  if (c.resolution.surface_samples) o.surface_samples = *c.resolution.surface_samples;
  if (c.resolution.normal_samples) o.normal_samples = *c.resolution.normal_samples;
  if (c.resolution.ambient_samples) o.ambient_samples = *c.resolution.ambient_samples;
  if (c.resolution.starts) o.starts = *c.resolution.starts;
  if (c.tolerances.dist_tol) o.dist_tol = *c.tolerances.dist_tol;
  if (c.tolerances.cluster_tol) o.cluster_tol = *c.tolerances.cluster_tol;
  o.threads = std::max(threads, 1);
  return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CheckRecord record(std::string check, double lhs, double rhs, double residual, bool pass,
                   std::string note = {}) {
  return CheckRecord{std::move(check), lhs, rhs, residual, pass, std::move(note)};
}

void reach_checks(const Scenario& s, const ToleranceConfig& tol, ScenarioResult& r) {
  auto estimate = [&](const char* check, const ReachEstimate& e) {
    const bool ok = e.status == ReachStatus::kOk;
    if (s.analytic_reach) {
      const double rel = (e.tau_hat - *s.analytic_reach) / *s.analytic_reach;
      r.checks.push_back(record(check, e.tau_hat, *s.analytic_reach, rel,
                                ok && std::abs(rel) <= tol.reach_rel, to_string(e.status)));
    } else {
      r.checks.push_back(record(check, e.tau_hat, kNaN, kNaN, ok, to_string(e.status)));
    }
  };
  estimate("reach_normal_collision", r.normal);
  estimate("reach_medial_infimum", r.medial);
  const double a = r.normal.tau_hat, b = r.medial.tau_hat;
  const double mean = 0.5 * (a + b);
  const double gap = std::abs(a - b) / mean;
  r.checks.push_back(record("reach_agreement", a, b, gap,
                            std::isfinite(gap) && gap <= tol.reach_rel));
}

void bound_checks(const Scenario& s, const ToleranceConfig& tol, ScenarioResult& r) {
  const double B = bound_B(r.tau_check, s.c_lower);
  double pairing = -std::numeric_limits<double>::infinity();
  double accel = 0.0, shape = 0.0, tangential = 0.0;
  bool pass_pairing = true, pass_norm = true, pass_shape = true;
  bool any_norm = false;
  bool chart = false;
  double sharper_gap = -std::numeric_limits<double>::infinity();
  double min_kappa = std::numeric_limits<double>::infinity();
  bool pass_sharper = true, pass_curvature = true;
  for (const BoundReport& b : r.bounds) {
    pairing = std::max(pairing, b.accel_pairing);
    pass_pairing = pass_pairing && b.pass_pairing;
    if (b.accel_norm) {
      accel = std::max(accel, *b.accel_norm);
      any_norm = true;
    }
    pass_norm = pass_norm && b.pass_norm;
    shape = std::max(shape, b.shape_norm);
    pass_shape = pass_shape && b.pass_shape;
    tangential = std::max(tangential, b.tangential_residual);
    if (b.sharper_bound) {
      chart = true;
      sharper_gap = std::max(sharper_gap, b.accel_pairing - *b.sharper_bound);
      pass_sharper = pass_sharper && b.pass_sharper;
    }
    if (b.min_curvature) min_kappa = std::min(min_kappa, *b.min_curvature);
    pass_curvature = pass_curvature && b.pass_curvature;
  }
  r.checks.push_back(record("accel_pairing_bound", pairing, B, B - pairing, pass_pairing));
  r.checks.push_back(record("accel_norm_bound", accel, B, B - accel, pass_norm,
                            any_norm ? "" : "acceleration vanishes on every probe"));
  r.checks.push_back(record("shape_norm_bound", shape, B, B - shape, pass_shape));
  if (s.expect_equality) {
    const double ra = std::abs(accel - B) / B;
    const double rs = std::abs(shape - B) / B;
    r.checks.push_back(record("accel_norm_equality", accel, B, ra, ra <= tol.equality_rel));
    r.checks.push_back(record("shape_norm_equality", shape, B, rs, rs <= tol.equality_rel));
  }
  r.checks.push_back(record("geodesic_tangential_residual", tangential, tol.tangential,
                            tol.tangential - tangential, tangential <= tol.tangential));
  if (chart) {
    r.checks.push_back(record("curvature_lower_bound", min_kappa, s.c_lower,
                              min_kappa - s.c_lower, pass_curvature));
    r.checks.push_back(record("sharper_bound", sharper_gap, 0.0, -sharper_gap, pass_sharper,
                              "max of accel pairing minus 1/tau - tau I"));
  }
}

void second_variation_checks(ScenarioResult& r) {
  double worst = 0.0, tolerance = 0.0;
  double min_closed = std::numeric_limits<double>::infinity();
  double comparison = -std::numeric_limits<double>::infinity();
  bool agree = true, nonneg = true, compare = true;
  for (const SecondVariationReport& v : r.second_variation) {
    worst = std::max(worst, std::abs(v.closed - v.fd));
    tolerance = v.tolerance;
    min_closed = std::min(min_closed, v.closed);
    comparison = std::max(comparison, v.distance_fd - v.closed);
    agree = agree && v.pass_agreement;
    nonneg = nonneg && v.pass_nonnegative;
    compare = compare && v.pass_comparison;
  }
  const bool any = !r.second_variation.empty();
  const std::string note = std::to_string(r.second_variation.size()) + " probes";
  r.checks.push_back(record("second_variation_agreement", worst, tolerance, tolerance - worst,
                            any && agree, note));
  r.checks.push_back(record("second_variation_nonnegative", min_closed, -1e-6, min_closed + 1e-6,
                            any && nonneg, note));
  r.checks.push_back(record("second_variation_comparison", comparison, tolerance,
                            tolerance - comparison, any && compare, note));
}

// A normal geodesic of length tau / 2 from the first sample that stays in the
// ambient domain.
void curvature_integral_check(const Scenario& s, const ScenarioConfig& c, ScenarioResult& r) {
  const Immersion& imm = s.immersion;
  const AmbientSpace& space = imm.ambient();
  for (const ParamPoint& u : param_grid(imm.domain(), 4)) {
    try {
      const TangentFrame f = frame(imm, u);
      const Tangent eta = f.normals.col(0);
      Tangent u0 = f.tangents.col(0);
      u0 /= norm(space, f.point, u0);
      const GeodesicPath sigma = geodesic(space, f.point, 0.5 * r.tau_check * eta, 16);
      r.curvature_integral = curvature_integral(space, sigma, u0, c.resolution.quadrature_order);
      const double I = r.curvature_integral->value;
      if (space.is_space_form()) {
        const double exact = s.c_lower / 3.0;
        r.curvature_oracle = exact;
        r.checks.push_back(record("curvature_integral_exact", I, exact, I - exact,
                                  std::abs(I - exact) <= 1e-10, "c / 3"));
      } else {
        const double oracle = curvature_integral_simpson(space, sigma, u0, 10000);
        r.curvature_oracle = oracle;
        bool pass = std::abs(I - oracle) <= 1e-6;
        std::string note = "composite Simpson, 10000 panels";
        if (space.curvature_constant()) {
          pass = pass && std::abs(I - *space.curvature_constant() / 3.0) <= 1e-6;
          note += "; constant curvature c / 3";
        }
        r.checks.push_back(record("curvature_integral_exact", I, oracle, I - oracle, pass, note));
      }
      return;
    } catch (const GeometryError& e) {
      if (e.code() != ErrorCode::kDomainEscape && e.code() != ErrorCode::kImmersionDegeneracy) {
        throw;
      }
    }
  }
  r.checks.push_back(record("curvature_integral_exact", kNaN, kNaN, kNaN, false,
                            "no normal geodesic stayed in the ambient domain"));
}

void assigner_checks(const Scenario& s, ScenarioResult& r) {
  if (s.expected_assigner) {
    int found = -1;
    for (std::size_t i = 0; i < r.assigners.size(); ++i) {
      if (r.assigners[i].classification == *s.expected_assigner) {
        found = static_cast<int>(i);
        break;
      }
    }
    const double multiplicity =
        found >= 0 ? r.assigners[found].foot_points.multiplicity()
                   : (r.assigners.empty() ? 0.0 : r.assigners.front().foot_points.multiplicity());
    const double expected = *s.expected_assigner == AssignerKind::kBottleneck ? 2.0 : 1.0;
    r.checks.push_back(record("assigner_classification", multiplicity, expected,
                              multiplicity - expected, found >= 0,
                              "expected " + to_string(*s.expected_assigner)));
  }
  if (r.bottleneck) {
    const BottleneckReport& b = *r.bottleneck;
    std::string note = to_string(b.kind) + ", " + to_string(b.status);
    if (b.approximation) note += ", shape-operator direction";
    if (!b.flat) note += ", rhs >= lhs";
    r.checks.push_back(record("bottleneck_equality", b.lhs, b.rhs, b.residual, b.pass, note));
  }
}

void defect_checks(const Scenario& s, const ToleranceConfig& tol, ScenarioResult& r) {
  if (!r.defect) return;
  const DefectReport& d = *r.defect;
  r.checks.push_back(record("transport_defect_bound", std::abs(d.D), d.bound,
                            d.bound - std::abs(d.D), std::abs(d.D) <= d.bound + tol.bound,
                            d.note));
  r.checks.push_back(record("transport_defect_identity", d.identity_residual, tol.defect_identity,
                            tol.defect_identity - d.identity_residual,
                            d.identity_residual <= tol.defect_identity));
  r.checks.push_back(record("transport_defect_chain", d.chain_residual, 0.0, -d.chain_residual,
                            d.chain_residual <= 1e-8));
  if (s.analytic_defect) {
    const double diff = d.D - *s.analytic_defect;
    bool pass = std::abs(diff) <= tol.defect_value;
    // Totally geodesic: zero exactly, not within a tolerance.
    if (*s.analytic_defect == 0.0) pass = d.totally_geodesic && d.D == 0.0;
    r.checks.push_back(record("transport_defect_value", d.D, *s.analytic_defect, diff, pass));
  }
}

// ---- report -----------------------------------------------------------------

json vec(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json opt(const std::optional<double>& x) { return x ? number(*x) : json(nullptr); }

json feet_json(const FootPointSet& set) {
  json feet = json::array();
  for (const FootPoint& f : set.minimizers) {
    feet.push_back({{"param", vec(f.param)},
                    {"point", vec(f.point)},
                    {"distance", number(f.distance)},
                    {"stiffness", number(f.stiffness)}});
  }
  return feet;
}

json estimate_json(const ReachEstimate& e, double seconds, bool include_time) {
  json j = {{"method", to_string(e.method)},
            {"status", to_string(e.status)},
            {"tau_hat", number(e.tau_hat)},
            {"witness", vec(e.witness)},
            {"witness_feet", feet_json(e.witness_feet)},
            {"candidates", e.candidates.size()},
            {"diameter", number(e.diameter)},
            {"resolution",
             {{"surface_samples", e.resolution.surface_samples},
              {"normal_samples", e.resolution.normal_samples},
              {"rays", e.resolution.rays},
              {"ambient_samples", e.resolution.ambient_samples},
              {"levels", e.resolution.levels},
              {"probes", e.resolution.probes},
              {"final_spacing", number(e.resolution.final_spacing)}}}};
  if (include_time) j["seconds"] = seconds;
  return j;
}

json bound_json(const BoundReport& b) {
  return {{"param", vec(b.probe.param)},
          {"eta", vec(b.probe.eta)},
          {"direction", vec(b.probe.direction)},
          {"B", number(b.B)},
          {"accel_pairing", number(b.accel_pairing)},
          {"accel_norm", opt(b.accel_norm)},
          {"shape_norm", number(b.shape_norm)},
          {"residual_pairing", number(b.residual_pairing)},
          {"residual_norm", opt(b.residual_norm)},
          {"residual_shape", number(b.residual_shape)},
          {"curvature_integral", opt(b.curvature_integral)},
          {"sharper_bound", opt(b.sharper_bound)},
          {"min_curvature", opt(b.min_curvature)},
          {"tangential_residual", number(b.tangential_residual)},
          {"pass",
           b.pass_pairing && b.pass_norm && b.pass_shape && b.pass_sharper && b.pass_curvature}};
}

json second_variation_json(const SecondVariationReport& v) {
  return {{"param", vec(v.probe.param)},  {"eta", vec(v.probe.eta)},
          {"direction", vec(v.probe.direction)},
          {"tau", number(v.tau)},         {"curvature_integral", number(v.curvature_integral)},
          {"accel_pairing", number(v.accel_pairing)},
          {"closed", number(v.closed)},   {"fd", number(v.fd)},
          {"distance_fd", number(v.distance_fd)},
          {"h", number(v.h)},             {"tolerance", number(v.tolerance)},
          {"pass", v.pass_agreement && v.pass_nonnegative && v.pass_comparison}};
}

json result_json(const ScenarioResult& r, bool include_time) {
  json params = json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  json j = {{"name", r.name},
            {"params", params},
            {"analytic_reach", opt(r.analytic_reach)},
            {"estimates",
             {estimate_json(r.normal, r.normal_seconds, include_time),
              estimate_json(r.medial, r.medial_seconds, include_time)}},
            {"tau_check", number(r.tau_check)}};
  json assigners = json::array();
  for (const ReachAssigner& a : r.assigners) {
    assigners.push_back({{"q", vec(a.q)},
                         {"distance", number(a.distance)},
                         {"classification", to_string(a.classification)},
                         {"feet", feet_json(a.foot_points)}});
  }
  j["assigners"] = assigners;
  json bounds = json::array();
  for (const BoundReport& b : r.bounds) bounds.push_back(bound_json(b));
  j["bounds"] = bounds;
  json sv = json::array();
  for (const SecondVariationReport& v : r.second_variation) sv.push_back(second_variation_json(v));
  j["second_variation"] = sv;
  if (r.curvature_integral) {
    j["curvature_integral"] = {{"value", number(r.curvature_integral->value)},
                               {"order", r.curvature_integral->order},
                               {"oracle", opt(r.curvature_oracle)}};
  }
  if (r.bottleneck) {
    const BottleneckReport& b = *r.bottleneck;
    j["bottleneck"] = {{"kind", to_string(b.kind)},
                       {"status", to_string(b.status)},
                       {"approximation", b.approximation},
                       {"flat", b.flat},
                       {"L", number(b.L)},
                       {"s0", number(b.s0)},
                       {"lhs", number(b.lhs)},
                       {"rhs", number(b.rhs)},
                       {"curvature_integral", number(b.curvature_integral)},
                       {"residual", number(b.residual)},
                       {"pass", b.pass},
                       {"profile_s", b.profile_s},
                       {"profile_L", b.profile_L}};
  }
  if (r.defect) {
    const DefectReport& d = *r.defect;
    j["defect"] = {{"D", number(d.D)},
                   {"bound", number(d.bound)},
                   {"bound_alt", number(d.bound_alt)},
                   {"tau", number(d.tau)},
                   {"c", number(d.c)},
                   {"identity_residual", number(d.identity_residual)},
                   {"chain_residual", number(d.chain_residual)},
                   {"totally_geodesic", d.totally_geodesic},
                   {"pass", d.pass},
                   {"note", d.note},
                   {"s", d.s},
                   {"f", d.f}};
  }
  json checks = json::array();
  for (const CheckRecord& c : r.checks) {
    checks.push_back({{"check", c.check},
                      {"lhs", number(c.lhs)},
                      {"rhs", number(c.rhs)},
                      {"residual", number(c.residual)},
                      {"pass", c.pass},
                      {"note", c.note}});
  }
  j["checks"] = checks;
  j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
  j["pass"] = r.pass;
  if (include_time) j["wall_time"] = r.wall_time;
  return j;
}

std::string csv_number(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// ---- plots ------------------------------------------------------------------

std::string polyline_svg(const std::string& title, const std::vector<double>& x,
                         const std::vector<double>& y) {
  const double w = 480, h = 300, pad = 40;
  double x0 = *std::min_element(x.begin(), x.end()), x1 = *std::max_element(x.begin(), x.end());
  double y0 = *std::min_element(y.begin(), y.end()), y1 = *std::max_element(y.begin(), y.end());
  if (x1 - x0 < 1e-300) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-300) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<text x=\"" << pad << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n"
      << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double px = pad + (x[i] - x0) / (x1 - x0) * (w - 2 * pad);
    const double py = h - pad - (y[i] - y0) / (y1 - y0) * (h - 2 * pad);
    out << px << "," << py << " ";
  }
  out << "\"/>\n<text x=\"" << pad << "\" y=\"" << h - 10 << "\" font-size=\"11\">" << x0
      << " .. " << x1 << ", range " << y0 << " .. " << y1 << "</text>\n</svg>\n";
  return out.str();
}

std::string bars_svg(const std::string& title, const std::vector<CheckRecord>& checks) {
  const double row = 18, w = 640, pad = 220;
  const double h = 40 + row * checks.size();
  double scale = 0.0;
  for (const CheckRecord& c : checks) {
    if (std::isfinite(c.residual)) scale = std::max(scale, std::abs(c.residual));
  }
  if (scale <= 0.0) scale = 1.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<text x=\"10\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
  const double mid = pad + (w - pad) / 2;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const CheckRecord& c = checks[i];
    const double y = 30 + row * i;
    const double r = std::isfinite(c.residual) ? c.residual / scale : 0.0;
    const double len = std::abs(r) * (w - pad) / 2 * 0.95;
    out << "<text x=\"10\" y=\"" << y + 12 << "\" font-size=\"11\">" << c.check << "</text>\n"
        << "<rect x=\"" << (r < 0 ? mid - len : mid) << "\" y=\"" << y + 2 << "\" width=\""
        << len << "\" height=\"" << row - 4 << "\" fill=\"" << (c.pass ? "seagreen" : "firebrick")
        << "\"/>\n";
  }
  out << "<line x1=\"" << mid << "\" y1=\"28\" x2=\"" << mid << "\" y2=\"" << h
      << "\" stroke=\"black\"/>\n</svg>\n";
  return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"schema_version", "scenarios", "output", "threads"}, "config");
  RunConfig c;
  c.source = text;
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw ConfigError("config.schema_version must be an integer");
  }
  c.schema_version = j["schema_version"].get<int>();
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
  }
  if (!j.contains("scenarios") || !j["scenarios"].is_array()) {
    throw ConfigError("config.scenarios must be an array");
  }
  for (std::size_t i = 0; i < j["scenarios"].size(); ++i) {
    c.scenarios.push_back(
        parse_scenario(j["scenarios"][i], "config.scenarios[" + std::to_string(i) + "]"));
  }
  if (j.contains("output")) {
    const json& o = object_at(j, "output", "config");
    reject_unknown(o, {"path", "format", "plots"}, "config.output");
    auto str = [&](const char* key, std::string& out) {
      if (!o.contains(key)) return;
      if (!o[key].is_string()) throw ConfigError(std::string("config.output.") + key + " must be a string");
      out = o[key].get<std::string>();
    };
    str("path", c.output.path);
    str("format", c.output.format);
    str("plots", c.output.plots);
  }
  if (c.output.format != "json" && c.output.format != "csv") {
    throw ConfigError("config.output.format must be json or csv");
  }
  c.threads = default_threads(1);
  if (j.contains("threads")) c.threads = positive_int(j["threads"], "config.threads");
  if (std::getenv("REACHKIT_THREADS")) c.threads = default_threads(c.threads);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

int default_threads(int fallback) {
  const char* env = std::getenv("REACHKIT_THREADS");
  if (!env) return fallback;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n <= 0) return fallback;
  return static_cast<int>(n);
}

const CheckRecord* ScenarioResult::find(const std::string& check) const {
  for (const CheckRecord& c : checks) {
    if (c.check == check) return &c;
  }
  return nullptr;
}

ScenarioConfig default_config(const std::string& name) {
  if (!has_scenario(name)) throw ConfigError("scenario not found: " + name);
  ScenarioConfig c;
  c.name = name;
  return c;
}

ScenarioResult run_scenario(const ScenarioConfig& config, int threads) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioParams params = config.params;
  if (config.resolution.ode_steps) {
    const ScenarioParams defaults = make_scenario(config.name).params;
    if (!defaults.count("ode_steps")) {
      throw ConfigError("ode_steps applies only to chart scenarios, not " + config.name);
    }
    params["ode_steps"] = *config.resolution.ode_steps;
  }
  const Scenario s = make_scenario(config.name, params);
  const ReachOptions options = options_for(s, config, threads);
  const ToleranceConfig& tol = config.tolerances;

  ScenarioResult r;
  r.name = s.name;
  r.params = s.params;
  r.analytic_reach = s.analytic_reach;
  try {
    auto t0 = std::chrono::steady_clock::now();
    r.normal = reach_normal_collision(s.immersion, options);
    r.normal_seconds = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    r.medial = reach_medial_infimum(s.immersion, options);
    r.medial_seconds = seconds_since(t0);
    reach_checks(s, tol, r);

    // Both estimators approach the reach from above; the smaller is used.
    const bool normal_ok = r.normal.status == ReachStatus::kOk;
    const bool medial_ok = r.medial.status == ReachStatus::kOk;
    if (!normal_ok && !medial_ok) {
      throw GeometryError(ErrorCode::kInvalidReach, "no finite reach estimate");
    }
    r.tau_check = normal_ok && medial_ok ? std::min(r.normal.tau_hat, r.medial.tau_hat)
                                         : (normal_ok ? r.normal.tau_hat : r.medial.tau_hat);

    // Medial-infimum witnesses are medial points; normal collision witnesses
    // sit at focal limits and serve only as a fallback.
    const ReachEstimate& source = medial_ok ? r.medial : r.normal;
    r.assigners = reach_assigning_points(s.immersion, source,
                                         tol.assigner * (1.0 + source.tau_hat), options);
    if (r.assigners.empty() && medial_ok && normal_ok) {
      r.assigners = reach_assigning_points(s.immersion, r.normal,
                                           tol.assigner * (1.0 + r.normal.tau_hat), options);
    }

    const ResolutionConfig& res = config.resolution;
    r.bounds = check_extrinsic_bounds(s.immersion, r.tau_check, s.c_lower, res.geodesic_probes,
                                      res.normal_probes, tol.bound);
    bound_checks(s, tol, r);
    r.second_variation =
        check_second_variation(s.immersion, r.tau_check, res.second_variation_probes,
                               res.fractions, res.fd_step, options);
    second_variation_checks(r);
    curvature_integral_check(s, config, r);

    if (!r.assigners.empty()) {
      r.bottleneck = check_bottleneck_equality(s.immersion, r.assigners.front(), tol.equality_rel);
    }
    assigner_checks(s, r);

    const TangentFrame f = frame(s.immersion, s.defect_start);
    Vector w = s.defect_direction;
    w /= std::sqrt(w.dot(f.metric * w));
    Vector v0 = s.defect_vector;
    v0 /= std::sqrt(v0.dot(f.metric * v0));
    const IntrinsicCurve alpha = intrinsic_geodesic(s.immersion, s.defect_start, w, 1.0);
    r.defect = transport_defect(s.immersion, alpha, v0, r.tau_check, s.c_lower, tol.bound);
    defect_checks(s, tol, r);
  } catch (const GeometryError& e) {
    r.error = e.what();
  }
  r.pass = r.error.empty() && !r.checks.empty() &&
           std::all_of(r.checks.begin(), r.checks.end(), [](const CheckRecord& c) { return c.pass; });
  r.wall_time = seconds_since(start);
  return r;
}

std::string report_json(const std::vector<ScenarioResult>& results, const RunConfig& config,
                        bool include_time) {
  json echo = nullptr;
  if (!config.source.empty()) {
    try {
      echo = json::parse(config.source);
    } catch (const json::parse_error&) {
      echo = config.source;
    }
  }
  json j = {{"schema_version", kSchemaVersion}, {"config", echo}};
  json list = json::array();
  bool pass = true;
  for (const ScenarioResult& r : results) {
    list.push_back(result_json(r, include_time));
    pass = pass && r.pass;
  }
  j["results"] = list;
  j["pass"] = pass;
  return j.dump(2) + "\n";
}

std::string report_csv(const std::vector<ScenarioResult>& results) {
  std::ostringstream out;
  out << "scenario,check,lhs,rhs,residual,pass\n";
  for (const ScenarioResult& r : results) {
    for (const CheckRecord& c : r.checks) {
      out << csv_field(r.name) << "," << c.check << "," << csv_number(c.lhs) << ","
          << csv_number(c.rhs) << "," << csv_number(c.residual) << ","
          << (c.pass ? "true" : "false") << "\n";
    }
    if (!r.error.empty()) out << csv_field(r.name) << ",error,,,," << "false\n";
  }
  return out.str();
}

void emit_report(const std::vector<ScenarioResult>& results, const RunConfig& config) {
  const std::string text =
      config.output.format == "csv" ? report_csv(results) : report_json(results, config);
  if (config.output.path.empty()) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoError("write to stdout failed");
  } else {
    write_file(config.output.path, text);
  }
  if (!config.output.plots.empty()) {
    for (const ScenarioResult& r : results) write_plots(r, config.output.plots);
  }
}

void write_plots(const ScenarioResult& result, const std::string& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create plot directory " + directory + ": " + ec.message());
  const std::filesystem::path dir(directory);
  if (result.defect && result.defect->s.size() > 1) {
    write_file(dir / (result.name + "_defect.svg"),
               polyline_svg(result.name + ": f(s) = <v_N, v_M>", result.defect->s,
                            result.defect->f));
  }
  if (result.bottleneck && result.bottleneck->profile_s.size() > 1) {
    write_file(dir / (result.name + "_profile.svg"),
               polyline_svg(result.name + ": L(s) = d(q, alpha(s))", result.bottleneck->profile_s,
                            result.bottleneck->profile_L));
  }
  if (!result.checks.empty()) {
    write_file(dir / (result.name + "_residuals.svg"),
               bars_svg(result.name + ": residuals (scaled)", result.checks));
  }
}

}  // namespace reachkit
