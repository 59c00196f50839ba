#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reachkit/ambient.hpp"
#include "reachkit/immersion.hpp"
#include "reachkit/reach.hpp"

namespace reachkit {

// U(t) = parallel transport of u0 along sigma, V(t) = (1 - t) U(t).
struct VariationField {
  GeodesicPath along;
  std::vector<Tangent> U;
  std::vector<Tangent> V;
};

VariationField variation_field(const AmbientSpace& space, const GeodesicPath& sigma,
                               const Tangent& u0);

struct CurvatureIntegral {
  double value;
  int order;
  int nodes;
  std::vector<double> kappa;  // integrand curvature at the nodes
};

// I = int_0^1 kappa(U(t), sigma'(t)) (1 - t)^2 dt by Gauss-Legendre quadrature.
// u0 must be unit and orthogonal to sigma'(0).
CurvatureIntegral curvature_integral(const AmbientSpace& space, const GeodesicPath& sigma,
                                     const Tangent& u0, int order = 8);

// Same integrand on a composite Simpson rule with `intervals` (even) panels.
double curvature_integral_simpson(const AmbientSpace& space, const GeodesicPath& sigma,
                                  const Tangent& u0, int intervals);

// 1/tau - tau I - accel_pairing.
double second_variation_closed(double tau, double curvature_integral, double accel_pairing);

// (3 - tau^2 c) / (3 tau).
double bound_B(double tau, double c);

struct SecondVariationFd {
  double value;           // second difference of the length of the explicit variation
  double distance_based;  // second difference of s -> d(alpha(s), q)
  double h;
};

// alpha(s) is the intrinsic geodesic through u with g-unit parameter velocity
// w; q = exp_p(tau eta). The variation is
//   chi(t, s) = exp_{sigma(t)}((1 - t) P_t(log_p alpha(s))),
// whose variation field is (1 - t) U(t). Raises kInvalidConfiguration when p
// is not the unique foot point of q.
SecondVariationFd second_variation_fd(const Immersion& imm, const ParamPoint& u, const Vector& w,
                                      const Tangent& eta, double tau, double h,
                                      const ReachOptions& projection);

struct BoundProbe {
  ParamPoint param;
  Tangent eta;
  Vector direction;  // g-unit, parameter coordinates
};

struct BoundReport {
  BoundProbe probe;
  double tau;
  double c_lower;
  double B;
  double accel_pairing;  // <alpha-ddot(0), eta>
  std::optional<double> accel_norm;  // |alpha-ddot(0)|; empty when alpha-ddot vanishes
  double shape_norm;     // |A_eta|
  double residual_pairing;
  std::optional<double> residual_norm;
  double residual_shape;
  bool pass_pairing;
  bool pass_norm;  // true when not applicable
  bool pass_shape;
  // Charts only: the probe's own curvature integral and 1/tau - tau I.
  std::optional<double> curvature_integral;
  std::optional<double> sharper_bound;
  std::optional<double> min_curvature;  // smallest sampled kappa along the probe
  bool pass_sharper{true};
  bool pass_curvature{true};
  double tangential_residual;  // |tangential part of alpha-ddot(0)|
};

// Probes: parameter grid with `geodesic_probes` cells per axis, both unit
// normals (codimension 1) or `normal_probes` directions (codimension 2), and
// intrinsic directions at angles j pi / 4 in a g-orthonormal frame.
std::vector<BoundReport> check_extrinsic_bounds(const Immersion& imm, double tau_hat, double c,
                                                int geodesic_probes, int normal_probes,
                                                double tol);

struct SecondVariationReport {
  BoundProbe probe;
  double tau;
  double curvature_integral;
  double accel_pairing;
  double closed;
  double fd;
  double distance_fd;
  double h;
  double tolerance;
  bool pass_agreement;
  bool pass_nonnegative;
  bool pass_comparison;  // distance-based second difference does not exceed the closed form
};

std::vector<SecondVariationReport> check_second_variation(const Immersion& imm, double tau_hat,
                                                          int per_axis,
                                                          const std::vector<double>& fractions,
                                                          double h,
                                                          const ReachOptions& projection);

enum class EqualityStatus { kOk, kNotApplicable, kScanFailure };
std::string to_string(EqualityStatus status);

struct BottleneckReport {
  AssignerKind kind;
  EqualityStatus status;
  bool approximation;  // unique case: direction from the shape operator, not a limit
  bool flat;           // equality expected; otherwise only rhs >= lhs
  double L{0.0};
  double s0{0.0};
  double lhs{0.0};
  double rhs{0.0};
  double curvature_integral{0.0};
  double residual{0.0};  // rhs - lhs
  bool pass{true};
  std::vector<double> profile_s;
  std::vector<double> profile_L;
};

BottleneckReport check_bottleneck_equality(const Immersion& imm, const ReachAssigner& assigner,
                                           double tol);

struct DefectReport {
  double D{0.0};
  std::vector<double> s;
  std::vector<double> f;
  double tau{0.0};
  double c{0.0};
  double bound{0.0};
  double bound_alt{0.0};  // (3 - tau c) / (3 tau), for comparison only
  double identity_residual{0.0};
  double chain_residual{0.0};  // max(|f'| - |(v^N)^perp| |A_eta|), should be <= 0
  bool totally_geodesic{false};
  bool pass{false};
  std::string note;
};

// alpha has unit speed and length 1; v0 is g-unit at alpha(0).
DefectReport transport_defect(const Immersion& imm, const IntrinsicCurve& alpha, const Vector& v0,
                              double tau_hat, double c, double tol);

}  // namespace reachkit
