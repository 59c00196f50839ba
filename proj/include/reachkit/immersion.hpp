#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "reachkit/ambient.hpp"
#include "reachkit/types.hpp"

namespace reachkit {

// Periodic axes wrap; closed axes are compact intervals whose endpoints may be
// coordinate singularities (polar angle); open axes make M non-compact.
enum class AxisKind { kPeriodic, kClosed, kOpen };

struct ParamDomain {
  Vector lower;
  Vector upper;
  std::vector<AxisKind> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  bool compact() const;
  // Wraps periodic axes into [lower, upper) and clamps the others.
  ParamPoint normalize(const ParamPoint& u) const;
  bool contains(const ParamPoint& u) const;
  // Shortest coordinate difference b - a, respecting periodicity.
  Vector difference(const ParamPoint& a, const ParamPoint& b) const;
  double separation(const ParamPoint& a, const ParamPoint& b) const {
    return difference(a, b).norm();
  }
};

// Nested grid of the domain: i/n along each axis, endpoints included on
// non-periodic axes. Doubling n yields a superset.
std::vector<ParamPoint> param_grid(const ParamDomain& domain, int per_axis);

// Deterministic Halton points in the domain box.
std::vector<ParamPoint> halton_points(const ParamDomain& domain, int count);

// Value and first/second parameter derivatives of F at u.
struct ImmersionJet {
  Point point;
  Matrix jacobian;               // model_dim x k
  std::vector<Tangent> hessian;  // d2F/du_i du_j at index i * k + j
};

using ImmersionMap = std::function<Point(const ParamPoint&)>;
using ImmersionJetFunction = std::function<ImmersionJet(const ParamPoint&)>;

// Compact submanifold M given by a parametrization into the ambient model.
class Immersion {
 public:
  Immersion(std::string name, AmbientSpace ambient, ParamDomain domain, ImmersionMap map,
            ImmersionJetFunction closed_form = {}, double fd_step = 1e-5);

  const std::string& name() const { return name_; }
  const AmbientSpace& ambient() const { return ambient_; }
  const ParamDomain& domain() const { return domain_; }
  int param_dim() const { return domain_.dim(); }
  int codim() const { return ambient_.dim() - param_dim(); }
  bool has_closed_form() const { return static_cast<bool>(closed_form_); }

  Point point(const ParamPoint& u) const;

  // Closed-form jet when available. Otherwise first derivatives use central
  // differences with step fd_step (1 + |u_i|) and second derivatives use
  // Richardson-extrapolated central differences with step 1e-3 (1 + |u_i|).
  ImmersionJet jet(const ParamPoint& u) const;

 private:
  std::string name_;
  AmbientSpace ambient_;
  ParamDomain domain_;
  ImmersionMap map_;
  ImmersionJetFunction closed_form_;
  double fd_step_;
};

struct TangentFrame {
  ParamPoint param;
  Point point;
  Matrix tangents;  // columns dF/du_i
  Matrix metric;    // induced metric g_ij
  Matrix normals;   // orthonormal basis of (T_pM)^perp, columns
};

TangentFrame frame(const Immersion& imm, const ParamPoint& u);

// Frame plus the ambient covariant Hessian of F; the shared input of every
// extrinsic quantity. Tangents of M are expressed in parameter coordinates.
struct LocalGeometry {
  const Immersion* immersion{nullptr};
  TangentFrame frame;
  Matrix metric_inverse;
  std::vector<Tangent> covariant_hessian;  // nabla-bar_{d_i} dF_j, projected to T_xN

  int k() const { return static_cast<int>(frame.metric.rows()); }
  // dF a.
  Tangent push(const Vector& a) const { return frame.tangents * a; }
  // nabla-bar_{dF a}(dF b) for the constant-coefficient extension.
  Tangent hessian(const Vector& a, const Vector& b) const;
  // Intrinsic Christoffel contraction Gamma(a, b) in parameter coordinates.
  Vector christoffel(const Vector& a, const Vector& b) const;
  // Normal part of hessian(a, b).
  Tangent second_fundamental(const Vector& a, const Vector& b) const;
  // Tangential part of an ambient vector, in parameter coordinates.
  Vector tangential_coordinates(const Tangent& v) const;
  double induced_norm(const Vector& a) const { return std::sqrt(a.dot(frame.metric * a)); }
  // Ambient acceleration of the intrinsic geodesic with alpha'(0) = dF a.
  Tangent geodesic_acceleration(const Vector& a) const;
  // Matrix of A_eta in parameter coordinates: <A_eta a, b>_g = <Pi(a,b), eta>.
  Matrix shape_operator(const Tangent& eta) const;
};

LocalGeometry local_geometry(const Immersion& imm, const ParamPoint& u);

Tangent second_fundamental(const Immersion& imm, const ParamPoint& u, const Vector& v,
                           const Vector& w);

struct ShapeOperatorNorm {
  double norm;
  Vector maximizer;   // g-unit, parameter coordinates
  double rayleigh;    // <A_eta w, w> for the requested eta (may be negative)
  Tangent normal;     // eta or -eta, whichever makes the Rayleigh quotient = +norm
  bool flipped;
};

ShapeOperatorNorm shape_operator_norm(const Immersion& imm, const ParamPoint& u,
                                      const Tangent& eta);
ShapeOperatorNorm shape_operator_norm(const LocalGeometry& geom, const Tangent& eta);

struct CurveSample {
  double s;
  ParamPoint u;
  Vector du;
  Vector ddu;
};

// Path u(s) in the parameter domain, s in [0, s_max].
struct IntrinsicCurve {
  std::vector<CurveSample> samples;
  bool unit_speed{false};

  double length() const { return samples.back().s; }
  // Cubic Hermite interpolation of (u, u').
  std::pair<ParamPoint, Vector> state(double s) const;
};

// Unit-speed geodesic of the induced metric from u0 with g-unit direction w0.
IntrinsicCurve intrinsic_geodesic(const Immersion& imm, const ParamPoint& u0, const Vector& w0,
                                  double s_max, int steps_per_unit = 256);

// Same integrator for an arbitrary initial velocity; s in [0, s_max].
IntrinsicCurve integrate_intrinsic(const Immersion& imm, const ParamPoint& u0, const Vector& w0,
                                   double s_max, int steps);

// Parallel transport in M along the curve; returns parameter coordinates.
// The optional trace receives v at every curve sample.
Vector intrinsic_parallel_transport(const Immersion& imm, const IntrinsicCurve& curve,
                                    const Vector& v0, std::vector<Vector>* trace = nullptr);

struct IntrinsicLog {
  Vector velocity;  // initial parameter velocity of the geodesic over [0, 1]
  double length;
};

// Shortest intrinsic geodesic between two parameter points by shooting over
// the periodic images of the endpoint.
IntrinsicLog intrinsic_log(const Immersion& imm, const ParamPoint& from, const ParamPoint& to);

// max |Pi| over a probe grid below tol.
bool is_totally_geodesic(const Immersion& imm, int per_axis = 8, double tol = 1e-8);

}  // namespace reachkit
