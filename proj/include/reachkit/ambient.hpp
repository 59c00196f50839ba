#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reachkit/types.hpp"

namespace reachkit {

enum class AmbientKind { kEuclidean, kSphere, kHyperbolic, kChart };

std::string to_string(AmbientKind kind);

// Axis-aligned box of admissible chart coordinates.
struct ChartBox {
  Vector lower;
  Vector upper;

  bool contains(const Point& x) const;
};

// Chart point -> symmetric positive definite metric matrix.
using MetricFunction = std::function<Matrix(const Point&)>;

// Model Riemannian manifold. Sphere and hyperbolic space live in their
// embedded models (round sphere of radius R in R^{n+1}, upper sheet of the
// hyperboloid <x,x>_L = -R^2 in Minkowski space with the time coordinate
// first), so tangency constraints are linear. Values are immutable.
class AmbientSpace {
 public:
  static AmbientSpace euclidean(int n);
  static AmbientSpace sphere(int n, double radius);
  // curvature < 0; the hyperboloid radius is 1/sqrt(-curvature).
  static AmbientSpace hyperbolic(int n, double curvature);
  static AmbientSpace chart(int n, MetricFunction metric, ChartBox domain,
                            std::optional<double> curvature = std::nullopt,
                            int ode_steps = 256);

  AmbientKind kind() const { return kind_; }
  // Intrinsic dimension n.
  int dim() const { return dim_; }
  // Length of model coordinate vectors.
  int model_dim() const;
  // Present for space forms, and for charts built with a known constant curvature.
  std::optional<double> curvature_constant() const { return curvature_; }
  bool is_space_form() const { return kind_ != AmbientKind::kChart; }
  // Sphere / hyperboloid radius; 0 otherwise.
  double radius() const { return radius_; }
  const ChartBox& domain() const { return domain_; }
  // Integration steps per unit geodesic parameter (chart kind).
  int ode_steps() const { return ode_steps_; }
  AmbientSpace with_ode_steps(int steps) const;

  // Matrix of the inner product on model coordinates at x: identity for
  // Euclidean and sphere, Minkowski diag(-1, 1, ..., 1) for the hyperboloid,
  // the chart metric otherwise.
  Matrix metric(const Point& x) const;

  std::string describe() const;

 private:
  AmbientSpace() = default;

  AmbientKind kind_{AmbientKind::kEuclidean};
  int dim_{0};
  double radius_{0.0};
  std::optional<double> curvature_;
  MetricFunction metric_;
  ChartBox domain_;
  int ode_steps_{256};
};

double inner(const AmbientSpace& space, const Point& p, const Tangent& v, const Tangent& w);
double norm(const AmbientSpace& space, const Point& p, const Tangent& v);

// Orthogonal projection of a model vector onto T_pN.
Tangent project_tangent(const AmbientSpace& space, const Point& p, const Tangent& v);

// True when x satisfies the model constraint (quadric or chart box) within tol.
bool on_model(const AmbientSpace& space, const Point& x, double tol = 1e-9);

// Orthonormal basis of T_pN (columns), in the ambient inner product.
Matrix tangent_basis(const AmbientSpace& space, const Point& p);

// Gamma(a, b)^k = Gamma^k_ij a^i b^j for the chart metric; zero for Euclidean.
// Derivatives of the metric by central differences with h = 1e-5 (1 + |x_i|).
Tangent christoffel_contract(const AmbientSpace& space, const Point& x, const Tangent& a,
                             const Tangent& b);

struct GeodesicSample {
  double t;
  Point point;
  Tangent velocity;
};

// sigma: [0,1] -> N with constant speed; length = speed.
struct GeodesicPath {
  std::vector<GeodesicSample> samples;
  double length{0.0};

  const Point& start() const { return samples.front().point; }
  const Point& end() const { return samples.back().point; }
  const Tangent& initial_velocity() const { return samples.front().velocity; }
};

// sigma(t) = exp_p(t v), t in [0,1], sampled at steps + 1 points.
GeodesicPath geodesic(const AmbientSpace& space, const Point& p, const Tangent& v, int steps);

Point exp_map(const AmbientSpace& space, const Point& p, const Tangent& v);

struct LogResult {
  double length;
  Tangent velocity;  // exp_p(velocity) = q, |velocity| = length
};

// Minimal geodesic from p to q. Antipodal sphere pairs and ambiguous chart
// shootings raise kNonuniqueGeodesic.
LogResult distance_and_log(const AmbientSpace& space, const Point& p, const Point& q);

// Single damped-Newton shooting from an initial guess (chart kind); falls back
// to the closed form on space forms. Raises kConvergence on failure.
LogResult shoot_log(const AmbientSpace& space, const Point& p, const Point& q,
                    const Tangent& guess);

// Ambient distance. Unlike distance_and_log, never raises for antipodal pairs.
double distance(const AmbientSpace& space, const Point& p, const Point& q);

// U(1) for the parallel field along path with U(0) = v.
Tangent parallel_transport(const AmbientSpace& space, const GeodesicPath& path, const Tangent& v);

struct TransportSample {
  double t;
  Point point;
  Tangent velocity;
  Tangent field;
};

// Parallel transport of u0 along t -> exp_p(t v) evaluated at the sorted times ts.
std::vector<TransportSample> transport_along_geodesic(const AmbientSpace& space, const Point& p,
                                                      const Tangent& v, const Tangent& u0,
                                                      std::span<const double> ts);

// t -> (x(t), x'(t)) for an arbitrary smooth curve in N.
using CurveFunction = std::function<std::pair<Point, Tangent>(double)>;

// Parallel transport along an arbitrary curve by RK4 on the transport ODE.
// If trace is non-null it receives the field at every step boundary.
Tangent transport_along_curve(const AmbientSpace& space, const CurveFunction& curve, double t0,
                              double t1, int steps, const Tangent& v,
                              std::vector<Tangent>* trace = nullptr);

// kappa(v, w) at p. Raises kDegeneratePlane when the normalized Gram
// determinant of (v, w) is below 1e-12.
double sectional_curvature(const AmbientSpace& space, const Point& p, const Tangent& v,
                           const Tangent& w);

}  // namespace reachkit
