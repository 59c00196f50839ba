#include "reachkit/variation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reachkit/errors.hpp"
#include "reachkit/quadrature.hpp"

namespace reachkit {

namespace {

constexpr int kLengthNodes = 32;
constexpr double kTimeStep = 1e-4;  // for d chi / dt

void require_positive_tau(double tau) {
  if (!(tau > 0.0)) throw GeometryError(ErrorCode::kInvalidReach, "tau must be positive");
}

// g-orthonormal basis of T_pM in parameter coordinates, E = L^{-T} with g = L L^T.
Matrix orthonormal_params(const Matrix& g) {
  const int k = static_cast<int>(g.rows());
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw GeometryError(ErrorCode::kImmersionDegeneracy, "induced metric is not positive definite");
  }
  const Matrix lower = llt.matrixL();
  return lower.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
}

std::vector<Tangent> unit_normals(const TangentFrame& f, int normal_probes) {
  std::vector<Tangent> out;
  if (f.normals.cols() == 1) {
    out.push_back(f.normals.col(0));
    out.push_back(-f.normals.col(0));
  } else {
    for (int j = 0; j < normal_probes; ++j) {
      const double a = 2.0 * M_PI * j / normal_probes;
      out.push_back(std::cos(a) * f.normals.col(0) + std::sin(a) * f.normals.col(1));
    }
  }
  return out;
}

std::vector<Vector> probe_directions(const Matrix& basis) {
  std::vector<Vector> out;
  for (int i = 0; i < basis.cols(); ++i) out.push_back(basis.col(i));
  if (basis.cols() == 2) {
    out.push_back((basis.col(0) + basis.col(1)) / std::sqrt(2.0));
    out.push_back((basis.col(0) - basis.col(1)) / std::sqrt(2.0));
  }
  return out;
}

void check_unit_orthogonal(const AmbientSpace& space, const Point& p, const Tangent& u0,
                           const Tangent& v) {
  const double len = norm(space, p, u0);
  if (std::abs(len - 1.0) > 1e-8) {
    throw GeometryError(ErrorCode::kInvalidArgument, "u0 must be a unit vector");
  }
  const double speed = norm(space, p, v);
  if (speed == 0.0) throw GeometryError(ErrorCode::kDegeneratePlane, "geodesic has zero speed");
  if (std::abs(inner(space, p, u0, v)) > 1e-7 * speed) {
    throw GeometryError(ErrorCode::kInvalidArgument, "u0 must be orthogonal to the velocity");
  }
}

// Covariant acceleration of a curve in N from three model points (step d).
Tangent covariant_acceleration(const AmbientSpace& space, const Point& xm, const Point& x0,
                               const Point& xp, double d) {
  Tangent acc = (xp - 2.0 * x0 + xm) / (d * d);
  switch (space.kind()) {
    case AmbientKind::kEuclidean:
      break;
    case AmbientKind::kSphere:
    case AmbientKind::kHyperbolic:
      acc = project_tangent(space, x0, acc);
      break;
    case AmbientKind::kChart: {
      const Tangent vel = (xp - xm) / (2.0 * d);
      acc += christoffel_contract(space, x0, vel, vel);
      break;
    }
  }
  return acc;
}

// Eigendirection with the largest signed Rayleigh quotient of A_eta.
Vector top_shape_direction(const LocalGeometry& geom, const Tangent& eta, double* value) {
  const int k = geom.k();
  const AmbientSpace& space = geom.immersion->ambient();
  Matrix s(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      s(i, j) = inner(space, geom.frame.point, geom.covariant_hessian[i * k + j], eta);
    }
  }
  const Matrix basis = orthonormal_params(geom.frame.metric);
  Matrix sym = basis.transpose() * s * basis;
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  *value = eig.eigenvalues()(k - 1);
  return basis * eig.eigenvectors().col(k - 1);
}

}  // namespace

VariationField variation_field(const AmbientSpace& space, const GeodesicPath& sigma,
                               const Tangent& u0) {
  check_unit_orthogonal(space, sigma.start(), u0, sigma.initial_velocity());
  std::vector<double> ts;
  for (const auto& s : sigma.samples) ts.push_back(s.t);
  const auto transported =
      transport_along_geodesic(space, sigma.start(), sigma.initial_velocity(), u0, ts);
  VariationField field;
  field.along = sigma;
  for (const auto& s : transported) {
    field.U.push_back(s.field);
    field.V.push_back((1.0 - s.t) * s.field);
  }
  // Exact zero at t = 1.
  if (!sigma.samples.empty() && sigma.samples.back().t == 1.0) field.V.back().setZero();
  return field;
}

CurvatureIntegral curvature_integral(const AmbientSpace& space, const GeodesicPath& sigma,
                                     const Tangent& u0, int order) {
  const Point& p = sigma.start();
  const Tangent& v = sigma.initial_velocity();
  check_unit_orthogonal(space, p, u0, v);
  const QuadratureRule rule = gauss_legendre(order);
  const auto transported = transport_along_geodesic(space, p, v, u0, rule.nodes);
  CurvatureIntegral out{0.0, order, order, {}};
  for (int i = 0; i < order; ++i) {
    const auto& s = transported[i];
    // kappa only depends on the plane, so U stands in for V = (1 - t) U.
    const double kappa = sectional_curvature(space, s.point, s.field, s.velocity);
    out.kappa.push_back(kappa);
    const double weight = (1.0 - rule.nodes[i]) * (1.0 - rule.nodes[i]);
    out.value += rule.weights[i] * weight * kappa;
  }
  return out;
}

double curvature_integral_simpson(const AmbientSpace& space, const GeodesicPath& sigma,
                                  const Tangent& u0, int intervals) {
  if (intervals < 2 || intervals % 2 != 0) {
    throw GeometryError(ErrorCode::kInvalidArgument, "Simpson needs an even interval count");
  }
  const Point& p = sigma.start();
  const Tangent& v = sigma.initial_velocity();
  check_unit_orthogonal(space, p, u0, v);
  std::vector<double> ts(intervals + 1);
  for (int j = 0; j <= intervals; ++j) ts[j] = static_cast<double>(j) / intervals;
  const auto transported = transport_along_geodesic(space, p, v, u0, ts);
  double sum = 0.0;
  for (int j = 0; j <= intervals; ++j) {
    const auto& s = transported[j];
    const double kappa = sectional_curvature(space, s.point, s.field, s.velocity);
    const double w = (j == 0 || j == intervals) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    sum += w * kappa * (1.0 - ts[j]) * (1.0 - ts[j]);
  }
  return sum / (3.0 * intervals);
}

double second_variation_closed(double tau, double curvature_integral, double accel_pairing) {
  require_positive_tau(tau);
  return 1.0 / tau - tau * curvature_integral - accel_pairing;
}

double bound_B(double tau, double c) {
  require_positive_tau(tau);
  return (3.0 - tau * tau * c) / (3.0 * tau);
}

SecondVariationFd second_variation_fd(const Immersion& imm, const ParamPoint& u, const Vector& w,
                                      const Tangent& eta, double tau, double h,
                                      const ReachOptions& projection) {
  require_positive_tau(tau);
  if (!(h > 0.0)) throw GeometryError(ErrorCode::kInvalidArgument, "h must be positive");
  const AmbientSpace& space = imm.ambient();
  const LocalGeometry geom = local_geometry(imm, u);
  const Point& p = geom.frame.point;
  if (std::abs(geom.induced_norm(w) - 1.0) > 1e-8) {
    throw GeometryError(ErrorCode::kInvalidArgument, "direction must be unit in the induced metric");
  }
  const Tangent v = tau * eta;
  const Point q = exp_map(space, p, v);

  const ReachOptions opts = resolved(projection, imm);
  const FootPointSet feet = foot_points(imm, q, opts.starts, opts.dist_tol, opts.cluster_tol);
  const double scale = 1.0 + p.norm();
  if (feet.multiplicity() != 1 || (feet.minimizers.front().point - p).norm() > 1e-5 * scale) {
    throw GeometryError(ErrorCode::kInvalidConfiguration,
                        "p is not the unique foot point of exp_p(tau eta)");
  }

  // Transport of an orthonormal basis of T_pN along sigma at every time needed
  // by the length quadrature; P_t is linear, so log_p alpha(s) is expanded in it.
  const QuadratureRule rule = gauss_legendre(kLengthNodes);
  std::vector<double> times;
  for (double t : rule.nodes) {
    for (int m = -2; m <= 2; ++m) times.push_back(t + m * kTimeStep);
  }
  std::sort(times.begin(), times.end());
  const Matrix basis = tangent_basis(space, p);
  const int n = static_cast<int>(basis.cols());
  std::vector<std::vector<TransportSample>> frames(n);
  for (int j = 0; j < n; ++j) {
    frames[j] = transport_along_geodesic(space, p, v, basis.col(j), times);
  }
  auto time_index = [&](double t) {
    return static_cast<int>(std::lower_bound(times.begin(), times.end(), t - 1e-15) - times.begin());
  };

  auto alpha_point = [&](double s) -> Point {
    if (s == 0.0) return p;
    const IntrinsicCurve c = integrate_intrinsic(imm, u, s * w, 1.0, 16);
    return imm.point(c.samples.back().u);
  };
  auto variation_length = [&](const Point& x) {
    Tangent logv = Tangent::Zero(p.size());
    if ((x - p).norm() > 0.0) logv = shoot_log(space, p, x, Tangent(x - p)).velocity;
    Vector coeff(n);
    for (int j = 0; j < n; ++j) coeff(j) = inner(space, p, logv, basis.col(j));
    auto chi = [&](double t) -> Point {
      const int idx = time_index(t);
      Tangent field = Tangent::Zero(p.size());
      for (int j = 0; j < n; ++j) field += coeff(j) * frames[j][idx].field;
      const Point& base = frames[0][idx].point;
      if (coeff.norm() == 0.0) return base;
      return exp_map(space, base, (1.0 - times[idx]) * field);
    };
    double length = 0.0;
    for (int i = 0; i < kLengthNodes; ++i) {
      const double t = rule.nodes[i];
      const Point c0 = chi(t);
      const Tangent d = (-chi(t + 2 * kTimeStep) + 8.0 * chi(t + kTimeStep) -
                         8.0 * chi(t - kTimeStep) + chi(t - 2 * kTimeStep)) /
                        (12.0 * kTimeStep);
      length += rule.weights[i] * norm(space, c0, d);
    }
    return length;
  };
  auto distance_to_q = [&](const Point& x) {
    if (space.kind() == AmbientKind::kChart) return shoot_log(space, x, q, Tangent(v)).length;
    return distance(space, x, q);
  };

  const Point xm = alpha_point(-h);
  const Point xp = alpha_point(h);
  SecondVariationFd out;
  out.h = h;
  out.value = (variation_length(xp) - 2.0 * variation_length(p) + variation_length(xm)) / (h * h);
  out.distance_based =
      (distance_to_q(xp) - 2.0 * distance_to_q(p) + distance_to_q(xm)) / (h * h);
  return out;
}

std::vector<BoundReport> check_extrinsic_bounds(const Immersion& imm, double tau_hat, double c,
                                                int geodesic_probes, int normal_probes,
                                                double tol) {
  require_positive_tau(tau_hat);
  const AmbientSpace& space = imm.ambient();
  const bool chart = space.kind() == AmbientKind::kChart;
  const double B = bound_B(tau_hat, c);
  std::vector<BoundReport> reports;
  for (const ParamPoint& u : param_grid(imm.domain(), geodesic_probes)) {
    LocalGeometry geom;
    try {
      geom = local_geometry(imm, u);
    } catch (const GeometryError& e) {
      if (e.code() == ErrorCode::kImmersionDegeneracy) continue;
      throw;
    }
    const Point& p = geom.frame.point;
    const Matrix basis = orthonormal_params(geom.frame.metric);
    const std::vector<Vector> directions = probe_directions(basis);
    for (const Tangent& eta : unit_normals(geom.frame, normal_probes)) {
      const double shape = shape_operator_norm(geom, eta).norm;
      for (const Vector& w : directions) {
        BoundReport r;
        r.probe = {u, eta, w};
        r.tau = tau_hat;
        r.c_lower = c;
        r.B = B;
        const Tangent pi = geom.second_fundamental(w, w);
        r.accel_pairing = inner(space, p, pi, eta);
        const double pi_norm = norm(space, p, pi);
        if (pi_norm >= 1e-8) r.accel_norm = pi_norm;
        r.shape_norm = shape;
        r.residual_pairing = B - r.accel_pairing;
        r.residual_shape = B - shape;
        r.pass_pairing = r.residual_pairing >= -tol;
        r.pass_shape = r.residual_shape >= -tol;
        r.pass_norm = true;
        if (r.accel_norm) {
          r.residual_norm = B - *r.accel_norm;
          r.pass_norm = *r.residual_norm >= -tol;
        }
        // Acceleration of the numerically integrated geodesic; its tangential
        // part must vanish.
        constexpr double d = 1e-3;
        const Point fm = imm.point(integrate_intrinsic(imm, u, -d * w, 1.0, 8).samples.back().u);
        const Point fp = imm.point(integrate_intrinsic(imm, u, d * w, 1.0, 8).samples.back().u);
        const Tangent acc = covariant_acceleration(space, fm, p, fp, d);
        r.tangential_residual = norm(space, p, geom.push(geom.tangential_coordinates(acc)));
        if (chart) {
          try {
            const GeodesicPath sigma = geodesic(space, p, tau_hat * eta, 8);
            Tangent u0 = geom.push(w);
            const CurvatureIntegral ci = curvature_integral(space, sigma, u0);
            r.curvature_integral = ci.value;
            r.sharper_bound = 1.0 / tau_hat - tau_hat * ci.value;
            double kmin = sectional_curvature(space, p, u0, eta);
            for (double k : ci.kappa) kmin = std::min(kmin, k);
            r.min_curvature = kmin;
            r.pass_sharper = r.accel_pairing <= *r.sharper_bound + tol;
            r.pass_curvature = kmin >= c - 1e-8;
          } catch (const GeometryError& e) {
            if (e.code() != ErrorCode::kDomainEscape) throw;
          }
        }
        reports.push_back(std::move(r));
      }
    }
  }
  return reports;
}

std::vector<SecondVariationReport> check_second_variation(const Immersion& imm, double tau_hat,
                                                          int per_axis,
                                                          const std::vector<double>& fractions,
                                                          double h,
                                                          const ReachOptions& projection) {
  require_positive_tau(tau_hat);
  const AmbientSpace& space = imm.ambient();
  const double tolerance = std::max(1e-3, 10.0 * h * h);
  std::vector<SecondVariationReport> out;
  for (const ParamPoint& u : param_grid(imm.domain(), per_axis)) {
    LocalGeometry geom;
    try {
      geom = local_geometry(imm, u);
    } catch (const GeometryError& e) {
      if (e.code() == ErrorCode::kImmersionDegeneracy) continue;
      throw;
    }
    const Point& p = geom.frame.point;
    const Matrix basis = orthonormal_params(geom.frame.metric);
    for (const Tangent& eta : unit_normals(geom.frame, 4)) {
      for (int i = 0; i < basis.cols(); ++i) {
        const Vector w = basis.col(i);
        for (double frac : fractions) {
          const double tau = frac * tau_hat;
          SecondVariationReport r;
          r.probe = {u, eta, w};
          r.tau = tau;
          SecondVariationFd fd;
          try {
            const GeodesicPath sigma = geodesic(space, p, tau * eta, 8);
            r.curvature_integral = curvature_integral(space, sigma, geom.push(w)).value;
            fd = second_variation_fd(imm, u, w, eta, tau, h, projection);
          } catch (const GeometryError& e) {
            // Normal geodesics that leave a chart are not probes.
            if (e.code() != ErrorCode::kDomainEscape) throw;
            continue;
          }
          r.accel_pairing = inner(space, p, geom.second_fundamental(w, w), eta);
          r.closed = second_variation_closed(tau, r.curvature_integral, r.accel_pairing);
          r.fd = fd.value;
          r.distance_fd = fd.distance_based;
          r.h = h;
          r.tolerance = tolerance;
          r.pass_agreement = std::abs(r.closed - r.fd) <= tolerance;
          r.pass_nonnegative = r.closed >= -1e-6;
          r.pass_comparison = r.distance_fd <= r.closed + tolerance;
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

std::string to_string(EqualityStatus status) {
  switch (status) {
    case EqualityStatus::kOk:
      return "ok";
    case EqualityStatus::kNotApplicable:
      return "not_applicable";
    case EqualityStatus::kScanFailure:
      return "scan_failure";
  }
  return "unknown";
}

namespace {

// Evaluates both sides at parameter u with g-unit direction w, for the
// geodesic sigma from F(u) to q.
void fill_equality(const Immersion& imm, const ParamPoint& u, const Vector& w, const Point& q,
                   double tol, BottleneckReport& r) {
  const AmbientSpace& space = imm.ambient();
  const LocalGeometry geom = local_geometry(imm, u);
  const Point& x0 = geom.frame.point;
  const LogResult log = distance_and_log(space, x0, q);
  r.L = log.length;
  const Tangent accel = geom.second_fundamental(w, w);
  if (norm(space, x0, accel) < 1e-8) {
    r.status = EqualityStatus::kNotApplicable;
    r.pass = true;
    return;
  }
  r.lhs = inner(space, x0, accel, log.velocity);
  // U(0) = alpha'(s0), cleaned of the tiny component along sigma'(0) left by
  // the stationary-point search.
  Tangent u0 = geom.push(w);
  const Tangent dir = log.velocity / log.length;
  u0 -= inner(space, x0, u0, dir) * dir;
  u0 /= norm(space, x0, u0);
  const GeodesicPath sigma = geodesic(space, x0, log.velocity, 8);
  r.curvature_integral = curvature_integral(space, sigma, u0).value;
  r.rhs = 1.0 - r.L * r.L * r.curvature_integral;
  r.residual = r.rhs - r.lhs;
  r.pass = r.flat ? std::abs(r.residual) <= tol : r.residual >= -tol;
  r.status = EqualityStatus::kOk;
}

}  // namespace

BottleneckReport check_bottleneck_equality(const Immersion& imm, const ReachAssigner& assigner,
                                           double tol) {
  const AmbientSpace& space = imm.ambient();
  BottleneckReport r;
  r.kind = assigner.classification;
  r.flat = space.curvature_constant() && *space.curvature_constant() == 0.0;
  r.approximation = assigner.classification == AssignerKind::kUniqueFootPoint;
  r.status = EqualityStatus::kNotApplicable;
  const Point& q = assigner.q;
  const auto& feet = assigner.foot_points.minimizers;
  if (feet.empty()) return r;

  if (assigner.classification == AssignerKind::kUniqueFootPoint) {
    const ParamPoint& u = feet.front().param;
    const LocalGeometry geom = local_geometry(imm, u);
    const LogResult log = distance_and_log(space, geom.frame.point, q);
    double value = 0.0;
    const Vector w = top_shape_direction(geom, log.velocity / log.length, &value);
    r.s0 = 0.0;
    fill_equality(imm, u, w, q, tol, r);
    return r;
  }

  // Closest pair of foot clusters, joined by a minimizing geodesic of M.
  std::size_t ia = 0, ib = 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < feet.size(); ++i) {
    for (std::size_t j = i + 1; j < feet.size(); ++j) {
      const double d = (feet[i].point - feet[j].point).norm();
      if (d < best) {
        best = d;
        ia = i;
        ib = j;
      }
    }
  }
  const IntrinsicLog ilog = intrinsic_log(imm, feet[ia].param, feet[ib].param);
  const double d_m = ilog.length;
  const IntrinsicCurve alpha = intrinsic_geodesic(imm, feet[ia].param, ilog.velocity / d_m, d_m);

  // L'(s) = -<log_x q, alpha'(s)> / L by the first variation formula.
  std::optional<Tangent> guess;
  auto profile = [&](double s, double* length) {
    const auto [u, du] = alpha.state(s);
    const ImmersionJet jet = imm.jet(u);
    LogResult log;
    if (space.kind() == AmbientKind::kChart && guess) {
      log = shoot_log(space, jet.point, q, *guess);
    } else {
      log = distance_and_log(space, jet.point, q);
    }
    guess = log.velocity;
    *length = log.length;
    return -inner(space, jet.point, log.velocity, jet.jacobian * du) / log.length;
  };
  constexpr int kScan = 64;
  std::vector<double> slope(kScan + 1);
  for (int j = 0; j <= kScan; ++j) {
    const double s = d_m * j / kScan;
    double length = 0.0;
    slope[j] = profile(s, &length);
    r.profile_s.push_back(s);
    r.profile_L.push_back(length);
  }
  double max_slope = 0.0;
  for (double v : slope) max_slope = std::max(max_slope, std::abs(v));
  const auto [lo_L, hi_L] = std::minmax_element(r.profile_L.begin(), r.profile_L.end());
  // A degenerate fibre: L is constant along alpha to within distance resolution.
  const bool flat_profile = *hi_L - *lo_L <= 1e-8 * (1.0 + *hi_L);
  double s0 = 0.5 * d_m;
  if (max_slope >= 1e-7 && !flat_profile) {
    // Both ends are foot points, so L' vanishes there; the stationary point
    // sought is the interior sign change from + to -.
    int bracket = -1;
    for (int j = 1; j + 1 < kScan; ++j) {
      if (slope[j] > 0.0 && slope[j + 1] <= 0.0) {
        bracket = j;
        break;
      }
    }
    if (bracket < 0) {
      r.status = EqualityStatus::kScanFailure;
      r.pass = false;
      return r;
    }
    double lo = d_m * bracket / kScan;
    double hi = d_m * (bracket + 1) / kScan;
    double dummy = 0.0;
    while (hi - lo > 1e-12 * d_m) {
      const double mid = 0.5 * (lo + hi);
      if (profile(mid, &dummy) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    s0 = 0.5 * (lo + hi);
  }
  r.s0 = s0;
  const auto [u0, du0] = alpha.state(s0);
  const TangentFrame f = frame(imm, u0);
  const Vector w = du0 / std::sqrt(du0.dot(f.metric * du0));
  fill_equality(imm, u0, w, q, tol, r);
  return r;
}

DefectReport transport_defect(const Immersion& imm, const IntrinsicCurve& alpha, const Vector& v0,
                              double tau_hat, double c, double tol) {
  if (std::abs(alpha.length() - 1.0) > 1e-6) {
    throw GeometryError(ErrorCode::kConvention, "curve must have length 1");
  }
  const AmbientSpace& space = imm.ambient();
  DefectReport r;
  r.tau = tau_hat;
  r.c = c;
  r.bound = bound_B(tau_hat, c);
  r.bound_alt = (3.0 - tau_hat * c) / (3.0 * tau_hat);
  r.note = "bound uses (3 - tau^2 c) / (3 tau), consistent with the shape-operator bound; "
           "bound_alt with tau c in place of tau^2 c is reported for comparison only";
  for (const auto& s : alpha.samples) r.s.push_back(s.s);
  const int n = static_cast<int>(alpha.samples.size()) - 1;

  if (is_totally_geodesic(imm)) {
    r.totally_geodesic = true;
    r.D = 0.0;
    r.f.assign(n + 1, 0.0);
    r.pass = std::abs(r.D) <= r.bound + tol;
    return r;
  }

  std::vector<Vector> v_m;
  intrinsic_parallel_transport(imm, alpha, v0, &v_m);
  const ImmersionJet start = imm.jet(alpha.samples.front().u);
  const CurveFunction curve = [&](double s) {
    const auto [u, du] = alpha.state(s);
    const ImmersionJet jet = imm.jet(u);
    return std::make_pair(jet.point, Tangent(jet.jacobian * du));
  };
  std::vector<Tangent> v_n;
  transport_along_curve(space, curve, 0.0, alpha.length(), n, start.jacobian * v0, &v_n);

  std::vector<LocalGeometry> geoms;
  geoms.reserve(n + 1);
  r.f.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    geoms.push_back(local_geometry(imm, alpha.samples[i].u));
    const Point& x = geoms[i].frame.point;
    r.f[i] = inner(space, x, geoms[i].push(v_m[i]), v_n[i]) - 1.0;
  }
  r.f[0] = 0.0;  // both transports start at v0
  r.D = r.f[n];

  const double h = r.s[1] - r.s[0];
  r.identity_residual = 0.0;
  r.chain_residual = -std::numeric_limits<double>::infinity();
  for (int i = 2; i + 2 <= n; ++i) {
    const double df = (-r.f[i + 2] + 8.0 * r.f[i + 1] - 8.0 * r.f[i - 1] + r.f[i - 2]) / (12.0 * h);
    const LocalGeometry& g = geoms[i];
    const Point& x = g.frame.point;
    const Tangent pi = g.second_fundamental(alpha.samples[i].du, v_m[i]);
    const double rhs = inner(space, x, pi, v_n[i]);
    r.identity_residual = std::max(r.identity_residual, std::abs(df - rhs));
    const Tangent perp = v_n[i] - g.push(g.tangential_coordinates(v_n[i]));
    const double perp_norm = norm(space, x, perp);
    double chain = std::abs(rhs);
    if (perp_norm > 1e-14) chain -= perp_norm * shape_operator_norm(g, perp / perp_norm).norm;
    r.chain_residual = std::max(r.chain_residual, chain);
  }
  r.pass = std::abs(r.D) <= r.bound + tol && r.identity_residual <= 1e-4 && r.chain_residual <= 1e-8;
  return r;
}

}  // namespace reachkit
