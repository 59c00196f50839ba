#include "reachkit/ambient.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "reachkit/errors.hpp"

namespace reachkit {

namespace {

constexpr double kChristoffelStep = 1e-5;
constexpr double kCurvatureStep = 1e-2;

double minkowski(const Vector& a, const Vector& b) {
  return -a(0) * b(0) + a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

bool all_finite(const Vector& v) { return v.allFinite(); }

Matrix checked_metric(const AmbientSpace& space, const Point& x) {
  Matrix g = space.metric(x);
  if (!g.allFinite()) {
    throw GeometryError(ErrorCode::kEvaluation, "non-finite chart metric");
  }
  return g;
}

Matrix inverse_spd(const Matrix& g) {
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw GeometryError(ErrorCode::kEvaluation, "chart metric is not positive definite");
  }
  return llt.solve(Matrix::Identity(g.rows(), g.cols()));
}

struct MetricJet {
  Matrix g;
  Matrix ginv;
  std::array<Matrix, kMaxDim> dg;
};

MetricJet first_jet(const AmbientSpace& space, const Point& x) {
  const int n = space.dim();
  MetricJet jet;
  jet.g = checked_metric(space, x);
  jet.ginv = inverse_spd(jet.g);
  for (int i = 0; i < n; ++i) {
    const double h = kChristoffelStep * (1.0 + std::abs(x(i)));
    Point xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    jet.dg[i] = (checked_metric(space, xp) - checked_metric(space, xm)) / (2.0 * h);
  }
  return jet;
}

Tangent contract(const MetricJet& jet, const Tangent& a, const Tangent& b) {
  const int n = static_cast<int>(a.size());
  Matrix da = Matrix::Zero(n, n);
  Matrix db = Matrix::Zero(n, n);
  Vector c(n);
  for (int i = 0; i < n; ++i) {
    da += a(i) * jet.dg[i];
    db += b(i) * jet.dg[i];
    c(i) = b.dot(jet.dg[i] * a);
  }
  const Vector w = da * b + db * a - c;
  return 0.5 * jet.ginv * w;
}

void check_chart_state(const AmbientSpace& space, const Point& x, const Tangent& v) {
  if (!all_finite(x) || !all_finite(v)) {
    throw GeometryError(ErrorCode::kEvaluation, "non-finite geodesic state");
  }
  if (!space.domain().contains(x)) {
    throw GeometryError(ErrorCode::kDomainEscape, "geodesic left the chart domain");
  }
}

// RK4 for x'' = -Gamma(x', x') over [0,1] with `steps` equal steps.
std::vector<GeodesicSample> integrate_chart_geodesic(const AmbientSpace& space, const Point& p,
                                                     const Tangent& v, int steps, bool record) {
  std::vector<GeodesicSample> out;
  if (record) out.reserve(steps + 1);
  Point x = p;
  Tangent u = v;
  const double h = 1.0 / steps;
  check_chart_state(space, x, u);
  if (record) out.push_back({0.0, x, u});
  auto acc = [&](const Point& y, const Tangent& w) -> Tangent {
    return -christoffel_contract(space, y, w, w);
  };
  for (int s = 0; s < steps; ++s) {
    const Tangent k1x = u;
    const Tangent k1v = acc(x, u);
    const Point x2 = x + 0.5 * h * k1x;
    const Tangent u2 = u + 0.5 * h * k1v;
    check_chart_state(space, x2, u2);
    const Tangent k2x = u2;
    const Tangent k2v = acc(x2, u2);
    const Point x3 = x + 0.5 * h * k2x;
    const Tangent u3 = u + 0.5 * h * k2v;
    check_chart_state(space, x3, u3);
    const Tangent k3x = u3;
    const Tangent k3v = acc(x3, u3);
    const Point x4 = x + h * k3x;
    const Tangent u4 = u + h * k3v;
    check_chart_state(space, x4, u4);
    const Tangent k4x = u4;
    const Tangent k4v = acc(x4, u4);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    u += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    check_chart_state(space, x, u);
    if (record || s + 1 == steps) {
      if (!record) out.clear();
      out.push_back({(s + 1) * h, x, u});
    }
  }
  return out;
}

// Closed-form geodesic state at parameter t on a space form.
std::pair<Point, Tangent> space_form_state(const AmbientSpace& space, const Point& p,
                                           const Tangent& v, double t) {
  switch (space.kind()) {
    case AmbientKind::kEuclidean:
      return {p + t * v, v};
    case AmbientKind::kSphere: {
      const double radius = space.radius();
      const double speed = v.norm();
      if (speed == 0.0) return {p, v};
      const double angle = speed * t / radius;
      const Point x = std::cos(angle) * p + (radius * std::sin(angle) / speed) * v;
      const Tangent dx = -(speed / radius) * std::sin(angle) * p + std::cos(angle) * v;
      return {x, dx};
    }
    case AmbientKind::kHyperbolic: {
      const double radius = space.radius();
      const double speed = std::sqrt(std::max(0.0, minkowski(v, v)));
      if (speed == 0.0) return {p, v};
      const double arg = speed * t / radius;
      const Point x = std::cosh(arg) * p + (radius * std::sinh(arg) / speed) * v;
      const Tangent dx = (speed / radius) * std::sinh(arg) * p + std::cosh(arg) * v;
      return {x, dx};
    }
    case AmbientKind::kChart:
      break;
  }
  throw GeometryError(ErrorCode::kInvalidArgument, "closed-form geodesic requested on a chart");
}

Tangent chart_endpoint(const AmbientSpace& space, const Point& p, const Tangent& v) {
  return integrate_chart_geodesic(space, p, v, space.ode_steps(), false).back().point;
}

std::optional<LogResult> newton_shoot(const AmbientSpace& space, const Point& p, const Point& q,
                                      const Tangent& guess) {
  const int n = space.dim();
  Tangent v = guess;
  Vector r;
  try {
    r = chart_endpoint(space, p, v) - q;
  } catch (const GeometryError&) {
    return std::nullopt;
  }
  // Chord method: the difference Jacobian is kept while steps cut the
  // residual tenfold and refreshed otherwise.
  Matrix jac(n, n);
  bool fresh = false;
  bool refresh = true;
  const double target = 1e-12 * (1.0 + q.norm());
  for (int iter = 0; iter < 40 && r.norm() > target; ++iter) {
    if (refresh) {
      try {
        for (int i = 0; i < n; ++i) {
          const double h = 1e-7 * (1.0 + v.norm());
          Tangent vp = v;
          vp(i) += h;
          jac.col(i) = (chart_endpoint(space, p, vp) - q - r) / h;
        }
      } catch (const GeometryError&) {
        return std::nullopt;
      }
      fresh = true;
    }
    const Tangent step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) return std::nullopt;
    double lambda = 1.0;
    bool accepted = false;
    // Near the roundoff floor of the integrator a full step either helps or nothing does.
    const int halvings = fresh && r.norm() > 1e-9 * (1.0 + q.norm()) ? 12 : 1;
    const double before = r.norm();
    for (int k = 0; k < halvings; ++k, lambda *= 0.5) {
      try {
        const Tangent trial = v + lambda * step;
        const Vector rt = chart_endpoint(space, p, trial) - q;
        if (rt.norm() < r.norm()) {
          v = trial;
          r = rt;
          accepted = true;
          break;
        }
      } catch (const GeometryError&) {
      }
    }
    if (!accepted) {
      if (fresh) break;
      refresh = true;
      continue;
    }
    if (r.norm() > 0.1 * before && r.norm() < 1e2 * target) break;  // roundoff floor
    refresh = r.norm() > 0.1 * before;
    fresh = false;
  }
  if (r.norm() >= 1e-8) return std::nullopt;
  return LogResult{norm(space, p, v), v};
}

}  // namespace

std::string to_string(AmbientKind kind) {
  switch (kind) {
    case AmbientKind::kEuclidean:
      return "euclidean";
    case AmbientKind::kSphere:
      return "sphere";
    case AmbientKind::kHyperbolic:
      return "hyperbolic";
    case AmbientKind::kChart:
      return "chart";
  }
  return "unknown";
}

bool ChartBox::contains(const Point& x) const {
  if (lower.size() == 0) return true;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

AmbientSpace AmbientSpace::euclidean(int n) {
  if (n < 1 || n > kMaxDim) throw GeometryError(ErrorCode::kInvalidArgument, "bad dimension");
  AmbientSpace s;
  s.kind_ = AmbientKind::kEuclidean;
  s.dim_ = n;
  s.curvature_ = 0.0;
  return s;
}

AmbientSpace AmbientSpace::sphere(int n, double radius) {
  if (n < 1 || n + 1 > kMaxDim) throw GeometryError(ErrorCode::kInvalidArgument, "bad dimension");
  if (!(radius > 0.0)) throw GeometryError(ErrorCode::kInvalidArgument, "sphere radius must be > 0");
  AmbientSpace s;
  s.kind_ = AmbientKind::kSphere;
  s.dim_ = n;
  s.radius_ = radius;
  s.curvature_ = 1.0 / (radius * radius);
  return s;
}

AmbientSpace AmbientSpace::hyperbolic(int n, double curvature) {
  if (n < 1 || n + 1 > kMaxDim) throw GeometryError(ErrorCode::kInvalidArgument, "bad dimension");
  if (!(curvature < 0.0)) {
    throw GeometryError(ErrorCode::kInvalidArgument, "hyperbolic curvature must be < 0");
  }
  AmbientSpace s;
  s.kind_ = AmbientKind::kHyperbolic;
  s.dim_ = n;
  s.radius_ = 1.0 / std::sqrt(-curvature);
  s.curvature_ = curvature;
  return s;
}

AmbientSpace AmbientSpace::chart(int n, MetricFunction metric, ChartBox domain,
                                 std::optional<double> curvature, int ode_steps) {
  if (n < 1 || n > kMaxDim) throw GeometryError(ErrorCode::kInvalidArgument, "bad dimension");
  if (!metric) throw GeometryError(ErrorCode::kInvalidArgument, "chart needs a metric");
  if (ode_steps < 2) throw GeometryError(ErrorCode::kInvalidArgument, "ode_steps must be >= 2");
  AmbientSpace s;
  s.kind_ = AmbientKind::kChart;
  s.dim_ = n;
  s.metric_ = std::move(metric);
  s.domain_ = std::move(domain);
  s.curvature_ = curvature;
  s.ode_steps_ = ode_steps;
  return s;
}

int AmbientSpace::model_dim() const {
  return (kind_ == AmbientKind::kSphere || kind_ == AmbientKind::kHyperbolic) ? dim_ + 1 : dim_;
}

AmbientSpace AmbientSpace::with_ode_steps(int steps) const {
  if (steps < 2) throw GeometryError(ErrorCode::kInvalidArgument, "ode_steps must be >= 2");
  AmbientSpace copy = *this;
  copy.ode_steps_ = steps;
  return copy;
}

Matrix AmbientSpace::metric(const Point& x) const {
  const int m = model_dim();
  switch (kind_) {
    case AmbientKind::kEuclidean:
    case AmbientKind::kSphere:
      return Matrix::Identity(m, m);
    case AmbientKind::kHyperbolic: {
      Matrix g = Matrix::Identity(m, m);
      g(0, 0) = -1.0;
      return g;
    }
    case AmbientKind::kChart:
      return metric_(x);
  }
  return Matrix::Identity(m, m);
}

std::string AmbientSpace::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << "(" << dim_;
  if (kind_ == AmbientKind::kSphere || kind_ == AmbientKind::kHyperbolic) os << ", R=" << radius_;
  if (curvature_) os << ", c=" << *curvature_;
  os << ")";
  return os.str();
}

double inner(const AmbientSpace& space, const Point& p, const Tangent& v, const Tangent& w) {
  switch (space.kind()) {
    case AmbientKind::kEuclidean:
    case AmbientKind::kSphere:
      return v.dot(w);
    case AmbientKind::kHyperbolic:
      return minkowski(v, w);
    case AmbientKind::kChart:
      return v.dot(space.metric(p) * w);
  }
  return 0.0;
}

double norm(const AmbientSpace& space, const Point& p, const Tangent& v) {
  return std::sqrt(std::max(0.0, inner(space, p, v, v)));
}

Tangent project_tangent(const AmbientSpace& space, const Point& p, const Tangent& v) {
  const double r2 = space.radius() * space.radius();
  switch (space.kind()) {
    case AmbientKind::kSphere:
      return v - (p.dot(v) / r2) * p;
    case AmbientKind::kHyperbolic:
      return v + (minkowski(p, v) / r2) * p;
    default:
      return v;
  }
}

bool on_model(const AmbientSpace& space, const Point& x, double tol) {
  if (x.size() != space.model_dim() || !x.allFinite()) return false;
  switch (space.kind()) {
    case AmbientKind::kEuclidean:
      return true;
    case AmbientKind::kSphere:
      return std::abs(x.norm() - space.radius()) <= tol;
    case AmbientKind::kHyperbolic: {
      const double r2 = space.radius() * space.radius();
      return std::abs(minkowski(x, x) + r2) <= tol * std::max(1.0, x.squaredNorm()) && x(0) > 0.0;
    }
    case AmbientKind::kChart:
      return space.domain().contains(x);
  }
  return false;
}

Matrix tangent_basis(const AmbientSpace& space, const Point& p) {
  const int m = space.model_dim();
  const int n = space.dim();
  Matrix basis(m, n);
  int found = 0;
  for (int i = 0; i < m && found < n; ++i) {
    Tangent e = Tangent::Zero(m);
    e(i) = 1.0;
    e = project_tangent(space, p, e);
    for (int j = 0; j < found; ++j) e -= inner(space, p, basis.col(j), e) * basis.col(j);
    const double len = norm(space, p, e);
    if (len < 1e-6) continue;
    basis.col(found++) = e / len;
  }
  if (found < n) throw GeometryError(ErrorCode::kEvaluation, "could not span the tangent space");
  return basis;
}

Tangent christoffel_contract(const AmbientSpace& space, const Point& x, const Tangent& a,
                             const Tangent& b) {
  if (space.kind() == AmbientKind::kEuclidean) return Tangent::Zero(a.size());
  if (space.kind() != AmbientKind::kChart) {
    throw GeometryError(ErrorCode::kInvalidArgument,
                        "Christoffel symbols are only defined for chart and Euclidean kinds");
  }
  return contract(first_jet(space, x), a, b);
}

GeodesicPath geodesic(const AmbientSpace& space, const Point& p, const Tangent& v, int steps) {
  if (steps < 2) throw GeometryError(ErrorCode::kInvalidArgument, "geodesic needs steps >= 2");
  GeodesicPath path;
  if (space.kind() == AmbientKind::kChart) {
    path.samples = integrate_chart_geodesic(space, p, v, steps, true);
  } else {
    path.samples.reserve(steps + 1);
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      auto [x, dx] = space_form_state(space, p, v, t);
      path.samples.push_back({t, std::move(x), std::move(dx)});
    }
  }
  path.length = norm(space, p, v);
  return path;
}

Point exp_map(const AmbientSpace& space, const Point& p, const Tangent& v) {
  if (space.kind() == AmbientKind::kChart) return chart_endpoint(space, p, v);
  return space_form_state(space, p, v, 1.0).first;
}

LogResult distance_and_log(const AmbientSpace& space, const Point& p, const Point& q) {
  switch (space.kind()) {
    case AmbientKind::kEuclidean: {
      const Tangent v = q - p;
      return {v.norm(), v};
    }
    case AmbientKind::kSphere: {
      const double radius = space.radius();
      const double cos_angle = p.dot(q) / (radius * radius);
      const Tangent w = q - cos_angle * p;
      const double w_norm = w.norm();
      const double angle = std::atan2(w_norm / radius, cos_angle);
      if (std::numbers::pi - angle < 1e-8) {
        throw GeometryError(ErrorCode::kNonuniqueGeodesic, "antipodal points on the sphere");
      }
      if (w_norm == 0.0) return {0.0, Tangent::Zero(p.size())};
      return {radius * angle, (radius * angle / w_norm) * w};
    }
    case AmbientKind::kHyperbolic: {
      const double radius = space.radius();
      const double cosh_arg = -minkowski(p, q) / (radius * radius);
      const Tangent w = q - cosh_arg * p;
      const double w_norm = std::sqrt(std::max(0.0, minkowski(w, w)));
      const double dist = radius * std::asinh(w_norm / radius);
      if (w_norm == 0.0) return {0.0, Tangent::Zero(p.size())};
      return {dist, (dist / w_norm) * w};
    }
    case AmbientKind::kChart:
      break;
  }

  // Chart kind: multi-start shooting. First start is the coordinate
  // difference; the others are 8 directions in a g-orthonormal plane at p.
  const int n = space.dim();
  const Tangent delta = q - p;
  if (delta.norm() == 0.0) return {0.0, Tangent::Zero(n)};
  const Matrix g = checked_metric(space, p);
  const double guess_len = std::sqrt(delta.dot(g * delta));
  std::vector<Tangent> starts{delta};
  if (n >= 2) {
    Tangent e1 = delta / guess_len;
    Tangent e2 = Tangent::Zero(n);
    for (int i = 0; i < n; ++i) {
      Tangent c = Tangent::Zero(n);
      c(i) = 1.0;
      c -= e1.dot(g * c) * e1;
      const double len = std::sqrt(std::max(0.0, c.dot(g * c)));
      if (len > 1e-6) {
        e2 = c / len;
        break;
      }
    }
    for (int k = 0; k < 8; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / 8.0;
      starts.push_back(guess_len * (std::cos(angle) * e1 + std::sin(angle) * e2));
    }
  } else {
    starts.push_back(-delta);
  }
  std::vector<LogResult> solutions;
  for (const auto& start : starts) {
    if (auto sol = newton_shoot(space, p, q, start)) solutions.push_back(*sol);
  }
  if (solutions.empty()) {
    throw GeometryError(ErrorCode::kConvergence, "shooting did not reach the endpoint within 1e-8");
  }
  const auto best = std::min_element(solutions.begin(), solutions.end(),
                                     [](const auto& a, const auto& b) { return a.length < b.length; });
  for (const auto& sol : solutions) {
    const bool tie = std::abs(sol.length - best->length) < 1e-7 * (1.0 + best->length);
    const Tangent diff = sol.velocity - best->velocity;
    if (tie && std::sqrt(diff.dot(g * diff)) > 1e-4 * (1.0 + best->length)) {
      throw GeometryError(ErrorCode::kNonuniqueGeodesic, "two minimal geodesics of equal length");
    }
  }
  return *best;
}

LogResult shoot_log(const AmbientSpace& space, const Point& p, const Point& q,
                    const Tangent& guess) {
  if (space.kind() != AmbientKind::kChart) return distance_and_log(space, p, q);
  if ((q - p).norm() == 0.0) return {0.0, Tangent::Zero(space.dim())};
  if (auto sol = newton_shoot(space, p, q, guess)) return *sol;
  throw GeometryError(ErrorCode::kConvergence, "warm-started shooting failed");
}

double distance(const AmbientSpace& space, const Point& p, const Point& q) {
  switch (space.kind()) {
    case AmbientKind::kEuclidean:
      return (q - p).norm();
    case AmbientKind::kSphere: {
      const double radius = space.radius();
      const double cos_angle = p.dot(q) / (radius * radius);
      const double sin_angle = (q - cos_angle * p).norm() / radius;
      return radius * std::atan2(sin_angle, cos_angle);
    }
    case AmbientKind::kHyperbolic:
    case AmbientKind::kChart:
      return distance_and_log(space, p, q).length;
  }
  return 0.0;
}

namespace {

// Joint RK4 of geodesic and transport ODE on a chart, recording the state at
// sorted target times.
std::vector<TransportSample> chart_joint_transport(const AmbientSpace& space, const Point& p,
                                                   const Tangent& v, const Tangent& u0,
                                                   std::span<const double> ts, int steps_per_unit) {
  std::vector<TransportSample> out;
  out.reserve(ts.size());
  Point x = p;
  Tangent dx = v;
  Tangent field = u0;
  double t = 0.0;
  const double h_max = 1.0 / steps_per_unit;
  auto rhs = [&](const Point& y, const Tangent& w, const Tangent& f) {
    const MetricJet jet = first_jet(space, y);
    return std::make_pair(Tangent(-contract(jet, w, w)), Tangent(-contract(jet, w, f)));
  };
  for (double target : ts) {
    if (target < t - 1e-15) {
      throw GeometryError(ErrorCode::kInvalidArgument, "transport times must be sorted");
    }
    const int n_steps = std::max(0, static_cast<int>(std::ceil((target - t) / h_max - 1e-9)));
    const double h = n_steps > 0 ? (target - t) / n_steps : 0.0;
    for (int s = 0; s < n_steps; ++s) {
      auto [a1, f1] = rhs(x, dx, field);
      const Tangent k1x = dx;
      const Point x2 = x + 0.5 * h * k1x;
      const Tangent v2 = dx + 0.5 * h * a1;
      const Tangent u2 = field + 0.5 * h * f1;
      check_chart_state(space, x2, v2);
      auto [a2, f2] = rhs(x2, v2, u2);
      const Point x3 = x + 0.5 * h * v2;
      const Tangent v3 = dx + 0.5 * h * a2;
      const Tangent u3 = field + 0.5 * h * f2;
      check_chart_state(space, x3, v3);
      auto [a3, f3] = rhs(x3, v3, u3);
      const Point x4 = x + h * v3;
      const Tangent v4 = dx + h * a3;
      const Tangent u4 = field + h * f3;
      check_chart_state(space, x4, v4);
      auto [a4, f4] = rhs(x4, v4, u4);
      x += (h / 6.0) * (k1x + 2.0 * v2 + 2.0 * v3 + v4);
      dx += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      field += (h / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
      check_chart_state(space, x, dx);
    }
    t = target;
    out.push_back({target, x, dx, field});
  }
  return out;
}

}  // namespace

Tangent parallel_transport(const AmbientSpace& space, const GeodesicPath& path, const Tangent& v) {
  if (path.samples.size() < 2) {
    throw GeometryError(ErrorCode::kResolution, "geodesic path has fewer than two samples");
  }
  const auto& first = path.samples.front();
  const auto& last = path.samples.back();
  switch (space.kind()) {
    case AmbientKind::kEuclidean:
      return v;
    case AmbientKind::kSphere:
    case AmbientKind::kHyperbolic: {
      const double speed = norm(space, first.point, first.velocity);
      if (speed == 0.0) return v;
      const Tangent e0 = first.velocity / speed;
      const Tangent e1 = last.velocity / speed;
      const double along = inner(space, first.point, e0, v);
      return v - along * e0 + along * e1;
    }
    case AmbientKind::kChart:
      break;
  }
  const int steps = static_cast<int>(path.samples.size()) - 1;
  if (steps < 2 || path.length / steps > 0.25) {
    throw GeometryError(ErrorCode::kResolution, "path samples too coarse for transport");
  }
  const double end = 1.0;
  return chart_joint_transport(space, first.point, first.velocity, v, std::span(&end, 1), steps)
      .back()
      .field;
}

std::vector<TransportSample> transport_along_geodesic(const AmbientSpace& space, const Point& p,
                                                      const Tangent& v, const Tangent& u0,
                                                      std::span<const double> ts) {
  if (space.kind() == AmbientKind::kChart) {
    return chart_joint_transport(space, p, v, u0, ts, space.ode_steps());
  }
  std::vector<TransportSample> out;
  out.reserve(ts.size());
  const double speed = norm(space, p, v);
  const double along = speed > 0.0 ? inner(space, p, v, u0) / speed : 0.0;
  for (double t : ts) {
    auto [x, dx] = space_form_state(space, p, v, t);
    Tangent field = u0;
    if (speed > 0.0 && space.kind() != AmbientKind::kEuclidean) {
      field += along * (dx - v) / speed;
    }
    out.push_back({t, std::move(x), std::move(dx), std::move(field)});
  }
  return out;
}

Tangent transport_along_curve(const AmbientSpace& space, const CurveFunction& curve, double t0,
                              double t1, int steps, const Tangent& v, std::vector<Tangent>* trace) {
  if (steps < 2) throw GeometryError(ErrorCode::kResolution, "transport needs at least 2 steps");
  const double r2 = space.radius() * space.radius();
  auto rhs = [&](double t, const Tangent& u) -> Tangent {
    const auto [x, dx] = curve(t);
    switch (space.kind()) {
      case AmbientKind::kEuclidean:
        return Tangent::Zero(u.size());
      case AmbientKind::kSphere:
        return -(u.dot(dx) / r2) * x;
      case AmbientKind::kHyperbolic:
        return (minkowski(u, dx) / r2) * x;
      case AmbientKind::kChart:
        return -christoffel_contract(space, x, dx, u);
    }
    return Tangent::Zero(u.size());
  };
  const double h = (t1 - t0) / steps;
  Tangent u = v;
  if (trace) {
    trace->clear();
    trace->reserve(steps + 1);
    trace->push_back(u);
  }
  for (int s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    const Tangent k1 = rhs(t, u);
    const Tangent k2 = rhs(t + 0.5 * h, u + 0.5 * h * k1);
    const Tangent k3 = rhs(t + 0.5 * h, u + 0.5 * h * k2);
    const Tangent k4 = rhs(t + h, u + h * k3);
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!u.allFinite()) throw GeometryError(ErrorCode::kEvaluation, "non-finite transported field");
    if (trace) trace->push_back(u);
  }
  return u;
}

namespace {

// Richardson-extrapolated metric derivatives for the curvature tensor.
double chart_sectional(const AmbientSpace& space, const Point& x, const Tangent& v,
                       const Tangent& w) {
  const int n = space.dim();
  const Matrix g = checked_metric(space, x);
  const Matrix ginv = inverse_spd(g);
  auto shifted = [&](int i, double hi, int j, double hj) {
    Point y = x;
    if (i >= 0) y(i) += hi;
    if (j >= 0) y(j) += hj;
    return checked_metric(space, y);
  };
  std::vector<Matrix> dg(n);
  std::vector<Matrix> ddg(n * n);
  std::vector<double> step(n);
  for (int i = 0; i < n; ++i) step[i] = kCurvatureStep * (1.0 + std::abs(x(i)));
  // Two levels of extrapolation: error O(h^6), so a larger step keeps
  // roundoff in the second differences small.
  auto richardson = [](const auto& f, double h) {
    const Matrix a = f(h), b = f(0.5 * h), c = f(0.25 * h);
    const Matrix r1 = (4.0 * b - a) / 3.0, r2 = (4.0 * c - b) / 3.0;
    return Matrix((16.0 * r2 - r1) / 15.0);
  };
  for (int i = 0; i < n; ++i) {
    auto d1 = [&](double h) { return Matrix((shifted(i, h, -1, 0) - shifted(i, -h, -1, 0)) / (2 * h)); };
    auto d2 = [&](double h) {
      return Matrix((shifted(i, h, -1, 0) - 2.0 * g + shifted(i, -h, -1, 0)) / (h * h));
    };
    dg[i] = richardson(d1, step[i]);
    ddg[i * n + i] = richardson(d2, step[i]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto mixed = [&](double hi, double hj) {
        return Matrix((shifted(i, hi, j, hj) - shifted(i, hi, j, -hj) - shifted(i, -hi, j, hj) +
                       shifted(i, -hi, j, -hj)) /
                      (4.0 * hi * hj));
      };
      const double ratio = step[j] / step[i];
      const Matrix d = richardson([&](double h) { return mixed(h, ratio * h); }, step[i]);
      ddg[i * n + j] = d;
      ddg[j * n + i] = d;
    }
  }
  auto idx3 = [n](int a, int b, int c) { return (a * n + b) * n + c; };
  // S_mjk = d_j g_mk + d_k g_mj - d_m g_jk and its derivative along i.
  std::vector<double> gamma(n * n * n, 0.0);
  std::vector<double> dgamma(n * n * n * n, 0.0);  // [i][l][j][k]
  std::vector<Matrix> dginv(n);
  for (int i = 0; i < n; ++i) dginv[i] = -ginv * dg[i] * ginv;
  for (int l = 0; l < n; ++l) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) {
          const double s = dg[j](m, k) + dg[k](m, j) - dg[m](j, k);
          acc += 0.5 * ginv(l, m) * s;
        }
        gamma[idx3(l, j, k)] = acc;
        for (int i = 0; i < n; ++i) {
          double d = 0.0;
          for (int m = 0; m < n; ++m) {
            const double s = dg[j](m, k) + dg[k](m, j) - dg[m](j, k);
            const double ds = ddg[i * n + j](m, k) + ddg[i * n + k](m, j) - ddg[i * n + m](j, k);
            d += 0.5 * (dginv[i](l, m) * s + ginv(l, m) * ds);
          }
          dgamma[i * n * n * n + idx3(l, j, k)] = d;
        }
      }
    }
  }
  auto riemann = [&](int l, int i, int j, int k) {
    double r = dgamma[i * n * n * n + idx3(l, j, k)] - dgamma[j * n * n * n + idx3(l, i, k)];
    for (int m = 0; m < n; ++m) {
      r += gamma[idx3(l, i, m)] * gamma[idx3(m, j, k)] - gamma[idx3(l, j, m)] * gamma[idx3(m, i, k)];
    }
    return r;
  };
  // <R(v,w)w, v>
  Vector rvw = Vector::Zero(n);
  for (int l = 0; l < n; ++l) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      if (v(i) == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        if (w(j) == 0.0) continue;
        for (int k = 0; k < n; ++k) acc += riemann(l, i, j, k) * v(i) * w(j) * w(k);
      }
    }
    rvw(l) = acc;
  }
  const double numerator = v.dot(g * rvw);
  const double gram = v.dot(g * v) * w.dot(g * w) - std::pow(v.dot(g * w), 2);
  return numerator / gram;
}

}  // namespace

double sectional_curvature(const AmbientSpace& space, const Point& p, const Tangent& v,
                           const Tangent& w) {
  const double vv = inner(space, p, v, v);
  const double ww = inner(space, p, w, w);
  const double vw = inner(space, p, v, w);
  if (!(vv > 0.0) || !(ww > 0.0) || (vv * ww - vw * vw) / (vv * ww) < 1e-12) {
    throw GeometryError(ErrorCode::kDegeneratePlane, "tangent vectors span no plane");
  }
  if (space.kind() != AmbientKind::kChart) return *space.curvature_constant();
  return chart_sectional(space, p, v, w);
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kDomainEscape:
      return "domain-escape";
    case ErrorCode::kEvaluation:
      return "evaluation";
    case ErrorCode::kNonuniqueGeodesic:
      return "nonunique-geodesic";
    case ErrorCode::kConvergence:
      return "convergence";
    case ErrorCode::kResolution:
      return "resolution";
    case ErrorCode::kDegeneratePlane:
      return "degenerate-plane";
    case ErrorCode::kImmersionDegeneracy:
      return "immersion-degeneracy";
    case ErrorCode::kProjectionFailure:
      return "projection-failure";
    case ErrorCode::kInvalidReach:
      return "invalid-reach";
    case ErrorCode::kInvalidConfiguration:
      return "invalid-configuration";
    case ErrorCode::kConvention:
      return "convention";
    case ErrorCode::kScanFailure:
      return "scan-failure";
  }
  return "unknown";
}

}  // namespace reachkit
