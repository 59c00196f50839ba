#include "reachkit/reach.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "reachkit/errors.hpp"

namespace reachkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ParamPoint wrap_periodic(const ParamDomain& domain, const ParamPoint& u) {
  ParamPoint out = u;
  for (int i = 0; i < domain.dim(); ++i) {
    if (domain.axes[i] != AxisKind::kPeriodic) continue;
    const double span = domain.upper(i) - domain.lower(i);
    double x = std::fmod(u(i) - domain.lower(i), span);
    if (x < 0.0) x += span;
    out(i) = domain.lower(i) + x;
  }
  return out;
}

struct Evaluation {
  double psi;
  double distance;
  Vector grad;
  Matrix hess;
  Matrix metric;
  Point point;
};

// psi(F(u)) for a fixed query q. psi is |x - q|^2 / 2 (Euclidean), -<q, x>
// (sphere), -<q, x>_L (hyperboloid) or d(x, q)^2 / 2 (chart); every choice is
// increasing in d(q, x), so minimizers and the sign of the Hessian at critical
// points agree with those of the distance.
class Objective {
 public:
  Objective(const Immersion& imm, const Point& q) : imm_(imm), space_(imm.ambient()), q_(q) {
    if (space_.kind() == AmbientKind::kHyperbolic) {
      lorentz_q_ = q;
      lorentz_q_(0) = -q(0);
    }
  }

  std::optional<Evaluation> evaluate(const ParamPoint& u) {
    const ImmersionJet jet = imm_.jet(u);
    const int k = imm_.param_dim();
    Evaluation e;
    e.point = jet.point;
    const Matrix gn = space_.metric(jet.point);
    e.metric = jet.jacobian.transpose() * gn * jet.jacobian;
    e.hess.resize(k, k);
    switch (space_.kind()) {
      case AmbientKind::kEuclidean: {
        const Vector r = jet.point - q_;
        e.psi = 0.5 * r.squaredNorm();
        e.distance = r.norm();
        e.grad = jet.jacobian.transpose() * r;
        e.hess = e.metric;
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) e.hess(i, j) += r.dot(jet.hessian[i * k + j]);
        }
        break;
      }
      case AmbientKind::kSphere:
      case AmbientKind::kHyperbolic: {
        const Vector& w = space_.kind() == AmbientKind::kSphere ? q_ : lorentz_q_;
        e.psi = -w.dot(jet.point);
        e.distance = distance(space_, q_, jet.point);
        e.grad = -(jet.jacobian.transpose() * w);
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) e.hess(i, j) = -w.dot(jet.hessian[i * k + j]);
        }
        break;
      }
      case AmbientKind::kChart: {
        const auto log_opt = chart_log(jet.point);
        if (!log_opt) return std::nullopt;
        const LogResult log = *log_opt;
        guess_ = log.velocity;
        guess_point_ = jet.point;
        const Vector gv = gn * log.velocity;
        e.psi = 0.5 * log.length * log.length;
        e.distance = log.length;
        e.grad = -(jet.jacobian.transpose() * gv);
        e.hess = e.metric;
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            const Tangent cov = jet.hessian[i * k + j] +
                                christoffel_contract(space_, jet.point, jet.jacobian.col(i),
                                                     jet.jacobian.col(j));
            e.hess(i, j) -= gv.dot(cov);
          }
        }
        break;
      }
    }
    if (!std::isfinite(e.psi) || !e.grad.allFinite()) return std::nullopt;
    return e;
  }

  // Exact Hessian; on charts a central difference of gradients.
  Matrix exact_hessian(const ParamPoint& u) {
    auto e = evaluate(u);
    if (!e) throw GeometryError(ErrorCode::kConvergence, "distance evaluation failed");
    if (space_.kind() != AmbientKind::kChart) return e->hess;
    if (!refine_hessian(u, *e)) {
      throw GeometryError(ErrorCode::kConvergence, "distance evaluation failed");
    }
    return e->hess;
  }

  // Replaces the approximate chart Hessian, which misses the curvature term
  // of Hess(d^2 / 2), by differences of exact gradients.
  bool refine_hessian(const ParamPoint& u, Evaluation& e) {
    if (space_.kind() != AmbientKind::kChart) return true;
    const int k = imm_.param_dim();
    Matrix h(k, k);
    const std::optional<Tangent> saved = guess_;
    const Point saved_point = guess_point_;
    auto restore = [&] {
      guess_ = saved;
      guess_point_ = saved_point;
    };
    for (int i = 0; i < k; ++i) {
      const double step = 1e-4 * (1.0 + std::abs(u(i)));
      ParamPoint up = u, um = u;
      up(i) += step;
      um(i) -= step;
      restore();
      auto ep = evaluate(up);
      restore();
      auto em = evaluate(um);
      restore();
      if (!ep || !em) return false;
      h.col(i) = (ep->grad - em->grad) / (2.0 * step);
    }
    e.hess = 0.5 * (h + h.transpose());
    return true;
  }

  void reset_guess() { guess_.reset(); }

  void set_guess(const Point& from, const Tangent& velocity) {
    guess_ = velocity;
    guess_point_ = from;
  }

 private:
  // Warm start, then the coordinate difference, then continuation along the
  // coordinate segment; the multi-start solver only as a last resort.
  std::optional<LogResult> chart_log(const Point& x) {
    const Tangent delta = q_ - x;
    auto attempt = [&](const Point& target, const Tangent& guess) -> std::optional<LogResult> {
      try {
        return shoot_log(space_, x, target, guess);
      } catch (const GeometryError&) {
        return std::nullopt;
      }
    };
    if (guess_) {
      // First order: moving the base point by dx shifts the log by about -dx.
      if (auto log = attempt(q_, Tangent(*guess_ - (x - guess_point_)))) return log;
    }
    if (auto log = attempt(q_, delta)) return log;
    constexpr int kPieces = 4;
    Tangent v = delta / kPieces;
    bool ok = true;
    for (int j = 1; j <= kPieces && ok; ++j) {
      const Point target = x + (static_cast<double>(j) / kPieces) * delta;
      auto log = attempt(target, v);
      if (!log) {
        ok = false;
        break;
      }
      v = log->velocity * (static_cast<double>(j + 1) / j);
      if (j == kPieces) return log;
    }
    try {
      return distance_and_log(space_, x, q_);
    } catch (const GeometryError&) {
      return std::nullopt;
    }
  }


 private:
  const Immersion& imm_;
  const AmbientSpace& space_;
  Point q_;
  Point lorentz_q_;
  std::optional<Tangent> guess_;
  Point guess_point_;
};

double min_generalized_eigenvalue(const Matrix& h, const Matrix& g);

// Minimizers may wander past a closed axis (a polar angle below 0, say).
// Find a parameter inside the box with the same image, starting from the
// clamped point and its half-period shifts.
std::optional<ParamPoint> canonical_param(const Immersion& imm, const ParamPoint& u,
                                          const Point& x) {
  const ParamDomain& domain = imm.domain();
  if (domain.contains(u)) return u;
  const int k = imm.param_dim();
  const double tol = 1e-9 * (1.0 + x.norm());
  std::vector<int> periodic;
  for (int i = 0; i < k; ++i) {
    if (domain.axes[i] == AxisKind::kPeriodic) periodic.push_back(i);
  }
  for (int mask = 0; mask < (1 << periodic.size()); ++mask) {
    ParamPoint v = domain.normalize(u);
    for (std::size_t j = 0; j < periodic.size(); ++j) {
      const int i = periodic[j];
      if (mask & (1 << j)) v(i) += 0.5 * (domain.upper(i) - domain.lower(i));
    }
    v = domain.normalize(v);
    double lambda = 1e-8;
    Vector r = imm.point(v) - x;
    for (int iter = 0; iter < 60 && r.norm() > tol; ++iter) {
      const Matrix jac = imm.jet(v).jacobian;
      const Matrix jtj = jac.transpose() * jac;
      const double scale = std::max(jtj.trace() / k, 1e-300);
      bool moved = false;
      for (int attempt = 0; attempt < 30; ++attempt) {
        const Vector step =
            (jtj + lambda * scale * Matrix::Identity(k, k)).ldlt().solve(-jac.transpose() * r);
        const ParamPoint trial = domain.normalize(v + step);
        const Vector rt = imm.point(trial) - x;
        if (rt.norm() < r.norm()) {
          v = trial;
          r = rt;
          lambda = std::max(lambda * 0.1, 1e-14);
          moved = true;
          break;
        }
        lambda *= 10.0;
      }
      if (!moved) break;
    }
    if (r.norm() <= tol) return v;
  }
  return std::nullopt;
}

std::optional<FootPoint> minimize(Objective& objective, const Immersion& imm, ParamPoint u) {
  const ParamDomain& domain = imm.domain();
  const int k = imm.param_dim();
  auto e = objective.evaluate(u);
  if (!e) return std::nullopt;
  double lambda = 1e-6;
  // Chart Hessians miss the curvature of d^2 / 2; an SR1 secant correction
  // learns it from accepted steps.
  const bool secant = imm.ambient().kind() == AmbientKind::kChart;
  Matrix correction = Matrix::Zero(k, k);
  for (int iter = 0; iter < 100; ++iter) {
    const double scale = std::max(e->metric.trace() / k, 1e-300);
    const Matrix damping = e->metric + 1e-10 * scale * Matrix::Identity(k, k);
    bool moved = false;
    bool tiny = false;
    for (int attempt = 0; attempt < 40 && lambda < 1e12; ++attempt) {
      const Matrix a = e->hess + correction + lambda * damping;
      Eigen::LLT<Matrix> llt(a);
      if (llt.info() != Eigen::Success) {
        lambda = std::max(lambda * 10.0, 1e-8);
        continue;
      }
      const Vector step = llt.solve(-e->grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      if (step.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + u.lpNorm<Eigen::Infinity>())) {
        tiny = true;
        break;
      }
      const ParamPoint trial = wrap_periodic(domain, u + step);
      auto et = objective.evaluate(trial);
      if (et && et->psi < e->psi) {
        if (secant) {
          const Vector y = et->grad - e->grad;
          const Vector r = y - (et->hess + correction) * step;
          const double rs = r.dot(step);
          if (std::abs(rs) > 1e-8 * r.norm() * step.norm()) correction += r * r.transpose() / rs;
        }
        u = trial;
        e = std::move(et);
        lambda = std::max(lambda * 0.1, 1e-12);
        moved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (tiny || !moved) break;
  }
  // Gradient relative to the size of the differential and the distance.
  const double jac_scale = std::sqrt(std::max(e->metric.diagonal().maxCoeff(), 1e-300));
  const double tol = 1e-6 * jac_scale * (1.0 + e->distance);
  if (e->grad.lpNorm<Eigen::Infinity>() > tol) return std::nullopt;
  double stiffness = 1.0;
  try {
    stiffness = min_generalized_eigenvalue(e->hess, e->metric);
  } catch (const GeometryError&) {
  }
  const auto inside = canonical_param(imm, u, e->point);
  if (!inside) return std::nullopt;
  return FootPoint{*inside, e->point, e->distance, stiffness};
}

double min_generalized_eigenvalue(const Matrix& h, const Matrix& g) {
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw GeometryError(ErrorCode::kImmersionDegeneracy, "induced metric is not positive definite");
  }
  const int k = static_cast<int>(g.rows());
  const Matrix lower = llt.matrixL();
  const Matrix linv = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(k, k));
  Matrix s = linv * h * linv.transpose();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double model_chord(const Point& a, const Point& b) { return (a - b).norm(); }

// Probe region for the medial search: a box of coordinates mapped into the model.
struct ProbeRegion {
  Vector lower;
  Vector upper;
  std::vector<bool> periodic;
  std::function<Point(const Vector&)> map;
};

ProbeRegion probe_region(const Immersion& imm, double margin) {
  const AmbientSpace& space = imm.ambient();
  const int n = space.dim();
  ProbeRegion region;
  region.periodic.assign(n, false);
  if (space.kind() == AmbientKind::kSphere) {
    // Hyperspherical angles; the last model coordinate is R cos a_1.
    region.lower = Vector::Zero(n);
    region.upper = Vector::Constant(n, M_PI);
    region.upper(n - 1) = 2.0 * M_PI;
    region.periodic[n - 1] = true;
    const double radius = space.radius();
    region.map = [n, radius](const Vector& a) {
      Point x(n + 1);
      double s = 1.0;
      for (int j = 0; j < n; ++j) {
        x(n - j) = radius * s * std::cos(a(j));
        s *= std::sin(a(j));
      }
      x(0) = radius * s;
      return x;
    };
    return region;
  }
  const bool hyperbolic = space.kind() == AmbientKind::kHyperbolic;
  const int offset = hyperbolic ? 1 : 0;
  Vector lo = Vector::Constant(n, kInf);
  Vector hi = Vector::Constant(n, -kInf);
  const int per_axis = imm.param_dim() == 1 ? 256 : (imm.param_dim() == 2 ? 48 : 12);
  for (const ParamPoint& u : param_grid(imm.domain(), per_axis)) {
    const Point x = imm.point(u);
    const Vector c = x.segment(offset, n);
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  const double pad = margin * (hi - lo).maxCoeff();
  region.lower = lo.array() - pad;
  region.upper = hi.array() + pad;
  if (hyperbolic) {
    const double radius = space.radius();
    region.map = [n, radius](const Vector& s) {
      Point x(n + 1);
      x(0) = std::sqrt(radius * radius + s.squaredNorm());
      x.tail(n) = s;
      return x;
    };
  } else {
    region.map = [](const Vector& s) { return Point(s); };
  }
  if (space.kind() == AmbientKind::kChart) {
    region.lower = region.lower.cwiseMax(space.domain().lower);
    region.upper = region.upper.cwiseMin(space.domain().upper);
  }
  return region;
}

using Lattice = std::vector<long>;

// Coarse marking: the foot moves faster than this multiple of the probe step.
constexpr double kSteepRatio = 2.0;


}  // namespace

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  const int count = std::min(threads, n);
  workers.reserve(count);
  for (int w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (failure) std::rethrow_exception(failure);
}

bool distinct_feet(const Immersion& imm, const FootPoint& a, const FootPoint& b, double dist_tol,
                   double cluster_tol) {
  return imm.domain().separation(a.param, b.param) > cluster_tol &&
         model_chord(a.point, b.point) > std::max(1e3 * dist_tol, std::sqrt(dist_tol));
}

namespace {

std::vector<FootPoint> cluster(const Immersion& imm, std::vector<FootPoint> found, double dist_tol,
                               double cluster_tol) {
  std::stable_sort(found.begin(), found.end(),
                   [](const FootPoint& a, const FootPoint& b) { return a.distance < b.distance; });
  std::vector<FootPoint> kept;
  const double best = found.front().distance;
  for (const FootPoint& f : found) {
    if (f.distance > best + dist_tol) break;
    const bool fresh = std::all_of(kept.begin(), kept.end(), [&](const FootPoint& g) {
      return distinct_feet(imm, f, g, dist_tol, cluster_tol);
    });
    if (fresh) kept.push_back(f);
  }
  return kept;
}

}  // namespace

FootPointSet foot_points_from(const Immersion& imm, const Point& q,
                              const std::vector<ParamPoint>& starts, double dist_tol,
                              double cluster_tol) {
  Objective objective(imm, q);
  std::vector<FootPoint> found;
  for (const ParamPoint& start : starts) {
    objective.reset_guess();
    if (auto f = minimize(objective, imm, start)) found.push_back(std::move(*f));
  }
  if (found.empty()) {
    std::ostringstream msg;
    msg << "no start converged to a foot point of q = (" << q.transpose() << ")";
    throw GeometryError(ErrorCode::kProjectionFailure, msg.str());
  }
  FootPointSet set;
  set.query = q;
  set.dist_tol = dist_tol;
  set.cluster_tol = cluster_tol;
  set.minimizers = cluster(imm, std::move(found), dist_tol, cluster_tol);
  return set;
}

FootPointSet foot_points(const Immersion& imm, const Point& q, int starts, double dist_tol,
                         double cluster_tol) {
  const int k = imm.param_dim();
  if (starts < 4 * k) throw GeometryError(ErrorCode::kInvalidArgument, "need at least 4k starts");
  return foot_points_from(imm, q, halton_points(imm.domain(), starts), dist_tol, cluster_tol);
}

double distance_hessian_min_eigenvalue(const Immersion& imm, const Point& q, const ParamPoint& u,
                                       const std::optional<Tangent>& log_guess) {
  Objective objective(imm, q);
  if (log_guess) objective.set_guess(imm.point(u), *log_guess);
  const Matrix h = objective.exact_hessian(u);
  const TangentFrame f = frame(imm, u);
  return min_generalized_eigenvalue(h, f.metric);
}

ReachOptions resolved(const ReachOptions& options, const Immersion& imm) {
  ReachOptions out = options;
  const int k = imm.param_dim();
  if (out.starts <= 0) out.starts = 16 * k;
  out.starts = std::max(out.starts, 4 * k);
  if (out.dist_tol <= 0.0) out.dist_tol = imm.ambient().kind() == AmbientKind::kChart ? 1e-7 : 1e-9;
  if (out.threads <= 0) out.threads = 1;
  return out;
}

std::string to_string(ReachMethod method) {
  return method == ReachMethod::kNormalCollision ? "normal_collision" : "medial_infimum";
}

std::string to_string(ReachStatus status) {
  switch (status) {
    case ReachStatus::kOk:
      return "ok";
    case ReachStatus::kUnbounded:
      return "unbounded";
    case ReachStatus::kInsufficientResolution:
      return "insufficient_resolution";
  }
  return "unknown";
}

std::string to_string(AssignerKind kind) {
  return kind == AssignerKind::kBottleneck ? "bottleneck" : "unique_foot_point";
}

double image_diameter(const Immersion& imm) {
  const int k = imm.param_dim();
  const int per_axis = k == 1 ? 128 : (k == 2 ? 24 : 8);
  std::vector<Point> points;
  for (const ParamPoint& u : param_grid(imm.domain(), per_axis)) points.push_back(imm.point(u));
  const AmbientSpace& space = imm.ambient();
  // Chart distances need shooting; the coordinate chord stands in for them.
  const bool chord = space.kind() == AmbientKind::kChart;
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = chord ? model_chord(points[i], points[j])
                             : distance(space, points[i], points[j]);
      best = std::max(best, d);
    }
  }
  return best;
}

namespace {

struct Ray {
  int sample;
  ParamPoint u;
  Point p;
  Tangent eta;
};

struct RayResult {
  bool collided{false};
  double lo{kInf};
  double hi{kInf};
};

class RayMarcher {
 public:
  RayMarcher(const Immersion& imm, const ReachOptions& opts) : imm_(imm), opts_(opts) {}

  enum class Probe { kClear, kHit, kEscaped, kUndetermined };

  // Collision predicate at x(t).
  Probe collided(const Ray& ray, double t) const {
    Point x;
    try {
      x = exp_map(imm_.ambient(), ray.p, t * ray.eta);
    } catch (const GeometryError& e) {
      if (e.code() == ErrorCode::kDomainEscape || e.code() == ErrorCode::kEvaluation) {
        return Probe::kEscaped;
      }
      throw;
    }
    try {
      // Focal test: p stops being a local minimizer of the distance.
      if (distance_hessian_min_eigenvalue(imm_, x, ray.u, Tangent(t * ray.eta)) < 0.0) {
        return Probe::kHit;
      }
      const FootPointSet feet =
          foot_points(imm_, x, opts_.starts, opts_.dist_tol, opts_.cluster_tol);
      if (feet.distance() < t - 10.0 * opts_.dist_tol) return Probe::kHit;
      return feet.multiplicity() >= 2 ? Probe::kHit : Probe::kClear;
    } catch (const GeometryError& e) {
      // Charts: no geodesic to x could be shot inside the box.
      if (imm_.ambient().kind() == AmbientKind::kChart &&
          (e.code() == ErrorCode::kConvergence || e.code() == ErrorCode::kProjectionFailure)) {
        return Probe::kUndetermined;
      }
      throw;
    }
  }

  // A ray that leaves the chart, or reaches points whose distance cannot be
  // evaluated, ends without a collision.
  RayResult march(const Ray& ray, double step, double horizon, double tol) const {
    RayResult r;
    double prev = 0.0;
    for (int i = 1;; ++i) {
      const double t = std::min(i * step, horizon);
      const Probe hit = collided(ray, t);
      if (hit == Probe::kEscaped || hit == Probe::kUndetermined) return r;
      if (hit == Probe::kHit) {
        r.collided = true;
        r.lo = prev;
        r.hi = t;
        break;
      }
      prev = t;
      if (t >= horizon) return r;
    }
    refine(ray, r, tol);
    return r;
  }

  void refine(const Ray& ray, RayResult& r, double tol) const {
    while (r.collided && r.hi - r.lo > tol) {
      const double mid = 0.5 * (r.lo + r.hi);
      switch (collided(ray, mid)) {
        case Probe::kClear:
          r.lo = mid;
          break;
        case Probe::kHit:
        case Probe::kEscaped:  // cannot happen below an in-chart hit; keeps the bracket valid
          r.hi = mid;
          break;
        case Probe::kUndetermined:
          r = RayResult{};
          break;
      }
    }
  }

  const Immersion& imm_;
  const ReachOptions& opts_;
};

}  // namespace

ReachEstimate reach_normal_collision(const Immersion& imm, const ReachOptions& options) {
  const ReachOptions opts = resolved(options, imm);
  if (!imm.domain().compact()) {
    throw GeometryError(ErrorCode::kInvalidArgument, "reach needs a compact parameter domain");
  }
  if (opts.surface_samples < 1 || opts.normal_samples < 1) {
    throw GeometryError(ErrorCode::kInvalidArgument, "sample counts must be positive");
  }
  const AmbientSpace& space = imm.ambient();
  const int codim = imm.codim();
  if (codim < 1 || codim > 2) {
    throw GeometryError(ErrorCode::kInvalidArgument, "normal sampling supports codimension 1 and 2");
  }
  ReachEstimate est;
  est.method = ReachMethod::kNormalCollision;
  est.diameter = image_diameter(imm);
  const double step = opts.march_step > 0.0 ? opts.march_step : est.diameter / 8.0;
  const double horizon = opts.horizon > 0.0 ? opts.horizon : 4.0 * est.diameter;
  if (!(step > 0.0)) throw GeometryError(ErrorCode::kInvalidArgument, "march step must be > 0");

  est.sample_params = param_grid(imm.domain(), opts.surface_samples);
  std::vector<Ray> rays;
  for (int s = 0; s < static_cast<int>(est.sample_params.size()); ++s) {
    const ParamPoint& u = est.sample_params[s];
    TangentFrame f;
    try {
      f = frame(imm, u);
    } catch (const GeometryError& e) {
      if (e.code() == ErrorCode::kImmersionDegeneracy) continue;  // polar parameter lines
      throw;
    }
    if (codim == 1) {
      rays.push_back({s, u, f.point, f.normals.col(0)});
      rays.push_back({s, u, f.point, -f.normals.col(0)});
    } else {
      for (int j = 0; j < opts.normal_samples; ++j) {
        const double a = 2.0 * M_PI * j / opts.normal_samples;
        rays.push_back({s, u, f.point, std::cos(a) * f.normals.col(0) +
                                           std::sin(a) * f.normals.col(1)});
      }
    }
  }
  est.resolution.surface_samples = opts.surface_samples;
  est.resolution.normal_samples = codim == 1 ? 2 : opts.normal_samples;
  est.resolution.rays = static_cast<int>(rays.size());

  RayMarcher marcher(imm, opts);
  const double coarse_tol = std::max(1e-4 * est.diameter, opts.bisection_tol);
  std::vector<RayResult> results(rays.size());
  parallel_for(static_cast<int>(rays.size()), opts.threads,
               [&](int i) { results[i] = marcher.march(rays[i], step, horizon, coarse_tol); });

  double coarse_min = kInf;
  for (const auto& r : results) coarse_min = std::min(coarse_min, r.lo);
  est.pointwise.assign(est.sample_params.size(), kInf);
  if (!std::isfinite(coarse_min)) {
    est.status = ReachStatus::kUnbounded;
    est.tau_hat = horizon;
    return est;
  }
  std::vector<int> fine;
  for (int i = 0; i < static_cast<int>(rays.size()); ++i) {
    if (results[i].collided && results[i].lo <= (1.0 + opts.candidate_window) * coarse_min) {
      fine.push_back(i);
    }
  }
  parallel_for(static_cast<int>(fine.size()), opts.threads, [&](int j) {
    marcher.refine(rays[fine[j]], results[fine[j]], opts.bisection_tol);
  });

  int best = -1;
  for (int i = 0; i < static_cast<int>(rays.size()); ++i) {
    if (!results[i].collided) continue;
    double& pw = est.pointwise[rays[i].sample];
    pw = std::min(pw, results[i].lo);
    if (best < 0 || results[i].lo < results[best].lo) best = i;
  }
  if (best < 0) {
    est.status = ReachStatus::kUnbounded;
    est.tau_hat = horizon;
    return est;
  }
  est.tau_hat = results[best].lo;
  est.witness = exp_map(space, rays[best].p, est.tau_hat * rays[best].eta);
  est.witness_feet = foot_points(imm, est.witness, opts.starts, opts.dist_tol, opts.cluster_tol);
  for (int i : fine) {
    if (!results[i].collided) continue;
    const Ray& ray = rays[i];
    ReachCandidate c;
    c.point = exp_map(space, ray.p, results[i].lo * ray.eta);
    c.distance = results[i].lo;
    c.probes = {c.point, exp_map(space, ray.p, results[i].hi * ray.eta)};
    est.candidates.push_back(std::move(c));
  }
  std::stable_sort(est.candidates.begin(), est.candidates.end(),
                   [](const ReachCandidate& a, const ReachCandidate& b) {
                     return a.distance < b.distance;
                   });
  return est;
}

ReachEstimate reach_medial_infimum(const Immersion& imm, const ReachOptions& options) {
  const ReachOptions opts = resolved(options, imm);
  if (!imm.domain().compact()) {
    throw GeometryError(ErrorCode::kInvalidArgument, "reach needs a compact parameter domain");
  }
  if (opts.ambient_samples < 2) {
    throw GeometryError(ErrorCode::kInvalidArgument, "ambient_samples must be >= 2");
  }
  const AmbientSpace& space = imm.ambient();
  const int n = space.dim();
  ReachEstimate est;
  est.method = ReachMethod::kMedialInfimum;
  est.diameter = image_diameter(imm);
  const ProbeRegion region = probe_region(imm, opts.probe_margin);
  const double spatial_scale = space.kind() == AmbientKind::kSphere ? space.radius() : 1.0;
  const Vector extent = region.upper - region.lower;
  const double min_spacing = opts.min_spacing_rel * est.diameter;

  // Lattice index -> coordinates at a level with `cells` cells per axis.
  auto coordinates = [&](const Lattice& idx, long cells) {
    Vector a(n);
    for (int i = 0; i < n; ++i) a(i) = region.lower(i) + extent(i) * idx[i] / cells;
    return a;
  };
  auto normalize = [&](Lattice idx, long cells) -> std::optional<Lattice> {
    for (int i = 0; i < n; ++i) {
      if (region.periodic[i]) {
        idx[i] = ((idx[i] % cells) + cells) % cells;
      } else if (idx[i] < 0 || idx[i] > cells) {
        return std::nullopt;
      }
    }
    return idx;
  };
  // Edges are bisected down to h_fine; a surviving jump must exceed
  // jump_factor * diam * cbrt(h_fine / diam). A continuous foot map with
  // Lipschitz constant Lip passes only if Lip > jump_factor (diam / h_fine)^(2/3).
  const double h_fine = std::max(opts.bisection_tol, 1e-12 * est.diameter);
  const double final_jump = opts.jump_factor * est.diameter * std::cbrt(h_fine / est.diameter);
  auto feet_at = [&](const Point& x) {
    return foot_points(imm, x, opts.starts, opts.dist_tol, opts.cluster_tol);
  };
  std::atomic<int> evaluations{0};

  struct Confirmed {
    Vector coords;
    Point point;
    FootPointSet feet;
    std::vector<Point> probes;
  };

  // Bisects an edge whose foot jumps. A steep but continuous foot map loses
  // the jump as the edge shrinks; a medial crossing keeps it.
  auto confirm = [&](Vector a, FootPointSet fa, Vector b, FootPointSet fb) -> std::optional<Confirmed> {
    Point pa = region.map(a);
    Point pb = region.map(b);
    while (model_chord(pa, pb) > h_fine) {
      const Vector m = 0.5 * (a + b);
      const Point pm = region.map(m);
      // Seeded from both ends: near a crossing the foot follows one of the two branches.
      std::vector<ParamPoint> seeds;
      for (const FootPoint& f : fa.minimizers) seeds.push_back(f.param);
      for (const FootPoint& f : fb.minimizers) seeds.push_back(f.param);
      FootPointSet fm = foot_points_from(imm, pm, seeds, opts.dist_tol, opts.cluster_tol);
      ++evaluations;
      if (fm.multiplicity() >= 2) return Confirmed{m, pm, std::move(fm), {pm}};
      const Point& foot_m = fm.minimizers.front().point;
      if (model_chord(fa.minimizers.front().point, foot_m) >=
          model_chord(foot_m, fb.minimizers.front().point)) {
        b = m;
        pb = pm;
        fb = std::move(fm);
      } else {
        a = m;
        pa = pm;
        fa = std::move(fm);
      }
      // A continuous foot map only shrinks the jump from here on.
      if (model_chord(fa.minimizers.front().point, fb.minimizers.front().point) <= final_jump) {
        return std::nullopt;
      }
    }
    // Global search at the final pair guards against a missed third branch.
    fa = feet_at(pa);
    fb = feet_at(pb);
    evaluations += 2;
    const double jump = model_chord(fa.minimizers.front().point, fb.minimizers.front().point);
    if (fa.multiplicity() < 2 && fb.multiplicity() < 2 && jump <= final_jump) return std::nullopt;
    if (fa.distance() <= fb.distance()) return Confirmed{a, pa, std::move(fa), {pa, pb}};
    return Confirmed{b, pb, std::move(fb), {pa, pb}};
  };

  // Evaluates lattice points, then confirms marked points and jumping edges in
  // order of distance until `candidates_per_level` crossings are found.
  auto run_level = [&](const std::vector<Lattice>& points, long cells) {
    std::vector<FootPointSet> feet(points.size());
    parallel_for(static_cast<int>(points.size()), opts.threads, [&](int i) {
      feet[i] = feet_at(region.map(coordinates(points[i], cells)));
    });
    evaluations += static_cast<int>(points.size());
    std::map<Lattice, int> lookup;
    for (std::size_t i = 0; i < points.size(); ++i) lookup.emplace(points[i], static_cast<int>(i));

    // Multiple feet at a lattice point (to == -1) or a steep edge.
    struct Mark {
      double distance;
      int from;
      int to;
      int axis;
    };
    std::vector<Mark> marks;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (feet[i].multiplicity() >= 2) {
        marks.push_back({feet[i].distance(), static_cast<int>(i), -1, -1});
        continue;
      }
      const Vector a = coordinates(points[i], cells);
      for (int axis = 0; axis < n; ++axis) {
        Lattice next = points[i];
        ++next[axis];
        const auto normed = normalize(next, cells);
        if (!normed) continue;
        const auto it = lookup.find(*normed);
        if (it == lookup.end() || it->second == static_cast<int>(i)) continue;
        const int j = it->second;
        if (feet[j].multiplicity() >= 2) continue;
        const Point xa = region.map(a);
        const Point xb = region.map(coordinates(*normed, cells));
        const double jump = model_chord(feet[i].minimizers.front().point,
                                        feet[j].minimizers.front().point);
        if (jump > kSteepRatio * model_chord(xa, xb)) {
          marks.push_back({std::min(feet[i].distance(), feet[j].distance()), static_cast<int>(i), j,
                           axis});
        }
      }
    }
    std::stable_sort(marks.begin(), marks.end(),
                     [](const Mark& x, const Mark& y) { return x.distance < y.distance; });
    std::vector<Confirmed> found;
    const int batch = std::max(1, opts.candidates_per_level);
    for (std::size_t start = 0; start < marks.size(); start += batch) {
      if (static_cast<int>(found.size()) >= opts.candidates_per_level) break;
      const std::size_t stop = std::min(marks.size(), start + batch);
      std::vector<std::optional<Confirmed>> results(stop - start);
      parallel_for(static_cast<int>(results.size()), opts.threads, [&](int r) {
        const Mark& m = marks[start + r];
        const Vector a = coordinates(points[m.from], cells);
        if (m.to < 0) {
          const Point x = region.map(a);
          results[r] = Confirmed{a, x, feet[m.from], {x}};
          return;
        }
        Vector b = a;
        b(m.axis) += extent(m.axis) / cells;
        results[r] = confirm(a, feet[m.from], b, feet[m.to]);
      });
      for (auto& r : results) {
        if (r) found.push_back(std::move(*r));
      }
    }
    std::stable_sort(found.begin(), found.end(), [](const Confirmed& x, const Confirmed& y) {
      return x.feet.distance() < y.feet.distance();
    });
    return found;
  };

  long cells = opts.ambient_samples;
  std::vector<Lattice> initial;
  {
    Lattice idx(n, 0);
    while (true) {
      initial.push_back(idx);
      int axis = n - 1;
      while (axis >= 0) {
        const long limit = region.periodic[axis] ? cells : cells + 1;
        if (++idx[axis] < limit) break;
        idx[axis] = 0;
        --axis;
      }
      if (axis < 0) break;
    }
  }
  std::vector<Confirmed> level_found = run_level(initial, cells);
  est.resolution.ambient_samples = opts.ambient_samples;
  if (level_found.empty()) {
    est.status = ReachStatus::kInsufficientResolution;
    est.resolution.probes = evaluations;
    est.resolution.final_spacing = spatial_scale * extent.maxCoeff() / cells;
    return est;
  }
  std::vector<Confirmed> all = level_found;
  int level = 0;
  while (level < opts.max_levels && spatial_scale * extent.maxCoeff() / cells >= min_spacing) {
    const long next_cells = 2 * cells;
    std::vector<Lattice> window;
    std::map<Lattice, bool> seen;
    const int top = std::min<int>(opts.candidates_per_level, static_cast<int>(level_found.size()));
    for (int t = 0; t < top; ++t) {
      Lattice centre(n);
      for (int i = 0; i < n; ++i) {
        centre[i] = std::lround((level_found[t].coords(i) - region.lower(i)) / extent(i) * next_cells);
      }
      const int w = opts.window_radius;
      Lattice offset(n, -w);
      while (true) {
        Lattice idx(n);
        for (int i = 0; i < n; ++i) idx[i] = centre[i] + offset[i];
        if (auto normed = normalize(idx, next_cells); normed && !seen.count(*normed)) {
          seen[*normed] = true;
          window.push_back(*normed);
        }
        int axis = n - 1;
        while (axis >= 0 && ++offset[axis] > w) {
          offset[axis] = -w;
          --axis;
        }
        if (axis < 0) break;
      }
    }
    auto refined = run_level(window, next_cells);
    if (refined.empty()) break;
    all.insert(all.end(), refined.begin(), refined.end());
    level_found = std::move(refined);
    cells = next_cells;
    ++level;
  }
  est.resolution.levels = level;
  est.resolution.probes = evaluations;
  est.resolution.final_spacing = spatial_scale * extent.maxCoeff() / cells;

  std::stable_sort(all.begin(), all.end(), [](const Confirmed& x, const Confirmed& y) {
    return x.feet.distance() < y.feet.distance();
  });
  est.tau_hat = all.front().feet.distance();
  est.witness = all.front().point;
  est.witness_feet = all.front().feet;
  for (const Confirmed& c : all) {
    est.candidates.push_back({c.point, c.feet.distance(), c.probes});
  }
  return est;
}

std::vector<ReachAssigner> reach_assigning_points(const Immersion& imm,
                                                  const ReachEstimate& estimate, double tol,
                                                  const ReachOptions& options) {
  const ReachOptions opts = resolved(options, imm);
  std::vector<ReachAssigner> out;
  if (estimate.status != ReachStatus::kOk) return out;
  const double merge_radius = 1e-6 * std::max(1.0, estimate.diameter);
  std::vector<const ReachCandidate*> selected;
  for (const ReachCandidate& c : estimate.candidates) {
    if (std::abs(c.distance - estimate.tau_hat) > tol) continue;
    const bool duplicate = std::any_of(selected.begin(), selected.end(), [&](const auto* s) {
      return model_chord(s->point, c.point) < merge_radius;
    });
    if (!duplicate) selected.push_back(&c);
  }
  out.resize(selected.size());
  parallel_for(static_cast<int>(selected.size()), opts.threads, [&](int i) {
    const ReachCandidate& c = *selected[i];
    std::vector<FootPoint> merged;
    for (const Point& probe : c.probes) {
      const FootPointSet feet = foot_points(imm, probe, opts.starts, opts.dist_tol, opts.cluster_tol);
      merged.insert(merged.end(), feet.minimizers.begin(), feet.minimizers.end());
    }
    // Distances differ across probes, so only the separation rule applies.
    std::vector<FootPoint> kept;
    for (const FootPoint& f : merged) {
      const bool fresh = std::all_of(kept.begin(), kept.end(), [&](const FootPoint& g) {
        return distinct_feet(imm, f, g, opts.dist_tol, opts.cluster_tol);
      });
      if (fresh) kept.push_back(f);
    }
    ReachAssigner a;
    a.q = c.point;
    a.distance = c.distance;
    a.foot_points.query = c.point;
    a.foot_points.minimizers = std::move(kept);
    a.foot_points.dist_tol = opts.dist_tol;
    a.foot_points.cluster_tol = opts.cluster_tol;
    a.classification = a.foot_points.multiplicity() >= 2 ? AssignerKind::kBottleneck
                                                         : AssignerKind::kUniqueFootPoint;
    out[i] = std::move(a);
  });
  return out;
}

}  // namespace reachkit
