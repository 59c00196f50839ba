#include "reachkit/immersion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "reachkit/errors.hpp"

namespace reachkit {

namespace {

constexpr double kHessianStep = 1e-3;

Matrix inverse_spd(const Matrix& g) {
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw GeometryError(ErrorCode::kImmersionDegeneracy, "induced metric is not positive definite");
  }
  return llt.solve(Matrix::Identity(g.rows(), g.cols()));
}

// Covariant Hessian entries, projected to T_xN.
std::vector<Tangent> covariant_hessian(const AmbientSpace& space, const ImmersionJet& jet) {
  const int k = static_cast<int>(jet.jacobian.cols());
  std::vector<Tangent> out(k * k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      Tangent h = jet.hessian[i * k + j];
      switch (space.kind()) {
        case AmbientKind::kEuclidean:
          break;
        case AmbientKind::kSphere:
        case AmbientKind::kHyperbolic:
          h = project_tangent(space, jet.point, h);
          break;
        case AmbientKind::kChart:
          h += christoffel_contract(space, jet.point, jet.jacobian.col(i), jet.jacobian.col(j));
          break;
      }
      out[i * k + j] = h;
    }
  }
  return out;
}

// Intrinsic Christoffel contraction at u without building the normal frame.
Vector intrinsic_christoffel(const Immersion& imm, const ParamPoint& u, const Vector& a,
                             const Vector& b) {
  const AmbientSpace& space = imm.ambient();
  const ImmersionJet jet = imm.jet(u);
  const int k = imm.param_dim();
  const Matrix gn = space.metric(jet.point);
  const Matrix g = jet.jacobian.transpose() * gn * jet.jacobian;
  Tangent h = Tangent::Zero(jet.point.size());
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (a(i) == 0.0 || b(j) == 0.0) continue;
      h += a(i) * b(j) * jet.hessian[i * k + j];
    }
  }
  if (space.kind() == AmbientKind::kChart) {
    h += christoffel_contract(space, jet.point, jet.jacobian * a, jet.jacobian * b);
  }
  // Projection onto T_xN does not change inner products with tangents of M.
  const Vector rhs = jet.jacobian.transpose() * (gn * h);
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw GeometryError(ErrorCode::kImmersionDegeneracy, "induced metric is not positive definite");
  }
  return llt.solve(rhs);
}

void check_curve_state(const ParamDomain& domain, const ParamPoint& u, const Vector& du) {
  if (!u.allFinite() || !du.allFinite()) {
    throw GeometryError(ErrorCode::kEvaluation, "non-finite intrinsic geodesic state");
  }
  for (int i = 0; i < domain.dim(); ++i) {
    if (domain.axes[i] == AxisKind::kPeriodic) continue;
    if (u(i) < domain.lower(i) - 1e-12 || u(i) > domain.upper(i) + 1e-12) {
      throw GeometryError(ErrorCode::kDomainEscape, "intrinsic curve left the parameter domain");
    }
  }
}

double radical_inverse(int index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace

bool ParamDomain::compact() const {
  return std::none_of(axes.begin(), axes.end(), [](AxisKind a) { return a == AxisKind::kOpen; });
}

ParamPoint ParamDomain::normalize(const ParamPoint& u) const {
  ParamPoint out = u;
  for (int i = 0; i < dim(); ++i) {
    const double span = upper(i) - lower(i);
    if (axes[i] == AxisKind::kPeriodic) {
      double x = std::fmod(u(i) - lower(i), span);
      if (x < 0.0) x += span;
      if (x >= span) x -= span;
      out(i) = lower(i) + x;
    } else {
      out(i) = std::clamp(u(i), lower(i), upper(i));
    }
  }
  return out;
}

bool ParamDomain::contains(const ParamPoint& u) const {
  for (int i = 0; i < dim(); ++i) {
    if (axes[i] == AxisKind::kPeriodic) continue;
    if (u(i) < lower(i) || u(i) > upper(i)) return false;
  }
  return true;
}

Vector ParamDomain::difference(const ParamPoint& a, const ParamPoint& b) const {
  Vector d = b - a;
  for (int i = 0; i < dim(); ++i) {
    if (axes[i] != AxisKind::kPeriodic) continue;
    const double span = upper(i) - lower(i);
    d(i) = std::remainder(d(i), span);
  }
  return d;
}

std::vector<ParamPoint> param_grid(const ParamDomain& domain, int per_axis) {
  if (per_axis < 1) throw GeometryError(ErrorCode::kInvalidArgument, "per_axis must be >= 1");
  const int k = domain.dim();
  std::vector<std::vector<double>> values(k);
  for (int i = 0; i < k; ++i) {
    const int count = domain.axes[i] == AxisKind::kPeriodic ? per_axis : per_axis + 1;
    for (int j = 0; j < count; ++j) {
      values[i].push_back(domain.lower(i) +
                          (domain.upper(i) - domain.lower(i)) * static_cast<double>(j) / per_axis);
    }
  }
  std::vector<ParamPoint> out;
  std::vector<int> index(k, 0);
  while (true) {
    ParamPoint u(k);
    for (int i = 0; i < k; ++i) u(i) = values[i][index[i]];
    out.push_back(u);
    int axis = k - 1;
    while (axis >= 0 && ++index[axis] == static_cast<int>(values[axis].size())) {
      index[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return out;
}

std::vector<ParamPoint> halton_points(const ParamDomain& domain, int count) {
  static constexpr std::array<int, kMaxDim> kBases{2, 3, 5, 7, 11, 13, 17, 19};
  const int k = domain.dim();
  std::vector<ParamPoint> out;
  out.reserve(count);
  for (int n = 1; n <= count; ++n) {
    ParamPoint u(k);
    for (int i = 0; i < k; ++i) {
      u(i) = domain.lower(i) + (domain.upper(i) - domain.lower(i)) * radical_inverse(n, kBases[i]);
    }
    out.push_back(u);
  }
  return out;
}

Immersion::Immersion(std::string name, AmbientSpace ambient, ParamDomain domain, ImmersionMap map,
                     ImmersionJetFunction closed_form, double fd_step)
    : name_(std::move(name)),
      ambient_(std::move(ambient)),
      domain_(std::move(domain)),
      map_(std::move(map)),
      closed_form_(std::move(closed_form)),
      fd_step_(fd_step) {
  const int k = domain_.dim();
  if (k < 1 || k > ambient_.dim() || domain_.lower.size() != k || domain_.upper.size() != k) {
    throw GeometryError(ErrorCode::kInvalidArgument, "inconsistent parameter domain");
  }
  if (!map_) throw GeometryError(ErrorCode::kInvalidArgument, "immersion needs a map");
}

Point Immersion::point(const ParamPoint& u) const {
  Point x = map_(u);
  if (!x.allFinite()) throw GeometryError(ErrorCode::kEvaluation, "non-finite immersion value");
  return x;
}

ImmersionJet Immersion::jet(const ParamPoint& u) const {
  if (closed_form_) return closed_form_(u);
  const int k = param_dim();
  ImmersionJet jet;
  jet.point = point(u);
  const int m = static_cast<int>(jet.point.size());
  jet.jacobian.resize(m, k);
  for (int i = 0; i < k; ++i) {
    const double h = fd_step_ * (1.0 + std::abs(u(i)));
    ParamPoint up = u, um = u;
    up(i) += h;
    um(i) -= h;
    jet.jacobian.col(i) = (point(up) - point(um)) / (2.0 * h);
  }
  jet.hessian.resize(k * k);
  auto shifted = [&](int i, double hi, int j, double hj) {
    ParamPoint v = u;
    v(i) += hi;
    if (j >= 0) v(j) += hj;
    return point(v);
  };
  for (int i = 0; i < k; ++i) {
    const double hi = kHessianStep * (1.0 + std::abs(u(i)));
    auto d2 = [&](double h) {
      return Tangent((shifted(i, h, -1, 0) - 2.0 * jet.point + shifted(i, -h, -1, 0)) / (h * h));
    };
    jet.hessian[i * k + i] = (4.0 * d2(0.5 * hi) - d2(hi)) / 3.0;
    for (int j = i + 1; j < k; ++j) {
      const double hj = kHessianStep * (1.0 + std::abs(u(j)));
      auto mixed = [&](double a, double b) {
        return Tangent((shifted(i, a, j, b) - shifted(i, a, j, -b) - shifted(i, -a, j, b) +
                        shifted(i, -a, j, -b)) /
                       (4.0 * a * b));
      };
      const Tangent d = (4.0 * mixed(0.5 * hi, 0.5 * hj) - mixed(hi, hj)) / 3.0;
      jet.hessian[i * k + j] = d;
      jet.hessian[j * k + i] = d;
    }
  }
  return jet;
}

TangentFrame frame(const Immersion& imm, const ParamPoint& u) {
  const AmbientSpace& space = imm.ambient();
  const ImmersionJet jet = imm.jet(u);
  const int k = imm.param_dim();
  TangentFrame f;
  f.param = u;
  f.point = jet.point;
  f.tangents = jet.jacobian;
  f.metric = jet.jacobian.transpose() * space.metric(jet.point) * jet.jacobian;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(f.metric, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 1e-8)) {
    throw GeometryError(ErrorCode::kImmersionDegeneracy, "differential is rank deficient");
  }
  // Orthonormal tangent span, then complete with the ambient basis in order.
  const int m = space.model_dim();
  Matrix q(m, space.dim());
  int filled = 0;
  for (int i = 0; i < k; ++i) {
    Tangent e = f.tangents.col(i);
    for (int j = 0; j < filled; ++j) e -= inner(space, f.point, q.col(j), e) * q.col(j);
    q.col(filled++) = e / norm(space, f.point, e);
  }
  const Matrix seeds = tangent_basis(space, f.point);
  for (int s = 0; s < seeds.cols() && filled < space.dim(); ++s) {
    Tangent e = seeds.col(s);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < filled; ++j) e -= inner(space, f.point, q.col(j), e) * q.col(j);
    }
    const double len = norm(space, f.point, e);
    if (len < 1e-6) continue;
    q.col(filled++) = e / len;
  }
  f.normals = q.rightCols(space.dim() - k);
  return f;
}

Tangent LocalGeometry::hessian(const Vector& a, const Vector& b) const {
  const int n = k();
  Tangent h = Tangent::Zero(frame.point.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) h += a(i) * b(j) * covariant_hessian[i * n + j];
  }
  return h;
}

Vector LocalGeometry::tangential_coordinates(const Tangent& v) const {
  const Matrix gn = immersion->ambient().metric(frame.point);
  return metric_inverse * (frame.tangents.transpose() * (gn * v));
}

Vector LocalGeometry::christoffel(const Vector& a, const Vector& b) const {
  return tangential_coordinates(hessian(a, b));
}

Tangent LocalGeometry::second_fundamental(const Vector& a, const Vector& b) const {
  const Tangent h = hessian(a, b);
  const AmbientSpace& space = immersion->ambient();
  Tangent out = Tangent::Zero(h.size());
  for (int c = 0; c < frame.normals.cols(); ++c) {
    out += inner(space, frame.point, frame.normals.col(c), h) * frame.normals.col(c);
  }
  return out;
}

Tangent LocalGeometry::geodesic_acceleration(const Vector& a) const {
  const Tangent h = hessian(a, a);
  return h - push(tangential_coordinates(h));
}

Matrix LocalGeometry::shape_operator(const Tangent& eta) const {
  const int n = k();
  const AmbientSpace& space = immersion->ambient();
  Matrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s(i, j) = inner(space, frame.point, covariant_hessian[i * n + j], eta);
    }
  }
  return metric_inverse * s;
}

LocalGeometry local_geometry(const Immersion& imm, const ParamPoint& u) {
  LocalGeometry geom;
  geom.immersion = &imm;
  geom.frame = frame(imm, u);
  geom.metric_inverse = inverse_spd(geom.frame.metric);
  ImmersionJet jet = imm.jet(u);
  geom.covariant_hessian = covariant_hessian(imm.ambient(), jet);
  return geom;
}

Tangent second_fundamental(const Immersion& imm, const ParamPoint& u, const Vector& v,
                           const Vector& w) {
  return local_geometry(imm, u).second_fundamental(v, w);
}

ShapeOperatorNorm shape_operator_norm(const LocalGeometry& geom, const Tangent& eta) {
  const int n = geom.k();
  const AmbientSpace& space = geom.immersion->ambient();
  Matrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s(i, j) = inner(space, geom.frame.point, geom.covariant_hessian[i * n + j], eta);
    }
  }
  // g-orthonormal basis E = L^{-T} with g = L L^T.
  Eigen::LLT<Matrix> llt(geom.frame.metric);
  const Matrix lower = llt.matrixL();
  const Matrix basis = lower.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));
  Matrix sym = basis.transpose() * s * basis;
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (std::abs(eig.eigenvalues()(i)) > std::abs(eig.eigenvalues()(best))) best = i;
  }
  const double lambda = eig.eigenvalues()(best);
  ShapeOperatorNorm out;
  out.norm = std::abs(lambda);
  out.maximizer = basis * eig.eigenvectors().col(best);
  out.rayleigh = lambda;
  out.flipped = lambda < 0.0;
  out.normal = out.flipped ? Tangent(-eta) : eta;
  return out;
}

ShapeOperatorNorm shape_operator_norm(const Immersion& imm, const ParamPoint& u,
                                      const Tangent& eta) {
  return shape_operator_norm(local_geometry(imm, u), eta);
}

std::pair<ParamPoint, Vector> IntrinsicCurve::state(double s) const {
  if (samples.size() < 2) return {samples.front().u, samples.front().du};
  const double s0 = samples.front().s;
  const double h = samples[1].s - s0;
  const int last = static_cast<int>(samples.size()) - 2;
  const int i = std::clamp(static_cast<int>(std::floor((s - s0) / h)), 0, last);
  const CurveSample& a = samples[i];
  const CurveSample& b = samples[i + 1];
  const double tau = (s - a.s) / h;
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + tau;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  ParamPoint u = h00 * a.u + h10 * h * a.du + h01 * b.u + h11 * h * b.du;
  Vector du = h00 * a.du + h10 * h * a.ddu + h01 * b.du + h11 * h * b.ddu;
  return {u, du};
}

IntrinsicCurve integrate_intrinsic(const Immersion& imm, const ParamPoint& u0, const Vector& w0,
                                   double s_max, int steps) {
  if (steps < 1 || !(s_max > 0.0)) {
    throw GeometryError(ErrorCode::kInvalidArgument, "intrinsic geodesic needs s_max > 0");
  }
  const ParamDomain& domain = imm.domain();
  auto acc = [&](const ParamPoint& u, const Vector& du) -> Vector {
    return -intrinsic_christoffel(imm, u, du, du);
  };
  IntrinsicCurve curve;
  curve.samples.reserve(steps + 1);
  ParamPoint u = u0;
  Vector du = w0;
  check_curve_state(domain, u, du);
  const double h = s_max / steps;
  Vector a = acc(u, du);
  curve.samples.push_back({0.0, u, du, a});
  for (int s = 0; s < steps; ++s) {
    const Vector k1u = du;
    const Vector k1v = a;
    const ParamPoint u2 = u + 0.5 * h * k1u;
    const Vector v2 = du + 0.5 * h * k1v;
    const Vector k2v = acc(u2, v2);
    const ParamPoint u3 = u + 0.5 * h * v2;
    const Vector v3 = du + 0.5 * h * k2v;
    const Vector k3v = acc(u3, v3);
    const ParamPoint u4 = u + h * v3;
    const Vector v4 = du + h * k3v;
    const Vector k4v = acc(u4, v4);
    u += (h / 6.0) * (k1u + 2.0 * v2 + 2.0 * v3 + v4);
    du += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    check_curve_state(domain, u, du);
    a = acc(u, du);
    curve.samples.push_back({(s + 1) * h, u, du, a});
  }
  return curve;
}

IntrinsicCurve intrinsic_geodesic(const Immersion& imm, const ParamPoint& u0, const Vector& w0,
                                  double s_max, int steps_per_unit) {
  const TangentFrame f = frame(imm, u0);
  const double speed = std::sqrt(w0.dot(f.metric * w0));
  if (std::abs(speed - 1.0) > 1e-6) {
    throw GeometryError(ErrorCode::kInvalidArgument, "initial direction is not unit length");
  }
  const int steps = std::max(8, static_cast<int>(std::ceil(s_max * steps_per_unit)));
  IntrinsicCurve curve = integrate_intrinsic(imm, u0, w0, s_max, steps);
  curve.unit_speed = true;
  return curve;
}

Vector intrinsic_parallel_transport(const Immersion& imm, const IntrinsicCurve& curve,
                                    const Vector& v0, std::vector<Vector>* trace) {
  const int n = static_cast<int>(curve.samples.size()) - 1;
  if (n < 2) throw GeometryError(ErrorCode::kResolution, "curve has too few samples");
  const double h = curve.samples[1].s - curve.samples[0].s;
  if (h * curve.samples.front().du.norm() > 0.25) {
    throw GeometryError(ErrorCode::kResolution, "curve samples too coarse for transport");
  }
  auto rhs = [&](double s, const Vector& v) -> Vector {
    const auto [u, du] = curve.state(s);
    return -intrinsic_christoffel(imm, u, du, v);
  };
  Vector v = v0;
  if (trace) {
    trace->clear();
    trace->push_back(v);
  }
  for (int i = 0; i < n; ++i) {
    const double s = curve.samples[i].s;
    const Vector k1 = rhs(s, v);
    const Vector k2 = rhs(s + 0.5 * h, v + 0.5 * h * k1);
    const Vector k3 = rhs(s + 0.5 * h, v + 0.5 * h * k2);
    const Vector k4 = rhs(s + h, v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (trace) trace->push_back(v);
  }
  return v;
}

IntrinsicLog intrinsic_log(const Immersion& imm, const ParamPoint& from, const ParamPoint& to) {
  const ParamDomain& domain = imm.domain();
  const int k = imm.param_dim();
  const Vector base = domain.difference(from, to);
  std::vector<Vector> targets{base};
  for (int i = 0; i < k; ++i) {
    if (domain.axes[i] != AxisKind::kPeriodic) continue;
    const double span = domain.upper(i) - domain.lower(i);
    const std::size_t count = targets.size();
    for (std::size_t t = 0; t < count; ++t) {
      for (double shift : {-span, span}) {
        Vector d = targets[t];
        d(i) += shift;
        targets.push_back(d);
      }
    }
  }
  constexpr int kSteps = 256;
  auto endpoint = [&](const Vector& w) { return integrate_intrinsic(imm, from, w, 1.0, kSteps).samples.back().u; };
  const TangentFrame f0 = frame(imm, from);
  std::optional<IntrinsicLog> best;
  for (const Vector& d : targets) {
    const ParamPoint target = from + d;
    Vector w = d;
    try {
      Vector r = endpoint(w) - target;
      for (int iter = 0; iter < 30 && r.norm() > 1e-12; ++iter) {
        Matrix jac(k, k);
        for (int i = 0; i < k; ++i) {
          const double h = 1e-7 * (1.0 + w.norm());
          Vector wp = w;
          wp(i) += h;
          jac.col(i) = (endpoint(wp) - target - r) / h;
        }
        const Vector step = jac.colPivHouseholderQr().solve(-r);
        double lambda = 1.0;
        bool accepted = false;
        for (int b = 0; b < 10; ++b, lambda *= 0.5) {
          const Vector trial = w + lambda * step;
          const Vector rt = endpoint(trial) - target;
          if (rt.norm() < r.norm()) {
            w = trial;
            r = rt;
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
      }
      if (r.norm() > 1e-9) continue;
    } catch (const GeometryError&) {
      continue;
    }
    const double length = std::sqrt(w.dot(f0.metric * w));
    if (!best || length < best->length) best = IntrinsicLog{w, length};
  }
  if (best) return *best;

  // Conjugate endpoints (antipodes of a round sphere) make the shooting
  // Jacobian singular, and feet on a degenerate parameter line may carry
  // parameters far from `from`. Damped least squares on the model-space
  // endpoint residual, started along several directions, handles both.
  const Point goal = imm.point(to);
  auto residual = [&](const Vector& w) { return Vector(imm.point(endpoint(w)) - goal); };
  const Matrix g0 = f0.metric;
  Eigen::LLT<Matrix> llt(g0);
  const Matrix lower = llt.matrixL();
  const Matrix ortho = lower.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
  const double chord = (imm.point(from) - goal).norm();
  const double length0 = std::max(chord, std::sqrt(base.dot(g0 * base)));
  std::vector<Vector> starts;
  if (k == 1) {
    starts = {length0 * ortho.col(0), -length0 * ortho.col(0)};
  } else {
    for (int j = 0; j < 8; ++j) {
      const double a = 2.0 * M_PI * j / 8.0;
      starts.push_back(length0 * (std::cos(a) * ortho.col(0) + std::sin(a) * ortho.col(1)));
    }
  }
  for (Vector w : starts) {
    try {
      Vector r = residual(w);
      double mu = 1e-3;
      for (int iter = 0; iter < 60 && r.norm() > 1e-12; ++iter) {
        Matrix jac(r.size(), k);
        for (int i = 0; i < k; ++i) {
          const double h = 1e-7 * (1.0 + w.norm());
          Vector wp = w;
          wp(i) += h;
          jac.col(i) = (residual(wp) - r) / h;
        }
        const Matrix normal = jac.transpose() * jac;
        bool accepted = false;
        for (int b = 0; b < 12; ++b, mu *= 10.0) {
          const Matrix a = normal + mu * Matrix(normal.diagonal().asDiagonal()) +
                           1e-14 * Matrix::Identity(k, k);
          const Vector trial = w + a.ldlt().solve(-jac.transpose() * r);
          const Vector rt = residual(trial);
          if (rt.norm() < r.norm()) {
            w = trial;
            r = rt;
            mu = std::max(mu * 0.1, 1e-12);
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
      }
      if (r.norm() > 1e-9) continue;
    } catch (const GeometryError&) {
      continue;
    }
    const double length = std::sqrt(w.dot(g0 * w));
    if (!best || length < best->length) best = IntrinsicLog{w, length};
  }
  if (!best) throw GeometryError(ErrorCode::kConvergence, "intrinsic shooting failed");
  return *best;
}

bool is_totally_geodesic(const Immersion& imm, int per_axis, double tol) {
  const int k = imm.param_dim();
  for (const ParamPoint& u : param_grid(imm.domain(), per_axis)) {
    LocalGeometry geom;
    try {
      geom = local_geometry(imm, u);
    } catch (const GeometryError& e) {
      if (e.code() == ErrorCode::kImmersionDegeneracy) continue;
      throw;
    }
    Eigen::LLT<Matrix> llt(geom.frame.metric);
    const Matrix lower = llt.matrixL();
    const Matrix basis =
        lower.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) {
        const Tangent pi = geom.second_fundamental(basis.col(i), basis.col(j));
        if (norm(imm.ambient(), geom.frame.point, pi) >= tol) return false;
      }
    }
  }
  return true;
}

}  // namespace reachkit
