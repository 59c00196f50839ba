#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "reachkit/ambient.hpp"
#include "reachkit/errors.hpp"
#include "reachkit/scenario.hpp"

using namespace reachkit;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }
Vector v3(double a, double b, double c) { return (Vector(3) << a, b, c).finished(); }

AmbientSpace flat_chart() {
  ChartBox box{v2(-10, -10), v2(10, 10)};
  return AmbientSpace::chart(2, [](const Point&) { return Matrix(Matrix::Identity(2, 2)); }, box,
                             0.0);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const GeometryError& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Geodesic, EuclideanStraightLine) {
  const AmbientSpace e = AmbientSpace::euclidean(2);
  const GeodesicPath path = geodesic(e, v2(0, 0), v2(1, 0), 8);
  EXPECT_NEAR((path.end() - v2(1, 0)).norm(), 0.0, 1e-15);
  for (const auto& s : path.samples) EXPECT_NEAR((s.velocity - v2(1, 0)).norm(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(path.length, 1.0);
}

TEST(Geodesic, QuarterGreatCircle) {
  const AmbientSpace s = AmbientSpace::sphere(2, 1.0);
  const GeodesicPath path = geodesic(s, v3(1, 0, 0), v3(0, M_PI / 2, 0), 8);
  EXPECT_NEAR((path.end() - v3(0, 1, 0)).norm(), 0.0, 1e-12);
}

TEST(Geodesic, FlatChartIsStraight) {
  const GeodesicPath path = geodesic(flat_chart(), v2(0.1, 0.2), v2(1, 1), 16);
  EXPECT_NEAR((path.end() - v2(1.1, 1.2)).norm(), 0.0, 1e-8);
}

TEST(Geodesic, ChartEscapeIsReported) {
  EXPECT_EQ(code_of([] { geodesic(flat_chart(), v2(9, 0), v2(5, 0), 16); }),
            ErrorCode::kDomainEscape);
}

TEST(Geodesic, ChartSpeedIsConserved) {
  const AmbientSpace s = stereographic_sphere_chart();
  const Point p = v2(0.3, -0.2);
  Tangent v = v2(0.7, 0.4);
  const GeodesicPath path = geodesic(s, p, v, 64);
  const double s0 = norm(s, p, v);
  for (const auto& sample : path.samples) {
    EXPECT_LT(std::abs(norm(s, sample.point, sample.velocity) - s0) / s0, 1e-6);
  }
}

TEST(DistanceAndLog, SphereOrthogonalPoints) {
  const AmbientSpace s = AmbientSpace::sphere(2, 1.0);
  EXPECT_NEAR(distance_and_log(s, v3(1, 0, 0), v3(0, 0, 1)).length, M_PI / 2, 1e-12);
}

TEST(DistanceAndLog, HyperboloidUnitLength) {
  const AmbientSpace h = AmbientSpace::hyperbolic(2, -1.0);
  const LogResult log = distance_and_log(h, v3(1, 0, 0), v3(std::cosh(1.0), std::sinh(1.0), 0));
  EXPECT_NEAR(log.length, 1.0, 1e-12);
}

TEST(DistanceAndLog, AntipodalPairIsRejected) {
  const AmbientSpace s = AmbientSpace::sphere(2, 1.0);
  EXPECT_EQ(code_of([&] { distance_and_log(s, v3(1, 0, 0), v3(-1, 0, 0)); }),
            ErrorCode::kNonuniqueGeodesic);
  // Distance itself is still defined.
  EXPECT_NEAR(distance(s, v3(1, 0, 0), v3(-1, 0, 0)), M_PI, 1e-12);
}

TEST(DistanceAndLog, RoundTripOnEverySpace) {
  struct Case {
    AmbientSpace space;
    Point p, q;
    double tol;
  };
  const double ch = std::cosh(0.4), sh = std::sinh(0.4);
  std::vector<Case> cases{
      {AmbientSpace::euclidean(3), v3(0.1, 0.2, 0.3), v3(-1, 2, 0.5), 1e-9},
      {AmbientSpace::sphere(2, 2.0), v3(2, 0, 0), v3(0, 2 * std::sin(1.0), 2 * std::cos(1.0)),
       1e-9},
      {AmbientSpace::hyperbolic(2, -1.0), v3(1, 0, 0), v3(ch, sh * 0.6, sh * 0.8), 1e-9},
      {stereographic_sphere_chart(), v2(0.2, 0.1), v2(-0.4, 0.5), 1e-6},
  };
  for (const Case& c : cases) {
    const LogResult log = distance_and_log(c.space, c.p, c.q);
    EXPECT_NEAR((exp_map(c.space, c.p, log.velocity) - c.q).norm(), 0.0, c.tol);
    EXPECT_NEAR(norm(c.space, c.p, log.velocity), log.length, 1e-9);
  }
}

TEST(DistanceAndLog, FlatChartMatchesEuclidean) {
  const AmbientSpace chart = flat_chart();
  const AmbientSpace e = AmbientSpace::euclidean(2);
  const Point p = v2(0.5, -1.0), q = v2(-2.0, 1.5);
  EXPECT_NEAR(distance_and_log(chart, p, q).length, distance_and_log(e, p, q).length, 1e-6);
  const GeodesicPath a = geodesic(chart, p, v2(1, 2), 16);
  const GeodesicPath b = geodesic(e, p, v2(1, 2), 16);
  EXPECT_NEAR((a.end() - b.end()).norm(), 0.0, 1e-6);
  EXPECT_NEAR((parallel_transport(chart, a, v2(0.3, 0.7)) - v2(0.3, 0.7)).norm(), 0.0, 1e-6);
}

TEST(ParallelTransport, EuclideanIsIdentity) {
  const AmbientSpace e = AmbientSpace::euclidean(3);
  const GeodesicPath path = geodesic(e, v3(0, 0, 0), v3(1, 2, 3), 8);
  EXPECT_EQ(parallel_transport(e, path, v3(0.5, -1, 2)), v3(0.5, -1, 2));
}

TEST(ParallelTransport, IsometryOnCurvedSpaces) {
  const AmbientSpace s = AmbientSpace::sphere(2, 1.0);
  const Point p = v3(1, 0, 0);
  const Tangent v = v3(0, 1.2, 0.3);
  const Tangent u = v3(0, -0.4, 0.9);
  const GeodesicPath path = geodesic(s, p, v, 32);
  const Tangent U = parallel_transport(s, path, u);
  EXPECT_NEAR(norm(s, path.end(), U), norm(s, p, u), 1e-10);
  EXPECT_NEAR(inner(s, path.end(), U, path.samples.back().velocity), inner(s, p, u, v), 1e-9);

  const AmbientSpace chart = stereographic_sphere_chart();
  const GeodesicPath cp = geodesic(chart, v2(0.1, 0.3), v2(0.5, -0.2), 64);
  const Tangent cu = v2(0.2, 0.9);
  const Tangent cU = parallel_transport(chart, cp, cu);
  EXPECT_NEAR(norm(chart, cp.end(), cU), norm(chart, cp.start(), cu), 1e-9);
  EXPECT_NEAR(inner(chart, cp.end(), cU, cp.samples.back().velocity),
              inner(chart, cp.start(), cu, cp.initial_velocity()), 1e-9);
}

TEST(ParallelTransport, LatitudeHolonomy) {
  const AmbientSpace s = AmbientSpace::sphere(2, 1.0);
  const double theta = M_PI / 3;
  const double st = std::sin(theta), ct = std::cos(theta);
  CurveFunction loop = [st, ct](double t) {
    return std::make_pair(v3(st * std::cos(t), st * std::sin(t), ct),
                          v3(-st * std::sin(t), st * std::cos(t), 0));
  };
  const Tangent e_theta = v3(ct, 0, -st);
  const Tangent e_phi = v3(0, 1, 0);
  const Tangent out = transport_along_curve(s, loop, 0.0, 2 * M_PI, 4000, e_theta);
  const double angle = std::atan2(out.dot(e_phi), out.dot(e_theta));
  const double expected = 2 * M_PI * (1 - ct);  // = pi
  EXPECT_NEAR(std::abs(std::remainder(std::abs(angle) - expected, 2 * M_PI)), 0.0, 1e-5);
}

TEST(SectionalCurvature, SpaceForms) {
  EXPECT_DOUBLE_EQ(
      sectional_curvature(AmbientSpace::sphere(2, 2.0), v3(2, 0, 0), v3(0, 1, 0), v3(0, 0, 1)),
      0.25);
  EXPECT_DOUBLE_EQ(sectional_curvature(AmbientSpace::euclidean(3), v3(0, 0, 0), v3(1, 0, 0),
                                       v3(0, 1, 1)),
                   0.0);
  EXPECT_DOUBLE_EQ(sectional_curvature(AmbientSpace::hyperbolic(2, -0.5), v3(std::sqrt(2.0), 0, 0),
                                       v3(0, 1, 0), v3(0, 0, 1)),
                   -0.5);
}

TEST(SectionalCurvature, StereographicChartIsOne) {
  const double k =
      sectional_curvature(stereographic_sphere_chart(), v2(0.3, -0.1), v2(1, 0), v2(0, 1));
  EXPECT_NEAR(k, 1.0, 1e-5);
}

TEST(SectionalCurvature, DegeneratePlane) {
  EXPECT_EQ(code_of([] {
              sectional_curvature(AmbientSpace::euclidean(2), v2(0, 0), v2(1, 0), v2(2, 1e-9));
            }),
            ErrorCode::kDegeneratePlane);
}

TEST(Model, ConstraintsHold) {
  const AmbientSpace s = AmbientSpace::sphere(2, 1.5);
  const GeodesicPath path = geodesic(s, v3(1.5, 0, 0), v3(0, 1, 2), 16);
  for (const auto& sample : path.samples) EXPECT_TRUE(on_model(s, sample.point, 1e-9));
  const AmbientSpace h = AmbientSpace::hyperbolic(2, -1.0);
  const GeodesicPath hp = geodesic(h, v3(1, 0, 0), v3(0, 1.5, -0.5), 16);
  for (const auto& sample : hp.samples) {
    EXPECT_TRUE(on_model(h, sample.point, 1e-9));
    EXPECT_NEAR(inner(h, sample.point, sample.point, sample.velocity), 0.0, 1e-9);
  }
}

TEST(Model, ChartMetricIsPositiveDefinite) {
  const AmbientSpace c = conformal_bump_chart(0.3);
  for (double x : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
    const Matrix g = c.metric(v2(x, 0.5 * x));
    EXPECT_NEAR((g - g.transpose()).norm(), 0.0, 1e-15);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  }
}
