#include <cmath>

#include <gtest/gtest.h>

#include "reachkit/errors.hpp"
#include "reachkit/immersion.hpp"
#include "reachkit/scenario.hpp"

using namespace reachkit;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }
Vector v3(double a, double b, double c) { return (Vector(3) << a, b, c).finished(); }

Vector g_unit(const Immersion& imm, const ParamPoint& u, Vector w) {
  const Matrix g = frame(imm, u).metric;
  return w / std::sqrt(w.dot(g * w));
}

}  // namespace

TEST(Frame, CircleMetric) {
  const Scenario s = make_scenario("circle");
  const TangentFrame f = frame(s.immersion, v1(0.7));
  ASSERT_EQ(f.metric.rows(), 1);
  EXPECT_NEAR(f.metric(0, 0), 4.0, 1e-12);
}

TEST(Frame, TorusMetric) {
  const Scenario s = make_scenario("torus");
  const double theta = 0.9;
  const TangentFrame f = frame(s.immersion, v2(theta, 2.1));
  const double w = 2.0 + 0.5 * std::cos(theta);
  EXPECT_NEAR(f.metric(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(f.metric(1, 1), w * w, 1e-12);
  EXPECT_NEAR(f.metric(0, 1), 0.0, 1e-12);
}

TEST(Frame, EquatorNormalIsMeridian) {
  const Scenario s = make_scenario("great-circle-on-sphere");
  const TangentFrame f = frame(s.immersion, v1(0.0));
  ASSERT_EQ(f.normals.cols(), 1);
  EXPECT_NEAR(std::abs(f.normals(2, 0)), 1.0, 1e-9);
  EXPECT_NEAR(f.normals.col(0).norm(), 1.0, 1e-9);
  EXPECT_NEAR(f.normals.col(0).dot(f.tangents.col(0)), 0.0, 1e-9);
  EXPECT_NEAR(f.normals.col(0).dot(f.point), 0.0, 1e-9);
}

TEST(Frame, PoleIsDegenerate) {
  const Scenario s = make_scenario("round-sphere");
  try {
    frame(s.immersion, v2(0.0, 0.0));
    FAIL() << "expected a degeneracy error";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kImmersionDegeneracy);
  }
}

TEST(IntrinsicGeodesic, EquatorHasUnitSpeed) {
  const Scenario s = make_scenario("great-circle-on-sphere");
  const IntrinsicCurve c = intrinsic_geodesic(s.immersion, v1(0.0), v1(1.0), 1.5);
  for (const CurveSample& x : c.samples) {
    const TangentFrame f = frame(s.immersion, x.u);
    EXPECT_NEAR((f.tangents * x.du).norm(), 1.0, 1e-6);
    EXPECT_NEAR(x.u(0), x.s, 1e-9);
  }
}

TEST(IntrinsicGeodesic, TorusOuterEquatorStaysPut) {
  const Scenario s = make_scenario("torus");
  const ParamPoint u0 = v2(0.0, 0.3);
  const IntrinsicCurve c = intrinsic_geodesic(s.immersion, u0, g_unit(s.immersion, u0, v2(0, 1)), 3.0);
  for (const CurveSample& x : c.samples) {
    EXPECT_NEAR(x.u(0), 0.0, 1e-9);
    const LocalGeometry g = local_geometry(s.immersion, x.u);
    EXPECT_LT(g.tangential_coordinates(g.geodesic_acceleration(x.du)).norm(), 1e-6);
  }
}

TEST(IntrinsicGeodesic, GreatCircleOnEmbeddedSphere) {
  const Scenario s = make_scenario("round-sphere");
  const ParamPoint u0 = v2(M_PI / 2, 0.0);
  const Vector w = g_unit(s.immersion, u0, v2(1, 1));
  const TangentFrame f = frame(s.immersion, u0);
  const Point p = f.point;
  const Tangent v = f.tangents * w;
  const IntrinsicCurve c = intrinsic_geodesic(s.immersion, u0, w, 1.2);
  for (const CurveSample& x : c.samples) {
    const Point expected = std::cos(x.s) * p + std::sin(x.s) * v;
    EXPECT_NEAR((s.immersion.point(x.u) - expected).norm(), 0.0, 1e-6);
  }
}

TEST(IntrinsicGeodesic, LeavingClosedAxisIsReported) {
  const Scenario s = make_scenario("round-sphere");
  const ParamPoint u0 = v2(0.2, 0.0);
  try {
    // Straight at the pole and past it.
    intrinsic_geodesic(s.immersion, u0, v2(-1, 0), 1.0);
    FAIL() << "expected a domain escape";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomainEscape);
  }
}

TEST(SecondFundamental, RoundSphereIsUmbilic) {
  const Scenario s = make_scenario("round-sphere", {{"radius", 2.0}});
  const ParamPoint u = v2(1.1, 0.4);
  const Vector w = g_unit(s.immersion, u, v2(0.3, 1));
  const Tangent pi = second_fundamental(s.immersion, u, w, w);
  EXPECT_NEAR(pi.norm(), 0.5, 1e-9);
  // Points inward.
  EXPECT_LT(pi.dot(s.immersion.point(u)), 0.0);
}

TEST(SecondFundamental, CircleCurvature) {
  const Scenario s = make_scenario("circle", {{"radius", 3.0}});
  const Vector w = g_unit(s.immersion, v1(1.0), v1(1.0));
  EXPECT_NEAR(second_fundamental(s.immersion, v1(1.0), w, w).norm(), 1.0 / 3.0, 1e-12);
}

TEST(SecondFundamental, SmallCircleGeodesicCurvature) {
  const Scenario s = make_scenario("small-circle-on-sphere");
  const Vector w = g_unit(s.immersion, v1(0.4), v1(1.0));
  const Tangent pi = second_fundamental(s.immersion, v1(0.4), w, w);
  EXPECT_NEAR(pi.norm(), 1.0 / std::tan(M_PI / 3), 1e-5);
}

TEST(ShapeOperator, SphereCircleAndTorus) {
  const Scenario sphere = make_scenario("round-sphere", {{"radius", 2.0}});
  const ParamPoint u = v2(0.8, 1.0);
  const Tangent inward = -sphere.immersion.point(u) / 2.0;
  const ShapeOperatorNorm a = shape_operator_norm(sphere.immersion, u, inward);
  EXPECT_NEAR(a.norm, 0.5, 1e-9);
  EXPECT_FALSE(a.flipped);

  const Scenario circle = make_scenario("circle");
  const TangentFrame cf = frame(circle.immersion, v1(0.0));
  EXPECT_NEAR(shape_operator_norm(circle.immersion, v1(0.0), cf.normals.col(0)).norm, 0.5, 1e-12);

  // Inner equator, outward tube normal: principal curvatures 1/r and 1/(R - r).
  const Scenario torus = make_scenario("torus");
  const ParamPoint ui = v2(M_PI, 0.0);
  const Tangent outward = v3(-1, 0, 0);
  const ShapeOperatorNorm t = shape_operator_norm(torus.immersion, ui, outward);
  EXPECT_NEAR(t.norm, 2.0, 1e-5);
  // The flipped sign is reported for -eta.
  const ShapeOperatorNorm tf = shape_operator_norm(torus.immersion, ui, -outward);
  EXPECT_NEAR(tf.norm, 2.0, 1e-5);
  EXPECT_NEAR(std::abs(tf.rayleigh), 2.0, 1e-5);
  EXPECT_NE(t.flipped, tf.flipped);
}

TEST(ShapeOperator, MaximizerAttainsNorm) {
  const Scenario torus = make_scenario("torus");
  const ParamPoint u = v2(2.0, 0.5);
  const LocalGeometry g = local_geometry(torus.immersion, u);
  const Tangent eta = g.frame.normals.col(0);
  const ShapeOperatorNorm a = shape_operator_norm(g, eta);
  const double rq = std::abs(inner(torus.immersion.ambient(), g.frame.point,
                                   g.second_fundamental(a.maximizer, a.maximizer), eta));
  EXPECT_NEAR(rq, a.norm, 1e-9);
  EXPECT_NEAR(g.induced_norm(a.maximizer), 1.0, 1e-12);
}

TEST(IntrinsicTransport, CurveFollowsVelocity) {
  const Scenario s = make_scenario("ellipse");
  const Vector w = g_unit(s.immersion, v1(0.3), v1(1.0));
  const IntrinsicCurve c = intrinsic_geodesic(s.immersion, v1(0.3), w, 1.0);
  const Vector out = intrinsic_parallel_transport(s.immersion, c, w);
  EXPECT_NEAR((out - c.samples.back().du).norm(), 0.0, 1e-9);
}

TEST(IntrinsicTransport, MatchesSphereTransport) {
  const Scenario s = make_scenario("round-sphere");
  const ParamPoint u0 = v2(1.0, 0.2);
  const Vector w = g_unit(s.immersion, u0, v2(0.4, 1.0));
  const Vector v0 = g_unit(s.immersion, u0, v2(1.0, -0.3));
  const IntrinsicCurve c = intrinsic_geodesic(s.immersion, u0, w, 1.0);
  std::vector<Vector> trace;
  const Vector out = intrinsic_parallel_transport(s.immersion, c, v0, &trace);

  const TangentFrame f0 = frame(s.immersion, u0);
  const AmbientSpace sphere = AmbientSpace::sphere(2, 1.0);
  const GeodesicPath path = geodesic(sphere, f0.point, f0.tangents * w, 64);
  const Tangent expected = parallel_transport(sphere, path, f0.tangents * v0);
  const TangentFrame f1 = frame(s.immersion, c.samples.back().u);
  EXPECT_NEAR((f1.tangents * out - expected).norm(), 0.0, 1e-6);

  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Matrix g = frame(s.immersion, c.samples[i].u).metric;
    EXPECT_NEAR(std::sqrt(trace[i].dot(g * trace[i])), 1.0, 1e-9);
  }
}

TEST(Gauss, SphereIntrinsicCurvature) {
  const Scenario s = make_scenario("round-sphere", {{"radius", 2.0}});
  const Immersion imm = s.immersion;
  ChartBox box{v2(0.2, -10.0), v2(M_PI - 0.2, 10.0)};
  const AmbientSpace induced =
      AmbientSpace::chart(2, [imm](const Point& u) { return frame(imm, u).metric; }, box);
  EXPECT_NEAR(sectional_curvature(induced, v2(1.0, 0.5), v2(1, 0), v2(0, 1)), 0.25, 1e-4);
}

TEST(TotallyGeodesic, Detection) {
  EXPECT_TRUE(is_totally_geodesic(make_scenario("great-circle-on-sphere").immersion));
  EXPECT_FALSE(is_totally_geodesic(make_scenario("small-circle-on-sphere").immersion));
}
