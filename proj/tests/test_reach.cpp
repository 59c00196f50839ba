#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "reachkit/errors.hpp"
#include "reachkit/reach.hpp"
#include "reachkit/scenario.hpp"

using namespace reachkit;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }
Vector v3(double a, double b, double c) { return (Vector(3) << a, b, c).finished(); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(FootPoints, RadialProjection) {
  const Scenario s = make_scenario("circle");
  const FootPointSet set = foot_points(s.immersion, v2(3, 0), 8, 1e-9, 1e-2);
  ASSERT_EQ(set.multiplicity(), 1);
  EXPECT_NEAR(set.distance(), 1.0, 1e-9);
  EXPECT_NEAR(std::remainder(set.minimizers[0].param(0), 2 * M_PI), 0.0, 1e-6);
}

TEST(FootPoints, CircleCenterIsDegenerate) {
  const Scenario s = make_scenario("circle");
  for (double cluster : {1e-2, 5e-3}) {
    const FootPointSet set = foot_points(s.immersion, v2(0, 0), 8, 1e-9, cluster);
    EXPECT_GE(set.multiplicity(), 2);
    EXPECT_NEAR(set.distance(), 2.0, 1e-9);
  }
}

TEST(FootPoints, TorusOriginHitsInnerEquator) {
  const Scenario s = make_scenario("torus");
  const FootPointSet set = foot_points(s.immersion, v3(0, 0, 0), 32, 1e-9, 1e-2);
  EXPECT_GE(set.multiplicity(), 2);
  EXPECT_NEAR(set.distance(), 1.5, 1e-9);
  for (const FootPoint& f : set.minimizers) {
    EXPECT_NEAR(std::abs(std::remainder(f.param(0), 2 * M_PI)), M_PI, 1e-5);
    EXPECT_NEAR(f.distance, 1.5, 1e-9);
  }
}

TEST(FootPoints, FeetStayInsideClosedAxes) {
  const Scenario s = make_scenario("round-sphere");
  // Near the centre the objective is almost flat and descent overshoots the poles.
  const FootPointSet set = foot_points(s.immersion, v3(0.05, 0.02, 0.3), 32, 1e-9, 1e-2);
  for (const FootPoint& f : set.minimizers) {
    EXPECT_TRUE(s.immersion.domain().contains(f.param));
  }
  EXPECT_NEAR(set.distance(), 1.0 - v3(0.05, 0.02, 0.3).norm(), 1e-9);
}

TEST(FootPoints, AllStartsFailing) {
  // An open segment whose nearest point to q lies past its end: no foot inside the domain.
  const ParamDomain domain{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0), {AxisKind::kOpen}};
  const Immersion segment("segment", AmbientSpace::euclidean(2), domain,
                          [](const ParamPoint& u) { return v2(u(0), 0.0); });
  try {
    foot_points(segment, v2(5, 1), 4, 1e-9, 1e-2);
    FAIL() << "expected a projection failure";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProjectionFailure);
  }
}

TEST(FootPoints, EvaluationErrorsPropagate) {
  const ParamDomain domain{Vector::Constant(1, 0.0), Vector::Constant(1, 2 * M_PI),
                           {AxisKind::kPeriodic}};
  const Immersion broken("broken", AmbientSpace::euclidean(2), domain, [](const ParamPoint&) {
    return v2(std::numeric_limits<double>::quiet_NaN(), 0.0);
  });
  try {
    foot_points(broken, v2(1, 0), 4, 1e-9, 1e-2);
    FAIL() << "expected an evaluation error";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEvaluation);
  }
}

TEST(DistinctFeet, NeedsParamAndAmbientSeparation) {
  const Scenario s = make_scenario("circle");
  const FootPoint a{Vector::Constant(1, 0.0), v2(2, 0), 1.0};
  const FootPoint b{Vector::Constant(1, 1.0), v2(2 * std::cos(1.0), 2 * std::sin(1.0)), 1.0};
  const FootPoint c{Vector::Constant(1, 2 * M_PI - 1e-6), v2(2, -2e-6), 1.0};
  EXPECT_TRUE(distinct_feet(s.immersion, a, b, 1e-9, 1e-2));
  EXPECT_FALSE(distinct_feet(s.immersion, a, c, 1e-9, 1e-2));
}

TEST(NormalCollision, CircleTorusSmallCircle) {
  const Scenario circle = make_scenario("circle");
  const ReachEstimate ec = reach_normal_collision(circle.immersion, circle.reach);
  EXPECT_EQ(ec.status, ReachStatus::kOk);
  EXPECT_LT(rel(ec.tau_hat, 2.0), 0.01);

  const Scenario torus = make_scenario("torus");
  ReachOptions coarse = torus.reach;
  coarse.surface_samples = 8;
  const ReachEstimate et = reach_normal_collision(torus.immersion, coarse);
  EXPECT_LT(rel(et.tau_hat, 0.5), 0.02);

  const Scenario small = make_scenario("small-circle-on-sphere");
  const ReachEstimate es = reach_normal_collision(small.immersion, small.reach);
  EXPECT_LT(rel(es.tau_hat, M_PI / 3), 0.02);
}

TEST(NormalCollision, WitnessDistanceMatchesFeet) {
  const Scenario s = make_scenario("ellipse");
  const ReachEstimate e = reach_normal_collision(s.immersion, s.reach);
  const ReachOptions o = resolved(s.reach, s.immersion);
  const FootPointSet set = foot_points(s.immersion, e.witness, o.starts, o.dist_tol, o.cluster_tol);
  EXPECT_NEAR(set.distance(), e.tau_hat, 1e-6);
}

TEST(NormalCollision, ShortHorizonIsUnbounded) {
  const Scenario s = make_scenario("circle");
  ReachOptions o = s.reach;
  o.horizon = 0.5;
  const ReachEstimate e = reach_normal_collision(s.immersion, o);
  EXPECT_EQ(e.status, ReachStatus::kUnbounded);
}

TEST(NormalCollision, ThreadCountDoesNotChangeResult) {
  const Scenario s = make_scenario("ellipse");
  ReachOptions one = s.reach, two = s.reach;
  one.threads = 1;
  two.threads = 3;
  EXPECT_EQ(reach_normal_collision(s.immersion, one).tau_hat,
            reach_normal_collision(s.immersion, two).tau_hat);
}

TEST(MedialInfimum, CircleAndEllipse) {
  const Scenario circle = make_scenario("circle");
  const ReachEstimate ec = reach_medial_infimum(circle.immersion, circle.reach);
  EXPECT_EQ(ec.status, ReachStatus::kOk);
  EXPECT_LT(rel(ec.tau_hat, 2.0), 0.02);

  const Scenario ellipse = make_scenario("ellipse");
  const ReachEstimate ee = reach_medial_infimum(ellipse.immersion, ellipse.reach);
  EXPECT_LT(rel(ee.tau_hat, 0.5), 0.02);
  const ReachEstimate en = reach_normal_collision(ellipse.immersion, ellipse.reach);
  EXPECT_LT(std::abs(ee.tau_hat - en.tau_hat) / (0.5 * (ee.tau_hat + en.tau_hat)), 0.02);
}

TEST(Assigners, CircleCenterIsBottleneck) {
  const Scenario s = make_scenario("circle");
  const ReachEstimate e = reach_medial_infimum(s.immersion, s.reach);
  const auto list = reach_assigning_points(s.immersion, e, 1e-6, s.reach);
  ASSERT_FALSE(list.empty());
  EXPECT_EQ(list.front().classification, AssignerKind::kBottleneck);
  EXPECT_LT(list.front().q.norm(), 1e-6);
}

TEST(Assigners, EllipseVertexIsUniqueFootPoint) {
  const Scenario s = make_scenario("ellipse");
  const ReachEstimate e = reach_medial_infimum(s.immersion, s.reach);
  const auto list = reach_assigning_points(s.immersion, e, 1e-6, s.reach);
  ASSERT_FALSE(list.empty());
  const ReachAssigner& a = list.front();
  EXPECT_EQ(a.classification, AssignerKind::kUniqueFootPoint);
  // Medial endpoint (a - b^2 / a, 0), up to the side.
  EXPECT_NEAR(std::abs(a.q(0)), 1.5, 1e-3);
  EXPECT_NEAR(a.q(1), 0.0, 1e-3);
  // The witness sits a little off the endpoint, so the foot is near, not at, the vertex.
  EXPECT_NEAR(std::abs(a.foot_points.minimizers[0].point(0)), 2.0, 1e-4);
}

TEST(Assigners, TorusCoreCircleIsBottleneck) {
  const Scenario s = make_scenario("torus");
  ReachOptions coarse = s.reach;
  coarse.surface_samples = 8;
  const ReachEstimate e = reach_normal_collision(s.immersion, coarse);
  const auto list = reach_assigning_points(s.immersion, e, 1e-6, coarse);
  ASSERT_FALSE(list.empty());
  for (const ReachAssigner& a : list) {
    EXPECT_EQ(a.classification, AssignerKind::kBottleneck);
    // On the core circle: |(x, y)| = R, z = 0.
    EXPECT_NEAR(std::hypot(a.q(0), a.q(1)), 2.0, 1e-4);
    EXPECT_NEAR(a.q(2), 0.0, 1e-4);
  }
}
