#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "reachkit/ambient.hpp"
#include "reachkit/immersion.hpp"
#include "reachkit/reach.hpp"
#include "reachkit/scenario.hpp"

using namespace reachkit;

namespace {

constexpr unsigned kSeed = 20240611;
constexpr int kProbes = 48;

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

class Probes : public ::testing::Test {
 protected:
  std::mt19937 rng{kSeed};
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  Vector gaussian(int n) {
    std::normal_distribution<double> d;
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
  }

  // Random point on the model of a space form and a random tangent there.
  Point random_point(const AmbientSpace& s) {
    const int n = s.dim();
    if (s.kind() == AmbientKind::kEuclidean) return gaussian(n);
    if (s.kind() == AmbientKind::kSphere) {
      const Vector x = gaussian(n + 1);
      return s.radius() * x / x.norm();
    }
    // Hyperboloid: time coordinate first.
    const Vector spatial = 0.7 * gaussian(n);
    Point x(n + 1);
    x(0) = std::sqrt(s.radius() * s.radius() + spatial.squaredNorm());
    x.tail(n) = spatial;
    return x;
  }
  Tangent random_tangent(const AmbientSpace& s, const Point& p) {
    const int n = s.kind() == AmbientKind::kEuclidean || s.kind() == AmbientKind::kChart ? s.dim()
                                                                                         : s.dim() + 1;
    return project_tangent(s, p, gaussian(n));
  }

  std::vector<AmbientSpace> space_forms() {
    return {AmbientSpace::euclidean(3), AmbientSpace::sphere(2, 1.0), AmbientSpace::sphere(3, 2.0),
            AmbientSpace::hyperbolic(2, -1.0), AmbientSpace::hyperbolic(3, -0.25)};
  }

  ParamPoint random_param(const Immersion& imm, double margin) {
    const ParamDomain& d = imm.domain();
    ParamPoint u(imm.param_dim());
    for (int i = 0; i < u.size(); ++i) u(i) = uniform(d.lower(i) + margin, d.upper(i) - margin);
    return u;
  }
};

}  // namespace

TEST_F(Probes, TransportIsAnIsometry) {
  int probes = 0;
  for (const AmbientSpace& s : space_forms()) {
    for (int i = 0; i < kProbes / 4; ++i, ++probes) {
      const Point p = random_point(s);
      const Tangent v = random_tangent(s, p);
      const Tangent a = random_tangent(s, p), b = random_tangent(s, p);
      const GeodesicPath path = geodesic(s, p, v, 16);
      const Point& x = path.end();
      const Tangent pa = parallel_transport(s, path, a), pb = parallel_transport(s, path, b);
      EXPECT_NEAR(inner(s, x, pa, pa), inner(s, p, a, a), 1e-9 * (1 + inner(s, p, a, a)));
      EXPECT_NEAR(inner(s, x, pa, pb), inner(s, p, a, b), 1e-9 * (1 + norm(s, p, a) * norm(s, p, b)));
    }
  }
  const AmbientSpace chart = stereographic_sphere_chart();
  for (int i = 0; i < kProbes / 4; ++i, ++probes) {
    const Point p = v2(uniform(-1, 1), uniform(-1, 1));
    const Tangent v = 0.5 * gaussian(2);
    const Tangent a = gaussian(2);
    const GeodesicPath path = geodesic(chart, p, v, 256);
    const Tangent pa = parallel_transport(chart, path, a);
    EXPECT_NEAR(norm(chart, path.end(), pa), norm(chart, p, a), 1e-9 * (1 + norm(chart, p, a)));
  }
  EXPECT_GE(probes, kProbes);
}

TEST_F(Probes, SecondFundamentalFormIsSymmetric) {
  int probes = 0;
  for (const char* name : {"round-sphere", "torus"}) {
    const Scenario s = make_scenario(name);
    for (int i = 0; i < kProbes / 2; ++i, ++probes) {
      const ParamPoint u = random_param(s.immersion, 0.2);
      const Vector a = gaussian(2), b = gaussian(2);
      const LocalGeometry g = local_geometry(s.immersion, u);
      const Tangent ab = g.second_fundamental(a, b), ba = g.second_fundamental(b, a);
      EXPECT_LT((ab - ba).norm(), 1e-8 * (1 + ab.norm()));
    }
  }
  const Scenario chart = make_scenario("circle-in-conformal-chart");
  for (int i = 0; i < 8; ++i, ++probes) {
    const ParamPoint u = random_param(chart.immersion, 0.0);
    const LocalGeometry g = local_geometry(chart.immersion, u);
    const Vector a = gaussian(1), b = gaussian(1);
    EXPECT_LT((g.second_fundamental(a, b) - g.second_fundamental(b, a)).norm(), 1e-8);
  }
  EXPECT_GE(probes, kProbes);
}

TEST_F(Probes, ShapeOperatorIsSelfAdjoint) {
  int probes = 0;
  for (const char* name : {"round-sphere", "torus"}) {
    const Scenario s = make_scenario(name);
    for (int i = 0; i < kProbes / 2; ++i, ++probes) {
      const ParamPoint u = random_param(s.immersion, 0.2);
      const LocalGeometry g = local_geometry(s.immersion, u);
      const Tangent eta = g.frame.normals * gaussian(static_cast<int>(g.frame.normals.cols()));
      const Matrix a = g.shape_operator(eta / eta.norm());
      const Matrix& metric = g.frame.metric;
      const Vector x = gaussian(2), y = gaussian(2);
      const double lhs = (a * x).dot(metric * y), rhs = x.dot(metric * (a * y));
      EXPECT_NEAR(lhs, rhs, 1e-8 * (1 + std::abs(lhs)));
      // Polarization against the second fundamental form.
      const double pi = g.second_fundamental(x, y).dot(eta / eta.norm());
      EXPECT_NEAR(lhs, pi, 1e-8 * (1 + std::abs(pi)));
    }
  }
  EXPECT_GE(probes, kProbes);
}

TEST_F(Probes, ExpLogRoundTrip) {
  int probes = 0;
  for (const AmbientSpace& s : space_forms()) {
    for (int i = 0; i < kProbes / 4; ++i, ++probes) {
      const Point p = random_point(s);
      Tangent v = random_tangent(s, p);
      if (s.kind() == AmbientKind::kSphere) {
        // Stay inside the injectivity radius.
        const double len = norm(s, p, v);
        v *= uniform(0.05, 0.9) * M_PI * s.radius() / len;
      }
      const Point q = exp_map(s, p, v);
      const LogResult log = distance_and_log(s, p, q);
      EXPECT_LT((log.velocity - v).norm(), 1e-8 * (1 + v.norm()));
      EXPECT_LT((exp_map(s, p, log.velocity) - q).norm(), 1e-8 * (1 + q.norm()));
    }
  }
  EXPECT_GE(probes, kProbes);
}

TEST_F(Probes, GeodesicSpeedIsConserved) {
  int probes = 0;
  for (const AmbientSpace& s : space_forms()) {
    for (int i = 0; i < 6; ++i, ++probes) {
      const Point p = random_point(s);
      const Tangent v = random_tangent(s, p);
      const GeodesicPath path = geodesic(s, p, v, 16);
      const double s0 = norm(s, p, v);
      for (const auto& x : path.samples) {
        EXPECT_LT(std::abs(norm(s, x.point, x.velocity) - s0), 1e-6 * s0);
      }
    }
  }
  for (const AmbientSpace& chart : {stereographic_sphere_chart(), conformal_bump_chart(0.3)}) {
    for (int i = 0; i < kProbes / 2; ++i, ++probes) {
      const Point p = v2(uniform(-1.5, 1.5), uniform(-1.5, 1.5));
      const Tangent v = gaussian(2);
      const GeodesicPath path = geodesic(chart, p, v, 256);
      const double s0 = norm(chart, p, v);
      for (const auto& x : path.samples) {
        EXPECT_LT(std::abs(norm(chart, x.point, x.velocity) - s0), 1e-6 * s0);
      }
    }
  }
  EXPECT_GE(probes, kProbes);
}

TEST(RefinementLadder, NormalCollisionIsNonincreasing) {
  for (const char* name : {"circle", "ellipse", "small-circle-on-sphere", "torus"}) {
    const Scenario s = make_scenario(name);
    double previous = std::numeric_limits<double>::infinity();
    for (int samples : {8, 16, 32}) {
      ReachOptions o = s.reach;
      o.surface_samples = samples;
      const double tau = reach_normal_collision(s.immersion, o).tau_hat;
      EXPECT_LE(tau, previous) << name << " at " << samples;
      previous = tau;
    }
  }
}

TEST(RefinementLadder, MedialInfimumIsNonincreasing) {
  for (const char* name : {"circle", "ellipse", "small-circle-on-sphere"}) {
    const Scenario s = make_scenario(name);
    double previous = std::numeric_limits<double>::infinity();
    for (int samples : {8, 16, 32}) {
      ReachOptions o = s.reach;
      o.ambient_samples = samples;
      const double tau = reach_medial_infimum(s.immersion, o).tau_hat;
      EXPECT_LE(tau, previous) << name << " at " << samples;
      previous = tau;
    }
  }
}
