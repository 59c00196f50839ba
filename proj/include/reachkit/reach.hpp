#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reachkit/immersion.hpp"
#include "reachkit/types.hpp"

namespace reachkit {

struct FootPoint {
  ParamPoint param;
  Point point;
  double distance;
  // Smallest eigenvalue of the Hessian of the objective relative to the
  // induced metric; small near focal points, where feet are located poorly.
  double stiffness{1.0};
};

struct FootPointSet {
  Point query;
  std::vector<FootPoint> minimizers;  // ascending distance, pairwise distinct
  double dist_tol{0.0};
  double cluster_tol{0.0};

  int multiplicity() const { return static_cast<int>(minimizers.size()); }
  double distance() const { return minimizers.front().distance; }
};

// Two minimizers count as distinct only if they are apart both in parameter
// space and in the ambient model.
bool distinct_feet(const Immersion& imm, const FootPoint& a, const FootPoint& b, double dist_tol,
                   double cluster_tol);

// Multi-start Levenberg-Marquardt on u -> psi(F(u)), psi a monotone function of
// d(q, .). Starts are the first `starts` Halton points of the domain.
FootPointSet foot_points(const Immersion& imm, const Point& q, int starts, double dist_tol,
                         double cluster_tol);

// Local search from the given parameter points only.
FootPointSet foot_points_from(const Immersion& imm, const Point& q,
                              const std::vector<ParamPoint>& starts, double dist_tol,
                              double cluster_tol);

// Hessian of u -> d(q, F(u))^2 / 2 (up to a positive factor) at u, relative to
// the induced metric: the smallest generalized eigenvalue. Negative means F(u)
// is not a local minimizer of the distance from q.
// On charts `log_guess` (log_{F(u)} q) selects the geodesic branch.
double distance_hessian_min_eigenvalue(const Immersion& imm, const Point& q, const ParamPoint& u,
                                       const std::optional<Tangent>& log_guess = std::nullopt);

struct ReachOptions {
  // Foot-point search.
  int starts{0};  // 0 = automatic (16 per parameter dimension, at least 4k)
  double dist_tol{0.0};  // 0 = automatic (1e-9, chart ambients 1e-7)
  double cluster_tol{1e-2};
  // Normal collision.
  int surface_samples{32};  // per parameter axis
  int normal_samples{8};    // directions in the normal circle (codimension 2)
  double march_step{0.0};   // 0 = diameter / 8
  double horizon{0.0};      // 0 = 4 x diameter
  double bisection_tol{1e-10};
  double candidate_window{0.05};  // rays within this fraction of the minimum get full bisection
  // Medial infimum.
  int ambient_samples{32};  // initial grid cells per probe axis
  double probe_margin{0.1};
  double min_spacing_rel{1e-6};
  int max_levels{40};
  int candidates_per_level{4};
  int window_radius{2};
  double jump_factor{0.5};  // confirmed jump >= jump_factor diam cbrt(h / diam)
  int threads{1};
};

// Resolves the automatic fields for a given immersion.
ReachOptions resolved(const ReachOptions& options, const Immersion& imm);

enum class ReachMethod { kNormalCollision, kMedialInfimum };
enum class ReachStatus { kOk, kUnbounded, kInsufficientResolution };

std::string to_string(ReachMethod method);
std::string to_string(ReachStatus status);

// A point near the medial set, with the probe points whose foot points are
// merged to classify it.
struct ReachCandidate {
  Point point;
  double distance;
  std::vector<Point> probes;
};

struct ReachResolution {
  int surface_samples{0};
  int normal_samples{0};
  int rays{0};
  int ambient_samples{0};
  int levels{0};
  int probes{0};
  double final_spacing{0.0};
};

struct ReachEstimate {
  double tau_hat{0.0};
  ReachMethod method{ReachMethod::kNormalCollision};
  ReachStatus status{ReachStatus::kOk};
  Point witness;
  FootPointSet witness_feet;
  std::vector<ReachCandidate> candidates;
  ReachResolution resolution;
  double diameter{0.0};
  // Normal collision: minimum collision distance over the normals at each
  // sampled surface point (infinity when none collided).
  std::vector<ParamPoint> sample_params;
  std::vector<double> pointwise;
};

// Sample diameter of F(M) on a fixed grid, independent of the reach resolutions.
double image_diameter(const Immersion& imm);

ReachEstimate reach_normal_collision(const Immersion& imm, const ReachOptions& options);
ReachEstimate reach_medial_infimum(const Immersion& imm, const ReachOptions& options);

enum class AssignerKind { kBottleneck, kUniqueFootPoint };
std::string to_string(AssignerKind kind);

struct ReachAssigner {
  Point q;
  double distance;
  FootPointSet foot_points;  // merged over the candidate probes
  AssignerKind classification;
};

// Candidates with |d(q, M) - tau_hat| <= tol, deduplicated, classified by
// merged foot-point multiplicity.
std::vector<ReachAssigner> reach_assigning_points(const Immersion& imm,
                                                  const ReachEstimate& estimate, double tol,
                                                  const ReachOptions& options);

// Runs body(i) for i in [0, n) on up to `threads` workers. Callers store
// results by index so reductions stay ordered.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace reachkit
