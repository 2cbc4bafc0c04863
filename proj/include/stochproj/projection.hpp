#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "stochproj/duality.hpp"
#include "stochproj/lp.hpp"
#include "stochproj/measure.hpp"
#include "stochproj/order.hpp"

namespace stochproj {

struct ProjectionOptions {
  lp::SolverOptions lp;
  std::size_t max_iterations = 10000;     // Frank-Wolfe iterations
  double fw_tolerance = 1e-10;            // relative Frank-Wolfe gap
  double merge_tolerance = 1e-9;          // barycenter merging
  double dilation = 1.5;                  // default forward candidate box
  std::size_t default_nodes_1d = 41;
  std::size_t default_nodes_2d = 13;
  bool solve_dual = true;
  bool certify = true;
  /// Grid and candidate LPs: among optimal projections, return the one
  /// minimizing int |x - c|^3 for a fixed generic point c (second LP over the
  /// optimal face). Makes projections comparable across formulations.
  bool canonical = false;
  double canonical_slack = 1e-15;         // relative cost slack of the optimal face
};

/// Output of every projection.
///
/// Backward: `source` = mu, `vertex` = nu, `coupling` rows are mu atoms and
/// columns projection atoms, `cone_coupling` is a martingale from the
/// projection to nu. Forward: `source` = nu, `vertex` = mu, `coupling` rows
/// are projection atoms and columns nu atoms, `cone_coupling` a martingale
/// from mu to the projection. Subharmonic results carry `laplacian_mass`
/// instead of a martingale.
struct ProjectionResult {
  Direction direction = Direction::backward;
  OrderKind order = OrderKind::convex;
  DiscreteMeasure source;
  DiscreteMeasure vertex;
  DiscreteMeasure projection;
  Coupling coupling;
  std::optional<Coupling> cone_coupling{};
  std::optional<std::vector<double>> laplacian_mass{};
  double cost = 0.0;
  std::optional<DualCertificate> dual{};
  double duality_gap = std::numeric_limits<double>::quiet_NaN();
  OrderCertificate order_certificate{};
  std::vector<Point> candidate_support{};  // empty for free barycenters
  std::optional<Grid> grid{};
  std::size_t iterations = 0;
  double fw_gap = 0.0;
  std::size_t instance_hash = 0;
};

/// Barycentric weak transport: min over pi in Pi(mu, nu) of
/// sum_i mu_i |x_i - b_i|^2, b_i the conditional barycenter; pairwise
/// Frank-Wolfe with transport-LP linear minimization.
ProjectionResult project_backward_convex(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const ProjectionOptions& options = {});

/// Same problem with the projection restricted to `candidates` (two-stage LP).
ProjectionResult project_backward_convex_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                            const std::vector<Point>& candidates,
                                            const ProjectionOptions& options = {});

/// Projects nu onto { eta : mu <=cx eta }, eta supported on `candidates`.
ProjectionResult project_forward_convex(const DiscreteMeasure& nu, const DiscreteMeasure& mu,
                                        const std::vector<Point>& candidates,
                                        const ProjectionOptions& options = {});
/// Candidates: nodes of the default dilated bounding-box grid.
ProjectionResult project_forward_convex(const DiscreteMeasure& nu, const DiscreteMeasure& mu,
                                        const ProjectionOptions& options = {});

/// Bounding box of both supports dilated about its centre, default node counts.
Grid default_forward_grid(const DiscreteMeasure& a, const DiscreteMeasure& b,
                          const ProjectionOptions& options = {});

ProjectionResult project_backward_subharmonic(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              const OrderSpec& spec,
                                              const ProjectionOptions& options = {});
ProjectionResult project_forward_subharmonic(const DiscreteMeasure& nu, const DiscreteMeasure& mu,
                                             const OrderSpec& spec,
                                             const ProjectionOptions& options = {});

struct ProjectionProblem {
  Direction direction = Direction::backward;
  OrderSpec order;
  DiscreteMeasure source;   // mu for backward, nu for forward
  DiscreteMeasure vertex;   // nu for backward, mu for forward
  /// Backward convex: empty means free barycenters (Frank-Wolfe).
  std::vector<Point> candidates;
};

ProjectionResult solve_projection(const ProjectionProblem& problem,
                                  const ProjectionOptions& options = {});

struct UniquenessReport {
  std::size_t trials = 0;
  double max_w2_spread = 0.0;   // max pairwise W2 distance between projections
  double cost_spread = 0.0;
  std::vector<double> costs;
};

/// Re-solves with seeded pivot orders and measures how far the returned
/// projections are apart. Informational only for generic discrete data.
UniquenessReport uniqueness_probe(const ProjectionProblem& problem, std::size_t trials,
                                  const ProjectionOptions& options = {}, std::uint64_t seed = 42);

/// Distinct points of `points`, merged within `tol` (max-norm), first occurrence order.
std::vector<Point> unique_points(const std::vector<Point>& points, double tol = 1e-9);

}  // namespace stochproj
