#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stochproj/lp.hpp"
#include "stochproj/measure.hpp"
#include "stochproj/order.hpp"
#include "stochproj/transforms.hpp"

namespace stochproj {

enum class Direction { backward, forward };

const char* to_string(Direction d);
Direction parse_direction(const std::string& s);

struct ProjectionResult;

/// Optimal (or admissible) dual potential for one projection instance.
///
/// For the convex order the potential is a finite maximum of affine planes,
/// so it is convex by construction and can be evaluated anywhere. For the
/// subharmonic order it is a grid function with L phi >= 0 at interior nodes.
/// The c-transform in the dual objective runs over `nodes`, the same finite
/// set that carries the primal projection.
struct DualCertificate {
  Direction direction = Direction::backward;
  OrderKind order = OrderKind::convex;

  std::vector<Point> nodes;
  std::optional<Grid> grid;            // subharmonic potentials live on every node of it
  AffineMax planes;                    // convex order
  std::vector<double> potential;       // phi at `nodes` (subharmonic: at every grid node)
  std::vector<double> transformed;     // Q2(phi) at mu atoms, or Q2bar(phi) at nu atoms
  double dual_value = 0.0;
  double lp_value = 0.0;               // objective reported by the dual LP
  std::size_t anchor = 0;              // index into `nodes` (or grid node) pinned to zero
  double anchor_value = 0.0;
  std::size_t instance_hash = 0;

  double evaluate(const Point& x) const;
  /// True when `evaluate(x)` needed interpolation (subharmonic, off-grid x).
  bool interpolated(const Point& x) const;
  /// Potential sampled on a grid (for class checks and plotting).
  GridFunction sample(const Grid& g) const;
};

std::size_t instance_hash(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct DualOptions {
  lp::SolverOptions lp;
  /// Replace the forward subharmonic LP potential by Q2e(Q2bar(psi)), which is
  /// still optimal and a fixed point of that map.
  bool tighten = true;
  EnvelopeOptions envelope;
};

/// max  int Q2(phi) dmu - int phi dnu  over the discretized class.
/// Convex order: nodes are the candidate barycenter points. Subharmonic: the
/// grid of `order`, candidates at interior nodes.
DualCertificate solve_dual_backward(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    const OrderSpec& order, const Grid& potential_grid,
                                    const DualOptions& options = {});
DualCertificate solve_dual_backward_on(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const std::vector<Point>& nodes,
                                       const DualOptions& options = {});

/// max  int phi dmu - int Q2bar(phi) dnu.
DualCertificate solve_dual_forward(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const OrderSpec& order, const Grid& potential_grid,
                                   const DualOptions& options = {});
DualCertificate solve_dual_forward_on(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const std::vector<Point>& nodes,
                                      const DualOptions& options = {});

/// Dual objective of the stored potential plus a constant `shift`, with the
/// c-transform taken over `nodes` together with `extra_nodes`.
double evaluate_dual_objective(const DualCertificate& dual, const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu, double shift = 0.0,
                               const std::vector<Point>& extra_nodes = {});

/// primal.cost - dual value, with the dual c-transform also ranging over the
/// projection atoms so that weak duality holds for any admissible potential.
double duality_gap(const ProjectionResult& primal, const DualCertificate& dual);

struct PotentialReport {
  double residual = 0.0;     // |int phi d(projection) - int phi d(vertex)|
  bool ok = false;           // residual <= tolerance
  bool interpolated = false; // some atom needed off-grid interpolation
};

/// Backward: compares int phi dmu_bar with int phi dnu. Forward: int phi dmu
/// with int phi deta.
PotentialReport verify_potential_property(const DualCertificate& dual,
                                          const DiscreteMeasure& projection,
                                          const DiscreteMeasure& vertex, double tol = 1e-6);

struct CrosscheckReport {
  double backward_value = 0.0;          // optimal backward dual value
  double forward_value = 0.0;           // optimal forward dual value
  double backward_at_forward = 0.0;     // backward objective at Q2bar(phi_forward)
  double forward_at_backward = 0.0;     // forward objective at Q2(phi_backward)
  double max_residual = 0.0;
  bool ok = false;
};

/// Solves both convex-order duals on the grid nodes and evaluates each
/// objective at the cross-transformed potential of the other.
CrosscheckReport crosscheck_dual_equivalence(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                             const Grid& potential_grid, double tol = 1e-6,
                                             const DualOptions& options = {});

}  // namespace stochproj
