#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stochproj/measure.hpp"
#include "stochproj/projection.hpp"
#include "stochproj/transforms.hpp"

namespace stochproj {

struct MapPair {
  Point source;
  Point image;
  double mass = 0.0;
};

/// Deterministic part of a coupling, as (source, image) pairs.
struct MapSample {
  std::vector<MapPair> pairs;
  std::size_t split = 0;  // rows (or columns) excluded because no entry dominated

  std::size_t size() const { return pairs.size(); }
};

enum class MapRule { dominant, barycenter };

/// Row atom -> column atom. `dominant` keeps rows whose largest entry holds at
/// least `dominance` of the row mass; `barycenter` maps every row to its
/// conditional mean.
MapSample extract_map(const Coupling& pi, const DiscreteMeasure& rows, const DiscreteMeasure& cols,
                      MapRule rule = MapRule::dominant, double dominance = 0.999);
/// Column atom -> dominant row atom.
MapSample extract_column_map(const Coupling& pi, const DiscreteMeasure& rows,
                             const DiscreteMeasure& cols, double dominance = 0.999);

/// mu -> projection for backward results; nu -> projection for forward results.
MapSample projection_map(const ProjectionResult& r);

// Finite interpolation conditions. A sample (x_i, g_i) is the gradient graph of
//   a convex function                 iff it is cyclically monotone,
//   a convex function with D^2 <= Id  iff no cycle of
//       <g_i, x_j - x_i> + |g_i - g_j|^2 / 2 has positive weight,
//   a convex function with D^2 >= Id  iff the same holds with |x_i - x_j|^2 / 2.
// Violations are reported as the largest cycle weight found.
double monotonicity_violation(const MapSample& map);
double contraction_violation(const MapSample& map);
double expansion_violation(const MapSample& map);

bool is_cyclically_monotone(const MapSample& map, double tol = 1e-8);
bool is_contraction_gradient(const MapSample& map, double tol = 1e-8);
bool is_expansion_gradient(const MapSample& map, double tol = 1e-8);

/// Directional second difference quotients (axes and, in 2D, diagonals) <= 1 + tol.
bool check_convex_contraction(const SampledConvexFunction& phi, double tol = 1e-8);
/// Directional second difference quotients >= 1 - tol.
bool check_convex_expansion(const SampledConvexFunction& phi, double tol = 1e-8);

/// Discrete Laplacian >= d - tol at every interior node. Needs >= 3 nodes per axis.
bool check_laplacian_contraction(const GridFunction& phi, double tol = 1e-6);
/// Discrete Laplacian <= d + tol at every interior node.
bool check_laplacian_expansion(const GridFunction& phi, double tol = 1e-6);

/// Central-difference Hessian at an interior node (1D: second difference).
Eigen::MatrixXd hessian(const GridFunction& f, std::size_t node);

struct VolumeReport {
  std::size_t evaluable = 0;        // nodes with a positive definite Hessian
  std::size_t det_passing = 0;
  double det_fraction = 0.0;
  double min_det = 0.0;
  std::size_t density_checked = 0;
  std::size_t density_violations = 0;
  double max_density_ratio = 0.0;   // image density / source density
  double split_fraction = 0.0;      // share of source atoms whose mass is split
  bool conclusive = false;
  bool ok = false;
};

/// (a) det D^2(map_potential) >= 1 - slack at interior nodes of its grid;
/// (b) image_density[k] <= (1 + slack) source_density[k] for each pair.
VolumeReport check_volume_expansion(const GridFunction& map_potential, const MapSample& map,
                                    std::span<const double> source_density,
                                    std::span<const double> image_density, double slack = 0.1,
                                    double required_fraction = 0.95);

/// Same checks for a forward subharmonic projection: the map nu -> eta is the
/// gradient of the conjugate of psi0 = |x|^2/2 - psi/2 (psi the dual
/// potential), so det D^2 = 1 / det D^2 psi0 at the image nodes. Image
/// densities are aggregated over blocks of `image_block` nodes per axis;
/// source densities are atom masses over `source_cell_volume`. A source atom
/// is split when its images are more than two grid spacings apart.
VolumeReport check_volume_expansion(const ProjectionResult& forward_subharmonic,
                                    double source_cell_volume, double slack = 0.1,
                                    double required_fraction = 0.95, std::size_t image_block = 2);

struct InverseReport {
  bool backward_monotone = false;
  bool forward_monotone = false;
  bool joint_monotone = false;   // {(x, T_b x)} and {(T_f y, y)} lie on one monotone graph
  std::size_t matched = 0;
  double max_displacement = 0.0;
  double spacing = 0.0;
  bool conclusive = false;
  bool ok = false;
};

/// Backward map T_b : mu -> mu_bar and forward map T_f : nu -> nu_bar should
/// be gradients of one convex function and its conjugate.
InverseReport check_inverse_relation(const ProjectionResult& backward, const ProjectionResult& forward,
                                     std::optional<double> spacing = std::nullopt);

}  // namespace stochproj
