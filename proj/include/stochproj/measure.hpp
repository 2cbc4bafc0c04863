#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stochproj/lp.hpp"

namespace stochproj {

using Point = Eigen::VectorXd;

struct MeasureOptions {
  /// Atoms whose normalized weight falls below this are dropped.
  double prune_threshold = 1e-14;
  /// Points closer than this (max-norm) are merged; merged location is the
  /// weighted mean so the first moment is preserved. 0 merges exact duplicates only.
  double merge_tolerance = 0.0;
};

/// Finitely supported probability measure on R^d.
///
/// Immutable after construction: weights are normalized to sum one, tiny
/// atoms are pruned and duplicate atoms merged, in first-occurrence order.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<Point> points, std::vector<double> weights,
                  const MeasureOptions& options = {});

  static DiscreteMeasure dirac(const Point& x);

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  const Point& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  /// Stable content hash over the serialized atoms.
  std::size_t hash() const;

 private:
  std::vector<Point> points_;
  std::vector<double> weights_;
  std::size_t dim_ = 0;
};

DiscreteMeasure make_measure(const std::vector<std::vector<double>>& points,
                             const std::vector<double>& weights,
                             const MeasureOptions& options = {});

/// Sum_i w_i |x_i|^k. k = 0 gives the total mass.
double moment(const DiscreteMeasure& mu, int k);
Point mean(const DiscreteMeasure& mu);

/// Same atoms with the same weights, each within `tol`.
bool same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol = 1e-12);

/// Moves every atom by `shift`.
DiscreteMeasure translate(const DiscreteMeasure& mu, const Point& shift);

// ---------------------------------------------------------------------------

/// Regular axis-aligned grid, nodes in row-major order (last axis fastest).
class Grid {
 public:
  static constexpr std::size_t kDefaultNodeBudget = 1'000'000;

  Grid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> n,
       std::size_t node_budget = kDefaultNodeBudget);

  /// Same spacing per axis on every axis of [lo, hi]^d.
  static Grid uniform(std::size_t dim, double lo, double hi, std::size_t n);

  std::size_t dim() const { return lo_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<std::size_t>& counts() const { return n_; }
  double spacing(std::size_t axis) const { return h_[axis]; }
  const std::vector<double>& spacings() const { return h_; }
  double cell_volume() const;

  Point node(std::size_t flat) const;
  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const std::size_t> idx) const;
  bool is_interior(std::size_t flat) const;
  std::vector<std::size_t> interior_nodes() const;
  std::vector<Point> nodes() const;

  /// Flat index of the node equal to `x` within `tol` (absolute, per axis).
  std::optional<std::size_t> locate(const Point& x, double tol = 1e-9) const;
  std::size_t nearest_node(const Point& x) const;
  bool contains(const Point& x, double tol = 1e-12) const;

  /// Grid with each axis count doubled minus one (nodes of this grid are kept).
  Grid refined() const;

  bool operator==(const Grid& other) const = default;

 private:
  std::vector<double> lo_, hi_, h_;
  std::vector<std::size_t> n_;
  std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------

/// Transport plan between the atoms of a source and a target measure.
struct Coupling {
  Eigen::MatrixXd mass;  // rows: source atoms, cols: target atoms

  std::size_t rows() const { return static_cast<std::size_t>(mass.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(mass.cols()); }
};

/// max over rows/cols of |marginal - weight|, plus any negative entry magnitude.
double marginal_residual(const Coupling& pi, const DiscreteMeasure& source,
                         const DiscreteMeasure& target);
double transport_cost(const Coupling& pi, const DiscreteMeasure& source,
                      const DiscreteMeasure& target);

struct TransportResult {
  double cost = 0.0;
  Coupling coupling;
};

/// Exact quadratic-cost optimal transport between two discrete measures.
TransportResult w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const lp::SolverOptions& options = {});

/// True iff `query` is within `tol` (l1 residual) of the convex hull of `points`.
bool convex_hull_contains(const std::vector<Point>& points, const Point& query,
                          double tol = 1e-9);

/// McCann interpolation (1 - s) x + s y along the coupling's support.
DiscreteMeasure displacement_interpolation(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                           const Coupling& pi, double s);

}  // namespace stochproj
