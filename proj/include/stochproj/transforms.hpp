#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "stochproj/measure.hpp"

namespace stochproj {

inline constexpr double kPlusInf = std::numeric_limits<double>::infinity();
inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

/// Real values on the nodes of a Grid (row-major). Entries may be +/-inf
/// where a transform leaves a node unconstrained.
struct GridFunction {
  Grid grid;
  std::vector<double> values;

  GridFunction(Grid g, std::vector<double> v);
  /// Samples `f` at every node.
  template <class F>
  static GridFunction sample(const Grid& g, F&& f) {
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = f(g.node(k));
    return GridFunction(g, std::move(v));
  }

  double operator[](std::size_t k) const { return values[k]; }
  bool all_finite() const;
  /// Multilinear interpolation inside the grid box. Throws outside it.
  double interpolate(const Point& x) const;
};

/// Discrete convexity of sampled values: in 1D second differences along the
/// axis; in 2D along both axes and both diagonals. Each second difference
/// must be >= -tol * (1 + |centre value|).
bool is_discretely_convex(const GridFunction& f, double tol = 1e-10);

/// A grid function (1D or 2D) that passed `is_discretely_convex` on construction.
class SampledConvexFunction {
 public:
  explicit SampledConvexFunction(GridFunction f, double tol = 1e-10);
  const GridFunction& function() const { return f_; }
  const Grid& grid() const { return f_.grid; }

 private:
  GridFunction f_;
};

/// Second difference quotient (f(x+s) - 2 f(x) + f(x-s)) / |s|^2 along
/// step s = sum_a dir[a] h_a e_a, dir[a] in {-1, 0, 1}. Requires all three nodes.
double second_difference(const GridFunction& f, std::size_t node, std::span<const int> dir);

/// Standard 3-point / 5-point Laplacian at an interior node, scaled by 1/h^2.
double discrete_laplacian(const GridFunction& f, std::size_t node);

/// Coefficients (node, weight) of the Laplacian row at an interior node:
/// (L f)(k) = sum weight * f(node). The same list is column k of L^T.
std::vector<std::pair<std::size_t, double>> laplacian_stencil(const Grid& g, std::size_t node);

// ---------------------------------------------------------------------------
// Transforms. All of them are exact over grid nodes: no interpolation and no
// continuous minimization. Ties resolve to the lowest node index.

/// g*(y) = max_x { x.y - f(x) } over the finite nodes of f, at each node of `dual_grid`.
GridFunction legendre(const GridFunction& f, const Grid& dual_grid);
std::vector<double> legendre_at(const GridFunction& f, const std::vector<Point>& ys);

/// Q2(g)(x) = min_y { g(y) + |x - y|^2 } over the nodes of g's grid, evaluated as
/// |x|^2 - 2 g0*(x) with g0 = |y|^2 / 2 + g / 2.
GridFunction q2(const GridFunction& g, const Grid& eval_grid);
std::vector<double> q2_at(const GridFunction& g, const std::vector<Point>& xs);

/// Q2bar(g)(y) = max_x { g(x) - |x - y|^2 }, evaluated as 2 gbar0*(y) - |y|^2
/// with gbar0 = |x|^2 / 2 - g / 2.
GridFunction q2bar(const GridFunction& g, const Grid& eval_grid);
std::vector<double> q2bar_at(const GridFunction& g, const std::vector<Point>& ys);

struct EnvelopeOptions {
  double relaxation = 1.8;
  double tolerance = 1e-10;
  std::size_t max_sweeps = 100000;
  /// After PSOR reaches this residual, the contact set is fixed and the
  /// remaining harmonic problem is solved directly (primal-dual active set).
  double polish_threshold = 1e-7;
};

struct EnvelopeResult {
  GridFunction envelope;
  double residual = 0.0;
  std::size_t sweeps = 0;
};

/// Largest grid function v <= g with discrete Laplacian >= 0 at interior
/// nodes; boundary values are unconstrained so v = g there. Grid dimension 1 or 2.
EnvelopeResult subharmonic_envelope_solve(const GridFunction& g, const EnvelopeOptions& options = {});
GridFunction subharmonic_envelope(const GridFunction& g, const EnvelopeOptions& options = {});

/// Complementarity residual max_k |min(g - v, L v / sum_a 2/h_a^2)| over interior nodes.
double envelope_residual(const GridFunction& g, const GridFunction& v);

/// Subharmonic envelope of Q2(g) on `eval_grid`.
GridFunction q2e(const GridFunction& g, const Grid& eval_grid, const EnvelopeOptions& options = {});

}  // namespace stochproj
