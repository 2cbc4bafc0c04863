#include "stochproj/measure.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>

#include "stochproj/errors.hpp"

namespace stochproj {

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::vector<Point> points, std::vector<double> weights,
                                 const MeasureOptions& options) {
  if (points.size() != weights.size()) {
    throw InvalidArgument("measure: points and weights have different lengths");
  }
  if (points.empty()) throw InvalidArgument("measure: no atoms");
  dim_ = static_cast<std::size_t>(points.front().size());
  if (dim_ == 0) throw InvalidArgument("measure: points must have dimension >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (static_cast<std::size_t>(points[i].size()) != dim_) {
      throw InvalidArgument("measure: dimension mismatch among points");
    }
    if (!points[i].allFinite()) throw InvalidArgument("measure: non-finite coordinate");
    if (!std::isfinite(weights[i])) throw InvalidArgument("measure: non-finite weight");
    if (weights[i] < 0.0) throw InvalidArgument("measure: negative weight");
    total += weights[i];
  }
  if (!(total > 0.0)) throw InvalidArgument("measure: all weights are zero");

  // Merge duplicates in first-occurrence order.
  std::vector<Point> merged_pts;
  std::vector<double> merged_w;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights[i] / total;
    bool found = false;
    for (std::size_t k = 0; k < merged_pts.size(); ++k) {
      const double dist = (merged_pts[k] - points[i]).cwiseAbs().maxCoeff();
      if (dist <= options.merge_tolerance) {
        const double wk = merged_w[k] + w;
        if (wk > 0.0) merged_pts[k] = (merged_w[k] * merged_pts[k] + w * points[i]) / wk;
        merged_w[k] = wk;
        found = true;
        break;
      }
    }
    if (!found) {
      merged_pts.push_back(points[i]);
      merged_w.push_back(w);
    }
  }

  double kept = 0.0;
  for (std::size_t k = 0; k < merged_pts.size(); ++k) {
    if (merged_w[k] >= options.prune_threshold) {
      points_.push_back(std::move(merged_pts[k]));
      weights_.push_back(merged_w[k]);
      kept += merged_w[k];
    }
  }
  if (points_.empty()) throw InvalidArgument("measure: every atom was pruned");
  for (double& w : weights_) w /= kept;
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& x) {
  return DiscreteMeasure({x}, {1.0});
}

std::size_t DiscreteMeasure::hash() const {
  std::size_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    h ^= std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(v));
    h *= 1099511628211ULL;
  };
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (Eigen::Index k = 0; k < points_[i].size(); ++k) mix(points_[i][k]);
    mix(weights_[i]);
  }
  return h;
}

DiscreteMeasure make_measure(const std::vector<std::vector<double>>& points,
                             const std::vector<double>& weights, const MeasureOptions& options) {
  std::vector<Point> pts;
  pts.reserve(points.size());
  for (const auto& p : points) {
    pts.push_back(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
  }
  return DiscreteMeasure(std::move(pts), weights, options);
}

double moment(const DiscreteMeasure& mu, int k) {
  if (k < 0) throw InvalidArgument("moment: order must be >= 0");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s += mu.weight(i) * (k == 0 ? 1.0 : std::pow(mu.point(i).norm(), k));
  }
  return s;
}

Point mean(const DiscreteMeasure& mu) {
  Point m = Point::Zero(static_cast<Eigen::Index>(mu.dim()));
  for (std::size_t i = 0; i < mu.size(); ++i) m += mu.weight(i) * mu.point(i);
  return m;
}

bool same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  if (a.dim() != b.dim() || a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool matched = false;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      if ((a.point(i) - b.point(j)).cwiseAbs().maxCoeff() <= tol &&
          std::abs(a.weight(i) - b.weight(j)) <= tol) {
        used[j] = matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

DiscreteMeasure translate(const DiscreteMeasure& mu, const Point& shift) {
  std::vector<Point> pts = mu.points();
  for (auto& p : pts) p += shift;
  return DiscreteMeasure(std::move(pts), mu.weights());
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> n,
           std::size_t node_budget)
    : lo_(std::move(lo)), hi_(std::move(hi)), n_(std::move(n)) {
  if (lo_.empty() || lo_.size() != hi_.size() || lo_.size() != n_.size()) {
    throw InvalidArgument("grid: lo, hi and n must be nonempty and of equal length");
  }
  size_ = 1;
  h_.resize(lo_.size());
  for (std::size_t a = 0; a < lo_.size(); ++a) {
    if (n_[a] < 2) throw InvalidArgument("grid: each axis needs at least 2 nodes");
    if (!std::isfinite(lo_[a]) || !std::isfinite(hi_[a]) || !(hi_[a] > lo_[a])) {
      throw InvalidArgument("grid: each axis needs finite lo < hi");
    }
    h_[a] = (hi_[a] - lo_[a]) / static_cast<double>(n_[a] - 1);
    if (size_ > node_budget / n_[a]) throw InvalidArgument("grid: node budget exceeded");
    size_ *= n_[a];
  }
  if (size_ > node_budget) throw InvalidArgument("grid: node budget exceeded");
}

Grid Grid::uniform(std::size_t dim, double lo, double hi, std::size_t n) {
  return Grid(std::vector<double>(dim, lo), std::vector<double>(dim, hi),
              std::vector<std::size_t>(dim, n));
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (double h : h_) v *= h;
  return v;
}

std::vector<std::size_t> Grid::multi_index(std::size_t flat) const {
  std::vector<std::size_t> idx(dim());
  for (std::size_t a = dim(); a-- > 0;) {
    idx[a] = flat % n_[a];
    flat /= n_[a];
  }
  return idx;
}

std::size_t Grid::flat_index(std::span<const std::size_t> idx) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < dim(); ++a) flat = flat * n_[a] + idx[a];
  return flat;
}

Point Grid::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Point p(static_cast<Eigen::Index>(dim()));
  for (std::size_t a = 0; a < dim(); ++a) {
    // Pin the last node to hi exactly so boundaries are representable.
    p[static_cast<Eigen::Index>(a)] =
        idx[a] + 1 == n_[a] ? hi_[a] : lo_[a] + static_cast<double>(idx[a]) * h_[a];
  }
  return p;
}

bool Grid::is_interior(std::size_t flat) const {
  const auto idx = multi_index(flat);
  for (std::size_t a = 0; a < dim(); ++a) {
    if (idx[a] == 0 || idx[a] + 1 == n_[a]) return false;
  }
  return true;
}

std::vector<std::size_t> Grid::interior_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < size_; ++k) {
    if (is_interior(k)) out.push_back(k);
  }
  return out;
}

std::vector<Point> Grid::nodes() const {
  std::vector<Point> out;
  out.reserve(size_);
  for (std::size_t k = 0; k < size_; ++k) out.push_back(node(k));
  return out;
}

std::optional<std::size_t> Grid::locate(const Point& x, double tol) const {
  if (static_cast<std::size_t>(x.size()) != dim()) return std::nullopt;
  std::vector<std::size_t> idx(dim());
  for (std::size_t a = 0; a < dim(); ++a) {
    const double t = (x[static_cast<Eigen::Index>(a)] - lo_[a]) / h_[a];
    const double r = std::round(t);
    if (r < 0.0 || r > static_cast<double>(n_[a] - 1)) return std::nullopt;
    if (std::abs(t - r) * h_[a] > tol) return std::nullopt;
    idx[a] = static_cast<std::size_t>(r);
  }
  return flat_index(idx);
}

std::size_t Grid::nearest_node(const Point& x) const {
  std::vector<std::size_t> idx(dim());
  for (std::size_t a = 0; a < dim(); ++a) {
    const double t = std::round((x[static_cast<Eigen::Index>(a)] - lo_[a]) / h_[a]);
    idx[a] = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(n_[a] - 1)));
  }
  return flat_index(idx);
}

bool Grid::contains(const Point& x, double tol) const {
  for (std::size_t a = 0; a < dim(); ++a) {
    const double v = x[static_cast<Eigen::Index>(a)];
    if (v < lo_[a] - tol || v > hi_[a] + tol) return false;
  }
  return true;
}

Grid Grid::refined() const {
  std::vector<std::size_t> n2(n_);
  for (auto& v : n2) v = 2 * v - 1;
  return Grid(lo_, hi_, n2);
}

// ---------------------------------------------------------------------------
// Couplings and optimal transport

double marginal_residual(const Coupling& pi, const DiscreteMeasure& source,
                         const DiscreteMeasure& target) {
  if (pi.rows() != source.size() || pi.cols() != target.size()) {
    throw InvalidArgument("coupling shape does not match its marginals");
  }
  double worst = std::max(0.0, -pi.mass.minCoeff());
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    worst = std::max(worst, std::abs(pi.mass.row(static_cast<Eigen::Index>(i)).sum() - source.weight(i)));
  }
  for (std::size_t j = 0; j < pi.cols(); ++j) {
    worst = std::max(worst, std::abs(pi.mass.col(static_cast<Eigen::Index>(j)).sum() - target.weight(j)));
  }
  return worst;
}

double transport_cost(const Coupling& pi, const DiscreteMeasure& source,
                      const DiscreteMeasure& target) {
  double c = 0.0;
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    for (std::size_t j = 0; j < pi.cols(); ++j) {
      const double m = pi.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (m != 0.0) c += m * (source.point(i) - target.point(j)).squaredNorm();
    }
  }
  return c;
}

TransportResult w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const lp::SolverOptions& options) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("w2_squared: dimension mismatch");
  const std::size_t m = mu.size(), n = nu.size();
  lp::LinearProgram prog;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) prog.add_variable((mu.point(i) - nu.point(j)).squaredNorm());
  }
  std::vector<lp::Term> row;
  for (std::size_t i = 0; i < m; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) row.emplace_back(i * n + j, 1.0);
    prog.add_eq_row(row, mu.weight(i));
  }
  for (std::size_t j = 0; j < n; ++j) {
    row.clear();
    for (std::size_t i = 0; i < m; ++i) row.emplace_back(i * n + j, 1.0);
    prog.add_eq_row(row, nu.weight(j));
  }
  const auto sol = lp::solve(prog, options);
  if (!sol.optimal()) {
    throw SolverError(std::string("optimal transport LP ended ") + lp::to_string(sol.status));
  }
  TransportResult out;
  out.coupling.mass.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.coupling.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::max(0.0, sol.primal[i * n + j]);
    }
  }
  out.cost = transport_cost(out.coupling, mu, nu);
  return out;
}

bool convex_hull_contains(const std::vector<Point>& points, const Point& query, double tol) {
  if (points.empty()) throw InvalidArgument("convex_hull_contains: empty point list");
  const auto d = static_cast<std::size_t>(query.size());
  for (const auto& p : points) {
    if (static_cast<std::size_t>(p.size()) != d) {
      throw InvalidArgument("convex_hull_contains: dimension mismatch");
    }
  }
  // min |sum_k l_k p_k - q|_1 over the simplex.
  lp::LinearProgram prog;
  const std::size_t lam = prog.add_variables(points.size(), 0.0);
  const std::size_t slack = prog.add_variables(2 * d, 1.0);
  std::vector<lp::Term> row;
  for (std::size_t k = 0; k < points.size(); ++k) row.emplace_back(lam + k, 1.0);
  prog.add_eq_row(row, 1.0);
  for (std::size_t a = 0; a < d; ++a) {
    row.clear();
    for (std::size_t k = 0; k < points.size(); ++k) {
      row.emplace_back(lam + k, points[k][static_cast<Eigen::Index>(a)]);
    }
    row.emplace_back(slack + 2 * a, 1.0);
    row.emplace_back(slack + 2 * a + 1, -1.0);
    prog.add_eq_row(row, query[static_cast<Eigen::Index>(a)]);
  }
  const auto sol = lp::solve(prog);
  if (!sol.optimal()) throw SolverError("convex hull LP did not reach an optimum");
  return sol.primal_objective <= tol;
}

DiscreteMeasure displacement_interpolation(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                           const Coupling& pi, double s) {
  std::vector<Point> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    for (std::size_t j = 0; j < pi.cols(); ++j) {
      const double m = pi.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (m <= 0.0) continue;
      pts.push_back((1.0 - s) * mu.point(i) + s * nu.point(j));
      w.push_back(m);
    }
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace stochproj
