#include "stochproj/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "stochproj/errors.hpp"

namespace stochproj {

namespace {

using Index = Eigen::Index;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class Curvature { none, smooth, strong };

// Largest weight of a cycle in the complete graph with edge weights
// <g_i, x_j - x_i> + kappa(i, j), relative to the edge scale.
double cycle_violation(const MapSample& map, Curvature kind) {
  const std::size_t n = map.size();
  if (n < 2) return 0.0;
  std::vector<double> D(n * n, kNegInf);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& a = map.pairs[i];
      const auto& b = map.pairs[j];
      double w = a.image.dot(b.source - a.source);
      if (kind == Curvature::smooth) w += 0.5 * (a.image - b.image).squaredNorm();
      if (kind == Curvature::strong) w += 0.5 * (a.source - b.source).squaredNorm();
      D[i * n + j] = w;
      scale = std::max(scale, std::abs(w));
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double dik = D[i * n + k];
      if (i == k || dik == kNegInf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || j == k) continue;
        const double v = dik + D[k * n + j];
        if (v > D[i * n + j]) D[i * n + j] = v;
      }
    }
  double worst = kNegInf;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) worst = std::max(worst, D[i * n + k] + D[k * n + i]);
  return worst / std::max(1.0, scale);
}

std::vector<std::vector<int>> directions(std::size_t dim) {
  if (dim == 1) return {{1}};
  if (dim == 2) return {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  throw InvalidArgument("characterize: only 1D and 2D grid functions are supported");
}

template <class Pred>
bool all_second_differences(const GridFunction& f, Pred pred) {
  const Grid& g = f.grid;
  for (const auto& dir : directions(g.dim())) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto idx = g.multi_index(k);
      bool ok = true;
      for (std::size_t a = 0; a < g.dim(); ++a) {
        if (dir[a] != 0 && (idx[a] == 0 || idx[a] + 1 >= g.counts()[a])) ok = false;
      }
      if (!ok) continue;
      if (!pred(second_difference(f, k, dir))) return false;
    }
  }
  return true;
}

void require_laplacian_grid(const GridFunction& phi) {
  for (std::size_t n : phi.grid.counts())
    if (n < 3) throw InvalidArgument("laplacian check: need at least 3 nodes per axis");
  if (!phi.all_finite()) throw InvalidArgument("laplacian check: non-finite values");
}

}  // namespace

// ---------------------------------------------------------------------------

MapSample extract_map(const Coupling& pi, const DiscreteMeasure& rows, const DiscreteMeasure& cols,
                      MapRule rule, double dominance) {
  MapSample s;
  for (Index i = 0; i < pi.mass.rows(); ++i) {
    const double total = pi.mass.row(i).sum();
    if (total <= 0.0) continue;
    if (rule == MapRule::barycenter) {
      Point b = Point::Zero(static_cast<Index>(cols.dim()));
      for (Index j = 0; j < pi.mass.cols(); ++j) b += pi.mass(i, j) * cols.point(static_cast<std::size_t>(j));
      s.pairs.push_back({rows.point(static_cast<std::size_t>(i)), b / total, total});
      continue;
    }
    Index best = 0;
    pi.mass.row(i).maxCoeff(&best);
    if (pi.mass(i, best) >= dominance * total) {
      s.pairs.push_back({rows.point(static_cast<std::size_t>(i)), cols.point(static_cast<std::size_t>(best)), total});
    } else {
      ++s.split;
    }
  }
  return s;
}

MapSample extract_column_map(const Coupling& pi, const DiscreteMeasure& rows,
                             const DiscreteMeasure& cols, double dominance) {
  MapSample s;
  for (Index j = 0; j < pi.mass.cols(); ++j) {
    const double total = pi.mass.col(j).sum();
    if (total <= 0.0) continue;
    Index best = 0;
    pi.mass.col(j).maxCoeff(&best);
    if (pi.mass(best, j) >= dominance * total) {
      s.pairs.push_back({cols.point(static_cast<std::size_t>(j)), rows.point(static_cast<std::size_t>(best)), total});
    } else {
      ++s.split;
    }
  }
  return s;
}

MapSample projection_map(const ProjectionResult& r) {
  if (r.direction == Direction::backward) return extract_map(r.coupling, r.source, r.projection);
  return extract_column_map(r.coupling, r.projection, r.source);
}

double monotonicity_violation(const MapSample& map) { return cycle_violation(map, Curvature::none); }
double contraction_violation(const MapSample& map) { return cycle_violation(map, Curvature::smooth); }
double expansion_violation(const MapSample& map) { return cycle_violation(map, Curvature::strong); }

bool is_cyclically_monotone(const MapSample& map, double tol) { return monotonicity_violation(map) <= tol; }
bool is_contraction_gradient(const MapSample& map, double tol) { return contraction_violation(map) <= tol; }
bool is_expansion_gradient(const MapSample& map, double tol) { return expansion_violation(map) <= tol; }

bool check_convex_contraction(const SampledConvexFunction& phi, double tol) {
  return all_second_differences(phi.function(), [tol](double q) { return q <= 1.0 + tol; });
}

bool check_convex_expansion(const SampledConvexFunction& phi, double tol) {
  return all_second_differences(phi.function(), [tol](double q) { return q >= 1.0 - tol; });
}

bool check_laplacian_contraction(const GridFunction& phi, double tol) {
  require_laplacian_grid(phi);
  const double d = static_cast<double>(phi.grid.dim());
  for (std::size_t k : phi.grid.interior_nodes())
    if (discrete_laplacian(phi, k) < d - tol) return false;
  return true;
}

bool check_laplacian_expansion(const GridFunction& phi, double tol) {
  require_laplacian_grid(phi);
  const double d = static_cast<double>(phi.grid.dim());
  for (std::size_t k : phi.grid.interior_nodes())
    if (discrete_laplacian(phi, k) > d + tol) return false;
  return true;
}

Eigen::MatrixXd hessian(const GridFunction& f, std::size_t node) {
  const Grid& g = f.grid;
  if (!g.is_interior(node)) throw InvalidArgument("hessian: node is on the boundary");
  const std::size_t d = g.dim();
  Eigen::MatrixXd H(static_cast<Index>(d), static_cast<Index>(d));
  const auto idx = g.multi_index(node);
  auto at = [&](std::size_t a, int sa, std::size_t b, int sb) {
    auto j = idx;
    j[a] = static_cast<std::size_t>(static_cast<long>(j[a]) + sa);
    j[b] = static_cast<std::size_t>(static_cast<long>(j[b]) + sb);
    return f.values[g.flat_index(j)];
  };
  for (std::size_t a = 0; a < d; ++a) {
    std::vector<int> dir(d, 0);
    dir[a] = 1;
    H(static_cast<Index>(a), static_cast<Index>(a)) = second_difference(f, node, dir);
    for (std::size_t b = a + 1; b < d; ++b) {
      const double v = (at(a, 1, b, 1) - at(a, 1, b, -1) - at(a, -1, b, 1) + at(a, -1, b, -1)) /
                       (4.0 * g.spacing(a) * g.spacing(b));
      H(static_cast<Index>(a), static_cast<Index>(b)) = v;
      H(static_cast<Index>(b), static_cast<Index>(a)) = v;
    }
  }
  return H;
}

// ---------------------------------------------------------------------------

namespace {

void finish_volume(VolumeReport& r, double required_fraction) {
  r.det_fraction = r.evaluable ? static_cast<double>(r.det_passing) / static_cast<double>(r.evaluable) : 0.0;
  r.conclusive = r.evaluable > 0 && r.split_fraction <= 0.2;
  r.ok = r.conclusive && r.det_fraction >= required_fraction && r.density_violations == 0;
}

bool positive_definite(const Eigen::MatrixXd& H) {
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  return llt.info() == Eigen::Success && H.determinant() > 0.0;
}

}  // namespace

VolumeReport check_volume_expansion(const GridFunction& map_potential, const MapSample& map,
                                    std::span<const double> source_density,
                                    std::span<const double> image_density, double slack,
                                    double required_fraction) {
  if (source_density.size() != map.size() || image_density.size() != map.size()) {
    throw InvalidArgument("volume check: one density per map pair is required");
  }
  VolumeReport r;
  r.min_det = std::numeric_limits<double>::infinity();
  for (std::size_t k : map_potential.grid.interior_nodes()) {
    const Eigen::MatrixXd H = hessian(map_potential, k);
    if (!positive_definite(H)) continue;
    const double det = H.determinant();
    ++r.evaluable;
    r.min_det = std::min(r.min_det, det);
    if (det >= 1.0 - slack) ++r.det_passing;
  }
  for (std::size_t k = 0; k < map.size(); ++k) {
    ++r.density_checked;
    const double ratio = image_density[k] / source_density[k];
    r.max_density_ratio = std::max(r.max_density_ratio, ratio);
    if (image_density[k] > (1.0 + slack) * source_density[k]) ++r.density_violations;
  }
  const std::size_t total = map.size() + map.split;
  r.split_fraction = total ? static_cast<double>(map.split) / static_cast<double>(total) : 0.0;
  finish_volume(r, required_fraction);
  return r;
}

VolumeReport check_volume_expansion(const ProjectionResult& fwd, double source_cell_volume,
                                    double slack, double required_fraction, std::size_t image_block) {
  if (fwd.direction != Direction::forward || fwd.order != OrderKind::subharmonic || !fwd.grid || !fwd.dual) {
    throw InvalidArgument("volume check: needs a forward subharmonic result with its dual potential");
  }
  const Grid& g = *fwd.grid;
  if (g.dim() != 2 && g.dim() != 1) throw InvalidArgument("volume check: grid must be 1D or 2D");
  const GridFunction psi0 = GridFunction::sample(g, [&](const Point& x) { return 0.5 * x.squaredNorm(); });
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = psi0.values[k] - 0.5 * fwd.dual->potential[k];
  const GridFunction conj_potential(g, std::move(v));

  VolumeReport r;
  r.min_det = std::numeric_limits<double>::infinity();
  const DiscreteMeasure& eta = fwd.projection;
  const DiscreteMeasure& nu = fwd.source;
  for (std::size_t a = 0; a < eta.size(); ++a) {
    const auto node = g.locate(eta.point(a));
    if (!node || !g.is_interior(*node)) continue;
    const Eigen::MatrixXd H = hessian(conj_potential, *node);
    if (!positive_definite(H)) continue;
    const double det = 1.0 / H.determinant();
    ++r.evaluable;
    r.min_det = std::min(r.min_det, det);
    if (det >= 1.0 - slack) ++r.det_passing;
  }

  // Image cells are blocks of `image_block` nodes per axis; a block's density
  // is its aggregated mass over the block volume, compared with the densest
  // source atom that sends mass into it.
  const std::size_t block = std::max<std::size_t>(1, image_block);
  std::map<std::vector<std::size_t>, std::pair<double, double>> cells;  // mass, source density
  for (std::size_t a = 0; a < eta.size(); ++a) {
    const auto node = g.locate(eta.point(a));
    if (!node) throw InvalidArgument("volume check: projection atom is not a grid node");
    auto key = g.multi_index(*node);
    for (auto& i : key) i /= block;
    auto& cell = cells[key];
    cell.first += eta.weight(a);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      if (fwd.coupling.mass(static_cast<Index>(a), static_cast<Index>(j)) > 1e-12) {
        cell.second = std::max(cell.second, nu.weight(j) / source_cell_volume);
      }
    }
  }
  const double block_volume = g.cell_volume() * std::pow(static_cast<double>(block), static_cast<double>(g.dim()));
  for (const auto& [key, cell] : cells) {
    const double image = cell.first / block_volume;
    ++r.density_checked;
    r.max_density_ratio = std::max(r.max_density_ratio, image / cell.second);
    if (image > (1.0 + slack) * cell.second) ++r.density_violations;
  }
  // A source atom counts as split when its images are more than two grid
  // spacings apart (max-norm); spreading over neighbouring nodes is the
  // discretization of a single off-grid image.
  double h = 0.0;
  for (double s : g.spacings()) h = std::max(h, s);
  std::size_t split = 0;
  for (std::size_t j = 0; j < nu.size(); ++j) {
    double diameter = 0.0;
    for (std::size_t a = 0; a < eta.size(); ++a) {
      if (fwd.coupling.mass(static_cast<Index>(a), static_cast<Index>(j)) <= 1e-12) continue;
      for (std::size_t b = a + 1; b < eta.size(); ++b) {
        if (fwd.coupling.mass(static_cast<Index>(b), static_cast<Index>(j)) <= 1e-12) continue;
        diameter = std::max(diameter, (eta.point(a) - eta.point(b)).lpNorm<Eigen::Infinity>());
      }
    }
    if (diameter > 2.0 * h * (1.0 + 1e-9)) ++split;
  }
  r.split_fraction = nu.size() ? static_cast<double>(split) / static_cast<double>(nu.size()) : 0.0;
  finish_volume(r, required_fraction);
  return r;
}

// ---------------------------------------------------------------------------

InverseReport check_inverse_relation(const ProjectionResult& backward, const ProjectionResult& forward,
                                     std::optional<double> spacing) {
  if (backward.direction != Direction::backward || forward.direction != Direction::forward) {
    throw InvalidArgument("inverse relation: expects a backward and a forward result");
  }
  if (backward.order != OrderKind::convex || forward.order != OrderKind::convex) {
    throw InvalidArgument("inverse relation: convex-order results only");
  }
  if (!same_measure(backward.source, forward.vertex, 1e-12) || !same_measure(backward.vertex, forward.source, 1e-12)) {
    throw InvalidArgument("inverse relation: results belong to different instances");
  }
  InverseReport r;
  double h = 0.0;
  if (spacing) h = *spacing;
  else if (forward.grid) h = *std::max_element(forward.grid->spacings().begin(), forward.grid->spacings().end());
  r.spacing = h;

  const MapSample tb = projection_map(backward);
  const MapSample tf = projection_map(forward);
  r.backward_monotone = is_cyclically_monotone(tb);
  r.forward_monotone = is_cyclically_monotone(tf);
  MapSample joint = tb;
  for (const auto& p : tf.pairs) joint.pairs.push_back({p.image, p.source, p.mass});
  r.joint_monotone = is_cyclically_monotone(joint);

  // Atoms of mu_bar that coincide with atoms of nu: T_f should send them back
  // to their T_b preimages.
  for (const auto& yb : backward.projection.points()) {
    for (const auto& pf : tf.pairs) {
      if ((pf.source - yb).norm() > h) continue;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& pb : tb.pairs) {
        if ((pb.image - yb).norm() <= 1e-9) best = std::min(best, (pf.image - pb.source).norm());
      }
      if (!std::isfinite(best)) continue;
      ++r.matched;
      r.max_displacement = std::max(r.max_displacement, best);
    }
  }
  r.conclusive = r.matched > 0;
  r.ok = r.backward_monotone && r.forward_monotone && r.joint_monotone &&
         (!r.conclusive || r.max_displacement <= 5.0 * h);
  return r;
}

}  // namespace stochproj
