#include "stochproj/transforms.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Sparse>

#include "stochproj/errors.hpp"

namespace stochproj {

GridFunction::GridFunction(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw InvalidArgument("grid function: value count does not match node count");
  }
}

bool GridFunction::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double GridFunction::interpolate(const Point& x) const {
  const std::size_t d = grid.dim();
  if (static_cast<std::size_t>(x.size()) != d) throw InvalidArgument("interpolate: dimension mismatch");
  if (!grid.contains(x, 1e-12)) throw InvalidArgument("interpolate: point outside the grid box");
  std::vector<std::size_t> base(d);
  std::vector<double> frac(d);
  for (std::size_t a = 0; a < d; ++a) {
    const double t = (x[static_cast<Eigen::Index>(a)] - grid.lo()[a]) / grid.spacing(a);
    const double cell = std::clamp(std::floor(t), 0.0, static_cast<double>(grid.counts()[a] - 2));
    base[a] = static_cast<std::size_t>(cell);
    frac[a] = std::clamp(t - cell, 0.0, 1.0);
  }
  double acc = 0.0;
  std::vector<std::size_t> idx(d);
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    for (std::size_t a = 0; a < d; ++a) {
      const bool up = (corner >> a) & 1U;
      idx[a] = base[a] + (up ? 1 : 0);
      w *= up ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    acc += w * values[grid.flat_index(idx)];
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Discrete derivatives

namespace {

std::vector<std::size_t> strides(const Grid& g) {
  std::vector<std::size_t> s(g.dim(), 1);
  for (std::size_t a = g.dim() - 1; a-- > 0;) s[a] = s[a + 1] * g.counts()[a + 1];
  return s;
}

// Directions used by the convexity surrogate: axes, and in 2D both diagonals.
std::vector<std::vector<int>> convexity_directions(std::size_t dim) {
  if (dim == 1) return {{1}};
  if (dim == 2) return {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  throw InvalidArgument("discrete convexity is implemented for 1D and 2D grids");
}

// Node shifted by `sign * dir`, if it stays on the grid.
std::optional<std::size_t> shifted(const Grid& g, const std::vector<std::size_t>& idx,
                                   std::span<const int> dir, int sign) {
  std::vector<std::size_t> out(idx);
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const long v = static_cast<long>(idx[a]) + sign * dir[a];
    if (v < 0 || v >= static_cast<long>(g.counts()[a])) return std::nullopt;
    out[a] = static_cast<std::size_t>(v);
  }
  return g.flat_index(out);
}

}  // namespace

double second_difference(const GridFunction& f, std::size_t node, std::span<const int> dir) {
  const Grid& g = f.grid;
  if (dir.size() != g.dim()) throw InvalidArgument("second_difference: direction dimension mismatch");
  const auto idx = g.multi_index(node);
  const auto fwd = shifted(g, idx, dir, +1);
  const auto bwd = shifted(g, idx, dir, -1);
  if (!fwd || !bwd) throw InvalidArgument("second_difference: stencil leaves the grid");
  double step2 = 0.0;
  for (std::size_t a = 0; a < g.dim(); ++a) step2 += dir[a] * dir[a] * g.spacing(a) * g.spacing(a);
  return (f.values[*fwd] - 2.0 * f.values[node] + f.values[*bwd]) / step2;
}

double discrete_laplacian(const GridFunction& f, std::size_t node) {
  const Grid& g = f.grid;
  if (!g.is_interior(node)) throw InvalidArgument("discrete_laplacian: node is on the boundary");
  const auto st = strides(g);
  double lap = 0.0;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const double h2 = g.spacing(a) * g.spacing(a);
    lap += (f.values[node + st[a]] - 2.0 * f.values[node] + f.values[node - st[a]]) / h2;
  }
  return lap;
}

std::vector<std::pair<std::size_t, double>> laplacian_stencil(const Grid& g, std::size_t node) {
  if (!g.is_interior(node)) throw InvalidArgument("laplacian_stencil: node is on the boundary");
  const auto st = strides(g);
  std::vector<std::pair<std::size_t, double>> out;
  double centre = 0.0;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const double w = 1.0 / (g.spacing(a) * g.spacing(a));
    out.emplace_back(node - st[a], w);
    out.emplace_back(node + st[a], w);
    centre -= 2.0 * w;
  }
  out.emplace_back(node, centre);
  return out;
}

bool is_discretely_convex(const GridFunction& f, double tol) {
  const Grid& g = f.grid;
  const auto dirs = convexity_directions(g.dim());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto idx = g.multi_index(k);
    for (const auto& dir : dirs) {
      const auto fwd = shifted(g, idx, dir, +1);
      const auto bwd = shifted(g, idx, dir, -1);
      if (!fwd || !bwd) continue;
      const double sd = f.values[*fwd] - 2.0 * f.values[k] + f.values[*bwd];
      if (sd < -tol * (1.0 + std::abs(f.values[k]))) return false;
    }
  }
  return true;
}

SampledConvexFunction::SampledConvexFunction(GridFunction f, double tol) : f_(std::move(f)) {
  if (f_.grid.dim() > 2) throw InvalidArgument("sampled convex functions are 1D or 2D");
  if (!f_.all_finite()) throw InvalidArgument("sampled convex function has non-finite values");
  if (!is_discretely_convex(f_, tol)) throw InvalidArgument("grid function is not discretely convex");
}

// ---------------------------------------------------------------------------
// Legendre and quadratic c-transforms

std::vector<double> legendre_at(const GridFunction& f, const std::vector<Point>& ys) {
  const Grid& g = f.grid;
  if (g.size() == 0) throw InvalidArgument("legendre: empty grid");
  const auto nodes = g.nodes();
  std::vector<double> out(ys.size(), kMinusInf);
  for (std::size_t j = 0; j < ys.size(); ++j) {
    if (static_cast<std::size_t>(ys[j].size()) != g.dim()) {
      throw InvalidArgument("legendre: evaluation point dimension mismatch");
    }
    double best = kMinusInf;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double fk = f.values[k];
      if (fk == kPlusInf) continue;
      const double v = nodes[k].dot(ys[j]) - fk;
      if (v > best) best = v;
    }
    out[j] = best;
  }
  return out;
}

GridFunction legendre(const GridFunction& f, const Grid& dual_grid) {
  return GridFunction(dual_grid, legendre_at(f, dual_grid.nodes()));
}

std::vector<double> q2_at(const GridFunction& g, const std::vector<Point>& xs) {
  std::vector<double> g0(g.values.size());
  for (std::size_t k = 0; k < g0.size(); ++k) {
    g0[k] = g.values[k] == kPlusInf ? kPlusInf
                                    : 0.5 * g.grid.node(k).squaredNorm() + 0.5 * g.values[k];
  }
  auto conj = legendre_at(GridFunction(g.grid, std::move(g0)), xs);
  for (std::size_t j = 0; j < xs.size(); ++j) conj[j] = xs[j].squaredNorm() - 2.0 * conj[j];
  return conj;
}

GridFunction q2(const GridFunction& g, const Grid& eval_grid) {
  return GridFunction(eval_grid, q2_at(g, eval_grid.nodes()));
}

std::vector<double> q2bar_at(const GridFunction& g, const std::vector<Point>& ys) {
  std::vector<double> g0(g.values.size());
  for (std::size_t k = 0; k < g0.size(); ++k) {
    g0[k] = g.values[k] == kMinusInf ? kPlusInf
                                     : 0.5 * g.grid.node(k).squaredNorm() - 0.5 * g.values[k];
  }
  auto conj = legendre_at(GridFunction(g.grid, std::move(g0)), ys);
  for (std::size_t j = 0; j < ys.size(); ++j) conj[j] = 2.0 * conj[j] - ys[j].squaredNorm();
  return conj;
}

GridFunction q2bar(const GridFunction& g, const Grid& eval_grid) {
  return GridFunction(eval_grid, q2bar_at(g, eval_grid.nodes()));
}

// ---------------------------------------------------------------------------
// Subharmonic envelope: upper-obstacle problem for the grid Laplacian

namespace {

struct Stencil {
  std::vector<std::size_t> interior;
  std::vector<std::size_t> stride;
  std::vector<double> axis_weight;  // 1/h_a^2
  double diag = 0.0;                // sum_a 2/h_a^2
};

Stencil make_stencil(const Grid& g) {
  if (g.dim() > 2) throw InvalidArgument("subharmonic envelopes are implemented for 1D and 2D grids");
  Stencil s;
  s.interior = g.interior_nodes();
  s.stride = strides(g);
  for (std::size_t a = 0; a < g.dim(); ++a) {
    s.axis_weight.push_back(1.0 / (g.spacing(a) * g.spacing(a)));
    s.diag += 2.0 * s.axis_weight.back();
  }
  return s;
}

// Neighbour average minus centre value, i.e. (L v)_k / diag.
double scaled_laplacian(const Stencil& s, const std::vector<double>& v, std::size_t k) {
  double acc = 0.0;
  for (std::size_t a = 0; a < s.stride.size(); ++a) {
    acc += s.axis_weight[a] * (v[k + s.stride[a]] + v[k - s.stride[a]]);
  }
  return acc / s.diag - v[k];
}

double residual_of(const Stencil& s, const std::vector<double>& g, const std::vector<double>& v) {
  double r = 0.0;
  for (std::size_t k : s.interior) {
    r = std::max(r, std::abs(std::min(g[k] - v[k], scaled_laplacian(s, v, k))));
  }
  return r;
}

// Primal-dual active set iterations started from an approximate solution.
// Returns false if the active set does not settle.
bool polish(const Stencil& s, const Grid& grid, const std::vector<double>& g, std::vector<double>& v) {
  std::vector<char> contact(grid.size(), 0);
  for (std::size_t k : s.interior) {
    contact[k] = scaled_laplacian(s, v, k) - (g[k] - v[k]) > 0.0 ? 1 : 0;
  }
  std::vector<long> unknown(grid.size(), -1);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<std::size_t> free_nodes;
    for (std::size_t k : s.interior) {
      if (!contact[k]) {
        unknown[k] = static_cast<long>(free_nodes.size());
        free_nodes.push_back(k);
      } else {
        unknown[k] = -1;
      }
    }
    std::vector<double> w(v);
    for (std::size_t k : s.interior) {
      if (contact[k]) w[k] = g[k];
    }
    if (!free_nodes.empty()) {
      // diag * v_k - sum_a w_a (v_{k+} + v_{k-}) = 0 on free nodes (SPD system).
      const auto nf = static_cast<Eigen::Index>(free_nodes.size());
      std::vector<Eigen::Triplet<double>> trips;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
      for (Eigen::Index r = 0; r < nf; ++r) {
        const std::size_t k = free_nodes[static_cast<std::size_t>(r)];
        trips.emplace_back(r, r, s.diag);
        for (std::size_t a = 0; a < s.stride.size(); ++a) {
          for (std::size_t nb : {k + s.stride[a], k - s.stride[a]}) {
            if (unknown[nb] >= 0) trips.emplace_back(r, unknown[nb], -s.axis_weight[a]);
            else rhs[r] += s.axis_weight[a] * w[nb];
          }
        }
      }
      Eigen::SparseMatrix<double> A(nf, nf);
      A.setFromTriplets(trips.begin(), trips.end());
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
      if (solver.info() != Eigen::Success) return false;
      const Eigen::VectorXd sol = solver.solve(rhs);
      for (Eigen::Index r = 0; r < nf; ++r) w[free_nodes[static_cast<std::size_t>(r)]] = sol[r];
    }
    bool changed = false;
    for (std::size_t k : s.interior) {
      const char next = scaled_laplacian(s, w, k) - (g[k] - w[k]) > 0.0 ? 1 : 0;
      if (next != contact[k]) changed = true;
      contact[k] = next;
    }
    v = std::move(w);
    if (!changed) return true;
  }
  return false;
}

}  // namespace

double envelope_residual(const GridFunction& g, const GridFunction& v) {
  if (!(g.grid == v.grid)) throw InvalidArgument("envelope_residual: grids differ");
  return residual_of(make_stencil(g.grid), g.values, v.values);
}

EnvelopeResult subharmonic_envelope_solve(const GridFunction& g, const EnvelopeOptions& options) {
  if (!g.all_finite()) throw InvalidArgument("subharmonic_envelope: obstacle must be finite");
  if (!(options.relaxation > 0.0 && options.relaxation < 2.0)) {
    throw InvalidArgument("subharmonic_envelope: relaxation factor must lie in (0, 2)");
  }
  const Stencil s = make_stencil(g.grid);
  const std::vector<double>& obstacle = g.values;
  std::vector<double> v(obstacle);
  if (s.interior.empty()) return EnvelopeResult{g, 0.0, 0};
  double polish_at = options.polish_threshold;
  double res = residual_of(s, obstacle, v);
  std::size_t sweep = 0;
  while (res > options.tolerance) {
    if (sweep >= options.max_sweeps) {
      throw NotConverged("subharmonic envelope did not converge (residual " + std::to_string(res) + ")",
                         res);
    }
    for (std::size_t k : s.interior) {
      const double target = v[k] + scaled_laplacian(s, v, k);
      v[k] = std::min(obstacle[k], v[k] + options.relaxation * (target - v[k]));
    }
    ++sweep;
    res = residual_of(s, obstacle, v);
    if (res <= polish_at && res > options.tolerance) {
      std::vector<double> trial(v);
      if (polish(s, g.grid, obstacle, trial)) {
        const double trial_res = residual_of(s, obstacle, trial);
        if (trial_res <= options.tolerance) {
          v = std::move(trial);
          res = trial_res;
          break;
        }
      }
      polish_at *= 0.1;
    }
  }
  return EnvelopeResult{GridFunction(g.grid, std::move(v)), res, sweep};
}

GridFunction subharmonic_envelope(const GridFunction& g, const EnvelopeOptions& options) {
  return subharmonic_envelope_solve(g, options).envelope;
}

GridFunction q2e(const GridFunction& g, const Grid& eval_grid, const EnvelopeOptions& options) {
  return subharmonic_envelope(q2(g, eval_grid), options);
}

}  // namespace stochproj
