#include "stochproj/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stochproj/errors.hpp"

namespace stochproj {

namespace {

using Index = Eigen::Index;

double sqdist(const Point& a, const Point& b) { return (a - b).squaredNorm(); }

bool inside_box(const Point& z, const DiscreteMeasure& m, double tol) {
  for (Index a = 0; a < z.size(); ++a) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : m.points()) {
      lo = std::min(lo, p[a]);
      hi = std::max(hi, p[a]);
    }
    if (z[a] < lo - tol || z[a] > hi + tol) return false;
  }
  return true;
}

void require_same_dim(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("projection: dimension mismatch");
}

void require_candidates(const std::vector<Point>& c, std::size_t dim) {
  if (c.empty()) throw InvalidArgument("projection: empty candidate support");
  for (const auto& p : c) {
    if (static_cast<std::size_t>(p.size()) != dim) {
      throw InvalidArgument("projection: candidate dimension mismatch");
    }
  }
}

// Columns with mass above this are kept as atoms of the returned measure.
constexpr double kKeep = 1e-13;

// ---------------------------------------------------------------------------
// Linear minimization oracle: transport plan minimizing sum G_ij pi_ij.

using SparseVertex = std::vector<std::pair<std::size_t, double>>;  // (i*n + j, mass)

SparseVertex transport_vertex(const Eigen::MatrixXd& cost, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const lp::SolverOptions& opts) {
  const std::size_t m = mu.size(), n = nu.size();
  lp::LinearProgram prog;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) prog.add_variable(cost(static_cast<Index>(i), static_cast<Index>(j)));
  std::vector<lp::Term> terms;
  for (std::size_t i = 0; i < m; ++i) {
    terms.clear();
    for (std::size_t j = 0; j < n; ++j) terms.emplace_back(i * n + j, 1.0);
    prog.add_eq_row(terms, mu.weight(i));
  }
  for (std::size_t j = 0; j < n; ++j) {
    terms.clear();
    for (std::size_t i = 0; i < m; ++i) terms.emplace_back(i * n + j, 1.0);
    prog.add_eq_row(terms, nu.weight(j));
  }
  const auto sol = lp::solve(prog, opts);
  if (!sol.optimal()) throw SolverError("transport oracle did not reach optimality");
  SparseVertex v;
  for (std::size_t k = 0; k < sol.primal.size(); ++k) {
    if (sol.primal[k] > 0.0) v.emplace_back(k, sol.primal[k]);
  }
  return v;
}

bool same_vertex(const SparseVertex& a, const SparseVertex& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].first != b[k].first || std::abs(a[k].second - b[k].second) > 1e-12) return false;
  }
  return true;
}

double pair_with(const SparseVertex& v, const Eigen::MatrixXd& g, std::size_t n) {
  double s = 0.0;
  for (const auto& [k, w] : v) s += w * g(static_cast<Index>(k / n), static_cast<Index>(k % n));
  return s;
}

// Groups points within `tol`; returns group id per point and group locations
// as weighted means.
struct Grouping {
  std::vector<std::size_t> group;
  std::vector<Point> location;
  std::vector<double> weight;
};

Grouping group_points(const std::vector<Point>& pts, const std::vector<double>& w, double tol) {
  Grouping g;
  g.group.resize(pts.size());
  std::vector<Point> first;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t found = first.size();
    for (std::size_t k = 0; k < first.size(); ++k) {
      if ((first[k] - pts[i]).cwiseAbs().maxCoeff() <= tol) {
        found = k;
        break;
      }
    }
    if (found == first.size()) {
      first.push_back(pts[i]);
      g.location.push_back(Point::Zero(pts[i].size()));
      g.weight.push_back(0.0);
    }
    g.group[i] = found;
    g.location[found] += w[i] * pts[i];
    g.weight[found] += w[i];
  }
  for (std::size_t k = 0; k < g.location.size(); ++k) {
    if (g.weight[k] > 0.0) g.location[k] /= g.weight[k];
    else g.location[k] = first[k];
  }
  return g;
}

// Selector weight of a candidate point: |z - c|^3 for a fixed generic c.
double selector_weight(const Point& z) {
  static constexpr double kCentre[] = {0.3183098861837907, 0.5773502691896258, 0.7071067811865476};
  double r2 = 0.0;
  for (Index a = 0; a < z.size(); ++a) {
    const double c = kCentre[static_cast<std::size_t>(a) % 3];
    r2 += (z[a] - c) * (z[a] - c);
  }
  return r2 * std::sqrt(r2);
}

lp::LPSolution solve_projection_lp(lp::LinearProgram prog, const std::vector<lp::Term>& selector,
                                   const ProjectionOptions& options) {
  auto sol = lp::solve(prog, options.lp);
  if (!sol.optimal() || !options.canonical) return sol;
  std::vector<lp::Term> cost_row;
  for (std::size_t j = 0; j < prog.num_variables(); ++j) {
    if (prog.cost()[j] != 0.0) cost_row.emplace_back(j, prog.cost()[j]);
    prog.set_cost(j, 0.0);
  }
  const double bound = sol.primal_objective + options.canonical_slack * std::max(1.0, std::abs(sol.primal_objective));
  prog.add_le_row(cost_row, bound);
  for (const auto& [j, w] : selector) prog.set_cost(j, w);
  auto selected = lp::solve(prog, options.lp);
  if (!selected.optimal()) return sol;
  selected.iterations += sol.iterations;
  return selected;
}

DualOptions dual_options(const ProjectionOptions& o) {
  DualOptions d;
  d.lp = o.lp;
  d.lp.column_order_seed.reset();
  return d;
}

void attach_dual(ProjectionResult& r, DualCertificate dual) {
  r.dual = std::move(dual);
  r.duality_gap = duality_gap(r, *r.dual);
}

OrderCertificate martingale_certificate(Coupling pi) {
  OrderCertificate c;
  c.holds = true;
  c.kind = OrderKind::convex;
  c.martingale = std::move(pi);
  return c;
}

OrderCertificate laplacian_certificate(std::vector<double> m) {
  OrderCertificate c;
  c.holds = true;
  c.kind = OrderKind::subharmonic;
  c.laplacian_mass = std::move(m);
  return c;
}

std::vector<std::size_t> kept_columns(const std::vector<double>& mass) {
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < mass.size(); ++k)
    if (mass[k] > kKeep) keep.push_back(k);
  return keep;
}

ProjectionResult make_result(Direction dir, OrderKind order, const DiscreteMeasure& source,
                             const DiscreteMeasure& vertex, DiscreteMeasure projection,
                             Coupling coupling) {
  return ProjectionResult{.direction = dir,
                          .order = order,
                          .source = source,
                          .vertex = vertex,
                          .projection = std::move(projection),
                          .coupling = std::move(coupling)};
}

}  // namespace

std::vector<Point> unique_points(const std::vector<Point>& points, double tol) {
  std::vector<Point> out;
  for (const auto& p : points) {
    bool dup = false;
    for (const auto& q : out) {
      if ((p - q).cwiseAbs().maxCoeff() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backward convex projection by pairwise Frank-Wolfe.

ProjectionResult project_backward_convex(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const ProjectionOptions& options) {
  require_same_dim(mu, nu);
  const std::size_t m = mu.size(), n = nu.size();
  const Index d = static_cast<Index>(mu.dim());

  Eigen::MatrixXd X(static_cast<Index>(m), d), Y(static_cast<Index>(n), d);
  for (std::size_t i = 0; i < m; ++i) X.row(static_cast<Index>(i)) = mu.point(i).transpose();
  for (std::size_t j = 0; j < n; ++j) Y.row(static_cast<Index>(j)) = nu.point(j).transpose();
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(mu.weights().data(), static_cast<Index>(m));

  // Start from the quadratic optimal transport plan.
  Eigen::MatrixXd cost0(static_cast<Index>(m), static_cast<Index>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost0(static_cast<Index>(i), static_cast<Index>(j)) = sqdist(mu.point(i), nu.point(j));

  struct Atom {
    SparseVertex v;
    double alpha;
  };
  std::vector<Atom> active{{transport_vertex(cost0, mu, nu, options.lp), 1.0}};
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(n));
  auto rebuild = [&] {
    pi.setZero();
    for (const auto& a : active)
      for (const auto& [k, v] : a.v) pi(static_cast<Index>(k / n), static_cast<Index>(k % n)) += a.alpha * v;
  };
  rebuild();

  std::size_t it = 0;
  double fw_gap = std::numeric_limits<double>::infinity();
  for (; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd B = (pi * Y).array().colwise() / w.array();
    const Eigen::MatrixXd R = B - X;
    const double F = (R.rowwise().squaredNorm().array() * w.array()).sum();
    const Eigen::MatrixXd G = 2.0 * R * Y.transpose();

    SparseVertex s = transport_vertex(G, mu, nu, options.lp);
    fw_gap = (G.array() * pi.array()).sum() - pair_with(s, G, n);
    if (fw_gap <= options.fw_tolerance * std::max(1.0, F)) break;

    std::size_t away = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active.size(); ++a) {
      const double val = pair_with(active[a].v, G, n);
      if (val > worst) {
        worst = val;
        away = a;
      }
    }
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(n));
    for (const auto& [k, v] : s) D(static_cast<Index>(k / n), static_cast<Index>(k % n)) += v;
    for (const auto& [k, v] : active[away].v) D(static_cast<Index>(k / n), static_cast<Index>(k % n)) -= v;
    const Eigen::MatrixXd dB = (D * Y).array().colwise() / w.array();
    const double num = -((R.array() * dB.array()).rowwise().sum() * w.array()).sum();
    const double den = (dB.rowwise().squaredNorm().array() * w.array()).sum();
    const double gmax = active[away].alpha;
    double gamma = den > 0.0 ? std::clamp(num / den, 0.0, gmax) : gmax;
    if (!(gamma > 0.0)) break;

    active[away].alpha -= gamma;
    bool merged = false;
    for (auto& a : active) {
      if (same_vertex(a.v, s)) {
        a.alpha += gamma;
        merged = true;
        break;
      }
    }
    if (!merged) active.push_back({std::move(s), gamma});
    if (gamma == gmax || active[away].alpha <= 1e-15) active.erase(active.begin() + static_cast<long>(away));
    if (it % 50 == 49) rebuild();
    else pi += gamma * D;
  }
  rebuild();

  std::vector<Point> bary(m);
  for (std::size_t i = 0; i < m; ++i) {
    bary[i] = (pi.row(static_cast<Index>(i)) * Y).transpose() / w[static_cast<Index>(i)];
  }
  const Grouping grp = group_points(bary, mu.weights(), options.merge_tolerance);
  const std::size_t K = grp.location.size();
  Coupling to_proj{Eigen::MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(K))};
  Coupling mart{Eigen::MatrixXd::Zero(static_cast<Index>(K), static_cast<Index>(n))};
  for (std::size_t i = 0; i < m; ++i) {
    to_proj.mass(static_cast<Index>(i), static_cast<Index>(grp.group[i])) = mu.weight(i);
    mart.mass.row(static_cast<Index>(grp.group[i])) += pi.row(static_cast<Index>(i));
  }
  DiscreteMeasure proj(grp.location, grp.weight, MeasureOptions{0.0, 0.0});

  auto r = make_result(Direction::backward, OrderKind::convex, mu, nu, proj, to_proj);
  r.cost = transport_cost(r.coupling, mu, r.projection);
  r.cone_coupling = mart;
  r.order_certificate = martingale_certificate(mart);
  r.iterations = it;
  r.fw_gap = fw_gap;
  r.instance_hash = instance_hash(mu, nu);
  if (options.solve_dual) attach_dual(r, solve_dual_backward_on(mu, nu, r.projection.points(), dual_options(options)));
  return r;
}

// ---------------------------------------------------------------------------
// Two-stage LPs.

ProjectionResult project_backward_convex_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                            const std::vector<Point>& candidates,
                                            const ProjectionOptions& options) {
  require_same_dim(mu, nu);
  require_candidates(candidates, mu.dim());
  std::vector<Point> Z;
  for (const auto& z : candidates)
    if (inside_box(z, nu, 1e-9)) Z.push_back(z);
  Z = unique_points(Z, 0.0);
  if (Z.empty()) throw ConeEmpty("backward projection: no candidate lies in the hull of supp(nu)");

  const std::size_t m = mu.size(), n = nu.size(), K = Z.size(), d = mu.dim();
  lp::LinearProgram prog;
  const std::size_t p1 = prog.num_variables();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < K; ++k) prog.add_variable(sqdist(mu.point(i), Z[k]));
  const std::size_t p2 = prog.add_variables(K * n);
  auto v1 = [&](std::size_t i, std::size_t k) { return p1 + i * K + k; };
  auto v2 = [&](std::size_t k, std::size_t j) { return p2 + k * n + j; };

  std::vector<lp::Term> t;
  for (std::size_t i = 0; i < m; ++i) {
    t.clear();
    for (std::size_t k = 0; k < K; ++k) t.emplace_back(v1(i, k), 1.0);
    prog.add_eq_row(t, mu.weight(i));
  }
  for (std::size_t k = 0; k < K; ++k) {
    t.clear();
    for (std::size_t j = 0; j < n; ++j) t.emplace_back(v2(k, j), 1.0);
    for (std::size_t i = 0; i < m; ++i) t.emplace_back(v1(i, k), -1.0);
    prog.add_eq_row(t, 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) {
    t.clear();
    for (std::size_t k = 0; k < K; ++k) t.emplace_back(v2(k, j), 1.0);
    prog.add_eq_row(t, nu.weight(j));
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t a = 0; a < d; ++a) {
      t.clear();
      for (std::size_t j = 0; j < n; ++j) {
        const double c = nu.point(j)[static_cast<Index>(a)] - Z[k][static_cast<Index>(a)];
        if (c != 0.0) t.emplace_back(v2(k, j), c);
      }
      if (!t.empty()) prog.add_eq_row(t, 0.0);
    }
  }
  std::vector<lp::Term> selector;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < K; ++k) selector.emplace_back(v1(i, k), selector_weight(Z[k]));
  const auto sol = solve_projection_lp(std::move(prog), selector, options);
  if (sol.status == lp::Status::infeasible) throw ConeEmpty("backward projection LP infeasible over the candidates");
  if (!sol.optimal()) throw SolverError("backward projection LP not optimal");

  std::vector<double> mass(K, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < m; ++i) mass[k] += std::max(0.0, sol.primal[v1(i, k)]);
  const auto keep = kept_columns(mass);
  std::vector<Point> pts;
  std::vector<double> wts;
  Coupling to_proj{Eigen::MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(keep.size()))};
  Coupling mart{Eigen::MatrixXd::Zero(static_cast<Index>(keep.size()), static_cast<Index>(n))};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    pts.push_back(Z[keep[c]]);
    wts.push_back(mass[keep[c]]);
    for (std::size_t i = 0; i < m; ++i)
      to_proj.mass(static_cast<Index>(i), static_cast<Index>(c)) = std::max(0.0, sol.primal[v1(i, keep[c])]);
    for (std::size_t j = 0; j < n; ++j)
      mart.mass(static_cast<Index>(c), static_cast<Index>(j)) = std::max(0.0, sol.primal[v2(keep[c], j)]);
  }
  auto r = make_result(Direction::backward, OrderKind::convex, mu, nu,
                       DiscreteMeasure(pts, wts, MeasureOptions{0.0, 0.0}), to_proj);
  r.cost = transport_cost(r.coupling, mu, r.projection);
  r.cone_coupling = mart;
  r.order_certificate = martingale_certificate(mart);
  r.candidate_support = Z;
  r.iterations = sol.iterations;
  r.instance_hash = instance_hash(mu, nu);
  if (options.solve_dual) attach_dual(r, solve_dual_backward_on(mu, nu, Z, dual_options(options)));
  return r;
}

ProjectionResult project_forward_convex(const DiscreteMeasure& nu, const DiscreteMeasure& mu,
                                        const std::vector<Point>& candidates,
                                        const ProjectionOptions& options) {
  require_same_dim(mu, nu);
  require_candidates(candidates, mu.dim());
  const std::vector<Point> Z = unique_points(candidates, 0.0);
  const std::size_t m = mu.size(), n = nu.size(), K = Z.size(), d = mu.dim();

  lp::LinearProgram prog;
  const std::size_t p2 = prog.add_variables(m * K);
  const std::size_t p1 = prog.num_variables();
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < n; ++j) prog.add_variable(sqdist(Z[k], nu.point(j)));
  auto v2 = [&](std::size_t i, std::size_t k) { return p2 + i * K + k; };
  auto v1 = [&](std::size_t k, std::size_t j) { return p1 + k * n + j; };

  std::vector<lp::Term> t;
  for (std::size_t i = 0; i < m; ++i) {
    t.clear();
    for (std::size_t k = 0; k < K; ++k) t.emplace_back(v2(i, k), 1.0);
    prog.add_eq_row(t, mu.weight(i));
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      t.clear();
      for (std::size_t k = 0; k < K; ++k) {
        const double c = Z[k][static_cast<Index>(a)] - mu.point(i)[static_cast<Index>(a)];
        if (c != 0.0) t.emplace_back(v2(i, k), c);
      }
      if (t.empty()) continue;
      prog.add_eq_row(t, 0.0);
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    t.clear();
    for (std::size_t j = 0; j < n; ++j) t.emplace_back(v1(k, j), 1.0);
    for (std::size_t i = 0; i < m; ++i) t.emplace_back(v2(i, k), -1.0);
    prog.add_eq_row(t, 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) {
    t.clear();
    for (std::size_t k = 0; k < K; ++k) t.emplace_back(v1(k, j), 1.0);
    prog.add_eq_row(t, nu.weight(j));
  }
  std::vector<lp::Term> selector;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < n; ++j) selector.emplace_back(v1(k, j), selector_weight(Z[k]));
  const auto sol = solve_projection_lp(std::move(prog), selector, options);
  if (sol.status == lp::Status::infeasible) {
    throw ConeEmpty("forward projection: no measure on the candidates dominates mu");
  }
  if (!sol.optimal()) throw SolverError("forward projection LP not optimal");

  std::vector<double> mass(K, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < n; ++j) mass[k] += std::max(0.0, sol.primal[v1(k, j)]);
  const auto keep = kept_columns(mass);
  std::vector<Point> pts;
  std::vector<double> wts;
  Coupling to_nu{Eigen::MatrixXd::Zero(static_cast<Index>(keep.size()), static_cast<Index>(n))};
  Coupling mart{Eigen::MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(keep.size()))};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    pts.push_back(Z[keep[c]]);
    wts.push_back(mass[keep[c]]);
    for (std::size_t j = 0; j < n; ++j)
      to_nu.mass(static_cast<Index>(c), static_cast<Index>(j)) = std::max(0.0, sol.primal[v1(keep[c], j)]);
    for (std::size_t i = 0; i < m; ++i)
      mart.mass(static_cast<Index>(i), static_cast<Index>(c)) = std::max(0.0, sol.primal[v2(i, keep[c])]);
  }
  auto r = make_result(Direction::forward, OrderKind::convex, nu, mu,
                       DiscreteMeasure(pts, wts, MeasureOptions{0.0, 0.0}), to_nu);
  r.cost = transport_cost(r.coupling, r.projection, nu);
  r.cone_coupling = mart;
  r.order_certificate = martingale_certificate(mart);
  r.candidate_support = Z;
  r.iterations = sol.iterations;
  r.instance_hash = instance_hash(mu, nu);
  if (options.solve_dual) attach_dual(r, solve_dual_forward_on(mu, nu, Z, dual_options(options)));
  return r;
}

Grid default_forward_grid(const DiscreteMeasure& a, const DiscreteMeasure& b,
                          const ProjectionOptions& options) {
  require_same_dim(a, b);
  const std::size_t d = a.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto* m : {&a, &b}) {
    for (const auto& p : m->points()) {
      for (std::size_t k = 0; k < d; ++k) {
        lo[k] = std::min(lo[k], p[static_cast<Index>(k)]);
        hi[k] = std::max(hi[k], p[static_cast<Index>(k)]);
      }
    }
  }
  double widest = 0.0;
  for (std::size_t k = 0; k < d; ++k) widest = std::max(widest, 0.5 * (hi[k] - lo[k]));
  if (widest <= 0.0) widest = 1.0;
  const std::size_t count = d == 1 ? options.default_nodes_1d : options.default_nodes_2d;
  std::vector<double> glo(d), ghi(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double centre = 0.5 * (hi[k] + lo[k]);
    double half = 0.5 * (hi[k] - lo[k]);
    if (half < 1e-12 * widest) half = widest;
    glo[k] = centre - options.dilation * half;
    ghi[k] = centre + options.dilation * half;
  }
  return Grid(glo, ghi, std::vector<std::size_t>(d, count));
}

ProjectionResult project_forward_convex(const DiscreteMeasure& nu, const DiscreteMeasure& mu,
                                        const ProjectionOptions& options) {
  const Grid g = default_forward_grid(mu, nu, options);
  auto r = project_forward_convex(nu, mu, g.nodes(), options);
  r.grid = g;
  return r;
}

// ---------------------------------------------------------------------------
// Subharmonic order on a grid.

namespace {

void require_in_domain(const DiscreteMeasure& m, const Grid& g) {
  if (m.dim() != g.dim()) throw InvalidArgument("measure and grid dimensions differ");
  for (const auto& p : m.points())
    if (!g.contains(p, 1e-12)) throw InvalidArgument("atom lies outside the grid domain");
}

}  // namespace

ProjectionResult project_backward_subharmonic(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              const OrderSpec& spec, const ProjectionOptions& options) {
  require_same_dim(mu, nu);
  const Grid& g = spec.require_grid();
  require_in_domain(mu, g);
  const auto nu_nodes = interior_node_indices(nu, g);
  const auto interior = g.interior_nodes();
  const std::size_t m = mu.size(), K = interior.size();

  lp::LinearProgram prog;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < K; ++k) prog.add_variable(sqdist(mu.point(i), g.node(interior[k])));
  const std::size_t m0 = prog.add_variables(K);
  std::vector<std::vector<lp::Term>> rows(g.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < m; ++i) rows[interior[k]].emplace_back(i * K + k, 1.0);
    for (const auto& [node, w] : laplacian_stencil(g, interior[k])) rows[node].emplace_back(m0 + k, w);
  }
  std::vector<double> nu_at(g.size(), 0.0);
  for (std::size_t j = 0; j < nu.size(); ++j) nu_at[nu_nodes[j]] += nu.weight(j);
  std::vector<lp::Term> t;
  for (std::size_t i = 0; i < m; ++i) {
    t.clear();
    for (std::size_t k = 0; k < K; ++k) t.emplace_back(i * K + k, 1.0);
    prog.add_eq_row(t, mu.weight(i));
  }
  for (std::size_t node = 0; node < g.size(); ++node) prog.add_eq_row(rows[node], nu_at[node]);

  std::vector<lp::Term> selector;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < K; ++k) selector.emplace_back(i * K + k, selector_weight(g.node(interior[k])));
  const auto sol = solve_projection_lp(std::move(prog), selector, options);
  if (!sol.optimal()) throw SolverError("backward subharmonic LP not optimal");

  std::vector<double> mass(K, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < m; ++i) mass[k] += std::max(0.0, sol.primal[i * K + k]);
  const auto keep = kept_columns(mass);
  std::vector<Point> pts;
  std::vector<double> wts;
  Coupling to_proj{Eigen::MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(keep.size()))};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    pts.push_back(g.node(interior[keep[c]]));
    wts.push_back(mass[keep[c]]);
    for (std::size_t i = 0; i < m; ++i)
      to_proj.mass(static_cast<Index>(i), static_cast<Index>(c)) = std::max(0.0, sol.primal[i * K + keep[c]]);
  }
  std::vector<double> lap(K);
  for (std::size_t k = 0; k < K; ++k) lap[k] = std::max(0.0, sol.primal[m0 + k]);

  auto r = make_result(Direction::backward, OrderKind::subharmonic, mu, nu,
                       DiscreteMeasure(pts, wts, MeasureOptions{0.0, 0.0}), to_proj);
  r.cost = transport_cost(r.coupling, mu, r.projection);
  r.laplacian_mass = lap;
  r.order_certificate = laplacian_certificate(lap);
  for (std::size_t k : interior) r.candidate_support.push_back(g.node(k));
  r.grid = g;
  r.iterations = sol.iterations;
  r.instance_hash = instance_hash(mu, nu);
  if (options.solve_dual) attach_dual(r, solve_dual_backward(mu, nu, spec, g, dual_options(options)));
  return r;
}

ProjectionResult project_forward_subharmonic(const DiscreteMeasure& nu, const DiscreteMeasure& mu,
                                             const OrderSpec& spec, const ProjectionOptions& options) {
  require_same_dim(mu, nu);
  const Grid& g = spec.require_grid();
  require_in_domain(nu, g);
  const auto mu_nodes = interior_node_indices(mu, g);
  const auto interior = g.interior_nodes();
  const std::size_t n = nu.size(), G = g.size(), K = interior.size();

  lp::LinearProgram prog;
  for (std::size_t node = 0; node < G; ++node)
    for (std::size_t j = 0; j < n; ++j) prog.add_variable(sqdist(g.node(node), nu.point(j)));
  const std::size_t m0 = prog.add_variables(K);
  std::vector<std::vector<lp::Term>> rows(G);
  for (std::size_t node = 0; node < G; ++node)
    for (std::size_t j = 0; j < n; ++j) rows[node].emplace_back(node * n + j, 1.0);
  for (std::size_t k = 0; k < K; ++k)
    for (const auto& [node, w] : laplacian_stencil(g, interior[k])) rows[node].emplace_back(m0 + k, -w);
  std::vector<double> mu_at(G, 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) mu_at[mu_nodes[i]] += mu.weight(i);
  for (std::size_t node = 0; node < G; ++node) prog.add_eq_row(rows[node], mu_at[node]);
  std::vector<lp::Term> t;
  for (std::size_t j = 0; j < n; ++j) {
    t.clear();
    for (std::size_t node = 0; node < G; ++node) t.emplace_back(node * n + j, 1.0);
    prog.add_eq_row(t, nu.weight(j));
  }

  std::vector<lp::Term> selector;
  for (std::size_t node = 0; node < G; ++node)
    for (std::size_t j = 0; j < n; ++j) selector.emplace_back(node * n + j, selector_weight(g.node(node)));
  const auto sol = solve_projection_lp(std::move(prog), selector, options);
  if (!sol.optimal()) throw SolverError("forward subharmonic LP not optimal");

  std::vector<double> mass(G, 0.0);
  for (std::size_t node = 0; node < G; ++node)
    for (std::size_t j = 0; j < n; ++j) mass[node] += std::max(0.0, sol.primal[node * n + j]);
  const auto keep = kept_columns(mass);
  std::vector<Point> pts;
  std::vector<double> wts;
  Coupling to_nu{Eigen::MatrixXd::Zero(static_cast<Index>(keep.size()), static_cast<Index>(n))};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    pts.push_back(g.node(keep[c]));
    wts.push_back(mass[keep[c]]);
    for (std::size_t j = 0; j < n; ++j)
      to_nu.mass(static_cast<Index>(c), static_cast<Index>(j)) = std::max(0.0, sol.primal[keep[c] * n + j]);
  }
  std::vector<double> lap(K);
  for (std::size_t k = 0; k < K; ++k) lap[k] = std::max(0.0, sol.primal[m0 + k]);

  auto r = make_result(Direction::forward, OrderKind::subharmonic, nu, mu,
                       DiscreteMeasure(pts, wts, MeasureOptions{0.0, 0.0}), to_nu);
  r.cost = transport_cost(r.coupling, r.projection, nu);
  r.laplacian_mass = lap;
  r.order_certificate = laplacian_certificate(lap);
  r.candidate_support = g.nodes();
  r.grid = g;
  r.iterations = sol.iterations;
  r.instance_hash = instance_hash(mu, nu);
  if (options.solve_dual) attach_dual(r, solve_dual_forward(mu, nu, spec, g, dual_options(options)));
  return r;
}

// ---------------------------------------------------------------------------

ProjectionResult solve_projection(const ProjectionProblem& p, const ProjectionOptions& options) {
  switch (p.order.kind) {
    case OrderKind::convex:
      if (p.direction == Direction::backward) {
        return p.candidates.empty() ? project_backward_convex(p.source, p.vertex, options)
                                    : project_backward_convex_lp(p.source, p.vertex, p.candidates, options);
      }
      if (p.candidates.empty()) return project_forward_convex(p.source, p.vertex, options);
      return project_forward_convex(p.source, p.vertex, p.candidates, options);
    case OrderKind::subharmonic:
      return p.direction == Direction::backward
                 ? project_backward_subharmonic(p.source, p.vertex, p.order, options)
                 : project_forward_subharmonic(p.source, p.vertex, p.order, options);
    case OrderKind::trivial:
      break;
  }
  throw InvalidArgument("projection onto the trivial order cone is the vertex itself; not supported");
}

UniquenessReport uniqueness_probe(const ProjectionProblem& problem, std::size_t trials,
                                  const ProjectionOptions& options, std::uint64_t seed) {
  UniquenessReport rep;
  rep.trials = trials;
  std::vector<DiscreteMeasure> found;
  for (std::size_t t = 0; t < trials; ++t) {
    ProjectionOptions o = options;
    o.solve_dual = false;
    o.lp.column_order_seed = seed + t;
    auto r = solve_projection(problem, o);
    rep.costs.push_back(r.cost);
    found.push_back(std::move(r.projection));
  }
  for (std::size_t a = 0; a < found.size(); ++a) {
    for (std::size_t b = a + 1; b < found.size(); ++b) {
      rep.max_w2_spread = std::max(rep.max_w2_spread,
                                   std::sqrt(std::max(0.0, w2_squared(found[a], found[b], options.lp).cost)));
      rep.cost_spread = std::max(rep.cost_spread, std::abs(rep.costs[a] - rep.costs[b]));
    }
  }
  return rep;
}

}  // namespace stochproj
