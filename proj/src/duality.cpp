#include "stochproj/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stochproj/errors.hpp"
#include "stochproj/projection.hpp"

namespace stochproj {

const char* to_string(Direction d) { return d == Direction::backward ? "backward" : "forward"; }

Direction parse_direction(const std::string& s) {
  if (s == "backward") return Direction::backward;
  if (s == "forward") return Direction::forward;
  throw InvalidArgument("unknown direction '" + s + "'");
}

std::size_t instance_hash(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::size_t h = mu.hash();
  h ^= nu.hash() + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

double DualCertificate::evaluate(const Point& x) const {
  if (order == OrderKind::convex) return planes(x);
  if (const auto node = grid->locate(x)) return potential[*node];
  return GridFunction(*grid, potential).interpolate(x);
}

bool DualCertificate::interpolated(const Point& x) const {
  return order != OrderKind::convex && !grid->locate(x).has_value();
}

GridFunction DualCertificate::sample(const Grid& g) const {
  return GridFunction::sample(g, [this](const Point& x) { return evaluate(x); });
}

namespace {

using Index = Eigen::Index;

double sqdist(const Point& a, const Point& b) { return (a - b).squaredNorm(); }

std::size_t nearest(const std::vector<Point>& pts, const Point& q) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double d = sqdist(pts[k], q);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best;
}

void require_in_grid(const DiscreteMeasure& m, const Grid& g) {
  if (m.dim() != g.dim()) throw InvalidArgument("dual: measure and grid dimensions differ");
  for (const auto& p : m.points())
    if (!g.contains(p, 1e-12)) throw InvalidArgument("dual: atom outside the potential grid");
}

lp::LPSolution solve_or_throw(const lp::LinearProgram& prog, const lp::SolverOptions& opts) {
  auto sol = lp::solve(prog, opts);
  if (sol.status == lp::Status::unbounded) {
    throw SolverError("dual LP unbounded: class constraints do not bound the potential");
  }
  if (!sol.optimal()) throw SolverError("dual LP infeasible");
  return sol;
}

// Convex-order candidates outside the bounding box of supp(nu) cannot carry
// mass below nu; the primal LP drops them and so does the dual.
std::vector<Point> backward_nodes(const std::vector<Point>& nodes, const DiscreteMeasure& nu) {
  std::vector<Point> out;
  for (const auto& z : nodes) {
    bool in = true;
    for (Index a = 0; a < z.size() && in; ++a) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& p : nu.points()) {
        lo = std::min(lo, p[a]);
        hi = std::max(hi, p[a]);
      }
      in = z[a] >= lo - 1e-9 && z[a] <= hi + 1e-9;
    }
    if (in) out.push_back(z);
  }
  out = unique_points(out, 0.0);
  if (out.empty()) throw ConeEmpty("dual: no node lies in the hull of supp(nu)");
  return out;
}

double q2_over(const DualCertificate& c, const std::vector<Point>& S, const Point& x, double shift) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& z : S) best = std::min(best, c.evaluate(z) + shift + sqdist(x, z));
  return best;
}

double q2bar_over(const DualCertificate& c, const std::vector<Point>& S, const Point& y, double shift) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& z : S) best = std::max(best, c.evaluate(z) + shift - sqdist(z, y));
  return best;
}

void finish(DualCertificate& c, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  c.transformed.clear();
  if (c.direction == Direction::backward) {
    for (const auto& x : mu.points()) c.transformed.push_back(q2_over(c, c.nodes, x, 0.0));
  } else {
    for (const auto& y : nu.points()) c.transformed.push_back(q2bar_over(c, c.nodes, y, 0.0));
  }
  c.dual_value = evaluate_dual_objective(c, mu, nu);
  c.instance_hash = instance_hash(mu, nu);
}

}  // namespace

// ---------------------------------------------------------------------------
// Convex order. Variables are affine planes attached to nodes, so the
// potential max_k plane_k is convex without any discretized class rows.

DualCertificate solve_dual_backward_on(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const std::vector<Point>& nodes, const DualOptions& options) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("dual: dimension mismatch");
  const std::vector<Point> Z = backward_nodes(nodes, nu);
  const std::size_t m = mu.size(), n = nu.size(), K = Z.size(), d = mu.dim();

  lp::LinearProgram prog;
  std::vector<std::size_t> u(m), a(K), p(K * d), psi(n);
  for (std::size_t i = 0; i < m; ++i) u[i] = prog.add_free_variable(-mu.weight(i));
  for (std::size_t k = 0; k < K; ++k) a[k] = prog.add_free_variable(0.0);
  for (std::size_t k = 0; k < K * d; ++k) p[k] = prog.add_free_variable(0.0);
  for (std::size_t j = 0; j < n; ++j) psi[j] = prog.add_free_variable(nu.weight(j));

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < K; ++k)
      prog.add_le_row({{u[i], 1.0}, {a[k], -1.0}}, sqdist(mu.point(i), Z[k]));
  std::vector<lp::Term> t;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      t.assign({{a[k], 1.0}, {psi[j], -1.0}});
      for (std::size_t c = 0; c < d; ++c) {
        const double coef = nu.point(j)[static_cast<Index>(c)] - Z[k][static_cast<Index>(c)];
        if (coef != 0.0) t.emplace_back(p[k * d + c], coef);
      }
      prog.add_le_row(t, 0.0);
    }
  }
  const std::size_t anchor = nearest(Z, mean(nu));
  prog.add_eq_row({{a[anchor], 1.0}}, 0.0);

  const auto sol = solve_or_throw(prog, options.lp);
  DualCertificate c;
  c.direction = Direction::backward;
  c.order = OrderKind::convex;
  c.nodes = Z;
  c.lp_value = -sol.primal_objective;
  for (std::size_t k = 0; k < K; ++k) {
    Point slope(static_cast<Index>(d));
    for (std::size_t q = 0; q < d; ++q) slope[static_cast<Index>(q)] = sol.primal[p[k * d + q]];
    c.planes.offsets.push_back(sol.primal[a[k]] - slope.dot(Z[k]));
    c.planes.slopes.push_back(std::move(slope));
  }
  const double base = c.planes(Z[anchor]);
  for (double& o : c.planes.offsets) o -= base;
  for (const auto& z : Z) c.potential.push_back(c.planes(z));
  c.anchor = anchor;
  c.anchor_value = c.potential[anchor];
  finish(c, mu, nu);
  return c;
}

DualCertificate solve_dual_forward_on(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const std::vector<Point>& nodes, const DualOptions& options) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("dual: dimension mismatch");
  if (nodes.empty()) throw InvalidArgument("dual: empty node set");
  const std::vector<Point> Z = unique_points(nodes, 0.0);
  const std::size_t m = mu.size(), n = nu.size(), K = Z.size(), d = mu.dim();

  lp::LinearProgram prog;
  std::vector<std::size_t> alpha(m), p(m * d), phi(K), w(n);
  for (std::size_t i = 0; i < m; ++i) alpha[i] = prog.add_free_variable(-mu.weight(i));
  for (std::size_t k = 0; k < m * d; ++k) p[k] = prog.add_free_variable(0.0);
  for (std::size_t k = 0; k < K; ++k) phi[k] = prog.add_free_variable(0.0);
  for (std::size_t j = 0; j < n; ++j) w[j] = prog.add_free_variable(nu.weight(j));

  std::vector<lp::Term> t;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      t.assign({{alpha[i], 1.0}, {phi[k], -1.0}});
      for (std::size_t c = 0; c < d; ++c) {
        const double coef = Z[k][static_cast<Index>(c)] - mu.point(i)[static_cast<Index>(c)];
        if (coef != 0.0) t.emplace_back(p[i * d + c], coef);
      }
      prog.add_le_row(t, 0.0);
    }
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < n; ++j)
      prog.add_le_row({{phi[k], 1.0}, {w[j], -1.0}}, sqdist(Z[k], nu.point(j)));
  const std::size_t anchor = nearest(Z, mean(nu));
  prog.add_eq_row({{phi[anchor], 1.0}}, 0.0);

  const auto sol = solve_or_throw(prog, options.lp);
  DualCertificate c;
  c.direction = Direction::forward;
  c.order = OrderKind::convex;
  c.nodes = Z;
  c.lp_value = -sol.primal_objective;
  for (std::size_t i = 0; i < m; ++i) {
    Point slope(static_cast<Index>(d));
    for (std::size_t q = 0; q < d; ++q) slope[static_cast<Index>(q)] = sol.primal[p[i * d + q]];
    c.planes.offsets.push_back(sol.primal[alpha[i]] - slope.dot(mu.point(i)));
    c.planes.slopes.push_back(std::move(slope));
  }
  const double base = c.planes(Z[anchor]);
  for (double& o : c.planes.offsets) o -= base;
  for (const auto& z : Z) c.potential.push_back(c.planes(z));
  c.anchor = anchor;
  c.anchor_value = c.potential[anchor];
  finish(c, mu, nu);
  return c;
}

// ---------------------------------------------------------------------------
// Subharmonic order: grid potentials with L psi >= 0 at interior nodes.

namespace {

void add_subharmonic_rows(lp::LinearProgram& prog, const Grid& g, const std::vector<std::size_t>& psi) {
  std::vector<lp::Term> t;
  for (std::size_t k : g.interior_nodes()) {
    t.clear();
    for (const auto& [node, w] : laplacian_stencil(g, k)) t.emplace_back(psi[node], -w);
    prog.add_le_row(t, 0.0);
  }
}

std::size_t nearest_node_in(const Grid& g, const std::vector<std::size_t>& nodes, const Point& q) {
  std::size_t best = nodes.front();
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t k : nodes) {
    const double d = sqdist(g.node(k), q);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

DualCertificate solve_dual_backward(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    const OrderSpec& order, const Grid& potential_grid,
                                    const DualOptions& options) {
  if (order.kind == OrderKind::convex) {
    require_in_grid(mu, potential_grid);
    require_in_grid(nu, potential_grid);
    auto c = solve_dual_backward_on(mu, nu, potential_grid.nodes(), options);
    c.grid = potential_grid;
    return c;
  }
  if (order.kind != OrderKind::subharmonic) throw InvalidArgument("dual: unsupported order");
  const Grid& g = potential_grid;
  require_in_grid(mu, g);
  const auto nu_nodes = interior_node_indices(nu, g);
  const auto interior = g.interior_nodes();
  const std::size_t m = mu.size(), G = g.size();

  lp::LinearProgram prog;
  std::vector<std::size_t> u(m), psi(G);
  for (std::size_t i = 0; i < m; ++i) u[i] = prog.add_free_variable(-mu.weight(i));
  for (std::size_t node = 0; node < G; ++node) psi[node] = prog.add_free_variable(0.0);
  for (std::size_t j = 0; j < nu.size(); ++j) prog.set_cost(psi[nu_nodes[j]], prog.cost()[psi[nu_nodes[j]]] + nu.weight(j));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k : interior)
      prog.add_le_row({{u[i], 1.0}, {psi[k], -1.0}}, sqdist(mu.point(i), g.node(k)));
  add_subharmonic_rows(prog, g, psi);
  const std::size_t anchor = nearest_node_in(g, interior, mean(nu));
  prog.add_eq_row({{psi[anchor], 1.0}}, 0.0);

  const auto sol = solve_or_throw(prog, options.lp);
  DualCertificate c;
  c.direction = Direction::backward;
  c.order = OrderKind::subharmonic;
  c.grid = g;
  for (std::size_t k : interior) c.nodes.push_back(g.node(k));
  c.lp_value = -sol.primal_objective;
  c.potential.resize(G);
  for (std::size_t node = 0; node < G; ++node) c.potential[node] = sol.primal[psi[node]];
  c.anchor = anchor;
  c.anchor_value = c.potential[anchor];
  finish(c, mu, nu);
  return c;
}

DualCertificate solve_dual_forward(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const OrderSpec& order, const Grid& potential_grid,
                                   const DualOptions& options) {
  if (order.kind == OrderKind::convex) {
    require_in_grid(mu, potential_grid);
    require_in_grid(nu, potential_grid);
    auto c = solve_dual_forward_on(mu, nu, potential_grid.nodes(), options);
    c.grid = potential_grid;
    return c;
  }
  if (order.kind != OrderKind::subharmonic) throw InvalidArgument("dual: unsupported order");
  const Grid& g = potential_grid;
  require_in_grid(nu, g);
  const auto mu_nodes = interior_node_indices(mu, g);
  const std::size_t n = nu.size(), G = g.size();

  lp::LinearProgram prog;
  std::vector<std::size_t> psi(G), w(n);
  for (std::size_t node = 0; node < G; ++node) psi[node] = prog.add_free_variable(0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) prog.set_cost(psi[mu_nodes[i]], prog.cost()[psi[mu_nodes[i]]] - mu.weight(i));
  for (std::size_t j = 0; j < n; ++j) w[j] = prog.add_free_variable(nu.weight(j));
  for (std::size_t node = 0; node < G; ++node)
    for (std::size_t j = 0; j < n; ++j)
      prog.add_le_row({{psi[node], 1.0}, {w[j], -1.0}}, sqdist(g.node(node), nu.point(j)));
  add_subharmonic_rows(prog, g, psi);
  const auto interior = g.interior_nodes();
  const std::size_t anchor = nearest_node_in(g, interior, mean(nu));
  prog.add_eq_row({{psi[anchor], 1.0}}, 0.0);

  const auto sol = solve_or_throw(prog, options.lp);
  DualCertificate c;
  c.direction = Direction::forward;
  c.order = OrderKind::subharmonic;
  c.grid = g;
  c.nodes = g.nodes();
  c.lp_value = -sol.primal_objective;
  c.potential.resize(G);
  for (std::size_t node = 0; node < G; ++node) c.potential[node] = sol.primal[psi[node]];
  c.anchor = anchor;
  finish(c, mu, nu);

  if (options.tighten && g.dim() <= 2) {
    const GridFunction current(g, c.potential);
    GridFunction tight = q2e(q2bar(current, g), g, options.envelope);
    const double shift = tight.values[anchor];
    for (double& v : tight.values) v -= shift;
    DualCertificate alt = c;
    alt.potential = tight.values;
    finish(alt, mu, nu);
    if (alt.dual_value >= c.dual_value - 1e-12 * std::max(1.0, std::abs(c.dual_value))) c = std::move(alt);
  }
  c.anchor_value = c.potential[anchor];
  return c;
}

// ---------------------------------------------------------------------------

double evaluate_dual_objective(const DualCertificate& dual, const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu, double shift,
                               const std::vector<Point>& extra_nodes) {
  std::vector<Point> S = dual.nodes;
  S.insert(S.end(), extra_nodes.begin(), extra_nodes.end());
  double value = 0.0;
  if (dual.direction == Direction::backward) {
    for (std::size_t i = 0; i < mu.size(); ++i) value += mu.weight(i) * q2_over(dual, S, mu.point(i), shift);
    for (std::size_t j = 0; j < nu.size(); ++j) value -= nu.weight(j) * (dual.evaluate(nu.point(j)) + shift);
  } else {
    for (std::size_t i = 0; i < mu.size(); ++i) value += mu.weight(i) * (dual.evaluate(mu.point(i)) + shift);
    for (std::size_t j = 0; j < nu.size(); ++j) value -= nu.weight(j) * q2bar_over(dual, S, nu.point(j), shift);
  }
  return value;
}

double duality_gap(const ProjectionResult& primal, const DualCertificate& dual) {
  if (primal.direction != dual.direction || primal.order != dual.order) {
    throw InvalidArgument("duality_gap: primal and dual solve different problems");
  }
  if (primal.instance_hash != dual.instance_hash) {
    throw InvalidArgument("duality_gap: primal and dual belong to different instances");
  }
  const bool backward = primal.direction == Direction::backward;
  const DiscreteMeasure& mu = backward ? primal.source : primal.vertex;
  const DiscreteMeasure& nu = backward ? primal.vertex : primal.source;
  return primal.cost - evaluate_dual_objective(dual, mu, nu, 0.0, primal.projection.points());
}

PotentialReport verify_potential_property(const DualCertificate& dual,
                                          const DiscreteMeasure& projection,
                                          const DiscreteMeasure& vertex, double tol) {
  PotentialReport r;
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < projection.size(); ++i) {
    a += projection.weight(i) * dual.evaluate(projection.point(i));
    r.interpolated = r.interpolated || dual.interpolated(projection.point(i));
  }
  for (std::size_t j = 0; j < vertex.size(); ++j) {
    b += vertex.weight(j) * dual.evaluate(vertex.point(j));
    r.interpolated = r.interpolated || dual.interpolated(vertex.point(j));
  }
  r.residual = std::abs(a - b);
  r.ok = r.residual <= tol;
  return r;
}

CrosscheckReport crosscheck_dual_equivalence(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                             const Grid& potential_grid, double tol,
                                             const DualOptions& options) {
  const auto back = solve_dual_backward(mu, nu, OrderSpec::convex(), potential_grid, options);
  const auto fwd = solve_dual_forward(mu, nu, OrderSpec::convex(), potential_grid, options);
  const std::vector<Point> Zb = back.nodes;
  const std::vector<Point> Zf = fwd.nodes;
  std::vector<Point> Zb_nu = Zb, Zf_mu = Zf;
  Zb_nu.insert(Zb_nu.end(), nu.points().begin(), nu.points().end());
  Zf_mu.insert(Zf_mu.end(), mu.points().begin(), mu.points().end());

  // Backward objective at psi = Q2bar(phi_forward).
  auto psi = [&](const Point& y) { return q2bar_over(fwd, Zf_mu, y, 0.0); };
  double bval = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& z : Zb) best = std::min(best, psi(z) + sqdist(mu.point(i), z));
    bval += mu.weight(i) * best;
  }
  for (std::size_t j = 0; j < nu.size(); ++j) bval -= nu.weight(j) * psi(nu.point(j));

  // Forward objective at zeta = Q2(phi_backward).
  auto zeta = [&](const Point& x) { return q2_over(back, Zb_nu, x, 0.0); };
  double fval = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) fval += mu.weight(i) * zeta(mu.point(i));
  for (std::size_t j = 0; j < nu.size(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& z : Zf) best = std::max(best, zeta(z) - sqdist(z, nu.point(j)));
    fval -= nu.weight(j) * best;
  }

  CrosscheckReport r;
  r.backward_value = back.dual_value;
  r.forward_value = fwd.dual_value;
  r.backward_at_forward = bval;
  r.forward_at_backward = fval;
  r.max_residual = std::max(std::abs(bval - back.dual_value), std::abs(fval - fwd.dual_value));
  r.ok = r.max_residual <= tol;
  return r;
}

}  // namespace stochproj
