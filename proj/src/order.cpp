#include "stochproj/order.hpp"

#include <algorithm>
#include <cmath>

#include "stochproj/errors.hpp"
#include "stochproj/lp.hpp"

namespace stochproj {

const char* to_string(OrderKind k) {
  switch (k) {
    case OrderKind::convex: return "convex";
    case OrderKind::subharmonic: return "subharmonic";
    case OrderKind::trivial: return "trivial";
  }
  return "?";
}

OrderKind parse_order_kind(const std::string& s) {
  if (s == "convex") return OrderKind::convex;
  if (s == "subharmonic") return OrderKind::subharmonic;
  if (s == "trivial") return OrderKind::trivial;
  throw InvalidArgument("unknown order kind '" + s + "'");
}

const Grid& OrderSpec::require_grid() const {
  if (!grid) throw InvalidArgument("subharmonic order requires a grid");
  return *grid;
}

double AffineMax::operator()(const Point& x) const {
  double best = kMinusInf;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    best = std::max(best, offsets[k] + slopes[k].dot(x));
  }
  return best;
}

double Separator::operator()(const Point& x) const {
  switch (kind) {
    case OrderKind::convex:
      return convex_function(x);
    case OrderKind::subharmonic: {
      const auto node = grid_function->grid.locate(x);
      if (!node) throw InvalidArgument("separator: point is not a grid node");
      return grid_function->values[*node];
    }
    case OrderKind::trivial:
      for (const auto& [p, v] : table) {
        if ((p - x).cwiseAbs().maxCoeff() <= 1e-12) return v;
      }
      return 0.0;
  }
  return 0.0;
}

namespace {

void check_dims(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("order check: dimension mismatch");
}

double integral(const DiscreteMeasure& m, const Separator& phi) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.weight(i) * phi(m.point(i));
  return s;
}

// Adds a pair of l1 slack columns to `row` terms.
void add_slacks(lp::LinearProgram& prog, std::vector<lp::Term>& terms) {
  const std::size_t plus = prog.add_variable(1.0);
  const std::size_t minus = prog.add_variable(1.0);
  terms.emplace_back(plus, 1.0);
  terms.emplace_back(minus, -1.0);
}

}  // namespace

std::vector<std::size_t> interior_node_indices(const DiscreteMeasure& m, const Grid& g) {
  if (m.dim() != g.dim()) throw InvalidArgument("measure and grid dimensions differ");
  std::vector<std::size_t> out;
  out.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto node = g.locate(m.point(i));
    if (!node) throw InvalidArgument("atom is not a grid node");
    if (!g.is_interior(*node)) throw InvalidArgument("atom lies on the grid boundary");
    out.push_back(*node);
  }
  return out;
}

std::vector<double> laplacian_adjoint(const Grid& g, const std::vector<double>& interior_mass) {
  const auto interior = g.interior_nodes();
  if (interior.size() != interior_mass.size()) {
    throw InvalidArgument("laplacian_adjoint: mass vector has the wrong length");
  }
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t k = 0; k < interior.size(); ++k) {
    if (interior_mass[k] == 0.0) continue;
    for (const auto& [node, w] : laplacian_stencil(g, interior[k])) out[node] += w * interior_mass[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convex order: l1-relaxed martingale transport feasibility. The LP dual
// (a_i, b_j, p_i) of the relaxation is a Farkas certificate when the residual
// is positive; phi(y) = max_i a_i + p_i.(y - x_i) then separates.

OrderCertificate check_convex_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    const OrderTolerances& tol) {
  check_dims(mu, nu);
  const std::size_t m = mu.size(), n = nu.size(), d = mu.dim();
  lp::LinearProgram prog;
  const std::size_t pi0 = prog.add_variables(m * n);
  auto var = [&](std::size_t i, std::size_t j) { return pi0 + i * n + j; };

  std::vector<lp::Term> terms;
  for (std::size_t i = 0; i < m; ++i) {
    terms.clear();
    for (std::size_t j = 0; j < n; ++j) terms.emplace_back(var(i, j), 1.0);
    add_slacks(prog, terms);
    prog.add_eq_row(terms, mu.weight(i));
  }
  for (std::size_t j = 0; j < n; ++j) {
    terms.clear();
    for (std::size_t i = 0; i < m; ++i) terms.emplace_back(var(i, j), 1.0);
    add_slacks(prog, terms);
    prog.add_eq_row(terms, nu.weight(j));
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      terms.clear();
      for (std::size_t j = 0; j < n; ++j) {
        const double c = nu.point(j)[a] - mu.point(i)[a];
        if (c != 0.0) terms.emplace_back(var(i, j), c);
      }
      add_slacks(prog, terms);
      prog.add_eq_row(terms, 0.0);
    }
  }

  const auto sol = lp::solve(prog);
  if (!sol.optimal()) throw SolverError("convex order LP did not reach optimality");

  OrderCertificate cert;
  cert.kind = OrderKind::convex;
  if (sol.primal_objective <= tol.feasibility) {
    cert.holds = true;
    Coupling pi{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n))};
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        pi.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::max(0.0, sol.primal[var(i, j)]);
    cert.martingale = std::move(pi);
    return cert;
  }

  const auto& y = sol.dual_multipliers;
  Separator sep;
  sep.kind = OrderKind::convex;
  for (std::size_t i = 0; i < m; ++i) {
    Point p(static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a) p[static_cast<Eigen::Index>(a)] = y[m + n + i * d + a];
    sep.convex_function.offsets.push_back(y[i] - p.dot(mu.point(i)));
    sep.convex_function.slopes.push_back(std::move(p));
  }
  sep.gap = integral(mu, sep) - integral(nu, sep);
  cert.separator = std::move(sep);
  return cert;
}

// ---------------------------------------------------------------------------
// Subharmonic order on a grid: nu - mu = L^T m with m >= 0 on interior nodes.

OrderCertificate check_subharmonic_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const OrderSpec& spec, const OrderTolerances& tol) {
  check_dims(mu, nu);
  const Grid& g = spec.require_grid();
  const auto mu_nodes = interior_node_indices(mu, g);
  const auto nu_nodes = interior_node_indices(nu, g);
  const auto interior = g.interior_nodes();

  std::vector<double> diff(g.size(), 0.0);
  for (std::size_t j = 0; j < nu.size(); ++j) diff[nu_nodes[j]] += nu.weight(j);
  for (std::size_t i = 0; i < mu.size(); ++i) diff[mu_nodes[i]] -= mu.weight(i);

  lp::LinearProgram prog;
  const std::size_t m0 = prog.add_variables(interior.size());
  std::vector<std::vector<lp::Term>> rows(g.size());
  for (std::size_t k = 0; k < interior.size(); ++k) {
    for (const auto& [node, w] : laplacian_stencil(g, interior[k])) rows[node].emplace_back(m0 + k, w);
  }
  for (std::size_t node = 0; node < g.size(); ++node) {
    add_slacks(prog, rows[node]);
    prog.add_eq_row(rows[node], diff[node]);
  }

  const auto sol = lp::solve(prog);
  if (!sol.optimal()) throw SolverError("subharmonic order LP did not reach optimality");

  OrderCertificate cert;
  cert.kind = OrderKind::subharmonic;
  if (sol.primal_objective <= tol.feasibility) {
    cert.holds = true;
    std::vector<double> mass(interior.size());
    for (std::size_t k = 0; k < interior.size(); ++k) mass[k] = std::max(0.0, sol.primal[m0 + k]);
    cert.laplacian_mass = std::move(mass);
    return cert;
  }

  std::vector<double> phi(g.size());
  for (std::size_t node = 0; node < g.size(); ++node) phi[node] = -sol.dual_multipliers[node];
  Separator sep;
  sep.kind = OrderKind::subharmonic;
  sep.grid_function = GridFunction(g, std::move(phi));
  sep.gap = integral(mu, sep) - integral(nu, sep);
  cert.separator = std::move(sep);
  return cert;
}

// ---------------------------------------------------------------------------

OrderCertificate check_trivial_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                     const OrderTolerances& tol) {
  check_dims(mu, nu);
  OrderCertificate cert;
  cert.kind = OrderKind::trivial;
  if (same_measure(mu, nu, tol.trivial)) {
    cert.holds = true;
    return cert;
  }
  auto weight_at = [](const DiscreteMeasure& m, const Point& x) {
    double w = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if ((m.point(i) - x).cwiseAbs().maxCoeff() <= 1e-12) w += m.weight(i);
    }
    return w;
  };
  Separator sep;
  sep.kind = OrderKind::trivial;
  auto consider = [&](const Point& x) {
    for (const auto& [p, v] : sep.table) {
      if ((p - x).cwiseAbs().maxCoeff() <= 1e-12) return;
    }
    sep.table.emplace_back(x, weight_at(mu, x) > weight_at(nu, x) ? 1.0 : 0.0);
  };
  for (const auto& x : mu.points()) consider(x);
  for (const auto& x : nu.points()) consider(x);
  sep.gap = integral(mu, sep) - integral(nu, sep);
  cert.separator = std::move(sep);
  return cert;
}

OrderCertificate check_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const OrderSpec& spec, const OrderTolerances& tol) {
  switch (spec.kind) {
    case OrderKind::convex: return check_convex_order(mu, nu, tol);
    case OrderKind::subharmonic: return check_subharmonic_order(mu, nu, spec, tol);
    case OrderKind::trivial: return check_trivial_order(mu, nu, tol);
  }
  throw InvalidArgument("unknown order kind");
}

// ---------------------------------------------------------------------------

CertificateCheck verify_certificate(const OrderCertificate& cert, const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu, const OrderSpec& spec,
                                    const OrderTolerances& tol) {
  CertificateCheck out;
  if (!cert.holds) {
    if (!cert.separator) {
      out.detail = "violation without separator";
      return out;
    }
    const Separator& sep = *cert.separator;
    if (sep.kind == OrderKind::subharmonic) {
      const GridFunction& f = *sep.grid_function;
      double worst = 0.0;
      for (std::size_t k : f.grid.interior_nodes()) worst = std::min(worst, discrete_laplacian(f, k));
      double scale = 0.0;
      for (double v : f.values) scale = std::max(scale, std::abs(v));
      for (double h : f.grid.spacings()) scale /= h * h;
      if (worst < -1e-9 * std::max(1.0, scale)) {
        out.detail = "separator has negative discrete Laplacian";
        out.residual = worst;
        return out;
      }
    }
    out.residual = integral(mu, sep) - integral(nu, sep);
    out.ok = out.residual > tol.separation;
    out.detail = out.ok ? "separating function verified" : "integral gap too small";
    return out;
  }

  switch (cert.kind) {
    case OrderKind::convex: {
      if (!cert.martingale) {
        out.detail = "missing martingale coupling";
        return out;
      }
      const Coupling& pi = *cert.martingale;
      double res = marginal_residual(pi, mu, nu);
      for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto row = pi.mass.row(static_cast<Eigen::Index>(i));
        const double w = row.sum();
        if (w <= 0.0) continue;
        Point bary = Point::Zero(static_cast<Eigen::Index>(mu.dim()));
        for (std::size_t j = 0; j < nu.size(); ++j) bary += row(static_cast<Eigen::Index>(j)) * nu.point(j);
        bary /= w;
        res = std::max(res, (bary - mu.point(i)).cwiseAbs().maxCoeff());
      }
      out.residual = res;
      break;
    }
    case OrderKind::subharmonic: {
      if (!cert.laplacian_mass) {
        out.detail = "missing Laplacian mass";
        return out;
      }
      const Grid& g = spec.require_grid();
      std::vector<double> rhs = laplacian_adjoint(g, *cert.laplacian_mass);
      for (std::size_t j = 0; j < nu.size(); ++j) rhs[*g.locate(nu.point(j))] -= nu.weight(j);
      for (std::size_t i = 0; i < mu.size(); ++i) rhs[*g.locate(mu.point(i))] += mu.weight(i);
      double res = 0.0;
      for (double v : rhs) res = std::max(res, std::abs(v));
      for (double v : *cert.laplacian_mass) res = std::max(res, -v);
      out.residual = res;
      break;
    }
    case OrderKind::trivial:
      out.residual = same_measure(mu, nu, tol.trivial) ? 0.0 : 1.0;
      break;
  }
  out.ok = out.residual <= tol.witness;
  out.detail = out.ok ? "witness verified" : "witness residual too large";
  return out;
}

}  // namespace stochproj
