#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stochproj/measure.hpp"
#include "stochproj/transforms.hpp"

namespace stochproj {

enum class OrderKind { convex, subharmonic, trivial };

const char* to_string(OrderKind k);
OrderKind parse_order_kind(const std::string& s);

/// Which stochastic order, and for the subharmonic order the grid whose
/// interior-node Laplacian defines the test-function cone.
struct OrderSpec {
  OrderKind kind = OrderKind::convex;
  std::optional<Grid> grid;

  static OrderSpec convex() { return {OrderKind::convex, std::nullopt}; }
  static OrderSpec trivial() { return {OrderKind::trivial, std::nullopt}; }
  static OrderSpec subharmonic(Grid g) { return {OrderKind::subharmonic, std::move(g)}; }

  const Grid& require_grid() const;
};

/// Convex piecewise-affine function max_k (offset_k + slope_k . x).
struct AffineMax {
  std::vector<double> offsets;
  std::vector<Point> slopes;

  double operator()(const Point& x) const;
  bool empty() const { return offsets.empty(); }
};

/// Test function witnessing  integral(phi, mu) > integral(phi, nu).
struct Separator {
  OrderKind kind = OrderKind::convex;
  AffineMax convex_function;                        // convex order
  std::optional<GridFunction> grid_function;        // subharmonic order, L phi >= 0
  std::vector<std::pair<Point, double>> table;      // trivial order, atom indicator
  double gap = 0.0;                                 // integral(phi, mu) - integral(phi, nu)

  double operator()(const Point& x) const;
};

struct OrderCertificate {
  bool holds = false;
  OrderKind kind = OrderKind::convex;
  std::optional<Coupling> martingale;              // convex, holds
  std::optional<std::vector<double>> laplacian_mass;  // subharmonic, holds; per interior node
  std::optional<Separator> separator;              // holds = false
};

struct OrderTolerances {
  double feasibility = 1e-9;   // l1 residual below which the cone LP counts as feasible
  double witness = 1e-8;       // re-verification of holds = true witnesses
  double separation = 1e-9;    // minimum integral gap for holds = false
  double trivial = 1e-12;
};

OrderCertificate check_convex_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    const OrderTolerances& tol = {});
OrderCertificate check_subharmonic_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const OrderSpec& spec, const OrderTolerances& tol = {});
OrderCertificate check_trivial_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                     const OrderTolerances& tol = {});
OrderCertificate check_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const OrderSpec& spec, const OrderTolerances& tol = {});

struct CertificateCheck {
  bool ok = false;
  double residual = 0.0;  // witness residual (holds) or integral gap (violation)
  std::string detail;
};

/// Re-verifies a certificate with plain arithmetic, independent of the solver.
CertificateCheck verify_certificate(const OrderCertificate& cert, const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu, const OrderSpec& spec,
                                    const OrderTolerances& tol = {});

/// Maps every atom to its interior grid node; throws on off-grid or boundary atoms.
std::vector<std::size_t> interior_node_indices(const DiscreteMeasure& m, const Grid& g);

/// L^T m as a measure-sized vector over all grid nodes, with m indexed like
/// `g.interior_nodes()`.
std::vector<double> laplacian_adjoint(const Grid& g, const std::vector<double>& interior_mass);

}  // namespace stochproj
