#include "stochproj/suite.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>

#include "stochproj/errors.hpp"
#include "stochproj/order.hpp"
#include "stochproj/projection.hpp"
#include "stochproj/transforms.hpp"

namespace stochproj {

namespace {

using Rng = std::mt19937_64;

struct Tally {
  SuiteRow row;

  Tally(std::string name, double tol) {
    row.invariant = std::move(name);
    row.tolerance = tol;
  }
  void record(double residual) {
    ++row.trials;
    if (residual <= row.tolerance) ++row.passed;
    if (!(residual <= row.worst_residual)) row.worst_residual = residual;
  }
  void record(bool ok, double residual) {
    ++row.trials;
    if (ok) ++row.passed;
    row.worst_residual = std::max(row.worst_residual, residual);
  }
};

DiscreteMeasure random_measure(Rng& rng, std::size_t n, std::size_t dim, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.2, 1.0);
  std::vector<Point> pts;
  std::vector<double> wts;
  for (std::size_t i = 0; i < n; ++i) {
    Point x(dim);
    for (std::size_t a = 0; a < dim; ++a) x[a] = scale * u(rng);
    pts.push_back(std::move(x));
    wts.push_back(w(rng));
  }
  return DiscreteMeasure(std::move(pts), std::move(wts));
}

// Each atom x of mu is split into x + s and x - t with masses t/(s+t) and s/(s+t).
DiscreteMeasure spread(Rng& rng, const DiscreteMeasure& mu) {
  std::uniform_real_distribution<double> len(0.05, 0.8);
  std::vector<Point> pts;
  std::vector<double> wts;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double s = len(rng), t = len(rng);
    pts.push_back(mu.point(i).array() + s);
    wts.push_back(mu.weight(i) * t / (s + t));
    pts.push_back(mu.point(i).array() - t);
    wts.push_back(mu.weight(i) * s / (s + t));
  }
  return DiscreteMeasure(std::move(pts), std::move(wts));
}

DiscreteMeasure recentre(const DiscreteMeasure& m, const Point& target) {
  return translate(m, target - mean(m));
}

// 1D convex order through call functions C(t) = sum w (x - t)+ at every kink.
bool call_function_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol) {
  if (std::abs(mean(mu)[0] - mean(nu)[0]) > tol) return false;
  auto call = [](const DiscreteMeasure& m, double t) {
    double c = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) c += m.weight(i) * std::max(m.point(i)[0] - t, 0.0);
    return c;
  };
  for (const auto* m : {&mu, &nu}) {
    for (const auto& p : m->points()) {
      if (call(mu, p[0]) > call(nu, p[0]) + tol) return false;
    }
  }
  return true;
}

void order_battery(const SuiteConfig& cfg, Rng& rng, std::vector<SuiteRow>& rows) {
  Tally agree("order_oracle_agreement", 0.0);
  Tally witness("order_witness_verified", 1e-8);
  Tally separator("order_separator_gap", 1e-9);
  std::uniform_int_distribution<std::size_t> size(2, std::max<std::size_t>(2, cfg.max_atoms_1d / 2));

  for (std::size_t t = 0; t < cfg.order_pairs; ++t) {
    DiscreteMeasure mu = random_measure(rng, size(rng), 1, 1.0);
    std::optional<DiscreteMeasure> nu;
    switch (t % 3) {
      case 0: nu.emplace(spread(rng, mu)); break;
      case 1: nu.emplace(recentre(random_measure(rng, size(rng), 1, 1.2), mean(mu))); break;
      default: {
        DiscreteMeasure wide = spread(rng, mu);
        nu.emplace(mu);
        mu = wide;
      }
    }
    const OrderCertificate cert = check_convex_order(mu, *nu);
    const bool oracle = call_function_order(mu, *nu, 1e-9);
    agree.record(cert.holds == oracle, cert.holds == oracle ? 0.0 : 1.0);
    const CertificateCheck check = verify_certificate(cert, mu, *nu, OrderSpec::convex());
    if (cert.holds) {
      witness.record(check.ok, check.residual);
    } else {
      ++separator.row.trials;
      if (check.ok) ++separator.row.passed;
      if (separator.row.trials == 1 || check.residual < separator.row.worst_residual) {
        separator.row.worst_residual = check.residual;
      }
    }
  }
  rows.push_back(agree.row);
  rows.push_back(witness.row);
  rows.push_back(separator.row);
}

void projection_battery(const SuiteConfig& cfg, Rng& rng, std::vector<SuiteRow>& rows) {
  Tally gap("projection_duality_gap", cfg.gap_tolerance);
  Tally support("backward_support_in_hull", 1e-9);
  Tally potential("potential_property", 1e-6);

  for (std::size_t t = 0; t < cfg.projections; ++t) {
    const std::size_t dim = t < cfg.projections / 2 ? 1 : 2;
    std::uniform_int_distribution<std::size_t> size(3, dim == 1 ? cfg.max_atoms_1d : cfg.max_atoms_2d);
    const std::size_t m = size(rng), n = size(rng);
    const DiscreteMeasure mu = random_measure(rng, m, dim, 1.0);
    const DiscreteMeasure nu = random_measure(rng, n, dim, 1.2);
    const bool backward = t % 2 == 0;
    try {
      const ProjectionResult r =
          backward ? project_backward_convex(mu, nu) : project_forward_convex(nu, mu);
      gap.record(std::abs(r.duality_gap));
      if (r.dual) {
        potential.record(verify_potential_property(*r.dual, r.projection, r.vertex).residual);
      }
      if (backward) {
        bool inside = true;
        for (const auto& z : r.projection.points()) {
          inside = inside && convex_hull_contains(nu.points(), z, 1e-9);
        }
        support.record(inside, inside ? 0.0 : 1.0);
      }
    } catch (const SolverError&) {
      gap.record(kPlusInf);
    }
  }
  rows.push_back(gap.row);
  rows.push_back(support.row);
  rows.push_back(potential.row);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

void transform_battery(const SuiteConfig& cfg, Rng& rng, std::vector<SuiteRow>& rows) {
  Tally involution("transform_involution", 1e-12);
  Tally legendre_form("transform_legendre_vs_direct", 1e-12);
  Tally fixed_point("transform_envelope_fixed_point", 1e-9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  for (std::size_t t = 0; t < cfg.transforms; ++t) {
    const bool one_d = t % 2 == 0;
    const Grid g = one_d ? Grid::uniform(1, -1.0, 1.0, 21 + 4 * (t % 21))
                         : Grid::uniform(2, -1.0, 1.0, 9 + 2 * (t % 7));
    const GridFunction f = GridFunction::sample(
        g, [&](const Point& x) { return 0.5 * x.squaredNorm() * u(rng) + 0.3 * u(rng); });

    const GridFunction a = q2(f, g);
    const GridFunction b = q2bar(f, g);
    involution.record(std::max(max_abs_diff(q2(q2bar(a, g), g).values, a.values),
                               max_abs_diff(q2bar(q2(b, g), g).values, b.values)));

    double direct = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) {
      double lo = kPlusInf, hi = kMinusInf;
      for (std::size_t y = 0; y < g.size(); ++y) {
        const double c = (g.node(x) - g.node(y)).squaredNorm();
        lo = std::min(lo, f[y] + c);
        hi = std::max(hi, f[y] - c);
      }
      direct = std::max({direct, std::abs(lo - a[x]), std::abs(hi - b[x])});
    }
    legendre_form.record(direct);

    const GridFunction psi = subharmonic_envelope(f);
    const GridFunction pb = q2bar(psi, g);
    const GridFunction pe = q2e(psi, g);
    fixed_point.record(std::max(max_abs_diff(q2bar(q2e(pb, g), g).values, pb.values),
                                max_abs_diff(q2e(q2bar(pe, g), g).values, pe.values)));
  }
  rows.push_back(involution.row);
  rows.push_back(legendre_form.row);
  rows.push_back(fixed_point.row);
}

void put_number(std::ostream& os, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

}  // namespace

bool SuiteReport::ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const SuiteRow& r) { return r.ok(); });
}

const SuiteRow& SuiteReport::row(const std::string& invariant) const {
  for (const auto& r : rows) {
    if (r.invariant == invariant) return r;
  }
  throw InvalidArgument("no suite row named '" + invariant + "'");
}

SuiteReport run_suite(const SuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport report;
  Rng rng(config.seed);
  order_battery(config, rng, report.rows);
  projection_battery(config, rng, report.rows);
  transform_battery(config, rng, report.rows);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_suite_csv(std::ostream& os, const SuiteReport& report) {
  os << "invariant,trials,passed,worst_residual,tolerance\n";
  for (const auto& r : report.rows) {
    os << r.invariant << ',' << r.trials << ',' << r.passed << ',';
    put_number(os, r.worst_residual);
    os << ',';
    put_number(os, r.tolerance);
    os << '\n';
  }
}

}  // namespace stochproj
