#include <doctest.h>

#include <cmath>
#include <random>

#include "stochproj/errors.hpp"
#include "stochproj/projection.hpp"

using namespace stochproj;

namespace {

Point pt(double x) { return Point::Constant(1, x); }
Point pt(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

DiscreteMeasure pm1() { return make_measure({{-1.0}, {1.0}}, {0.5, 0.5}); }

std::vector<Point> line_nodes(double lo, double hi, std::size_t n) {
  return Grid::uniform(1, lo, hi, n).nodes();
}

}  // namespace

TEST_CASE("backward convex: Dirac source collapses to the mean of the target") {
  const auto r = project_backward_convex(DiscreteMeasure::dirac(pt(2.0)), pm1());
  REQUIRE(r.projection.size() == 1);
  CHECK(r.projection.point(0)[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(r.cost == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(std::abs(r.duality_gap) <= 1e-6);
  CHECK(r.order_certificate.holds);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.2, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Point x0 = pt(2 * u(rng), 2 * u(rng));
    const DiscreteMeasure nu({pt(u(rng), u(rng)), pt(u(rng), u(rng)), pt(u(rng), u(rng))},
                             {w(rng), w(rng), w(rng)});
    const auto res = project_backward_convex(DiscreteMeasure::dirac(x0), nu);
    REQUIRE(res.projection.size() == 1);
    CHECK((res.projection.point(0) - mean(nu)).norm() <= 1e-8);
    CHECK(res.cost == doctest::Approx((x0 - mean(nu)).squaredNorm()).epsilon(1e-8));
  }
}

TEST_CASE("backward convex: measures already in the cone stay put") {
  const auto mu = DiscreteMeasure::dirac(pt(0.0));
  const auto r = project_backward_convex(mu, pm1());
  CHECK(r.cost <= 1e-12);
  CHECK(same_measure(r.projection, mu, 1e-9));

  const auto a = make_measure({{0.0, 0.0}, {1.0, 1.0}}, {0.5, 0.5});
  const auto r2 = project_backward_convex(a, a);
  CHECK(r2.cost <= 1e-12);
  CHECK(same_measure(r2.projection, a, 1e-9));
}

TEST_CASE("backward convex over candidate supports") {
  const auto mu = DiscreteMeasure::dirac(pt(2.0));
  CHECK(project_backward_convex_lp(mu, pm1(), {pt(0.0)}).cost == doctest::Approx(4.0));
  CHECK(project_backward_convex_lp(pm1(), pm1(), pm1().points()).cost <= 1e-12);
  CHECK_THROWS_AS(project_backward_convex_lp(mu, pm1(), {pt(3.0)}), ConeEmpty);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.2, 1.0);
  const DiscreteMeasure a({pt(u(rng)), pt(u(rng)), pt(u(rng))}, {w(rng), w(rng), w(rng)});
  const DiscreteMeasure b({pt(u(rng)), pt(u(rng)), pt(u(rng)), pt(u(rng))}, {w(rng), w(rng), w(rng), w(rng)});
  double prev = kPlusInf;
  for (std::size_t n : {5u, 9u, 17u, 33u}) {
    const double c = project_backward_convex_lp(a, b, line_nodes(-1.0, 1.0, n)).cost;
    CHECK(c <= prev + 1e-12);
    prev = c;
  }
  CHECK(prev >= project_backward_convex(a, b).cost - 1e-8);
}

TEST_CASE("backward convex projections stay inside the hull of the target") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.2, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Point> p, q;
    std::vector<double> pw, qw;
    for (int i = 0; i < 5; ++i) {
      p.push_back(pt(2 * u(rng), 2 * u(rng)));
      pw.push_back(w(rng));
      q.push_back(pt(u(rng), u(rng)));
      qw.push_back(w(rng));
    }
    const DiscreteMeasure mu(p, pw), nu(q, qw);
    const auto r = project_backward_convex(mu, nu);
    for (const auto& z : r.projection.points()) CHECK(convex_hull_contains(nu.points(), z, 1e-9));
    CHECK(r.cost <= w2_squared(mu, nu).cost + 1e-10);
    CHECK(std::abs(r.duality_gap) <= 1e-6);
  }
}

TEST_CASE("forward convex: shift of a two-point target") {
  const auto mu = DiscreteMeasure::dirac(pt(1.0));
  const auto r = project_forward_convex(pm1(), mu, line_nodes(-2.0, 3.0, 11));
  CHECK(r.cost == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(same_measure(r.projection, make_measure({{0.0}, {2.0}}, {0.5, 0.5}), 1e-9));
  CHECK(std::abs(r.duality_gap) <= 1e-6);
}

TEST_CASE("forward convex: targets already dominating the source are kept") {
  const auto mu = DiscreteMeasure::dirac(pt(0.0));
  const auto r = project_forward_convex(pm1(), mu, line_nodes(-2.0, 2.0, 9));
  CHECK(r.cost <= 1e-12);
  CHECK(same_measure(r.projection, pm1(), 1e-9));
  CHECK_THROWS_AS(project_forward_convex(pm1(), mu, {pt(1.0)}), ConeEmpty);
}

TEST_CASE("forward convex on the default dilated grid") {
  const auto mu = make_measure({{-0.5}, {0.5}}, {0.5, 0.5});
  const auto nu = make_measure({{0.2}, {0.4}}, {0.5, 0.5});
  const Grid g = default_forward_grid(mu, nu);
  CHECK(g.counts()[0] == 41);
  CHECK(g.lo()[0] == doctest::Approx(-0.75));
  CHECK(g.hi()[0] == doctest::Approx(0.75));
  const auto r = project_forward_convex(nu, mu);
  CHECK(std::abs(r.duality_gap) <= 1e-6);
  CHECK(r.cost >= project_backward_convex(mu, nu).cost - 1e-8);
}

TEST_CASE("subharmonic projections of identical on-grid measures cost nothing") {
  const Grid g = Grid::uniform(2, 0.0, 1.0, 5);
  const auto spec = OrderSpec::subharmonic(g);
  const auto m = DiscreteMeasure({g.node(6), g.node(12), g.node(18)}, {1, 2, 1});
  const auto b = project_backward_subharmonic(m, m, spec);
  CHECK(b.cost <= 1e-12);
  CHECK(std::abs(b.duality_gap) <= 1e-6);
  for (double x : *b.laplacian_mass) CHECK(std::abs(x) <= 1e-12);
  const auto f = project_forward_subharmonic(m, m, spec);
  CHECK(f.cost <= 1e-12);
  CHECK(std::abs(f.duality_gap) <= 1e-6);
}

TEST_CASE("backward subharmonic: a Dirac off the centre of a five-point star") {
  // Linear functions are harmonic, so any admissible projection has the
  // star's mean; Jensen then forces the Dirac at the centre, cost |x - c|^2.
  const Grid g = Grid::uniform(2, 0.0, 1.0, 5);
  const double h = g.spacing(0);
  const Point c = g.node(12), x = g.node(6);
  const DiscreteMeasure nu({pt(c[0] + h, c[1]), pt(c[0] - h, c[1]), pt(c[0], c[1] + h), pt(c[0], c[1] - h)},
                           {1, 1, 1, 1});
  const auto r = project_backward_subharmonic(DiscreteMeasure::dirac(x), nu, OrderSpec::subharmonic(g));
  CHECK(r.cost == doctest::Approx((x - c).squaredNorm()).epsilon(1e-10));
  REQUIRE(r.projection.size() == 1);
  CHECK((r.projection.point(0) - c).norm() <= 1e-12);
  CHECK(std::abs(r.duality_gap) <= 1e-6);
}

TEST_CASE("subharmonic projections reject atoms off the grid domain") {
  const Grid g = Grid::uniform(1, 0.0, 1.0, 5);
  const auto spec = OrderSpec::subharmonic(g);
  const auto inside = DiscreteMeasure::dirac(pt(0.5));
  CHECK_THROWS_AS(project_backward_subharmonic(DiscreteMeasure::dirac(pt(2.0)), inside, spec),
                  InvalidArgument);
  CHECK_THROWS_AS(project_forward_subharmonic(inside, DiscreteMeasure::dirac(pt(0.3)), spec),
                  InvalidArgument);
}

TEST_CASE("uniqueness probe on the Dirac family") {
  const ProjectionProblem p{Direction::backward, OrderSpec::convex(), DiscreteMeasure::dirac(pt(2.0)),
                            make_measure({{-1.0}, {0.5}, {1.0}}, {1, 1, 1}), line_nodes(-1.0, 1.0, 9)};
  const auto rep = uniqueness_probe(p, 4);
  CHECK(rep.trials == 4);
  CHECK(rep.max_w2_spread <= 1e-9);
  CHECK(rep.cost_spread <= 1e-12);
}

TEST_CASE("solve_projection dispatch and the trivial order") {
  ProjectionProblem p{Direction::backward, OrderSpec::convex(), DiscreteMeasure::dirac(pt(2.0)), pm1(), {}};
  CHECK(solve_projection(p).cost == doctest::Approx(4.0));
  p.order = OrderSpec::trivial();
  CHECK_THROWS_AS(solve_projection(p), InvalidArgument);
}

TEST_CASE("unique_points merges near duplicates in first-occurrence order") {
  const auto u = unique_points({pt(0.0), pt(1.0), pt(1e-12), pt(2.0), pt(1.0)});
  REQUIRE(u.size() == 3);
  CHECK(u[1][0] == 1.0);
}
