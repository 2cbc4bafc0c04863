#include <doctest.h>

#include <cmath>
#include <random>

#include "stochproj/duality.hpp"
#include "stochproj/errors.hpp"
#include "stochproj/projection.hpp"

using namespace stochproj;

namespace {

Point pt(double x) { return Point::Constant(1, x); }
DiscreteMeasure pm1() { return make_measure({{-1.0}, {1.0}}, {0.5, 0.5}); }

DiscreteMeasure random_1d(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.2, 1.0);
  std::vector<Point> p;
  std::vector<double> q;
  for (int i = 0; i < n; ++i) {
    p.push_back(pt(scale * u(rng)));
    q.push_back(w(rng));
  }
  return DiscreteMeasure(p, q);
}

}  // namespace

TEST_CASE("dual values of the Dirac family") {
  const Grid g = Grid::uniform(1, -3.0, 3.0, 61);
  const auto back = solve_dual_backward(DiscreteMeasure::dirac(pt(2.0)), pm1(), OrderSpec::convex(), g);
  CHECK(back.dual_value == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(back.lp_value == doctest::Approx(back.dual_value).epsilon(1e-8));
  const auto fwd = solve_dual_forward(DiscreteMeasure::dirac(pt(1.0)), pm1(), OrderSpec::convex(), g);
  CHECK(fwd.dual_value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("identical measures have zero dual value and zero gap") {
  const Grid g = Grid::uniform(1, -2.0, 2.0, 41);
  const auto m = make_measure({{-1.0}, {0.5}, {1.0}}, {1, 2, 1});
  CHECK(std::abs(solve_dual_backward(m, m, OrderSpec::convex(), g).dual_value) <= 1e-10);
  CHECK(std::abs(solve_dual_forward(m, m, OrderSpec::convex(), g).dual_value) <= 1e-10);
  const auto r = project_backward_convex_lp(m, m, g.nodes());
  CHECK(r.duality_gap == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("backward duals: weak duality and strong duality at matched nodes") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const auto mu = random_1d(rng, 4, 1.0), nu = random_1d(rng, 5, 0.8);
    const auto r = project_backward_convex(mu, nu);
    REQUIRE(r.dual);
    CHECK(r.dual->dual_value <= r.cost + 1e-7);
    CHECK(r.duality_gap >= -1e-8);
    CHECK(r.duality_gap <= 1e-6);
    CHECK(duality_gap(r, *r.dual) == doctest::Approx(r.duality_gap).epsilon(1e-12));
    // The stored potential is admissible for any larger node set, so the
    // objective can only decrease when more nodes enter the c-transform.
    CHECK(evaluate_dual_objective(*r.dual, mu, nu, 0.0, Grid::uniform(1, -1.0, 1.0, 9).nodes()) <=
          r.cost + 1e-7);
  }
}

TEST_CASE("adding a constant to the potential does not change the dual objective") {
  std::mt19937_64 rng(5);
  const auto mu = random_1d(rng, 3, 1.0), nu = random_1d(rng, 4, 1.0);
  const auto r = project_backward_convex(mu, nu);
  const double base = evaluate_dual_objective(*r.dual, mu, nu);
  CHECK(evaluate_dual_objective(*r.dual, mu, nu, 0.75) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("forward duals close the gap on the candidate grid") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 4; ++trial) {
    const auto mu = random_1d(rng, 3, 1.0), nu = random_1d(rng, 4, 0.8);
    const auto r = project_forward_convex(nu, mu, Grid::uniform(1, -2.0, 2.0, 33).nodes());
    CHECK(r.duality_gap >= -1e-8);
    CHECK(r.duality_gap <= 1e-6);
    const auto pot = verify_potential_property(*r.dual, r.projection, r.vertex);
    CHECK(pot.residual <= 1e-6);
  }
}

TEST_CASE("coarse potential grids leave a positive gap that shrinks under refinement") {
  std::mt19937_64 rng(8);
  const auto mu = random_1d(rng, 4, 1.0), nu = random_1d(rng, 5, 0.8);
  ProjectionOptions o;
  o.solve_dual = false;
  const auto primal = project_backward_convex(mu, nu, o);
  std::vector<double> gaps;
  for (std::size_t n : {3u, 5u, 9u, 17u, 33u}) {
    // The mean of nu keeps the node set feasible at every resolution; the
    // projection atoms join the c-transform so that weak duality applies.
    auto nodes = Grid::uniform(1, -1.0, 1.0, n).nodes();
    nodes.push_back(mean(nu));
    const auto d = solve_dual_backward_on(mu, nu, nodes);
    gaps.push_back(primal.cost - evaluate_dual_objective(d, mu, nu, 0.0, primal.projection.points()));
  }
  for (double g : gaps) CHECK(g >= -1e-8);
  CHECK(gaps.front() > 1e-4);
  CHECK(gaps.back() < 0.25 * gaps.front());
}

TEST_CASE("optimal potentials integrate equally against projection and vertex") {
  const auto r = project_backward_convex(DiscreteMeasure::dirac(pt(2.0)), pm1());
  const auto rep = verify_potential_property(*r.dual, r.projection, r.vertex);
  CHECK(rep.ok);
  CHECK(rep.residual <= 1e-6);
  CHECK(r.dual->evaluate(pt(0.0)) ==
        doctest::Approx(0.5 * (r.dual->evaluate(pt(-1.0)) + r.dual->evaluate(pt(1.0)))).epsilon(1e-6));

  const auto m = make_measure({{-1.0}, {1.0}}, {1, 3});
  const auto same = project_backward_convex(m, m);
  CHECK(verify_potential_property(*same.dual, same.projection, same.vertex).residual <= 1e-12);
}

TEST_CASE("a suboptimal potential fails the potential property") {
  // max(0, x) is admissible but kinks between the atoms of pm1, so it does not
  // balance delta_0 against pm1.
  const auto r = project_backward_convex(DiscreteMeasure::dirac(pt(2.0)), pm1());
  DualCertificate wrong = *r.dual;
  wrong.planes.offsets = {0.0, 0.0};
  wrong.planes.slopes = {pt(0.0), pt(1.0)};
  const auto rep = verify_potential_property(wrong, r.projection, r.vertex);
  CHECK_FALSE(rep.ok);
  CHECK(rep.residual == doctest::Approx(0.5));
}

TEST_CASE("backward and forward convex duals cross-evaluate consistently") {
  const Grid g = Grid::uniform(1, -3.0, 3.0, 61);
  const auto dirac = crosscheck_dual_equivalence(DiscreteMeasure::dirac(pt(2.0)), pm1(), g);
  CHECK(dirac.backward_value == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(dirac.forward_value == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(dirac.backward_at_forward == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(dirac.forward_at_backward == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(dirac.ok);

  const auto one = crosscheck_dual_equivalence(DiscreteMeasure::dirac(pt(1.0)), pm1(), g);
  CHECK(one.backward_value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(one.forward_at_backward == doctest::Approx(1.0).epsilon(1e-6));

  const auto m = make_measure({{-1.0}, {1.0}}, {1, 1});
  const auto same = crosscheck_dual_equivalence(m, m, g);
  CHECK(std::abs(same.backward_value) <= 1e-10);
  CHECK(std::abs(same.forward_value) <= 1e-10);
  CHECK(std::abs(same.backward_at_forward) <= 1e-10);
  CHECK(std::abs(same.forward_at_backward) <= 1e-10);

  std::mt19937_64 rng(12);
  const auto mu = random_1d(rng, 6, 1.0), nu = random_1d(rng, 8, 0.8);
  const auto rnd = crosscheck_dual_equivalence(mu, nu, Grid::uniform(1, -2.0, 2.0, 321), 1e-5);
  CHECK(std::abs(rnd.backward_value - rnd.forward_value) <= 1e-5);
  CHECK(rnd.ok);
}

TEST_CASE("subharmonic duals on a grid") {
  const Grid g = Grid::uniform(2, 0.0, 1.0, 7);
  std::mt19937_64 rng(13);
  const auto inner = g.interior_nodes();
  std::uniform_int_distribution<std::size_t> pick(0, inner.size() - 1);
  std::uniform_real_distribution<double> w(0.2, 1.0);
  std::vector<Point> a, b;
  std::vector<double> aw, bw;
  for (int i = 0; i < 3; ++i) {
    a.push_back(g.node(inner[pick(rng)]));
    aw.push_back(w(rng));
    b.push_back(g.node(inner[pick(rng)]));
    bw.push_back(w(rng));
  }
  const DiscreteMeasure mu(a, aw), nu(b, bw);
  const auto spec = OrderSpec::subharmonic(g);
  const auto back = project_backward_subharmonic(mu, nu, spec);
  CHECK(std::abs(back.duality_gap) <= 1e-6);
  const GridFunction phi = back.dual->sample(g);
  for (std::size_t k : inner) CHECK(discrete_laplacian(phi, k) >= -1e-7);
  const auto fwd = project_forward_subharmonic(nu, mu, spec);
  CHECK(std::abs(fwd.duality_gap) <= 1e-6);
}

TEST_CASE("duality gap refuses mismatched certificates") {
  const auto a = project_backward_convex(DiscreteMeasure::dirac(pt(2.0)), pm1());
  const auto b = project_backward_convex(DiscreteMeasure::dirac(pt(1.5)), pm1());
  CHECK_THROWS_AS(duality_gap(a, *b.dual), InvalidArgument);
  CHECK(parse_direction(to_string(Direction::forward)) == Direction::forward);
  CHECK_THROWS_AS(parse_direction("sideways"), InvalidArgument);
}
