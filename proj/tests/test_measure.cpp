#include <doctest.h>

#include <algorithm>
#include <random>

#include "stochproj/errors.hpp"
#include "stochproj/measure.hpp"

using namespace stochproj;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

// 1D quadratic transport by the monotone (quantile) coupling.
double monotone_w2(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  auto sorted = [](const DiscreteMeasure& m) {
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < m.size(); ++i) v.emplace_back(m.point(i)[0], m.weight(i));
    std::sort(v.begin(), v.end());
    return v;
  };
  auto x = sorted(a), y = sorted(b);
  std::size_t i = 0, j = 0;
  double cost = 0.0, rx = x[0].second, ry = y[0].second;
  while (i < x.size() && j < y.size()) {
    const double m = std::min(rx, ry);
    cost += m * (x[i].first - y[j].first) * (x[i].first - y[j].first);
    rx -= m;
    ry -= m;
    if (rx <= 1e-15 && ++i < x.size()) rx = x[i].second;
    if (ry <= 1e-15 && ++j < y.size()) ry = y[j].second;
  }
  return cost;
}

}  // namespace

TEST_CASE("construction normalizes, merges and rescales") {
  const auto a = make_measure({{0.0}}, {2.0});
  CHECK(a.size() == 1);
  CHECK(a.weight(0) == doctest::Approx(1.0));

  const auto b = make_measure({{1.0}, {1.0}}, {0.5, 0.5});
  REQUIRE(b.size() == 1);
  CHECK(b.point(0)[0] == 1.0);
  CHECK(b.weight(0) == doctest::Approx(1.0));

  const auto c = make_measure({{-1.0}, {1.0}}, {1.0, 3.0});
  CHECK(c.weight(0) == doctest::Approx(0.25));
  CHECK(c.weight(1) == doctest::Approx(0.75));
}

TEST_CASE("tiny atoms are pruned and close atoms merged at their mean") {
  const auto m = make_measure({{0.0}, {1.0}, {2.0}}, {1.0, 1e-16, 1.0});
  CHECK(m.size() == 2);

  MeasureOptions opts;
  opts.merge_tolerance = 1e-3;
  const auto merged = make_measure({{1.0}, {1.0005}, {3.0}}, {1.0, 1.0, 2.0}, opts);
  REQUIRE(merged.size() == 2);
  CHECK(merged.point(0)[0] == doctest::Approx(1.00025));
  CHECK(mean(merged)[0] == doctest::Approx((1.0 + 1.0005 + 6.0) / 4.0));
}

TEST_CASE("invalid measures are rejected") {
  CHECK_THROWS_AS(make_measure({{0.0}}, {-1.0}), InvalidArgument);
  CHECK_THROWS_AS(make_measure({}, {}), InvalidArgument);
  CHECK_THROWS_AS(make_measure({{0.0}, {1.0, 2.0}}, {1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(make_measure({{0.0}}, {0.0}), InvalidArgument);
  CHECK_THROWS_AS(make_measure({{0.0}}, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("moments and means") {
  const auto d0 = DiscreteMeasure::dirac(pt({0.0}));
  const auto pm = make_measure({{-1.0}, {1.0}}, {0.5, 0.5});
  CHECK(moment(d0, 2) == 0.0);
  CHECK(moment(pm, 2) == doctest::Approx(1.0));
  CHECK(moment(pm, 1) == doctest::Approx(1.0));
  CHECK(moment(pm, 0) == doctest::Approx(1.0));
  CHECK(mean(pm)[0] == doctest::Approx(0.0));
  CHECK(mean(DiscreteMeasure::dirac(pt({2.0})))[0] == doctest::Approx(2.0));
  CHECK(mean(make_measure({{-1.0}, {1.0}}, {0.25, 0.75}))[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(moment(pm, -1), InvalidArgument);
}

TEST_CASE("translation and comparison") {
  const auto pm = make_measure({{-1.0, 0.0}, {1.0, 0.0}}, {0.5, 0.5});
  const auto moved = translate(pm, pt({0.5, -1.0}));
  CHECK(mean(moved).isApprox(pt({0.5, -1.0})));
  CHECK(same_measure(translate(moved, pt({-0.5, 1.0})), pm));
  CHECK_FALSE(same_measure(moved, pm));
  CHECK(pm.hash() == make_measure({{-1.0, 0.0}, {1.0, 0.0}}, {1.0, 1.0}).hash());
  CHECK(pm.hash() != moved.hash());
}

TEST_CASE("grid indexing") {
  const Grid g({-1.0, 0.0}, {1.0, 2.0}, {3, 5});
  CHECK(g.size() == 15);
  CHECK(g.spacing(0) == doctest::Approx(1.0));
  CHECK(g.spacing(1) == doctest::Approx(0.5));
  CHECK(g.cell_volume() == doctest::Approx(0.5));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto idx = g.multi_index(k);
    CHECK(g.flat_index(idx) == k);
    CHECK(g.locate(g.node(k)) == k);
  }
  CHECK(g.node(7).isApprox(pt({0.0, 1.0})));
  CHECK(g.interior_nodes().size() == 3);
  CHECK_FALSE(g.locate(pt({0.1, 1.0})).has_value());
  CHECK(g.nearest_node(pt({0.1, 1.1})) == 7);
  CHECK(g.contains(pt({1.0, 2.0})));
  CHECK_FALSE(g.contains(pt({1.1, 2.0})));

  const Grid r = g.refined();
  CHECK(r.counts() == std::vector<std::size_t>{5, 9});
  for (const auto& x : g.nodes()) CHECK(r.locate(x).has_value());

  CHECK_THROWS_AS(Grid({0.0}, {1.0}, {1}), InvalidArgument);
  CHECK_THROWS_AS(Grid({1.0}, {0.0}, {3}), InvalidArgument);
  CHECK_THROWS_AS(Grid({0.0, 0.0}, {1.0, 1.0}, {2000, 2000}), InvalidArgument);
}

TEST_CASE("squared Wasserstein distance: worked examples") {
  const auto pm = make_measure({{-1.0}, {1.0}}, {0.5, 0.5});
  const auto same = w2_squared(pm, pm);
  CHECK(same.cost == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(same.coupling.mass(0, 0) == doctest::Approx(0.5));
  CHECK(same.coupling.mass(1, 1) == doctest::Approx(0.5));

  CHECK(w2_squared(DiscreteMeasure::dirac(pt({2.0})), pm).cost == doctest::Approx(5.0));
  const auto a = make_measure({{0.0}, {1.0}}, {0.5, 0.5});
  const auto b = make_measure({{1.0}, {2.0}}, {0.5, 0.5});
  CHECK(w2_squared(a, b).cost == doctest::Approx(1.0));
}

TEST_CASE("squared Wasserstein distance matches the 1D monotone coupling") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.1, 1.0);
  std::uniform_int_distribution<int> n(1, 12);
  for (int trial = 0; trial < 30; ++trial) {
    auto rnd = [&] {
      std::vector<Point> p;
      std::vector<double> q;
      for (int i = n(rng); i > 0; --i) {
        p.push_back(pt({u(rng)}));
        q.push_back(w(rng));
      }
      return DiscreteMeasure(p, q);
    };
    const auto a = rnd(), b = rnd();
    const auto ot = w2_squared(a, b);
    CHECK(ot.cost == doctest::Approx(monotone_w2(a, b)).epsilon(1e-10));
    CHECK(marginal_residual(ot.coupling, a, b) <= 1e-12);
    CHECK(transport_cost(ot.coupling, a, b) == doctest::Approx(ot.cost).epsilon(1e-12));
  }
}

TEST_CASE("convex hull membership") {
  const std::vector<Point> seg{pt({-1.0}), pt({1.0})};
  CHECK(convex_hull_contains(seg, pt({0.0})));
  CHECK_FALSE(convex_hull_contains(seg, pt({2.0})));
  const std::vector<Point> tri{pt({0.0, 0.0}), pt({1.0, 0.0}), pt({0.0, 1.0})};
  CHECK(convex_hull_contains(tri, pt({0.25, 0.25})));
  CHECK(convex_hull_contains(tri, pt({0.5, 0.5})));
  CHECK_FALSE(convex_hull_contains(tri, pt({0.6, 0.6})));
}

TEST_CASE("displacement interpolation endpoints and midpoint") {
  const auto a = make_measure({{0.0}, {1.0}}, {0.5, 0.5});
  const auto b = make_measure({{1.0}, {3.0}}, {0.5, 0.5});
  const auto ot = w2_squared(a, b);
  CHECK(same_measure(displacement_interpolation(a, b, ot.coupling, 0.0), a));
  CHECK(same_measure(displacement_interpolation(a, b, ot.coupling, 1.0), b));
  const auto mid = displacement_interpolation(a, b, ot.coupling, 0.5);
  CHECK(same_measure(mid, make_measure({{0.5}, {2.0}}, {0.5, 0.5})));
  CHECK(w2_squared(a, mid).cost == doctest::Approx(ot.cost / 4.0));
}
