#include <doctest.h>

#include <random>
#include <sstream>

#include "stochproj/errors.hpp"
#include "stochproj/lp.hpp"

using namespace stochproj::lp;

namespace {

// Complementary slackness and feasibility for a solved program with x >= 0 columns.
void check_optimality_conditions(const LinearProgram& lp, const LPSolution& sol) {
  REQUIRE(sol.optimal());
  CHECK(primal_residual(lp, sol.primal) <= 1e-9);
  CHECK(sol.relative_gap() <= 1e-8);
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    if (!lp.is_free()[j]) CHECK(sol.primal[j] >= -1e-12);
  }
  std::vector<double> reduced(lp.cost());
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    for (const auto& [j, v] : lp.rows()[i]) reduced[j] -= v * sol.dual_multipliers[i];
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    if (lp.is_free()[j]) {
      CHECK(std::abs(reduced[j]) <= 1e-8);
    } else {
      CHECK(reduced[j] >= -1e-8);
      CHECK(sol.primal[j] * reduced[j] <= 1e-8);
    }
  }
}

}  // namespace

TEST_CASE("single equality row") {
  LinearProgram lp;
  const auto x = lp.add_variable(1.0);
  lp.add_eq_row({{x, 1.0}}, 1.0);
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.primal[x] == doctest::Approx(1.0));
  CHECK(sol.primal_objective == doctest::Approx(1.0));
  CHECK(sol.dual_objective == doctest::Approx(1.0));
}

TEST_CASE("unbounded objective") {
  LinearProgram lp;
  const auto x = lp.add_variable(-1.0);
  const auto y = lp.add_variable(0.0);
  lp.add_eq_row({{x, 1.0}, {y, -1.0}}, 0.0);
  CHECK(solve(lp).status == Status::unbounded);
}

TEST_CASE("unbounded with no rows") {
  LinearProgram lp;
  lp.add_variable(-1.0);
  CHECK(solve(lp).status == Status::unbounded);
}

TEST_CASE("infeasible negative right-hand side") {
  LinearProgram lp;
  const auto x = lp.add_variable(0.0);
  lp.add_eq_row({{x, 1.0}}, -1.0);
  CHECK(solve(lp).status == Status::infeasible);
  CHECK_FALSE(feasible(lp));
}

TEST_CASE("feasibility examples") {
  {
    LinearProgram lp;
    const auto x = lp.add_variable(0.0);
    lp.add_eq_row({{x, 1.0}}, 1.0);
    CHECK(feasible(lp));
  }
  {
    LinearProgram lp;
    const auto x = lp.add_variable(0.0);
    const auto y = lp.add_variable(0.0);
    lp.add_eq_row({{x, 1.0}, {y, 1.0}}, 1.0);
    CHECK(feasible(lp));
  }
}

TEST_CASE("zero rows are dropped or flagged") {
  LinearProgram lp;
  const auto x = lp.add_variable(1.0);
  lp.add_eq_row({{x, 0.0}}, 0.0);
  lp.add_eq_row({{x, 1.0}}, 2.0);
  auto sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.primal[x] == doctest::Approx(2.0));

  lp.add_eq_row({{x, 0.0}}, 1.0);
  CHECK(solve(lp).status == Status::infeasible);
}

TEST_CASE("inequalities, free variables and upper bounds") {
  // max x + y  s.t. x + 2y <= 4, 3x + y <= 6, x <= 1.5, y free
  LinearProgram lp;
  const auto x = lp.add_variable(-1.0, 1.5);
  const auto y = lp.add_free_variable(-1.0);
  lp.add_le_row({{x, 1.0}, {y, 2.0}}, 4.0);
  lp.add_le_row({{x, 3.0}, {y, 1.0}}, 6.0);
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  // Vertex x = 1.5, y = 1.25.
  CHECK(sol.primal[x] == doctest::Approx(1.5));
  CHECK(sol.primal[y] == doctest::Approx(1.25));
  CHECK(sol.primal_objective == doctest::Approx(-2.75));
  CHECK(sol.relative_gap() <= 1e-8);
}

TEST_CASE("redundant rows of a transportation problem") {
  // 3x3 transport: one row is implied by the others.
  const double a[3] = {0.2, 0.3, 0.5};
  const double b[3] = {0.4, 0.4, 0.2};
  LinearProgram lp;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) lp.add_variable((i - j) * (i - j));
  for (int i = 0; i < 3; ++i)
    lp.add_eq_row({{3 * i, 1.0}, {3 * i + 1, 1.0}, {3 * i + 2, 1.0}}, a[i]);
  for (int j = 0; j < 3; ++j)
    lp.add_eq_row({{j, 1.0}, {3 + j, 1.0}, {6 + j, 1.0}}, b[j]);
  const auto sol = solve(lp);
  check_optimality_conditions(lp, sol);
  // Monotone coupling cost computed by hand: 0.2->0 (0), 0.2 of 1->0 (1), 0.1 of 1->1 (0),
  // 0.3 of 2->1 (1), 0.2 of 2->2 (0) = 0.5
  CHECK(sol.primal_objective == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("degenerate assignment problems terminate with certified optimum") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6;
    LinearProgram lp;
    for (int i = 0; i < n * n; ++i) lp.add_variable(std::round(u(rng) * 4.0));
    for (int i = 0; i < n; ++i) {
      std::vector<Term> row, col;
      for (int j = 0; j < n; ++j) {
        row.emplace_back(i * n + j, 1.0);
        col.emplace_back(j * n + i, 1.0);
      }
      lp.add_eq_row(row, 1.0);
      lp.add_eq_row(col, 1.0);
    }
    const auto sol = solve(lp);
    check_optimality_conditions(lp, sol);
  }
}

TEST_CASE("random bounded programs satisfy KKT conditions") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 12, m = 5;
    LinearProgram lp;
    for (int j = 0; j < n; ++j) lp.add_variable(u(rng) + 1.2);  // positive costs: bounded
    std::vector<double> x0(n);
    for (auto& v : x0) v = 0.5 * (u(rng) + 1.0);
    for (int i = 0; i < m; ++i) {
      std::vector<Term> row;
      double rhs = 0.0;
      for (int j = 0; j < n; ++j) {
        const double a = u(rng);
        row.emplace_back(j, a);
        rhs += a * x0[j];
      }
      lp.add_eq_row(row, rhs);
    }
    const auto sol = solve(lp);
    check_optimality_conditions(lp, sol);
  }
}

TEST_CASE("determinism and seeded column order") {
  LinearProgram lp;
  for (int i = 0; i < 16; ++i) lp.add_variable(static_cast<double>((i * 7) % 5));
  for (int i = 0; i < 4; ++i) {
    std::vector<Term> row, col;
    for (int j = 0; j < 4; ++j) {
      row.emplace_back(i * 4 + j, 1.0);
      col.emplace_back(j * 4 + i, 1.0);
    }
    lp.add_eq_row(row, 0.25);
    lp.add_eq_row(col, 0.25);
  }
  const auto a = solve(lp);
  const auto b = solve(lp);
  CHECK(a.status == b.status);
  CHECK(a.primal_objective == b.primal_objective);
  CHECK(a.primal == b.primal);

  SolverOptions shuffled;
  shuffled.column_order_seed = 99;
  const auto c = solve(lp, shuffled);
  CHECK(c.primal_objective == doctest::Approx(a.primal_objective).epsilon(1e-12));
}

TEST_CASE("size cap and triplet dump") {
  LinearProgram lp;
  const auto x = lp.add_variables(3, 1.0);
  lp.add_eq_row({{x, 1.0}, {x + 1, 2.0}}, 1.0);
  SolverOptions tiny;
  tiny.max_variables = 2;
  CHECK_THROWS_AS(solve(lp, tiny), stochproj::SolverError);

  std::ostringstream os;
  lp.write_triplets(os);
  const std::string dump = os.str();
  CHECK(dump.find("0 0 1\n") != std::string::npos);
  CHECK(dump.find("0 1 2\n") != std::string::npos);
  CHECK(dump.find("0 -1 1\n") != std::string::npos);
  CHECK(dump.find("-1 2 1\n") != std::string::npos);
}

TEST_CASE("tall programs solved through the dual match the direct route") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // Lower envelope fit: maximize sum of free z_k - pinned plane values,
    // many inequality rows in few variables.
    const int n_free = 3, n_pos = 2, m = 40;
    LinearProgram lp;
    for (int j = 0; j < n_free; ++j) lp.add_free_variable(u(rng));
    for (int j = 0; j < n_pos; ++j) lp.add_variable(1.0 + 0.5 * u(rng));
    for (int i = 0; i < m; ++i) {
      std::vector<Term> row;
      for (int j = 0; j < n_free + n_pos; ++j) row.emplace_back(j, u(rng));
      lp.add_le_row(row, 1.0 + 0.5 * (u(rng) + 1.0));
    }
    lp.add_eq_row({{0, 1.0}, {3, 1.0}}, 0.3);
    for (int j = 0; j < n_free; ++j) {
      lp.add_le_row({{static_cast<std::size_t>(j), 1.0}}, 5.0);
      lp.add_le_row({{static_cast<std::size_t>(j), -1.0}}, 5.0);
    }
    SolverOptions direct_opts, dual_opts;
    direct_opts.dualize = Dualize::never;
    dual_opts.dualize = Dualize::always;
    const auto a = solve(lp, direct_opts);
    const auto b = solve(lp, dual_opts);
    REQUIRE(a.status == b.status);
    if (!a.optimal()) continue;
    CHECK(b.primal_objective == doctest::Approx(a.primal_objective).epsilon(1e-9));
    check_optimality_conditions(lp, b);
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
      if (lp.is_inequality()[i]) CHECK(b.dual_multipliers[i] <= 1e-12);
    }
  }
}

TEST_CASE("dual route reports infeasible and unbounded programs") {
  SolverOptions dual_opts;
  dual_opts.dualize = Dualize::always;
  LinearProgram infeasible;
  infeasible.add_free_variable(0.0);
  infeasible.add_le_row({{0, 1.0}}, -1.0);
  infeasible.add_le_row({{0, -1.0}}, -1.0);
  CHECK(solve(infeasible, dual_opts).status == Status::infeasible);

  LinearProgram unbounded;
  unbounded.add_free_variable(1.0);
  unbounded.add_le_row({{0, 1.0}}, 2.0);
  CHECK(solve(unbounded, dual_opts).status == Status::unbounded);
}
