#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace stochproj::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

using Term = std::pair<std::size_t, double>;  // (variable index, coefficient)

/// Sparse linear program
///
///   minimize    c.x
///   subject to  A x = b   (equality rows)
///               A x <= b  (inequality rows, `add_le_row`)
///               lower_j <= x_j <= upper_j, lower_j in {0, -inf}
///
/// Variables default to x >= 0. Free variables and upper bounds are
/// reduced to standard form by the solver, so callers can write problems
/// in their natural shape.
class LinearProgram {
 public:
  LinearProgram() = default;

  std::size_t add_variable(double cost, double upper = kInfinity);
  std::size_t add_free_variable(double cost);
  /// Adds `count` nonnegative variables sharing no cost; returns the first index.
  std::size_t add_variables(std::size_t count, double cost = 0.0);

  void set_cost(std::size_t var, double cost);

  std::size_t add_eq_row(std::span<const Term> terms, double rhs);
  std::size_t add_le_row(std::span<const Term> terms, double rhs);
  std::size_t add_eq_row(std::initializer_list<Term> terms, double rhs) {
    return add_eq_row(std::span<const Term>(terms.begin(), terms.size()), rhs);
  }
  std::size_t add_le_row(std::initializer_list<Term> terms, double rhs) {
    return add_le_row(std::span<const Term>(terms.begin(), terms.size()), rhs);
  }

  std::size_t num_variables() const { return cost_.size(); }
  std::size_t num_rows() const { return rhs_.size(); }

  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<bool>& is_free() const { return free_; }
  const std::vector<bool>& is_inequality() const { return le_; }
  /// Row-wise storage; coefficients of repeated variables are summed.
  const std::vector<std::vector<Term>>& rows() const { return rows_; }

  /// Writes the program as "row col value" triplets. Objective entries use
  /// row -1, right-hand sides use col -1, so the dump is self-contained.
  void write_triplets(std::ostream& os) const;

 private:
  std::size_t add_row(std::span<const Term> terms, double rhs, bool le);

  std::vector<double> cost_;
  std::vector<double> upper_;
  std::vector<bool> free_;
  std::vector<std::vector<Term>> rows_;
  std::vector<double> rhs_;
  std::vector<bool> le_;
};

enum class Status { optimal, infeasible, unbounded };

/// `automatic` solves programs with many more rows than variables (and no
/// upper bounds) through their dual, recovering both solutions.
enum class Dualize { automatic, never, always };

const char* to_string(Status s);

struct LPSolution {
  Status status = Status::infeasible;
  std::vector<double> primal;           // one entry per program variable
  std::vector<double> dual_multipliers; // one entry per program row
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  std::size_t iterations = 0;

  bool optimal() const { return status == Status::optimal; }
  double relative_gap() const;
};

struct SolverOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  double gap_tol = 1e-8;              // relative primal/dual objective gap
  std::size_t max_iterations = 200000;
  std::size_t max_variables = 20000;  // standard-form column cap
  std::size_t degenerate_run_before_bland = 50;
  std::size_t residual_check_interval = 64;
  std::size_t refactor_checks = 2;    // unconditional refactorization every this many checks
  std::size_t max_restarts = 3;
  /// When set, candidate columns are scanned in a seeded pseudo-random order
  /// instead of index order. Used to probe degenerate optimal faces.
  std::optional<std::uint64_t> column_order_seed;
  Dualize dualize = Dualize::automatic;
  /// When set, every program handed to `solve` is appended here as triplets,
  /// preceded by a "# lp rows cols" line.
  std::ostream* trace = nullptr;
};

/// Dense revised simplex (two-phase, explicit basis inverse with periodic
/// refactorization, Dantzig pricing with a Bland fallback on degenerate runs).
/// Instances own their workspace; use one per thread.
class Solver {
 public:
  explicit Solver(SolverOptions options = {}) : options_(options) {}

  LPSolution solve(const LinearProgram& lp) const;
  /// Phase one only.
  bool feasible(const LinearProgram& lp) const;

  const SolverOptions& options() const { return options_; }

 private:
  LPSolution solve_direct(const LinearProgram& lp) const;
  LPSolution solve_through_dual(const LinearProgram& lp) const;

  SolverOptions options_;
};

inline LPSolution solve(const LinearProgram& lp, const SolverOptions& options = {}) {
  return Solver(options).solve(lp);
}
inline bool feasible(const LinearProgram& lp, const SolverOptions& options = {}) {
  return Solver(options).feasible(lp);
}

/// max_i |(A x - b)_i| over equality rows, max(0, (A x - b)_i) over inequality rows.
double primal_residual(const LinearProgram& lp, std::span<const double> x);

}  // namespace stochproj::lp
