#include "stochproj/lp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include <Eigen/Dense>

#include "stochproj/errors.hpp"

namespace stochproj::lp {

// ---------------------------------------------------------------------------
// LinearProgram

std::size_t LinearProgram::add_variable(double cost, double upper) {
  if (upper < 0.0) throw InvalidArgument("variable upper bound must be >= 0");
  cost_.push_back(cost);
  upper_.push_back(upper);
  free_.push_back(false);
  return cost_.size() - 1;
}

std::size_t LinearProgram::add_free_variable(double cost) {
  cost_.push_back(cost);
  upper_.push_back(kInfinity);
  free_.push_back(true);
  return cost_.size() - 1;
}

std::size_t LinearProgram::add_variables(std::size_t count, double cost) {
  const std::size_t first = cost_.size();
  cost_.resize(first + count, cost);
  upper_.resize(first + count, kInfinity);
  free_.resize(first + count, false);
  return first;
}

void LinearProgram::set_cost(std::size_t var, double cost) {
  if (var >= cost_.size()) throw InvalidArgument("set_cost: variable index out of range");
  cost_[var] = cost;
}

std::size_t LinearProgram::add_eq_row(std::span<const Term> terms, double rhs) {
  return add_row(terms, rhs, false);
}

std::size_t LinearProgram::add_le_row(std::span<const Term> terms, double rhs) {
  return add_row(terms, rhs, true);
}

std::size_t LinearProgram::add_row(std::span<const Term> terms, double rhs, bool le) {
  std::map<std::size_t, double> merged;
  for (const auto& [var, coef] : terms) {
    if (var >= cost_.size()) throw InvalidArgument("constraint references unknown variable");
    if (!std::isfinite(coef)) throw InvalidArgument("constraint coefficient is not finite");
    merged[var] += coef;
  }
  if (!std::isfinite(rhs)) throw InvalidArgument("constraint right-hand side is not finite");
  std::vector<Term> row;
  row.reserve(merged.size());
  for (const auto& [var, coef] : merged) {
    if (coef != 0.0) row.emplace_back(var, coef);
  }
  rows_.push_back(std::move(row));
  rhs_.push_back(rhs);
  le_.push_back(le);
  return rows_.size() - 1;
}

void LinearProgram::write_triplets(std::ostream& os) const {
  os.precision(17);
  os << "# rows " << num_rows() << " cols " << num_variables() << '\n';
  for (std::size_t j = 0; j < cost_.size(); ++j) {
    if (cost_[j] != 0.0) os << -1 << ' ' << j << ' ' << cost_[j] << '\n';
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& [j, v] : rows_[i]) os << i << ' ' << j << ' ' << v << '\n';
    os << i << ' ' << -1 << ' ' << rhs_[i] << '\n';
  }
}

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "unknown";
}

double LPSolution::relative_gap() const {
  const double scale = std::max({1.0, std::abs(primal_objective), std::abs(dual_objective)});
  return std::abs(primal_objective - dual_objective) / scale;
}

double primal_residual(const LinearProgram& lp, std::span<const double> x) {
  double worst = 0.0;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    double ax = 0.0;
    for (const auto& [j, v] : lp.rows()[i]) ax += v * x[j];
    const double r = ax - lp.rhs()[i];
    worst = std::max(worst, lp.is_inequality()[i] ? std::max(0.0, r) : std::abs(r));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Standard form: min c.x, A x = b, x >= 0, b >= 0

namespace {

using Column = std::vector<std::pair<std::size_t, double>>;

struct StandardForm {
  std::size_t rows = 0;
  std::vector<Column> cols;
  std::vector<double> cost;
  std::vector<double> rhs;
  // Program variable j maps to column plus_col[j] and, if free, minus_col[j].
  std::vector<std::size_t> plus_col;
  std::vector<std::ptrdiff_t> minus_col;
  // Program row i maps to standard row row_of[i] (or -1 when dropped);
  // row_sign flips rows negated to make b >= 0.
  std::vector<std::ptrdiff_t> row_of;
  std::vector<double> row_sign;
  // Initial basic column for each standard row, or -1 if an artificial is needed.
  std::vector<std::ptrdiff_t> crash;
  bool trivially_infeasible = false;
};

StandardForm to_standard_form(const LinearProgram& lp, double tol) {
  StandardForm sf;
  const std::size_t n = lp.num_variables();
  sf.plus_col.resize(n);
  sf.minus_col.assign(n, -1);

  std::vector<Column> var_cols;  // per program variable, over standard rows
  var_cols.resize(n);

  for (std::size_t j = 0; j < n; ++j) {
    if (lp.is_free()[j] && std::isfinite(lp.upper()[j])) {
      throw InvalidArgument("free variables with upper bounds are not supported");
    }
  }

  sf.row_of.assign(lp.num_rows(), -1);
  sf.row_sign.assign(lp.num_rows(), 1.0);
  std::vector<std::pair<std::size_t, double>> slacks;  // (std row, coefficient)

  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows()[i];
    double b = lp.rhs()[i];
    const bool le = lp.is_inequality()[i];
    if (row.empty()) {
      if (le ? (b < -tol) : (std::abs(b) > tol)) sf.trivially_infeasible = true;
      continue;
    }
    const double sign = b < 0.0 ? -1.0 : 1.0;
    const std::size_t r = sf.rows++;
    sf.row_of[i] = static_cast<std::ptrdiff_t>(r);
    sf.row_sign[i] = sign;
    sf.rhs.push_back(sign * b);
    for (const auto& [j, v] : row) var_cols[j].emplace_back(r, sign * v);
    if (le) slacks.emplace_back(r, sign);
  }

  // Upper bounds become x + s = u rows.
  std::vector<std::pair<std::size_t, std::size_t>> ub_rows;  // (var, std row)
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lp.upper()[j])) continue;
    const std::size_t r = sf.rows++;
    sf.rhs.push_back(lp.upper()[j]);
    var_cols[j].emplace_back(r, 1.0);
    ub_rows.emplace_back(j, r);
  }

  sf.crash.assign(sf.rows, -1);
  for (std::size_t j = 0; j < n; ++j) {
    sf.plus_col[j] = sf.cols.size();
    sf.cols.push_back(var_cols[j]);
    sf.cost.push_back(lp.cost()[j]);
    if (lp.is_free()[j]) {
      Column neg = var_cols[j];
      for (auto& e : neg) e.second = -e.second;
      sf.minus_col[j] = static_cast<std::ptrdiff_t>(sf.cols.size());
      sf.cols.push_back(std::move(neg));
      sf.cost.push_back(-lp.cost()[j]);
    }
  }
  for (const auto& [r, coef] : slacks) {
    if (coef > 0.0) sf.crash[r] = static_cast<std::ptrdiff_t>(sf.cols.size());
    sf.cols.push_back(Column{{r, coef}});
    sf.cost.push_back(0.0);
  }
  for (const auto& [j, r] : ub_rows) {
    (void)j;
    sf.crash[r] = static_cast<std::ptrdiff_t>(sf.cols.size());
    sf.cols.push_back(Column{{r, 1.0}});
    sf.cost.push_back(0.0);
  }
  return sf;
}

// ---------------------------------------------------------------------------
// Revised simplex engine

class Engine {
 public:
  Engine(const StandardForm& sf, const SolverOptions& opt, bool bland_only)
      : sf_(sf), opt_(opt), m_(sf.rows), n_struct_(sf.cols.size()), bland_only_(bland_only) {
    // Artificial columns follow the structural ones.
    basis_.resize(m_);
    for (std::size_t r = 0; r < m_; ++r) {
      if (sf.crash[r] >= 0) {
        basis_[r] = static_cast<std::size_t>(sf.crash[r]);
      } else {
        basis_[r] = n_struct_ + artificial_rows_.size();
        artificial_rows_.push_back(r);
      }
    }
    is_basic_.assign(n_struct_ + artificial_rows_.size(), false);
    for (auto c : basis_) is_basic_[c] = true;
    b_ = Eigen::Map<const Eigen::VectorXd>(sf.rhs.data(), static_cast<Eigen::Index>(m_));
    order_.resize(n_struct_ + artificial_rows_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (opt.column_order_seed) {
      std::mt19937_64 rng(*opt.column_order_seed);
      std::shuffle(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(n_struct_), rng);
    }
    refactor();
  }

  std::size_t num_artificials() const { return artificial_rows_.size(); }
  std::size_t iterations() const { return iterations_; }

  enum class Outcome { optimal, unbounded };

  // Phase one: minimize the sum of artificials. Returns that minimum.
  double phase_one() {
    if (artificial_rows_.empty()) return 0.0;
    std::vector<double> c(total_cols(), 0.0);
    for (std::size_t k = 0; k < artificial_rows_.size(); ++k) c[n_struct_ + k] = 1.0;
    run(c, /*allow_artificial=*/true);
    double infeas = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] >= n_struct_) infeas += std::max(0.0, x_b_[static_cast<Eigen::Index>(r)]);
    }
    return infeas;
  }

  // Pivots zero-valued artificials out of the basis where a structural
  // column can replace them; the rest sit on redundant rows.
  void expel_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_struct_) continue;
      const Eigen::RowVectorXd rho = binv_.row(static_cast<Eigen::Index>(r));
      std::size_t best = n_struct_;
      double best_val = 1e-7;
      for (std::size_t j = 0; j < n_struct_; ++j) {
        if (is_basic_[j]) continue;
        double v = 0.0;
        for (const auto& [i, a] : sf_.cols[j]) v += rho[static_cast<Eigen::Index>(i)] * a;
        if (std::abs(v) > best_val) {
          best_val = std::abs(v);
          best = j;
        }
      }
      if (best == n_struct_) continue;
      const Eigen::VectorXd alpha = ftran(best);
      pivot(r, best, alpha);
    }
    refactor();
  }

  Outcome phase_two() {
    std::vector<double> c(total_cols(), 0.0);
    std::copy(sf_.cost.begin(), sf_.cost.end(), c.begin());
    return run(c, /*allow_artificial=*/false);
  }

  std::vector<double> structural_values() const {
    std::vector<double> x(n_struct_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_struct_) x[basis_[r]] = x_b_[static_cast<Eigen::Index>(r)];
    }
    return x;
  }

  Eigen::VectorXd duals() const {
    Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) {
      cb[static_cast<Eigen::Index>(r)] = basis_[r] < n_struct_ ? sf_.cost[basis_[r]] : 0.0;
    }
    return binv_.transpose() * cb;
  }

 private:
  std::size_t total_cols() const { return n_struct_ + artificial_rows_.size(); }

  void column_into(std::size_t j, Eigen::Ref<Eigen::VectorXd> out) const {
    out.setZero();
    if (j < n_struct_) {
      for (const auto& [i, a] : sf_.cols[j]) out[static_cast<Eigen::Index>(i)] = a;
    } else {
      out[static_cast<Eigen::Index>(artificial_rows_[j - n_struct_])] = 1.0;
    }
  }

  Eigen::VectorXd ftran(std::size_t j) const {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
    if (j < n_struct_) {
      for (const auto& [i, a] : sf_.cols[j]) alpha.noalias() += a * binv_.col(static_cast<Eigen::Index>(i));
    } else {
      alpha = binv_.col(static_cast<Eigen::Index>(artificial_rows_[j - n_struct_]));
    }
    return alpha;
  }

  double reduced_cost(std::size_t j, const std::vector<double>& c, const Eigen::VectorXd& y) const {
    double d = c[j];
    if (j < n_struct_) {
      for (const auto& [i, a] : sf_.cols[j]) d -= y[static_cast<Eigen::Index>(i)] * a;
    } else {
      d -= y[static_cast<Eigen::Index>(artificial_rows_[j - n_struct_])];
    }
    return d;
  }

  void refactor() {
    const auto m = static_cast<Eigen::Index>(m_);
    if (m == 0) {
      binv_.resize(0, 0);
      x_b_.resize(0);
      return;
    }
    Eigen::MatrixXd basis_matrix(m, m);
    for (Eigen::Index r = 0; r < m; ++r) column_into(basis_[static_cast<std::size_t>(r)], basis_matrix.col(r));
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) throw SolverError("simplex basis became numerically singular");
    binv_ = lu.inverse();
    x_b_ = lu.solve(b_);
  }

  double basis_residual() const {
    Eigen::VectorXd r = -b_;
    for (std::size_t k = 0; k < m_; ++k) {
      const double v = x_b_[static_cast<Eigen::Index>(k)];
      const std::size_t j = basis_[k];
      if (j < n_struct_) {
        for (const auto& [i, a] : sf_.cols[j]) r[static_cast<Eigen::Index>(i)] += a * v;
      } else {
        r[static_cast<Eigen::Index>(artificial_rows_[j - n_struct_])] += v;
      }
    }
    return m_ == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
  }

  void pivot(std::size_t r, std::size_t q, const Eigen::VectorXd& alpha) {
    const auto ri = static_cast<Eigen::Index>(r);
    const double piv = alpha[ri];
    const double theta = x_b_[ri] / piv;
    x_b_.noalias() -= theta * alpha;
    x_b_[ri] = theta;
    binv_.row(ri) /= piv;
    Eigen::VectorXd a = alpha;
    a[ri] = 0.0;
    const Eigen::RowVectorXd pivot_row = binv_.row(ri);
    binv_.noalias() -= a * pivot_row;
    is_basic_[basis_[r]] = false;
    basis_[r] = q;
    is_basic_[q] = true;
  }

  Outcome run(const std::vector<double>& c, bool allow_artificial) {
    const double b_scale = 1.0 + (m_ == 0 ? 0.0 : b_.cwiseAbs().maxCoeff());
    std::size_t degenerate_run = 0;
    bool bland = bland_only_;
    std::size_t since_check = 0;
    std::size_t checks_since_refactor = 0;
    bool verified = false;
    for (;;) {
      if (iterations_ >= opt_.max_iterations) {
        throw NotConverged("simplex iteration limit reached", static_cast<double>(iterations_));
      }
      if (++since_check >= opt_.residual_check_interval) {
        since_check = 0;
        if (++checks_since_refactor >= opt_.refactor_checks || basis_residual() > 1e-10 * b_scale ||
            !binv_.allFinite()) {
          refactor();
          checks_since_refactor = 0;
        }
      }
      Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
      for (std::size_t r = 0; r < m_; ++r) cb[static_cast<Eigen::Index>(r)] = c[basis_[r]];
      Eigen::VectorXd y = binv_.transpose() * cb;
      if (!y.allFinite()) {
        refactor();
        y = binv_.transpose() * cb;
      }

      std::size_t q = total_cols();
      double best = -opt_.optimality_tol;
      for (std::size_t j : order_) {
        if (is_basic_[j]) continue;
        if (!allow_artificial && j >= n_struct_) continue;
        const double d = reduced_cost(j, c, y);
        if (d < best) {
          best = d;
          q = j;
          if (bland) break;
        }
      }
      if (q == total_cols()) {
        // Confirm optimality on a fresh factorization before stopping.
        if (verified) return Outcome::optimal;
        refactor();
        if (m_ > 0 && x_b_.minCoeff() < -1e3 * opt_.feasibility_tol * b_scale) {
          throw SolverError("basis lost primal feasibility");
        }
        verified = true;
        continue;
      }
      verified = false;

      const Eigen::VectorXd alpha = ftran(q);
      if (!alpha.allFinite()) throw SolverError("non-finite pivot column");
      // Harris two-pass ratio test: bound the step with a small feasibility
      // relaxation, then take the largest pivot among the rows reaching it.
      const double pivot_floor =
          m_ == 0 ? opt_.pivot_tol : std::max(opt_.pivot_tol, 1e-9 * alpha.cwiseAbs().maxCoeff());
      double theta_max = kInfinity;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = alpha[static_cast<Eigen::Index>(i)];
        if (a <= pivot_floor) continue;
        const double xi = std::max(0.0, x_b_[static_cast<Eigen::Index>(i)]);
        theta_max = std::min(theta_max, (xi + opt_.feasibility_tol) / a);
      }
      std::size_t r = m_;
      double step = kInfinity;
      for (std::size_t i = 0; i < m_ && std::isfinite(theta_max); ++i) {
        const double a = alpha[static_cast<Eigen::Index>(i)];
        if (a <= pivot_floor) continue;
        const double ratio = std::max(0.0, x_b_[static_cast<Eigen::Index>(i)]) / a;
        if (ratio > theta_max) continue;
        bool take = r == m_;
        if (!take) {
          take = bland ? basis_[i] < basis_[r] : a > alpha[static_cast<Eigen::Index>(r)];
        }
        if (take) {
          r = i;
          step = ratio;
        }
      }
      if (r == m_) return Outcome::unbounded;

      if (x_b_[static_cast<Eigen::Index>(r)] < 0.0) x_b_[static_cast<Eigen::Index>(r)] = 0.0;
      pivot(r, q, alpha);
      ++iterations_;
      if (step <= opt_.feasibility_tol) {
        if (++degenerate_run >= opt_.degenerate_run_before_bland) bland = true;
      } else {
        degenerate_run = 0;
        bland = bland_only_;
      }
    }
  }

  const StandardForm& sf_;
  const SolverOptions& opt_;
  std::size_t m_;
  std::size_t n_struct_;
  bool bland_only_;
  std::vector<std::size_t> artificial_rows_;
  std::vector<std::size_t> basis_;
  std::vector<bool> is_basic_;
  std::vector<std::size_t> order_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd x_b_;
  std::size_t iterations_ = 0;
};

double infeasibility_threshold(const StandardForm& sf, const SolverOptions& opt) {
  double scale = 1.0;
  for (double v : sf.rhs) scale = std::max(scale, std::abs(v));
  return 1e2 * opt.feasibility_tol * scale;
}

void check_size(const StandardForm& sf, const SolverOptions& opt) {
  if (sf.cols.size() > opt.max_variables) {
    throw SolverError("linear program has " + std::to_string(sf.cols.size()) +
                      " standard-form columns, above the configured cap of " +
                      std::to_string(opt.max_variables));
  }
}

}  // namespace

namespace {

bool has_upper_bounds(const LinearProgram& lp) {
  for (double u : lp.upper()) {
    if (std::isfinite(u)) return true;
  }
  return false;
}

// min c.x, A x (=|<=) b, x >= 0 or free  <->  min -b.l over l with
// (A^T l)_j (<=|=) c_j and l_i <= 0 on inequality rows (l = -w, w >= 0).
LinearProgram dual_program(const LinearProgram& lp) {
  LinearProgram d;
  const std::size_t m = lp.num_rows();
  std::vector<double> sign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (lp.is_inequality()[i]) {
      d.add_variable(lp.rhs()[i]);
      sign[i] = -1.0;
    } else {
      d.add_free_variable(-lp.rhs()[i]);
    }
  }
  std::vector<std::vector<Term>> cols(lp.num_variables());
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [j, v] : lp.rows()[i]) cols[j].emplace_back(i, sign[i] * v);
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    if (lp.is_free()[j]) d.add_eq_row(cols[j], lp.cost()[j]);
    else d.add_le_row(cols[j], lp.cost()[j]);
  }
  return d;
}

}  // namespace

LPSolution Solver::solve(const LinearProgram& lp) const {
  if (options_.trace) {
    *options_.trace << "# lp " << lp.num_rows() << ' ' << lp.num_variables() << '\n';
    lp.write_triplets(*options_.trace);
  }
  const bool tall = lp.num_rows() > 2 * lp.num_variables();
  if (options_.dualize == Dualize::always ||
      (options_.dualize == Dualize::automatic && tall)) {
    if (!has_upper_bounds(lp)) return solve_through_dual(lp);
  }
  return solve_direct(lp);
}

LPSolution Solver::solve_through_dual(const LinearProgram& lp) const {
  SolverOptions inner = options_;
  inner.dualize = Dualize::never;
  inner.trace = nullptr;
  const Solver direct(inner);
  const LinearProgram d = dual_program(lp);
  const LPSolution ds = direct.solve_direct(d);

  LPSolution sol;
  sol.primal.assign(lp.num_variables(), 0.0);
  sol.dual_multipliers.assign(lp.num_rows(), 0.0);
  sol.iterations = ds.iterations;
  if (ds.status == Status::unbounded) {
    sol.status = Status::infeasible;
    return sol;
  }
  if (ds.status == Status::infeasible) {
    sol.status = direct.feasible(lp) ? Status::unbounded : Status::infeasible;
    return sol;
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    double v = -ds.dual_multipliers[j];
    if (!lp.is_free()[j] && v < 0.0 && v > -options_.feasibility_tol) v = 0.0;
    sol.primal[j] = v;
  }
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    sol.dual_multipliers[i] = lp.is_inequality()[i] ? -ds.primal[i] : ds.primal[i];
  }
  sol.primal_objective = -ds.dual_objective;
  sol.dual_objective = -ds.primal_objective;
  sol.status = Status::optimal;
  return sol;
}

LPSolution Solver::solve_direct(const LinearProgram& lp) const {
  const StandardForm sf = to_standard_form(lp, options_.feasibility_tol);
  check_size(sf, options_);

  LPSolution sol;
  sol.primal.assign(lp.num_variables(), 0.0);
  sol.dual_multipliers.assign(lp.num_rows(), 0.0);
  if (sf.trivially_infeasible) {
    sol.status = Status::infeasible;
    return sol;
  }

  for (std::size_t attempt = 0;; ++attempt) {
    try {
      Engine engine(sf, options_, /*bland_only=*/attempt > 0);
      if (engine.phase_one() > infeasibility_threshold(sf, options_)) {
        sol.status = Status::infeasible;
        sol.iterations = engine.iterations();
        return sol;
      }
      if (engine.num_artificials() > 0) engine.expel_artificials();
      const auto outcome = engine.phase_two();
      sol.iterations = engine.iterations();
      if (outcome == Engine::Outcome::unbounded) {
        sol.status = Status::unbounded;
        return sol;
      }

      const std::vector<double> x = engine.structural_values();
      const Eigen::VectorXd y = engine.duals();
      for (std::size_t j = 0; j < lp.num_variables(); ++j) {
        double v = x[sf.plus_col[j]];
        if (sf.minus_col[j] >= 0) v -= x[static_cast<std::size_t>(sf.minus_col[j])];
        else if (v < 0.0 && v > -options_.feasibility_tol) v = 0.0;
        sol.primal[j] = v;
      }
      for (std::size_t i = 0; i < lp.num_rows(); ++i) {
        if (sf.row_of[i] >= 0) sol.dual_multipliers[i] = sf.row_sign[i] * y[sf.row_of[i]];
      }
      double primal_obj = 0.0;
      for (std::size_t j = 0; j < sf.cols.size(); ++j) primal_obj += sf.cost[j] * x[j];
      double dual_obj = 0.0;
      for (std::size_t r = 0; r < sf.rows; ++r) dual_obj += sf.rhs[r] * y[static_cast<Eigen::Index>(r)];
      sol.primal_objective = primal_obj;
      sol.dual_objective = dual_obj;
      sol.status = Status::optimal;
      if (!(sol.relative_gap() <= options_.gap_tol) || !y.allFinite()) {
        throw SolverError("primal/dual objective gap above tolerance at optimum");
      }
      return sol;
    } catch (const SolverError&) {
      if (attempt >= options_.max_restarts) throw;
    }
  }
}

bool Solver::feasible(const LinearProgram& lp) const {
  const StandardForm sf = to_standard_form(lp, options_.feasibility_tol);
  check_size(sf, options_);
  if (sf.trivially_infeasible) return false;
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      Engine engine(sf, options_, attempt > 0);
      return engine.phase_one() <= infeasibility_threshold(sf, options_);
    } catch (const SolverError&) {
      if (attempt >= options_.max_restarts) throw;
    }
  }
}

}  // namespace stochproj::lp
