// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace deasel::numlin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ObjectiveSense { Minimize, Maximize };
enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus status);

/// Dense linear program
///
///     opt  c'x   s.t.  A x (<=|=|>=) b,   lower <= x <= upper.
///
/// Bounds default to [0, +inf). A lower bound of -inf is allowed.
struct LpProblem {
  ObjectiveSense sense = ObjectiveSense::Minimize;
  Vector cost;
  Matrix A;
  Vector rhs;
  std::vector<RowSense> row_senses;
  Vector lower;
  Vector upper;

  /// Problem with `vars` columns and no rows, bounds [0, +inf).
  static LpProblem with_variables(Eigen::Index vars, ObjectiveSense sense);

  /// Appends a row; `coefficients` must have one entry per variable.
  void add_row(const Vector& coefficients, RowSense row_sense, double value);

  Eigen::Index num_variables() const { return cost.size(); }
  Eigen::Index num_rows() const { return A.rows(); }
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  /// Row multipliers in the problem's own sense: at an optimum the objective
  /// equals b'y plus the bound contributions of the reduced costs.
  Vector y;
  double objective = 0.0;
  double dual_objective = 0.0;
  int pivots = 0;
};

/// Bounded-variable primal simplex on a dense tableau (Bland's rule).
///
/// Throws Error{Input} for inconsistent dimensions or bounds and
/// Error{Solver} when the pivot budget 50*(p+q) is exhausted.
LpSolution solve_lp(const LpProblem& problem);

/// Maximum violation of rows and bounds at `x`.
double primal_infeasibility(const LpProblem& problem, const Vector& x);

/// Lower Cholesky factor L of a symmetric positive-definite G = L L'.
/// Immutable once built; solves reuse it without refactorization.
class CholeskyFactor {
 public:
  /// Throws Error{Definiteness} naming the first pivot <= 1e-12 (scaled by
  /// the largest diagonal entry) and Error{Input} for a non-symmetric G.
  static CholeskyFactor factor(const Matrix& G);

  Vector solve(const Vector& rhs) const;
  /// Solves for every column of `rhs` in place.
  void solve_in_place(Matrix& rhs) const;

  const Matrix& lower() const { return L_; }
  Eigen::Index dimension() const { return L_.rows(); }

 private:
  explicit CholeskyFactor(Matrix L) : L_(std::move(L)) {}
  Matrix L_;
};

/// Solves G x = rhs, factoring G unless `cache` is given.
std::pair<Vector, CholeskyFactor> factor_and_solve(const Matrix& G, const Vector& rhs,
                                                   const std::optional<CholeskyFactor>& cache = std::nullopt);

struct OlsResult {
  Vector coefficients;
  Vector standard_errors;
  Vector t_statistics;
  Vector p_values;  // two-sided
  double residual_sum_squares = 0.0;
  int degrees_of_freedom = 0;
  /// Zero residual: standard errors are 0 and t statistics are +-inf (or 0
  /// for a zero coefficient) rather than a division by zero.
  bool degenerate = false;

  /// One-sided p-value for H1: coefficient > 0.
  double p_value_positive(Eigen::Index j) const;
};

/// Ordinary least squares. `design` must already include the intercept
/// column. Throws Error{DegreesOfFreedom} when rows <= columns and
/// Error{Rank} when the design is rank deficient.
OlsResult ols_regress(const Matrix& design, const Vector& response);

}  // namespace deasel::numlin
