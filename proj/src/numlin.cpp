// Licensed under the Apache License 2.0 (see LICENSE file).

#include "numlin.hpp"

#include "error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace deasel {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input error";
    case ErrorKind::Solver: return "solver failure";
    case ErrorKind::Definiteness: return "definiteness error";
    case ErrorKind::Rank: return "rank error";
    case ErrorKind::DegreesOfFreedom: return "degrees-of-freedom error";
    case ErrorKind::Contract: return "contract violation";
    case ErrorKind::Undecidable: return "undecidable";
    case ErrorKind::Tuning: return "tuning error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

}  // namespace deasel

namespace deasel::numlin {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

LpProblem LpProblem::with_variables(Eigen::Index vars, ObjectiveSense sense) {
  LpProblem lp;
  lp.sense = sense;
  lp.cost = Vector::Zero(vars);
  lp.A = Matrix(0, vars);
  lp.rhs = Vector(0);
  lp.lower = Vector::Zero(vars);
  lp.upper = Vector::Constant(vars, kInf);
  return lp;
}

void LpProblem::add_row(const Vector& coefficients, RowSense row_sense, double value) {
  if (coefficients.size() != cost.size()) {
    throw Error(ErrorKind::Input, "add_row: coefficient count does not match variable count");
  }
  const Eigen::Index r = A.rows();
  A.conservativeResize(r + 1, cost.size());
  A.row(r) = coefficients.transpose();
  rhs.conservativeResize(r + 1);
  rhs(r) = value;
  row_senses.push_back(row_sense);
}

namespace {

constexpr double kPivotTol = 1e-9;

void validate(const LpProblem& lp) {
  const Eigen::Index p = lp.cost.size();
  const Eigen::Index q = lp.A.rows();
  if (lp.A.cols() != p || lp.rhs.size() != q || static_cast<Eigen::Index>(lp.row_senses.size()) != q ||
      lp.lower.size() != p || lp.upper.size() != p) {
    throw Error(ErrorKind::Input, "solve_lp: inconsistent problem dimensions");
  }
  if (!lp.cost.allFinite() || !lp.A.allFinite() || !lp.rhs.allFinite()) {
    throw Error(ErrorKind::Input, "solve_lp: non-finite coefficient");
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::isnan(lp.lower(j)) || std::isnan(lp.upper(j)) || lp.lower(j) > lp.upper(j) ||
        lp.lower(j) == kInf || lp.upper(j) == -kInf) {
      throw Error(ErrorKind::Input, "solve_lp: invalid bounds", static_cast<std::size_t>(j));
    }
  }
}

// Where an original variable lives in the tableau: x = offset + sign * t[col]
// (- t[col_neg] for free variables).
struct ColumnMap {
  double offset = 0.0;
  double sign = 1.0;
  Eigen::Index col = -1;
  Eigen::Index col_neg = -1;
};

// Dense tableau in which every nonbasic column sits at zero. A column whose
// variable rests at its upper bound is kept complemented (flipped).
class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols)
      : T(Matrix::Zero(rows + 1, cols + 1)),
        basis(rows, -1),
        upper(cols, kInf),
        flipped(cols, 0),
        can_enter(cols, 1),
        q_(rows),
        n_(cols) {}

  Matrix T;
  std::vector<Eigen::Index> basis;
  std::vector<double> upper;
  std::vector<char> flipped;
  std::vector<char> can_enter;

  Eigen::Index rows() const { return q_; }
  Eigen::Index cols() const { return n_; }
  double rhs(Eigen::Index i) const { return T(i, n_); }

  void pivot(Eigen::Index r, Eigen::Index j) {
    T.row(r) /= T(r, j);
    for (Eigen::Index i = 0; i <= q_; ++i) {
      if (i == r) continue;
      const double f = T(i, j);
      if (f != 0.0) T.row(i) -= f * T.row(r);
    }
    basis[r] = j;
  }

  void flip(Eigen::Index j) {
    T.col(n_) -= upper[j] * T.col(j);
    T.col(j) = -T.col(j);
    flipped[j] ^= 1;
  }

  // Runs simplex iterations on the current objective row.
  // Returns false when the problem is unbounded in the entering direction.
  bool run(int& pivots, int max_pivots) {
    std::vector<char> is_basic(n_, 0);
    for (auto b : basis) is_basic[b] = 1;
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (!is_basic[j] && can_enter[j] && T(q_, j) < -kPivotTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      if (pivots >= max_pivots) {
        throw Error(ErrorKind::Solver, "solve_lp: pivot limit reached without convergence");
      }

      double best = upper[enter];
      Eigen::Index leave = -1;
      bool leave_at_upper = false;
      for (Eigen::Index i = 0; i < q_; ++i) {
        const double a = T(i, enter);
        const Eigen::Index b = basis[i];
        double ratio;
        if (a > kPivotTol) {
          ratio = std::max(0.0, rhs(i)) / a;
        } else if (a < -kPivotTol && std::isfinite(upper[b])) {
          ratio = std::max(0.0, upper[b] - rhs(i)) / (-a);
        } else {
          continue;
        }
        const double slack = 1e-12 * (1.0 + std::abs(best == kInf ? ratio : best));
        if (ratio < best - slack || (leave >= 0 && ratio <= best + slack && b < basis[leave])) {
          best = ratio;
          leave = i;
          leave_at_upper = a < 0.0;
        }
      }

      ++pivots;
      if (leave < 0) {
        if (!std::isfinite(upper[enter])) return false;
        flip(enter);
        continue;
      }
      if (leave_at_upper) {
        flip(basis[leave]);
        T.row(leave) = -T.row(leave);
      }
      is_basic[basis[leave]] = 0;
      pivot(leave, enter);
      is_basic[enter] = 1;
    }
  }

 private:
  Eigen::Index q_;
  Eigen::Index n_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
  validate(problem);
  const Eigen::Index p = problem.num_variables();
  const Eigen::Index q = problem.num_rows();
  const Vector cmin = problem.sense == ObjectiveSense::Maximize ? Vector(-problem.cost) : problem.cost;

  std::vector<ColumnMap> map(p);
  std::vector<double> col_upper;
  std::vector<double> col_cost;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double l = problem.lower(j);
    const double u = problem.upper(j);
    ColumnMap& m = map[j];
    m.col = static_cast<Eigen::Index>(col_cost.size());
    if (std::isfinite(l)) {
      m.offset = l;
      col_upper.push_back(u - l);
      col_cost.push_back(cmin(j));
    } else if (std::isfinite(u)) {
      m.offset = u;
      m.sign = -1.0;
      col_upper.push_back(kInf);
      col_cost.push_back(-cmin(j));
    } else {
      m.col_neg = m.col + 1;
      col_upper.insert(col_upper.end(), {kInf, kInf});
      col_cost.insert(col_cost.end(), {cmin(j), -cmin(j)});
    }
  }
  const auto n_struct = static_cast<Eigen::Index>(col_cost.size());
  Eigen::Index n_slack = 0;
  for (auto s : problem.row_senses) n_slack += s != RowSense::Equal ? 1 : 0;
  const Eigen::Index first_art = n_struct + n_slack;
  const Eigen::Index n_cols = first_art + q;

  Tableau tab(q, n_cols);
  Vector row_sign = Vector::Ones(q);
  Eigen::Index slack_col = n_struct;
  for (Eigen::Index i = 0; i < q; ++i) {
    double b = problem.rhs(i);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double a = problem.A(i, j);
      if (a == 0.0) continue;
      b -= a * map[j].offset;
      tab.T(i, map[j].col) = a * map[j].sign;
      if (map[j].col_neg >= 0) tab.T(i, map[j].col_neg) = -a;
    }
    if (problem.row_senses[i] != RowSense::Equal) {
      tab.T(i, slack_col++) = problem.row_senses[i] == RowSense::LessEqual ? 1.0 : -1.0;
    }
    tab.T(i, n_cols) = b;
    if (b < 0.0) {
      row_sign(i) = -1.0;
      tab.T.row(i) = -tab.T.row(i);
    }
    tab.T(i, first_art + i) = 1.0;
    tab.basis[i] = first_art + i;
  }
  for (Eigen::Index j = 0; j < n_struct; ++j) tab.upper[j] = col_upper[j];

  LpSolution sol;
  const int max_pivots = static_cast<int>(50 * (p + q));
  const double b_norm = q > 0 ? tab.T.col(n_cols).head(q).cwiseAbs().maxCoeff() : 0.0;

  // Phase I: minimise the sum of artificials.
  for (Eigen::Index j = 0; j < first_art; ++j) tab.T(q, j) = -tab.T.col(j).head(q).sum();
  tab.T(q, n_cols) = -tab.T.col(n_cols).head(q).sum();
  tab.run(sol.pivots, max_pivots);
  double infeasibility = 0.0;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (tab.basis[i] >= first_art) infeasibility += std::max(0.0, tab.rhs(i));
  }
  if (infeasibility > 1e-8 * (1.0 + b_norm)) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }

  // Phase II: artificials pinned at zero.
  for (Eigen::Index j = first_art; j < n_cols; ++j) {
    tab.upper[j] = 0.0;
    tab.can_enter[j] = 0;
  }
  auto current_cost = [&](Eigen::Index j) {
    const double c = j < n_struct ? col_cost[j] : 0.0;
    return tab.flipped[j] ? -c : c;
  };
  for (Eigen::Index j = 0; j <= n_cols; ++j) {
    double d = j < n_cols ? current_cost(j) : 0.0;
    for (Eigen::Index i = 0; i < q; ++i) d -= current_cost(tab.basis[i]) * tab.T(i, j);
    tab.T(q, j) = d;
  }
  if (!tab.run(sol.pivots, max_pivots)) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  Vector t = Vector::Zero(n_cols);
  for (Eigen::Index i = 0; i < q; ++i) t(tab.basis[i]) = tab.rhs(i);
  for (Eigen::Index j = 0; j < n_cols; ++j) {
    if (tab.flipped[j]) t(j) = tab.upper[j] - t(j);
  }
  sol.x.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const ColumnMap& m = map[j];
    double v = m.offset + m.sign * t(m.col);
    if (m.col_neg >= 0) v -= t(m.col_neg);
    sol.x(j) = v;
  }
  sol.status = LpStatus::Optimal;
  sol.objective = problem.cost.dot(sol.x);

  // Duals of the minimisation form: pi' = c_B' B^-1, with B^-1 read from the
  // artificial columns.
  Vector y_min = Vector::Zero(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const Eigen::Index col = first_art + k;
    const double sgn = tab.flipped[col] ? -1.0 : 1.0;
    double pi = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) pi += current_cost(tab.basis[i]) * sgn * tab.T(i, col);
    y_min(k) = row_sign(k) * pi;
  }
  const Vector reduced = cmin - problem.A.transpose() * y_min;
  double dual = problem.rhs.dot(y_min);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double d = reduced(j);
    const double bound = d > 0.0 ? problem.lower(j) : problem.upper(j);
    if (std::isfinite(bound)) dual += bound * d;
  }
  if (problem.sense == ObjectiveSense::Maximize) {
    sol.y = -y_min;
    sol.dual_objective = -dual;
  } else {
    sol.y = y_min;
    sol.dual_objective = dual;
  }
  return sol;
}

double primal_infeasibility(const LpProblem& problem, const Vector& x) {
  double worst = 0.0;
  const Vector ax = problem.A * x;
  for (Eigen::Index i = 0; i < problem.num_rows(); ++i) {
    const double r = ax(i) - problem.rhs(i);
    switch (problem.row_senses[i]) {
      case RowSense::LessEqual: worst = std::max(worst, r); break;
      case RowSense::GreaterEqual: worst = std::max(worst, -r); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(r)); break;
    }
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    worst = std::max({worst, problem.lower(j) - x(j), x(j) - problem.upper(j)});
  }
  return worst;
}

CholeskyFactor CholeskyFactor::factor(const Matrix& G) {
  const Eigen::Index p = G.rows();
  if (G.cols() != p) throw Error(ErrorKind::Input, "cholesky: matrix is not square");
  const double scale = p > 0 ? G.cwiseAbs().maxCoeff() : 0.0;
  if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + scale)) {
    throw Error(ErrorKind::Input, "cholesky: matrix is not symmetric");
  }
  const double pivot_floor = 1e-12 * std::max(1.0, p > 0 ? G.diagonal().cwiseAbs().maxCoeff() : 0.0);
  Matrix L = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = G(j, j) - L.row(j).head(j).squaredNorm();
    if (!(d > pivot_floor)) {
      std::ostringstream msg;
      msg << "cholesky: non-positive pivot " << d << " at index " << j;
      throw Error(ErrorKind::Definiteness, msg.str(), static_cast<std::size_t>(j));
    }
    d = std::sqrt(d);
    L(j, j) = d;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      L(i, j) = (G(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / d;
    }
  }
  return CholeskyFactor(std::move(L));
}

Vector CholeskyFactor::solve(const Vector& rhs) const {
  if (rhs.size() != L_.rows()) throw Error(ErrorKind::Input, "cholesky: rhs dimension mismatch");
  Vector x = rhs;
  L_.triangularView<Eigen::Lower>().solveInPlace(x);
  L_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

void CholeskyFactor::solve_in_place(Matrix& rhs) const {
  if (rhs.rows() != L_.rows()) throw Error(ErrorKind::Input, "cholesky: rhs dimension mismatch");
  L_.triangularView<Eigen::Lower>().solveInPlace(rhs);
  L_.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs);
}

std::pair<Vector, CholeskyFactor> factor_and_solve(const Matrix& G, const Vector& rhs,
                                                   const std::optional<CholeskyFactor>& cache) {
  if (cache) {
    if (cache->dimension() != G.rows()) throw Error(ErrorKind::Input, "cached factor has wrong dimension");
    return {cache->solve(rhs), *cache};
  }
  auto f = CholeskyFactor::factor(G);
  Vector x = f.solve(rhs);
  return {std::move(x), std::move(f)};
}

double OlsResult::p_value_positive(Eigen::Index j) const {
  if (degenerate) return coefficients(j) > 0.0 && std::isinf(t_statistics(j)) ? 0.0 : 1.0;
  const double t = t_statistics(j);
  boost::math::students_t dist(degrees_of_freedom);
  return boost::math::cdf(boost::math::complement(dist, t));
}

OlsResult ols_regress(const Matrix& design, const Vector& response) {
  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.cols();
  if (response.size() != n) throw Error(ErrorKind::Input, "ols: response length mismatch");
  if (n <= k) throw Error(ErrorKind::DegreesOfFreedom, "ols: need more observations than columns");

  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) throw Error(ErrorKind::Rank, "ols: design matrix is rank deficient");

  OlsResult out;
  out.coefficients = qr.solve(response);
  const Vector residual = response - design * out.coefficients;
  out.residual_sum_squares = residual.squaredNorm();
  out.degrees_of_freedom = static_cast<int>(n - k);

  const double y_scale = 1.0 + response.norm();
  out.degenerate = std::sqrt(out.residual_sum_squares) <= 1e-12 * y_scale;
  out.standard_errors = Vector::Zero(k);
  out.t_statistics = Vector::Zero(k);
  out.p_values = Vector::Ones(k);

  if (out.degenerate) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double beta = out.coefficients(j);
      if (std::abs(beta) * (1.0 + design.col(j).norm()) <= 1e-10 * y_scale) {
        out.coefficients(j) = 0.0;
        continue;
      }
      out.t_statistics(j) = std::copysign(kInf, beta);
      out.p_values(j) = 0.0;
    }
    return out;
  }

  const double sigma2 = out.residual_sum_squares / out.degrees_of_freedom;
  const auto gram = CholeskyFactor::factor(design.transpose() * design);
  Matrix inv = Matrix::Identity(k, k);
  gram.solve_in_place(inv);
  boost::math::students_t dist(out.degrees_of_freedom);
  for (Eigen::Index j = 0; j < k; ++j) {
    out.standard_errors(j) = std::sqrt(sigma2 * inv(j, j));
    out.t_statistics(j) = out.coefficients(j) / out.standard_errors(j);
    out.p_values(j) = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t_statistics(j))));
  }
  return out;
}

}  // namespace deasel::numlin
