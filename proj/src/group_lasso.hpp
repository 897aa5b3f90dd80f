// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include "dea.hpp"
#include "numlin.hpp"
#include "selection.hpp"

#include <utility>
#include <vector>

namespace deasel::gl {

using numlin::Matrix;
using numlin::Vector;

/// Constrained group-Lasso DEA problem in compact form
///
///     min  c'z + lambda * sum_i ||vbar_i||_2
///     s.t. A_s z + b = s,  s >= 0;   A_v z = vbar;   A_e z + b_e = 0.
///
/// z stacks (v; u; w) with v = vec(V), V the m x n matrix of input weights
/// (column k belongs to DMU k), likewise u, then one w per DMU when the model
/// has a free intercept. A_s rows: n^2 envelopment rows (row k*n + j is DMU
/// k's constraint against DMU j), then the n*m v-bounds, then n*s u-bounds.
/// A_e (radial models only) holds the normalisation y_k'u_k = 1.
///
/// The operators are never stored: every envelopment row of DMU k touches
/// only DMU k's weights, so products are evaluated from X and Y directly.
class GLProblem {
 public:
  dea::ModelKind model = dea::ModelKind::Additive;
  double lambda = 0.0;
  int shift = 1;

  Matrix X;  // m x n
  Matrix Y;  // s x n
  Vector c;
  Vector b;
  Vector b_e;
  /// Loss in the original (unshifted) weights equals c'z + objective_offset.
  double objective_offset = 0.0;

  Eigen::Index n() const { return X.cols(); }
  Eigen::Index m() const { return X.rows(); }
  Eigen::Index s() const { return Y.rows(); }
  bool has_intercept() const { return model != dea::ModelKind::CCR; }
  bool has_equality() const { return model != dea::ModelKind::Additive; }
  /// Variables per DMU.
  Eigen::Index block() const { return m() + s() + (has_intercept() ? 1 : 0); }

  Eigen::Index dim_z() const { return n() * block(); }
  Eigen::Index rows_s() const { return n() * n() + n() * m() + n() * s(); }
  Eigen::Index rows_v() const { return n() * m(); }
  Eigen::Index rows_e() const { return has_equality() ? n() : 0; }
  Eigen::Index total_rows() const { return rows_s() + rows_v() + rows_e(); }

  Eigen::Index v_index(Eigen::Index i, Eigen::Index k) const { return k * m() + i; }
  Eigen::Index u_index(Eigen::Index r, Eigen::Index k) const { return n() * m() + k * s() + r; }
  Eigen::Index w_index(Eigen::Index k) const { return n() * (m() + s()) + k; }

  Vector apply_As(const Vector& z) const;
  Vector apply_As_T(const Vector& rows) const;
  Vector apply_Av(const Vector& z) const;
  Vector apply_Av_T(const Vector& rows) const;
  Vector apply_Ae(const Vector& z) const;
  Vector apply_Ae_T(const Vector& rows) const;

  /// Explicit operators, for inspection and tests on small instances.
  struct Dense {
    Matrix As;
    Matrix Av;
    Matrix Ae;
  };
  Dense dense() const;

  /// Per-DMU diagonal blocks of A_s'A_s + A_v'A_v + A_e'A_e (the full Gram
  /// matrix is block diagonal in DMU order). One block when all coincide.
  std::vector<Matrix> gram_blocks() const;

  /// sum_i ||group i of vbar||_2; group i is v_{i,1..n}.
  double penalty(const Vector& vbar) const;
  std::vector<double> group_norms(const Vector& vbar) const;
};

/// Assembles the additive (shift defaults to 1) or radial CCR/BCC variant.
/// Throws Error{Input} for lambda < 0 or shift outside {0,1}.
GLProblem assemble_gl_problem(const dea::DataSet& data, dea::ModelKind model, double lambda, int shift);

/// Shift convention used when the caller has no preference.
int default_shift(dea::ModelKind model);

struct AdmmOptions {
  double mu = 1.0;
  int max_iterations = 5000;
  double primal_tol = 0.0;
  double dual_tol = 0.0;
  double selection_threshold = 1e-6;

  /// mu = 1, 5000 iterations, both tolerances 1e-6 * sqrt(total rows).
  static AdmmOptions defaults_for(const GLProblem& problem);
  void validate() const;
};

struct IterationRecord {
  double primal = 0.0;
  double dual = 0.0;
  double objective = 0.0;
};

struct AdmmState {
  Vector z;
  Vector s;
  Vector vbar;
  Vector gamma_s;
  Vector gamma_v;
  Vector gamma_e;
  double mu = 1.0;
  int iteration = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  bool converged = false;
  std::vector<IterationRecord> history;

  /// z = 0, s = max(0, b), vbar = 0, multipliers 0.
  static AdmmState cold_start(const GLProblem& problem, double mu);
};

/// Cholesky factors of (1/mu) times the Gram blocks, valid for one mu.
class GramFactor {
 public:
  static GramFactor build(const GLProblem& problem, double mu);
  double mu() const { return mu_; }
  const std::vector<numlin::CholeskyFactor>& blocks() const { return blocks_; }

 private:
  double mu_ = 0.0;
  std::vector<numlin::CholeskyFactor> blocks_;
};

/// Stationarity solve of the augmented Lagrangian in z. Throws
/// Error{Contract} when `cache` was built for a different mu.
Vector z_step(const GLProblem& problem, const AdmmState& state, const GramFactor& cache);

/// max(0, A_s z + b - mu*gamma_s).
Vector s_step(const GLProblem& problem, const AdmmState& state);

/// Block soft-thresholding of A_v z - mu*gamma_v at mu*lambda.
Vector vbar_step(const GLProblem& problem, const AdmmState& state);

/// T_kappa(a) = a/||a|| * max(0, ||a|| - kappa); zero when ||a|| <= kappa.
Vector block_soft_threshold(const Vector& a, double kappa);

/// Primal: root-sum-square of all constraint violations. Dual:
/// (1/mu) ||A_s'(s - s_prev) + A_v'(vbar - vbar_prev)||.
std::pair<double, double> residuals(const GLProblem& problem, const AdmmState& prev, const AdmmState& state);

/// Augmented Lagrangian value at the state's iterates.
double augmented_lagrangian(const GLProblem& problem, const AdmmState& state);

/// Runs the three-block ADMM from a cold start. Non-convergence is reported
/// through the `converged` flags, not thrown.
std::pair<AdmmState, SelectionResult> admm_solve(const GLProblem& problem, const AdmmOptions& options);

/// Group norms from vbar; input i is selected when its norm exceeds
/// threshold * (1 + largest norm).
SelectionResult select_inputs(const AdmmState& state, const GLProblem& problem, double threshold);

}  // namespace deasel::gl
