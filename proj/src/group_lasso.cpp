// Licensed under the Apache License 2.0 (see LICENSE file).

#include "group_lasso.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>

namespace deasel {

const char* to_string(Method method) {
  switch (method) {
    case Method::GL: return "GL";
    case Method::ECM: return "ECM";
    case Method::RB: return "RB";
  }
  return "?";
}

}  // namespace deasel

namespace deasel::gl {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

Vector GLProblem::apply_As(const Vector& z) const {
  const Eigen::Index nn = n(), mm = m(), ss = s();
  ConstMap V(z.data(), mm, nn);
  ConstMap U(z.data() + nn * mm, ss, nn);
  Vector out(rows_s());
  MutMap env(out.data(), nn, nn);
  env.noalias() = X.transpose() * V;
  env.noalias() -= Y.transpose() * U;
  if (has_intercept()) env.rowwise() += z.segment(w_index(0), nn).transpose();
  out.segment(nn * nn, nn * mm) = z.head(nn * mm);
  out.segment(nn * nn + nn * mm, nn * ss) = z.segment(nn * mm, nn * ss);
  return out;
}

Vector GLProblem::apply_As_T(const Vector& rows) const {
  const Eigen::Index nn = n(), mm = m(), ss = s();
  ConstMap Q(rows.data(), nn, nn);
  Vector out(dim_z());
  MutMap V(out.data(), mm, nn);
  V.noalias() = X * Q;
  V += ConstMap(rows.data() + nn * nn, mm, nn);
  MutMap U(out.data() + nn * mm, ss, nn);
  U.noalias() = -(Y * Q);
  U += ConstMap(rows.data() + nn * nn + nn * mm, ss, nn);
  if (has_intercept()) out.segment(w_index(0), nn) = Q.colwise().sum().transpose();
  return out;
}

Vector GLProblem::apply_Av(const Vector& z) const { return z.head(rows_v()); }

Vector GLProblem::apply_Av_T(const Vector& rows) const {
  Vector out = Vector::Zero(dim_z());
  out.head(rows_v()) = rows;
  return out;
}

Vector GLProblem::apply_Ae(const Vector& z) const {
  if (!has_equality()) return Vector(0);
  ConstMap U(z.data() + n() * m(), s(), n());
  return Y.cwiseProduct(U).colwise().sum().transpose();
}

Vector GLProblem::apply_Ae_T(const Vector& rows) const {
  Vector out = Vector::Zero(dim_z());
  if (!has_equality()) return out;
  MutMap U(out.data() + n() * m(), s(), n());
  U = Y * rows.asDiagonal();
  return out;
}

GLProblem::Dense GLProblem::dense() const {
  Dense d;
  d.As.resize(rows_s(), dim_z());
  d.Av.resize(rows_v(), dim_z());
  d.Ae.resize(rows_e(), dim_z());
  Vector e = Vector::Zero(dim_z());
  for (Eigen::Index j = 0; j < dim_z(); ++j) {
    e(j) = 1.0;
    d.As.col(j) = apply_As(e);
    d.Av.col(j) = apply_Av(e);
    if (has_equality()) d.Ae.col(j) = apply_Ae(e);
    e(j) = 0.0;
  }
  return d;
}

std::vector<Matrix> GLProblem::gram_blocks() const {
  const Eigen::Index nn = n(), mm = m(), ss = s(), d = block();
  Matrix E(nn, d);
  E.leftCols(mm) = X.transpose();
  E.middleCols(mm, ss) = -Y.transpose();
  if (has_intercept()) E.col(d - 1).setOnes();
  Matrix G = E.transpose() * E;
  G.diagonal().head(mm).array() += 2.0;
  G.diagonal().segment(mm, ss).array() += 1.0;
  if (!has_equality()) return {G};

  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(nn));
  for (Eigen::Index k = 0; k < nn; ++k) {
    Matrix Gk = G;
    Gk.block(mm, mm, ss, ss) += Y.col(k) * Y.col(k).transpose();
    blocks.push_back(std::move(Gk));
  }
  return blocks;
}

std::vector<double> GLProblem::group_norms(const Vector& vbar) const {
  ConstMap V(vbar.data(), m(), n());
  std::vector<double> norms(static_cast<std::size_t>(m()));
  for (Eigen::Index i = 0; i < m(); ++i) norms[static_cast<std::size_t>(i)] = V.row(i).norm();
  return norms;
}

double GLProblem::penalty(const Vector& vbar) const {
  double total = 0.0;
  for (double g : group_norms(vbar)) total += g;
  return total;
}

int default_shift(dea::ModelKind model) { return model == dea::ModelKind::Additive ? 1 : 0; }

GLProblem assemble_gl_problem(const dea::DataSet& data, dea::ModelKind model, double lambda, int shift) {
  data.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::Input, "lambda must be finite and >= 0");
  if (shift != 0 && shift != 1) throw Error(ErrorKind::Input, "shift must be 0 or 1");

  GLProblem p;
  p.model = model;
  p.lambda = lambda;
  p.shift = shift;
  p.X = data.X;
  p.Y = data.Y;
  const Eigen::Index n = p.n(), m = p.m(), s = p.s();

  p.c = Vector::Zero(p.dim_z());
  p.c.head(n * m) = Eigen::Map<const Vector>(p.X.data(), n * m);
  if (model == dea::ModelKind::Additive) {
    p.c.segment(n * m, n * s) = -Eigen::Map<const Vector>(p.Y.data(), n * s);
  }
  if (p.has_intercept()) p.c.segment(p.w_index(0), n).setOnes();

  // Envelopment offset of DMU k against DMU j: shift * (sum_i x_ij - sum_r y_rj).
  const Vector col_offset = static_cast<double>(shift) *
                            (p.X.colwise().sum() - p.Y.colwise().sum()).transpose();
  p.b = Vector::Zero(p.rows_s());
  for (Eigen::Index k = 0; k < n; ++k) p.b.segment(k * n, n) = col_offset;

  if (p.has_equality()) {
    p.b_e = (static_cast<double>(shift) * p.Y.colwise().sum().transpose()).array() - 1.0;
    p.objective_offset = shift * p.X.sum();
  } else {
    p.b_e = Vector(0);
    p.objective_offset = shift * (p.X.sum() - p.Y.sum());
  }
  return p;
}

AdmmOptions AdmmOptions::defaults_for(const GLProblem& problem) {
  AdmmOptions o;
  const double tol = 1e-6 * std::sqrt(static_cast<double>(problem.total_rows()));
  o.primal_tol = tol;
  o.dual_tol = tol;
  return o;
}

void AdmmOptions::validate() const {
  if (!(mu > 0.0) || !(primal_tol > 0.0) || !(dual_tol > 0.0) || !(selection_threshold > 0.0) ||
      max_iterations < 1) {
    throw Error(ErrorKind::Input, "ADMM options must be positive with at least one iteration");
  }
}

AdmmState AdmmState::cold_start(const GLProblem& problem, double mu) {
  AdmmState st;
  st.mu = mu;
  st.z = Vector::Zero(problem.dim_z());
  st.s = problem.b.cwiseMax(0.0);
  st.vbar = Vector::Zero(problem.rows_v());
  st.gamma_s = Vector::Zero(problem.rows_s());
  st.gamma_v = Vector::Zero(problem.rows_v());
  st.gamma_e = Vector::Zero(problem.rows_e());
  return st;
}

GramFactor GramFactor::build(const GLProblem& problem, double mu) {
  if (!(mu > 0.0)) throw Error(ErrorKind::Input, "mu must be positive");
  GramFactor f;
  f.mu_ = mu;
  for (const auto& G : problem.gram_blocks()) f.blocks_.push_back(numlin::CholeskyFactor::factor(G / mu));
  return f;
}

Vector z_step(const GLProblem& problem, const AdmmState& state, const GramFactor& cache) {
  if (cache.mu() != state.mu) throw Error(ErrorKind::Contract, "z_step: Gram factor was built for a different mu");
  const double inv_mu = 1.0 / state.mu;
  const Eigen::Index n = problem.n(), m = problem.m(), s = problem.s(), d = problem.block();

  Vector rhs = problem.apply_As_T(state.gamma_s + inv_mu * (state.s - problem.b));
  rhs.head(n * m) += state.gamma_v + inv_mu * state.vbar;
  if (problem.has_equality()) rhs += problem.apply_Ae_T(state.gamma_e - inv_mu * problem.b_e);
  rhs -= problem.c;

  // Regroup as one column per DMU: (v_k; u_k; w_k).
  Matrix R(d, n);
  R.topRows(m) = ConstMap(rhs.data(), m, n);
  R.middleRows(m, s) = ConstMap(rhs.data() + n * m, s, n);
  if (problem.has_intercept()) R.row(d - 1) = rhs.segment(problem.w_index(0), n).transpose();

  const auto& blocks = cache.blocks();
  if (blocks.size() == 1) {
    blocks.front().solve_in_place(R);
  } else {
    for (Eigen::Index k = 0; k < n; ++k) R.col(k) = blocks[static_cast<std::size_t>(k)].solve(R.col(k));
  }

  Vector z(problem.dim_z());
  MutMap(z.data(), m, n) = R.topRows(m);
  MutMap(z.data() + n * m, s, n) = R.middleRows(m, s);
  if (problem.has_intercept()) z.segment(problem.w_index(0), n) = R.row(d - 1).transpose();
  return z;
}

Vector s_step(const GLProblem& problem, const AdmmState& state) {
  return (problem.apply_As(state.z) + problem.b - state.mu * state.gamma_s).cwiseMax(0.0);
}

Vector block_soft_threshold(const Vector& a, double kappa) {
  const double norm = a.norm();
  if (norm <= kappa || norm == 0.0) return Vector::Zero(a.size());
  return (a / norm) * (norm - kappa);
}

namespace {

Vector threshold_groups(const GLProblem& problem, const Vector& a, double kappa) {
  const Eigen::Index m = problem.m(), n = problem.n();
  Vector out(a.size());
  ConstMap A(a.data(), m, n);
  MutMap O(out.data(), m, n);
  for (Eigen::Index i = 0; i < m; ++i) O.row(i) = block_soft_threshold(A.row(i).transpose(), kappa).transpose();
  return out;
}

}  // namespace

Vector vbar_step(const GLProblem& problem, const AdmmState& state) {
  const Vector a = problem.apply_Av(state.z) - state.mu * state.gamma_v;
  return threshold_groups(problem, a, state.mu * problem.lambda);
}

std::pair<double, double> residuals(const GLProblem& problem, const AdmmState& prev, const AdmmState& state) {
  double primal2 = (problem.apply_As(state.z) + problem.b - state.s).squaredNorm() +
                   (problem.apply_Av(state.z) - state.vbar).squaredNorm();
  if (problem.has_equality()) primal2 += (problem.apply_Ae(state.z) + problem.b_e).squaredNorm();
  Vector dz = problem.apply_As_T(state.s - prev.s);
  dz.head(problem.rows_v()) += state.vbar - prev.vbar;
  return {std::sqrt(primal2), dz.norm() / state.mu};
}

double augmented_lagrangian(const GLProblem& problem, const AdmmState& st) {
  const double inv2mu = 0.5 / st.mu;
  const Vector rs = problem.apply_As(st.z) + problem.b - st.s;
  const Vector rv = problem.apply_Av(st.z) - st.vbar;
  double L = problem.c.dot(st.z) + problem.lambda * problem.penalty(st.vbar) - st.gamma_s.dot(rs) +
             inv2mu * rs.squaredNorm() - st.gamma_v.dot(rv) + inv2mu * rv.squaredNorm();
  if (problem.has_equality()) {
    const Vector re = problem.apply_Ae(st.z) + problem.b_e;
    L += -st.gamma_e.dot(re) + inv2mu * re.squaredNorm();
  }
  return L;
}

std::pair<AdmmState, SelectionResult> admm_solve(const GLProblem& problem, const AdmmOptions& options) {
  options.validate();
  const double mu = options.mu;
  const double inv_mu = 1.0 / mu;
  const GramFactor factor = GramFactor::build(problem, mu);

  AdmmState st = AdmmState::cold_start(problem, mu);
  st.history.reserve(static_cast<std::size_t>(std::min(options.max_iterations, 10000)));
  for (int it = 1; it <= options.max_iterations; ++it) {
    st.z = z_step(problem, st, factor);

    const Vector Asz = problem.apply_As(st.z);
    Vector s_new = (Asz + problem.b - mu * st.gamma_s).cwiseMax(0.0);
    const Vector Avz = problem.apply_Av(st.z);
    Vector vbar_new = threshold_groups(problem, Avz - mu * st.gamma_v, mu * problem.lambda);

    const Vector r_s = Asz + problem.b - s_new;
    const Vector r_v = Avz - vbar_new;
    double primal2 = r_s.squaredNorm() + r_v.squaredNorm();
    st.gamma_s -= inv_mu * r_s;
    st.gamma_v -= inv_mu * r_v;
    if (problem.has_equality()) {
      const Vector r_e = problem.apply_Ae(st.z) + problem.b_e;
      primal2 += r_e.squaredNorm();
      st.gamma_e -= inv_mu * r_e;
    }

    Vector dz = problem.apply_As_T(s_new - st.s);
    dz.head(problem.rows_v()) += vbar_new - st.vbar;
    st.s = std::move(s_new);
    st.vbar = std::move(vbar_new);

    st.iteration = it;
    st.primal_residual = std::sqrt(primal2);
    st.dual_residual = dz.norm() * inv_mu;
    st.objective = problem.c.dot(st.z) + problem.lambda * problem.penalty(st.vbar);
    st.history.push_back({st.primal_residual, st.dual_residual, st.objective});
    if (st.primal_residual <= options.primal_tol && st.dual_residual <= options.dual_tol) {
      st.converged = true;
      break;
    }
  }

  SelectionResult sel = select_inputs(st, problem, options.selection_threshold);
  return {std::move(st), std::move(sel)};
}

SelectionResult select_inputs(const AdmmState& state, const GLProblem& problem, double threshold) {
  SelectionResult out;
  out.method = Method::GL;
  out.lambda = problem.lambda;
  out.group_norms = problem.group_norms(state.vbar);
  const double largest =
      out.group_norms.empty() ? 0.0 : *std::max_element(out.group_norms.begin(), out.group_norms.end());
  for (std::size_t i = 0; i < out.group_norms.size(); ++i) {
    if (out.group_norms[i] > threshold * (1.0 + largest)) out.selected.push_back(i);
  }
  out.converged = state.converged;
  out.iterations = state.iteration;
  out.primal_residual = state.primal_residual;
  out.dual_residual = state.dual_residual;
  return out;
}

}  // namespace deasel::gl
