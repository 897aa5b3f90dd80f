// Licensed under the Apache License 2.0 (see LICENSE file).

#include "dea.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace deasel::dea {

using numlin::LpProblem;
using numlin::LpStatus;
using numlin::ObjectiveSense;
using numlin::RowSense;

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::CCR: return "ccr";
    case ModelKind::BCC: return "bcc";
    case ModelKind::Additive: return "additive";
  }
  return "?";
}

const char* to_string(Rts rts) { return rts == Rts::CRS ? "crs" : "vrs"; }

DataSet DataSet::make(Matrix X, Matrix Y, std::vector<std::string> input_labels,
                      std::vector<std::string> output_labels) {
  DataSet d;
  d.X = std::move(X);
  d.Y = std::move(Y);
  if (input_labels.empty()) {
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) input_labels.push_back("x" + std::to_string(i + 1));
  }
  if (output_labels.empty()) {
    for (Eigen::Index r = 0; r < d.Y.rows(); ++r) output_labels.push_back("y" + std::to_string(r + 1));
  }
  d.input_labels = std::move(input_labels);
  d.output_labels = std::move(output_labels);
  d.validate();
  return d;
}

void DataSet::validate() const {
  if (X.rows() < 1 || Y.rows() < 1 || X.cols() < 1) {
    throw Error(ErrorKind::Input, "dataset needs at least one input, one output and one DMU");
  }
  if (X.cols() != Y.cols()) throw Error(ErrorKind::Input, "input and output DMU counts differ");
  if (input_labels.size() != inputs() || output_labels.size() != outputs()) {
    throw Error(ErrorKind::Input, "label count does not match matrix rows");
  }
  if (!X.allFinite() || !Y.allFinite() || X.minCoeff() <= 0.0 || Y.minCoeff() <= 0.0) {
    throw Error(ErrorKind::Input, "dataset entries must be finite and strictly positive");
  }
}

DataSet DataSet::head(std::size_t count) const {
  if (count < 1 || count > dmus()) throw Error(ErrorKind::Input, "head: DMU count out of range");
  DataSet d = *this;
  d.X = X.leftCols(static_cast<Eigen::Index>(count));
  d.Y = Y.leftCols(static_cast<Eigen::Index>(count));
  return d;
}

DataSet DataSet::select_inputs(std::span<const std::size_t> rows) const {
  if (rows.empty()) throw Error(ErrorKind::Input, "input subset is empty");
  DataSet d;
  d.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= inputs()) throw Error(ErrorKind::Input, "input index out of range", rows[i]);
    d.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
    d.input_labels.push_back(input_labels[rows[i]]);
  }
  d.Y = Y;
  d.output_labels = output_labels;
  return d;
}

DataSet DataSet::normalized() const {
  DataSet d = *this;
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) d.X.row(i) /= d.X.row(i).mean();
  for (Eigen::Index r = 0; r < d.Y.rows(); ++r) d.Y.row(r) /= d.Y.row(r).mean();
  return d;
}

IndexSet DataSet::all_inputs() const {
  IndexSet all(inputs());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

std::size_t EfficiencyResult::failures() const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), DmuStatus::Failed));
}

namespace {

void check_subset(const DataSet& data, std::span<const std::size_t> inputs) {
  data.validate();
  if (inputs.empty()) throw Error(ErrorKind::Input, "input subset is empty");
  for (auto i : inputs) {
    if (i >= data.inputs()) throw Error(ErrorKind::Input, "input index out of range", i);
  }
}

// Envelopment LP over (theta, lambda_1..lambda_n):
//   max theta  s.t.  X_I lambda <= x_I,k ;  Y lambda - theta y_k >= 0 ;
//   [sum lambda = 1].
EfficiencyResult radial(const DataSet& data, std::span<const std::size_t> inputs, bool convex) {
  check_subset(data, inputs);
  const auto n = static_cast<Eigen::Index>(data.dmus());
  const auto mi = static_cast<Eigen::Index>(inputs.size());
  const auto s = static_cast<Eigen::Index>(data.outputs());

  LpProblem lp = LpProblem::with_variables(n + 1, ObjectiveSense::Maximize);
  lp.cost(0) = 1.0;
  lp.lower(0) = 0.0;
  for (Eigen::Index i = 0; i < mi; ++i) {
    Vector row(n + 1);
    row(0) = 0.0;
    row.tail(n) = data.X.row(static_cast<Eigen::Index>(inputs[i])).transpose();
    lp.add_row(row, RowSense::LessEqual, 0.0);
  }
  for (Eigen::Index r = 0; r < s; ++r) {
    Vector row(n + 1);
    row(0) = 0.0;
    row.tail(n) = data.Y.row(r).transpose();
    lp.add_row(row, RowSense::GreaterEqual, 0.0);
  }
  if (convex) {
    Vector row = Vector::Ones(n + 1);
    row(0) = 0.0;
    lp.add_row(row, RowSense::Equal, 1.0);
  }

  EfficiencyResult out;
  out.kind = convex ? ModelKind::BCC : ModelKind::CCR;
  out.rts = convex ? Rts::VRS : Rts::CRS;
  out.inputs.assign(inputs.begin(), inputs.end());
  out.scores = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.status.assign(static_cast<std::size_t>(n), DmuStatus::Failed);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < mi; ++i) lp.rhs(i) = data.X(static_cast<Eigen::Index>(inputs[i]), k);
    for (Eigen::Index r = 0; r < s; ++r) lp.A(mi + r, 0) = -data.Y(r, k);
    try {
      const auto sol = numlin::solve_lp(lp);
      if (sol.status == LpStatus::Optimal) {
        out.scores(k) = sol.objective;
        out.status[static_cast<std::size_t>(k)] = DmuStatus::Optimal;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Solver) throw;
    }
  }
  return out;
}

}  // namespace

EfficiencyResult ccr_output_scores(const DataSet& data, std::span<const std::size_t> inputs) {
  return radial(data, inputs, false);
}

EfficiencyResult bcc_output_scores(const DataSet& data, std::span<const std::size_t> inputs) {
  return radial(data, inputs, true);
}

EfficiencyResult radial_output_scores(const DataSet& data, std::span<const std::size_t> inputs, Rts rts) {
  return radial(data, inputs, rts == Rts::VRS);
}

// Variables (lambda_1..n, s-_1..|I|, s+_1..s):
//   max sum s- + sum s+  s.t.  X_I lambda + s- = x_I,k ;  Y lambda - s+ = y_k ;
//   [sum lambda = 1].
EfficiencyResult additive_scores(const DataSet& data, std::span<const std::size_t> inputs, Rts rts) {
  check_subset(data, inputs);
  const auto n = static_cast<Eigen::Index>(data.dmus());
  const auto mi = static_cast<Eigen::Index>(inputs.size());
  const auto s = static_cast<Eigen::Index>(data.outputs());
  const Eigen::Index vars = n + mi + s;

  LpProblem lp = LpProblem::with_variables(vars, ObjectiveSense::Maximize);
  lp.cost.tail(mi + s).setOnes();
  for (Eigen::Index i = 0; i < mi; ++i) {
    Vector row = Vector::Zero(vars);
    row.head(n) = data.X.row(static_cast<Eigen::Index>(inputs[i])).transpose();
    row(n + i) = 1.0;
    lp.add_row(row, RowSense::Equal, 0.0);
  }
  for (Eigen::Index r = 0; r < s; ++r) {
    Vector row = Vector::Zero(vars);
    row.head(n) = data.Y.row(r).transpose();
    row(n + mi + r) = -1.0;
    lp.add_row(row, RowSense::Equal, 0.0);
  }
  if (rts == Rts::VRS) {
    Vector row = Vector::Zero(vars);
    row.head(n).setOnes();
    lp.add_row(row, RowSense::Equal, 1.0);
  }

  EfficiencyResult out;
  out.kind = ModelKind::Additive;
  out.rts = rts;
  out.inputs.assign(inputs.begin(), inputs.end());
  out.scores = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.status.assign(static_cast<std::size_t>(n), DmuStatus::Failed);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < mi; ++i) lp.rhs(i) = data.X(static_cast<Eigen::Index>(inputs[i]), k);
    for (Eigen::Index r = 0; r < s; ++r) lp.rhs(mi + r) = data.Y(r, k);
    try {
      const auto sol = numlin::solve_lp(lp);
      if (sol.status == LpStatus::Optimal) {
        out.scores(k) = sol.objective;
        out.status[static_cast<std::size_t>(k)] = DmuStatus::Optimal;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Solver) throw;
    }
  }
  return out;
}

std::vector<bool> efficient_set(const EfficiencyResult& result, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::Input, "efficient_set: tolerance must be positive");
  std::vector<bool> flags(static_cast<std::size_t>(result.scores.size()));
  const double cutoff = result.kind == ModelKind::Additive ? tol : 1.0 + tol;
  for (Eigen::Index k = 0; k < result.scores.size(); ++k) {
    const double v = result.scores(k);
    flags[static_cast<std::size_t>(k)] = !std::isnan(v) && v <= cutoff;
  }
  return flags;
}

}  // namespace deasel::dea
